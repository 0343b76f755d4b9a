//! Per-cell and per-wire material data and the diagonal FIT material
//! matrices built from them.

use crate::mesh::{BoundingBox, DualMeasures, RectilinearGrid};
use crate::wire_coupling::Wire1DGrid;
use crate::{Error, Real, Result};

/// Bulk material constants.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    /// Electric conductivity (S/m).
    pub sigma: f64,
    /// Thermal conductivity (W/(K·m)).
    pub lambda: f64,
    /// Mass density (kg/m³).
    pub rho: f64,
    /// Specific heat capacity (J/(K·kg)).
    pub c: f64,
}

impl Material {
    pub const COPPER: Material = Material { sigma: 5.96e7, lambda: 401.0, rho: 8930.0, c: 390.0 };

    pub fn rho_c(&self) -> f64 {
        self.rho * self.c
    }

    pub fn validate(&self, what: &str, errors: &mut Vec<String>) {
        for (name, v) in [("sigma", self.sigma), ("lambda", self.lambda), ("rho", self.rho), ("c", self.c)] {
            if !(v > 0.0 && v.is_finite()) {
                errors.push(format!("{what}: {name} must be positive and finite, got {v}"));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField<T> {
    pub cell_sigma: Vec<T>,
    pub cell_lambda: Vec<T>,
    pub cell_rho_c: Vec<T>,
    /// Cells that belong to a perfect electric conductor.
    pub pec_cells: Vec<bool>,
}

impl<T: Real> MaterialField<T> {
    pub fn uniform(grid: &RectilinearGrid<T>, m: &Material) -> Self {
        let n = grid.num_cells();
        Self {
            cell_sigma: vec![T::lit(m.sigma); n],
            cell_lambda: vec![T::lit(m.lambda); n],
            cell_rho_c: vec![T::lit(m.rho_c()); n],
            pec_cells: vec![false; n],
        }
    }

    /// Assigns `m` to every cell whose centre lies in `region`.
    pub fn paint_box(&mut self, grid: &RectilinearGrid<T>, region: &BoundingBox<T>, m: &Material, pec: bool) -> usize {
        let tol = grid.snap_tolerance();
        let mut count = 0;
        for c in 0..grid.num_cells() {
            if region.contains(grid.cell_center(c), tol) {
                self.cell_sigma[c] = T::lit(m.sigma);
                self.cell_lambda[c] = T::lit(m.lambda);
                self.cell_rho_c[c] = T::lit(m.rho_c());
                self.pec_cells[c] = pec;
                count += 1;
            }
        }
        count
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: &[T]| v.iter().all(|&x| x > T::zero() && x.is_finite());
        if !ok(&self.cell_sigma) || !ok(&self.cell_lambda) || !ok(&self.cell_rho_c) {
            return Err(Error::Invalid("cell material values must be positive and finite".into()));
        }
        Ok(())
    }

    /// Mean nodal temperature of every cell, the input of temperature
    /// dependent material laws.
    pub fn cell_temperatures(grid: &RectilinearGrid<T>, nodal: &[T]) -> Vec<T> {
        let mut sum = vec![T::zero(); grid.num_cells()];
        let mut weight = vec![T::zero(); grid.num_cells()];
        for (n, &t) in nodal.iter().enumerate() {
            for (c, _) in grid.node_cell_parts(n) {
                sum[c] += t;
                weight[c] += T::one();
            }
        }
        sum.iter().zip(&weight).map(|(&s, &w)| s / w).collect()
    }
}

/// Temperature dependence of the bulk conductivities. Evaluated once per time
/// step at the previous temperature.
pub trait MaterialLaw<T>: Send + Sync {
    fn evaluate(&self, base: &MaterialField<T>, cell_temperature: &[T]) -> MaterialField<T>;
}

/// Diagonal of `M_α`: area-weighted mean of the cells around each edge times
/// `|Ã_l| / |L_l|`.
pub fn edge_conductance_matrix<T: Real>(grid: &RectilinearGrid<T>, dual: &DualMeasures<T>, cellvals: &[T]) -> Vec<T> {
    (0..grid.num_edges())
        .map(|e| {
            let parts = grid.edge_cell_parts(e);
            let area: T = parts.iter().map(|p| p.1).sum();
            let mean = parts.iter().map(|&(c, w)| w * cellvals[c]).sum::<T>() / area;
            mean * dual.dual_facet_area[e] / dual.primal_edge_len[e]
        })
        .collect()
}

/// Diagonal of `M_ρc`: volume-weighted mean of the cells around each node
/// times `|Ṽ_k|`.
pub fn node_capacitance_matrix<T: Real>(grid: &RectilinearGrid<T>, dual: &DualMeasures<T>, cell_rho_c: &[T]) -> Vec<T> {
    (0..grid.num_nodes())
        .map(|n| {
            let parts = grid.node_cell_parts(n);
            let vol: T = parts.iter().map(|p| p.1).sum();
            let mean = parts.iter().map(|&(c, w)| w * cell_rho_c[c]).sum::<T>() / vol;
            mean * dual.dual_volume[n]
        })
        .collect()
}

/// Diagonal of the 1D wire mass matrix: `ᾱ_j / |Λ_j|`.
pub fn wire_mass_matrix<T: Real>(wire: &Wire1DGrid<T>, alpha_bar: &[T]) -> Vec<T> {
    assert_eq!(alpha_bar.len(), wire.num_elements());
    alpha_bar.iter().zip(&wire.element_arclen).map(|(&a, &l)| a / l).collect()
}

/// Diagonal of `M̄_β`: `β̄_j |Λ̃_j|`.
pub fn wire_beta_matrix<T: Real>(wire: &Wire1DGrid<T>, beta_bar: &[T]) -> Vec<T> {
    assert_eq!(beta_bar.len(), wire.num_nodes());
    beta_bar.iter().zip(&wire.dual_len).map(|(&b, &l)| b * l).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::mesh::Axis1D;
    use crate::wire_coupling::WireCurve;
    use proptest::prelude::*;

    fn cube(n: usize) -> RectilinearGrid<f64> {
        let a = Axis1D::uniform(0.0, 1.0, n).unwrap();
        RectilinearGrid::new([a.clone(), a.clone(), a])
    }

    #[test]
    fn homogeneous_edge_conductance() {
        let g = cube(4);
        let dm = g.dual_measures();
        let m = edge_conductance_matrix(&g, &dm, &vec![1.0; g.num_cells()]);
        let e = g.edge_index(1, 2, 1, 2);
        assert!((m[e] - 0.25).abs() < 1e-15);
        for (l, v) in m.iter().enumerate() {
            assert!((v - dm.dual_facet_area[l] / dm.primal_edge_len[l]).abs() < 1e-15);
        }
    }

    #[test]
    fn two_material_edge() {
        // Slab with one cell in z: the x-edge on the y = 0.5 line sees one cell
        // on either side with equal quarter areas.
        let g = RectilinearGrid::new([
            Axis1D::new(vec![0.0f64, 1.0]).unwrap(),
            Axis1D::new(vec![0.0, 0.5, 1.0]).unwrap(),
            Axis1D::degenerate(0.0),
        ]);
        let dm = g.dual_measures();
        let m = edge_conductance_matrix(&g, &dm, &[1.0, 3.0]);
        let e = g.edge_index(0, 0, 1, 0);
        assert!((m[e] - 2.0 * dm.dual_facet_area[e]).abs() < 1e-15);
    }

    #[test]
    fn nonuniform_column_hand_computed() {
        // Two cells stacked in y with alpha 1 and 2; transverse x spacing 0.2,
        // z spacing 1; the z-edge at (x=0, y=0.3) lies between them.
        let g = RectilinearGrid::new([
            Axis1D::new(vec![0.0f64, 0.2]).unwrap(),
            Axis1D::new(vec![0.0, 0.3, 1.0]).unwrap(),
            Axis1D::new(vec![0.0, 1.0]).unwrap(),
        ]);
        let dm = g.dual_measures();
        let m = edge_conductance_matrix(&g, &dm, &[1.0, 2.0]);
        let e = g.edge_index(2, 0, 1, 0);
        // Dual facet: x half-width 0.1 times y parts 0.15 (alpha 1) and 0.35 (alpha 2).
        let expected = (0.1 * 0.15 * 1.0 + 0.1 * 0.35 * 2.0) / 1.0;
        assert!((m[e] - expected).abs() < 1e-15);
    }

    #[test]
    fn capacitance_examples() {
        let g = cube(4);
        let dm = g.dual_measures();
        let m = node_capacitance_matrix(&g, &dm, &vec![3.0; g.num_cells()]);
        let h3 = 0.25f64.powi(3);
        assert!((m[g.node_index(1, 2, 3)] - 3.0 * h3).abs() < 1e-15);
        assert!((m[0] - 3.0 * h3 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn wire_matrices() {
        let c = WireCurve::segment(Vec3::new(0.0f64, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0));
        let w = Wire1DGrid::uniform(&c, 5).unwrap();
        for v in wire_mass_matrix(&w, &[1.0; 4]) {
            assert!((v - 4.0).abs() < 1e-13);
        }
        let w2 = Wire1DGrid::uniform(&c, 3).unwrap();
        let b = wire_beta_matrix(&w2, &[1.0; 3]);
        assert!((b[0] - 0.25).abs() < 1e-15 && (b[1] - 0.5).abs() < 1e-15 && (b[2] - 0.25).abs() < 1e-15);
        assert!(wire_beta_matrix(&w2, &[0.0; 3]).iter().all(|&v| v == 0.0));
        let bez = WireCurve::bezier(Vec3::new(0.5, 0.02, 0.02), Vec3::new(0.5, 0.02, 0.98), 0.7, Vec3::new(0.0, 1.0, 0.0));
        let wb = Wire1DGrid::uniform(&bez, 5).unwrap();
        let lens = crate::wire_coupling::arc_lengths(&bez, &wb.s_nodes);
        let m = wire_mass_matrix(&wb, &[2.0; 4]);
        for (v, l) in m.iter().zip(lens) {
            assert_eq!(*v, 2.0 / l);
        }
    }

    #[test]
    fn paint_box_marks_pec() {
        let g = cube(4);
        let mut f = MaterialField::uniform(&g, &Material { sigma: 1.0, lambda: 1.0, rho: 1.0, c: 1.0 });
        let n = f.paint_box(&g, &BoundingBox::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.5, 0.5, 0.5)), &Material::COPPER, true);
        assert_eq!(n, 8);
        assert_eq!(f.pec_cells.iter().filter(|&&p| p).count(), 8);
        assert_eq!(f.cell_sigma[0], 5.96e7);
    }

    proptest! {
        #[test]
        fn capacitance_integrates_piecewise_constant(vals in prop::collection::vec(0.1f64..10.0, 27),
                                                     xs in prop::collection::vec(0.1f64..1.0, 3)) {
            let ax = Axis1D::new(vec![0.0, xs[0], xs[0] + xs[1], xs[0] + xs[1] + xs[2]]).unwrap();
            let g = RectilinearGrid::new([ax.clone(), ax.clone(), ax.clone()]);
            let dm = g.dual_measures();
            let m = node_capacitance_matrix(&g, &dm, &vals);
            let exact: f64 = (0..27).map(|c| {
                let [i, j, k] = g.cell_ijk(c);
                vals[c] * xs[i] * xs[j] * xs[k]
            }).sum();
            let total: f64 = m.iter().sum();
            prop_assert!((total - exact).abs() < 1e-12 * exact);
        }

        #[test]
        fn conductance_linear_in_coefficient(scale in 0.1f64..100.0) {
            let g = cube(3);
            let dm = g.dual_measures();
            let vals: Vec<f64> = (0..g.num_cells()).map(|c| 1.0 + c as f64).collect();
            let scaled: Vec<f64> = vals.iter().map(|v| v * scale).collect();
            let a = edge_conductance_matrix(&g, &dm, &vals);
            let b = edge_conductance_matrix(&g, &dm, &scaled);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x * scale - y).abs() <= 1e-12 * y.abs());
                prop_assert!(*x > 0.0);
            }
        }
    }
}
