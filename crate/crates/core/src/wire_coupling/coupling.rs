use super::{rm_frame, ParametricCurve, Wire1DGrid};
use crate::mesh::RectilinearGrid;
use crate::sparse::SparseMatrix;
use crate::{Error, Real, Result};

/// Geometry of the averaging circle around a wire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams<T> {
    /// Radius of the averaging circle; zero samples the wire nodes directly.
    pub r_cpl: T,
    /// Physical wire radius.
    pub r_bar: T,
    /// Reference radius at which the line-source profile vanishes.
    pub r0: T,
    pub n_theta: usize,
}

/// How element Joule losses are distributed onto grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JouleSpreading {
    /// Half of each of the two adjacent `R_N` rows (rows sum to one).
    #[default]
    Average,
    /// Half of the absolute entries of `X`.
    AbsoluteX,
}

/// `γ = log(r̄/r0) / log(r_cpl/r0)`, and `1` for `r_cpl = 0`.
pub fn gamma<T: Real>(r_cpl: T, r_bar: T, r0: T) -> Result<T> {
    if !(r_bar > T::zero()) || !(r0 > r_bar) {
        return Err(Error::InvalidRadius(format!("need 0 < r_bar < r0, got r_bar = {r_bar}, r0 = {r0}")));
    }
    if r_cpl < T::zero() || !r_cpl.is_finite() {
        return Err(Error::InvalidRadius(format!("coupling radius {r_cpl} must be nonnegative")));
    }
    if r_cpl >= r0 {
        return Err(Error::InvalidRadius(format!("coupling radius {r_cpl} must stay below r0 = {r0}")));
    }
    if r_cpl == T::zero() {
        return Ok(T::one());
    }
    Ok((r_bar / r0).ln() / (r_cpl / r0).ln())
}

/// 1D derivative operator `P̄_s` ((n1d−1) × n1d).
pub fn build_ps<T: Real>(n1d: usize) -> SparseMatrix<T> {
    assert!(n1d >= 2, "a wire needs at least two nodes");
    let rows = (0..n1d - 1).map(|l| vec![(l, -T::one()), (l + 1, T::one())]).collect();
    SparseMatrix::from_rows(n1d, rows)
}

/// Trilinear sampling of the grid at the wire nodes.
pub fn build_rn<T: Real, C: ParametricCurve<T>>(grid: &RectilinearGrid<T>, curve: &C, s_nodes: &[T]) -> Result<SparseMatrix<T>> {
    let rows = s_nodes.iter().map(|&s| grid.trilinear_row(curve.position(s))).collect::<Result<Vec<_>>>()?;
    Ok(SparseMatrix::from_rows(grid.num_nodes(), rows))
}

/// Circle-averaging operator `Π` and its scaling `γ`.
pub fn build_pi<T: Real, C: ParametricCurve<T>>(
    grid: &RectilinearGrid<T>,
    curve: &C,
    s_nodes: &[T],
    params: &CouplingParams<T>,
) -> Result<(SparseMatrix<T>, T)> {
    let g = gamma(params.r_cpl, params.r_bar, params.r0)?;
    if params.r_cpl == T::zero() {
        return Ok((build_rn(grid, curve, s_nodes)?, g));
    }
    if params.n_theta == 0 {
        return Err(Error::Invalid("n_theta must be positive".into()));
    }
    let frames = rm_frame(curve, s_nodes);
    let weight = g / T::from_usize_lossy(params.n_theta);
    let mut rows = Vec::with_capacity(s_nodes.len());
    for (&s, f) in s_nodes.iter().zip(&frames) {
        let centre = curve.position(s);
        let mut row = Vec::new();
        for q in 0..params.n_theta {
            let theta = T::lit(2.0) * T::pi() * T::from_usize_lossy(q) / T::from_usize_lossy(params.n_theta);
            let p = centre + (f.n1 * theta.cos() + f.n2 * theta.sin()) * params.r_cpl;
            row.extend(grid.trilinear_row(p)?.into_iter().map(|(n, w)| (n, w * weight)));
        }
        rows.push(row);
    }
    Ok((SparseMatrix::from_rows(grid.num_nodes(), rows), g))
}

/// The sparse operators coupling one wire to the grid.
#[derive(Debug, Clone)]
pub struct CouplingSet<T> {
    pub ps: SparseMatrix<T>,
    pub r_n: SparseMatrix<T>,
    pub x: SparseMatrix<T>,
    pub x_avg: SparseMatrix<T>,
    pub pi: SparseMatrix<T>,
    pub gamma: T,
    pub r_cpl: T,
}

impl<T: Real> CouplingSet<T> {
    pub fn build<C: ParametricCurve<T>>(
        grid: &RectilinearGrid<T>,
        curve: &C,
        wire: &Wire1DGrid<T>,
        params: &CouplingParams<T>,
    ) -> Result<Self> {
        let n1d = wire.num_nodes();
        let ps = build_ps(n1d);
        let r_n = build_rn(grid, curve, &wire.s_nodes)?;
        let x = ps.matmul(&r_n);
        let half = T::lit(0.5);
        let avg_rows = (0..n1d - 1)
            .map(|j| r_n.row(j).chain(r_n.row(j + 1)).map(|(k, v)| (k, v * half)).collect())
            .collect();
        let x_avg = SparseMatrix::from_rows(grid.num_nodes(), avg_rows);
        let (pi, gamma) = build_pi(grid, curve, &wire.s_nodes, params)?;
        Ok(Self { ps, r_n, x, x_avg, pi, gamma, r_cpl: params.r_cpl })
    }

    pub fn num_wire_nodes(&self) -> usize {
        self.r_n.nrows()
    }

    /// Element-to-node spreading matrix for Joule losses.
    pub fn spreading(&self, mode: JouleSpreading) -> SparseMatrix<T> {
        match mode {
            JouleSpreading::Average => self.x_avg.clone(),
            JouleSpreading::AbsoluteX => {
                let half = T::lit(0.5);
                let rows = (0..self.x.nrows()).map(|j| self.x.row(j).map(|(k, v)| (k, v.abs() * half)).collect()).collect();
                SparseMatrix::from_rows(self.x.ncols(), rows)
            }
        }
    }
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

    fn params(r_cpl: f64) -> CouplingParams<f64> {
        CouplingParams { r_cpl, r_bar: 1e-6, r0: (1.0 / std::f64::consts::PI).sqrt(), n_theta: 8 }
    }

    #[test]
    fn ps_examples() {
        assert_eq!(build_ps::<f64>(2).to_dense(), vec![vec![-1.0, 1.0]]);
        let p = build_ps::<f64>(6);
        assert_eq!((p.nrows(), p.ncols()), (5, 6));
        assert!(p.matvec(&[3.0; 6]).iter().all(|&v| v == 0.0));
        for l in 0..5 {
            assert_eq!(p.get(l, l), -1.0);
            assert_eq!(p.get(l, l + 1), 1.0);
        }
    }

    #[test]
    fn gamma_cases() {
        let r0 = (1.0 / std::f64::consts::PI).sqrt();
        assert_eq!(gamma(0.0, 1e-6, r0).unwrap(), 1.0);
        assert!((gamma(1e-6, 1e-6, r0).unwrap() - 1.0).abs() < 1e-15);
        assert!(gamma(-1.0, 1e-6, r0).is_err());
        assert!(gamma(r0, 1e-6, r0).is_err());
        assert!(gamma(0.1, 1e-6, 1e-7).is_err());
    }

    #[test]
    fn straight_wire_selectors() {
        let g = cube(4);
        let c = WireCurve::segment(Vec3::new(0.5, 0.5, 0.0), Vec3::new(0.5, 0.5, 1.0));
        let w = Wire1DGrid::uniform(&c, 5).unwrap();
        let cs = CouplingSet::build(&g, &c, &w, &params(0.25)).unwrap();
        for j in 0..5 {
            let row: Vec<_> = cs.r_n.row(j).collect();
            assert_eq!(row, vec![(g.node_index(2, 2, j), 1.0)]);
        }
        // X holds pairwise differences of consecutive wire nodes.
        for j in 0..4 {
            let row: Vec<_> = cs.x.row(j).collect();
            assert_eq!(row, vec![(g.node_index(2, 2, j), -1.0), (g.node_index(2, 2, j + 1), 1.0)]);
        }
        let (pi0, g0) = build_pi(&g, &c, &w.s_nodes, &params(0.0)).unwrap();
        assert_eq!(g0, 1.0);
        assert_eq!(pi0, cs.r_n);
    }

    #[test]
    fn row_sum_identities_on_bent_wire() {
        let g = cube(10);
        let c = WireCurve::bezier(Vec3::new(0.5, 0.02, 0.02), Vec3::new(0.5, 0.02, 0.98), 0.7, Vec3::new(0.0, 1.0, 0.0));
        let w = Wire1DGrid::uniform(&c, 9).unwrap();
        let cs = CouplingSet::build(&g, &c, &w, &params(0.015)).unwrap();
        for s in cs.r_n.row_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        for s in cs.x.row_sums() {
            assert!(s.abs() < 1e-12);
        }
        for s in cs.x_avg.row_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        for s in cs.pi.row_sums() {
            assert!((s - cs.gamma).abs() < 1e-12 * cs.gamma);
        }
        for j in 0..cs.r_n.nrows() {
            assert!(cs.r_n.row_nnz(j) <= 8);
        }
    }

    #[test]
    fn pi_reproduces_line_source() {
        // u(r) = -log(r/r0) has ū = -log(r̄/r0) on the wire surface.
        let p = CouplingParams { r_cpl: 0.1, ..params(0.0) };
        let c = WireCurve::segment(Vec3::new(0.5, 0.5, 0.0), Vec3::new(0.5, 0.5, 1.0));
        let errs: Vec<f64> = [32, 64]
            .iter()
            .map(|&n| {
                let g = cube(n);
                let w = Wire1DGrid::uniform(&c, 5).unwrap();
                let (pi, _) = build_pi(&g, &c, &w.s_nodes, &p).unwrap();
                let u: Vec<f64> = (0..g.num_nodes())
                    .map(|k| {
                        let q = g.node_position(k);
                        let r = ((q.x - 0.5).powi(2) + (q.y - 0.5).powi(2)).sqrt();
                        if r > 0.0 { -(r / p.r0).ln() } else { 0.0 }
                    })
                    .collect();
                let exact = -(p.r_bar / p.r0).ln();
                pi.matvec(&u).iter().map(|v| ((v - exact) / exact).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[1] < 1e-2, "{errs:?}");
        assert!(errs[1] < errs[0]);
    }

    #[test]
    fn theta_quadrature_converges_for_smooth_fields() {
        let g = cube(16);
        let c = WireCurve::bezier(Vec3::new(0.5, 0.1, 0.1), Vec3::new(0.5, 0.1, 0.9), 0.5, Vec3::new(0.0, 1.0, 0.0));
        let w = Wire1DGrid::uniform(&c, 5).unwrap();
        let u: Vec<f64> = (0..g.num_nodes())
            .map(|k| {
                let q = g.node_position(k);
                1.0 + q.x * q.x + (2.0 * q.y).sin() + q.z
            })
            .collect();
        let a = build_pi(&g, &c, &w.s_nodes, &CouplingParams { n_theta: 8, ..params(0.07) }).unwrap().0.matvec(&u);
        let b = build_pi(&g, &c, &w.s_nodes, &CouplingParams { n_theta: 16, ..params(0.07) }).unwrap().0.matvec(&u);
        for (x, y) in a.iter().zip(&b) {
            assert!(((x - y) / y).abs() < 1e-3);
        }
    }

    #[test]
    fn joule_spreading_variants_coincide_on_grid_nodes() {
        let g = cube(4);
        let c = WireCurve::segment(Vec3::new(0.5, 0.5, 0.0), Vec3::new(0.5, 0.5, 1.0));
        let w = Wire1DGrid::uniform(&c, 5).unwrap();
        let cs = CouplingSet::build(&g, &c, &w, &params(0.25)).unwrap();
        assert_eq!(cs.spreading(JouleSpreading::Average), cs.spreading(JouleSpreading::AbsoluteX));
    }

    #[test]
    fn circle_outside_grid_is_rejected() {
        let g = cube(4);
        let c = WireCurve::segment(Vec3::new(0.5, 0.02, 0.0), Vec3::new(0.5, 0.02, 1.0));
        let w = Wire1DGrid::uniform(&c, 3).unwrap();
        assert!(matches!(build_pi(&g, &c, &w.s_nodes, &params(0.1)), Err(Error::OutOfDomain { .. })));
    }

    proptest! {
        #[test]
        fn random_segments_row_sums(ax in 0.0f64..1.0, ay in 0.0f64..1.0, az in 0.0f64..1.0,
                                    bx in 0.0f64..1.0, by in 0.0f64..1.0, bz in 0.0f64..1.0, n in 2usize..7) {
            let g = cube(5);
            let c = WireCurve::segment(Vec3::new(ax, ay, az), Vec3::new(bx, by, bz));
            prop_assume!((c.end() - c.start()).norm() > 1e-3);
            let w = Wire1DGrid::uniform(&c, n).unwrap();
            let r = build_rn(&g, &c, &w.s_nodes).unwrap();
            for s in r.row_sums() {
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
