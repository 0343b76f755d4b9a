//! A complete discrete electrothermal model: grid, materials, wires and
//! boundary data, with the assembled coupled operators.

use crate::assembly::{bulk_stiffness, pec_groups, robin_matrix, DirichletSet, DofMap, RobinSet};
use crate::materials::{edge_conductance_matrix, node_capacitance_matrix, wire_mass_matrix, MaterialField};
use crate::mesh::{DualMeasures, RectilinearGrid};
use crate::solver::{CoupledOperator, LowRankTerm, SolverKind};
use crate::sparse::SparseMatrix;
use crate::wire_coupling::{CouplingParams, CouplingSet, JouleSpreading, Wire1DGrid, WireCurve};
use crate::{Real, Result};

/// One embedded wire with its 1D grid, coupling operators and per-element
/// line conductances.
#[derive(Debug, Clone)]
pub struct WireModel<T> {
    pub curve: WireCurve<T>,
    pub grid1d: Wire1DGrid<T>,
    pub coupling: CouplingSet<T>,
    pub params: CouplingParams<T>,
    /// `σ̄ = |Ā| σ_w` per element (S·m).
    pub sigma_bar: Vec<T>,
    /// `λ̄ = |Ā| λ_w` per element (W·m/K).
    pub lambda_bar: Vec<T>,
}

impl<T: Real> WireModel<T> {
    pub fn new(
        grid: &RectilinearGrid<T>,
        curve: WireCurve<T>,
        n1d: usize,
        params: CouplingParams<T>,
        sigma_bar: T,
        lambda_bar: T,
    ) -> Result<Self> {
        let grid1d = Wire1DGrid::uniform(&curve, n1d)?;
        let coupling = CouplingSet::build(grid, &curve, &grid1d, &params)?;
        let ne = grid1d.num_elements();
        Ok(Self { curve, grid1d, coupling, params, sigma_bar: vec![sigma_bar; ne], lambda_bar: vec![lambda_bar; ne] })
    }

    pub fn m_sigma(&self) -> Vec<T> {
        wire_mass_matrix(&self.grid1d, &self.sigma_bar)
    }

    pub fn m_lambda(&self) -> Vec<T> {
        wire_mass_matrix(&self.grid1d, &self.lambda_bar)
    }

    /// `U diag(c) V = Xᵀ M̄ P̄_s Π` as a low-rank term.
    pub fn stiffness_term(&self, m_bar: Vec<T>) -> LowRankTerm<T> {
        LowRankTerm { u: self.coupling.x.transpose(), c: m_bar, v: self.coupling.ps.matmul(&self.coupling.pi) }
    }

    /// Wire values `Π u + (1 − γ) u_ref`: the averaged field rescaled about
    /// the reference value of the line-source profile.
    pub fn trace(&self, u: &[T], reference: T) -> Vec<T> {
        let offset = (T::one() - self.coupling.gamma) * reference;
        self.coupling.pi.matvec(u).into_iter().map(|v| v + offset).collect()
    }
}

/// External lumped circuit feeding a point electrode: current
/// `G₀ (V₀ − Π φ)` injected through the sampling row `R`.
#[derive(Debug, Clone)]
pub struct LumpedSource<T> {
    pub r_row: SparseMatrix<T>,
    pub pi_row: SparseMatrix<T>,
    pub gamma: T,
    pub g0: T,
    pub v0: T,
}

#[derive(Debug, Clone)]
pub struct Model<T> {
    pub grid: RectilinearGrid<T>,
    pub dual: DualMeasures<T>,
    pub gradient: SparseMatrix<T>,
    pub materials: MaterialField<T>,
    pub wires: Vec<WireModel<T>>,
    pub electrodes: DirichletSet<T>,
    pub lumped: Option<LumpedSource<T>>,
    pub robin: RobinSet<T>,
    pub t_init: T,
    /// Reference temperature about which `γ` rescales wire temperatures.
    pub thermal_reference: T,
    pub joule_spreading: JouleSpreading,
    pub solver: SolverKind,
    /// Per-direction multiplier of the bulk conductances; a zero removes the
    /// edges of that direction.
    pub edge_direction_scale: [T; 3],
}

impl<T: Real> Model<T> {
    pub fn new(grid: RectilinearGrid<T>, materials: MaterialField<T>) -> Self {
        let dual = grid.dual_measures();
        let gradient = grid.gradient();
        let n = grid.num_nodes();
        Self {
            grid,
            dual,
            gradient,
            materials,
            wires: Vec::new(),
            electrodes: DirichletSet::new(),
            lumped: None,
            robin: RobinSet::uniform(n, T::zero(), T::lit(300.0)),
            t_init: T::lit(300.0),
            thermal_reference: T::lit(300.0),
            joule_spreading: JouleSpreading::Average,
            solver: SolverKind::Direct,
            edge_direction_scale: [T::one(); 3],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.grid.num_nodes()
    }

    fn edge_matrix(&self, cellvals: &[T]) -> Vec<T> {
        let mut m = edge_conductance_matrix(&self.grid, &self.dual, cellvals);
        for dir in 0..3 {
            let s = self.edge_direction_scale[dir];
            if s != T::one() {
                let off = self.grid.edge_offset(dir);
                for v in &mut m[off..off + self.grid.num_edges_dir(dir)] {
                    *v *= s;
                }
            }
        }
        m
    }

    /// Diagonal of `M_σ`.
    pub fn m_sigma(&self, materials: &MaterialField<T>) -> Vec<T> {
        self.edge_matrix(&materials.cell_sigma)
    }

    /// Diagonal of `M_λ`.
    pub fn m_lambda(&self, materials: &MaterialField<T>) -> Vec<T> {
        self.edge_matrix(&materials.cell_lambda)
    }

    /// Diagonal of `M_ρc`.
    pub fn capacitance(&self, materials: &MaterialField<T>) -> Vec<T> {
        node_capacitance_matrix(&self.grid, &self.dual, &materials.cell_rho_c)
    }

    /// Electric operator `K_σ + K_σ^w (+ lumped term)` on all nodes and its
    /// source vector.
    pub fn electric_operator(&self, materials: &MaterialField<T>) -> (CoupledOperator<T>, Vec<T>) {
        let k = bulk_stiffness(&self.gradient, &self.m_sigma(materials));
        let mut op = CoupledOperator::new(k);
        for w in &self.wires {
            op.terms.push(w.stiffness_term(w.m_sigma()));
        }
        let mut rhs = vec![T::zero(); self.num_nodes()];
        if let Some(l) = &self.lumped {
            op.terms.push(LowRankTerm { u: l.r_row.transpose(), c: vec![l.g0], v: l.pi_row.clone() });
            for (k, w) in l.r_row.row(0) {
                rhs[k] += w * l.g0 * l.v0;
            }
        }
        (op, rhs)
    }

    /// Electric unknowns: electrodes fixed, PEC groups merged.
    pub fn electric_dofs(&self) -> Result<DofMap<T>> {
        let groups = pec_groups(&self.grid, &self.materials.pec_cells);
        DofMap::new(self.num_nodes(), &self.electrodes, &groups)
    }

    /// Thermal operator `M_ρc/Δt + K_λ + K_λ^w + M^∂D`; `dt = None` gives
    /// the stationary operator.
    pub fn thermal_operator(&self, materials: &MaterialField<T>, dt: Option<T>) -> CoupledOperator<T> {
        let k = bulk_stiffness(&self.gradient, &self.m_lambda(materials));
        let (robin, _) = robin_matrix(&self.dual, &self.robin);
        let mut diag = robin;
        if let Some(dt) = dt {
            for (d, c) in diag.iter_mut().zip(self.capacitance(materials)) {
                *d += c / dt;
            }
        }
        let mut op = CoupledOperator::new(k.add(&SparseMatrix::diag(&diag)));
        for w in &self.wires {
            op.terms.push(w.stiffness_term(w.m_lambda()));
        }
        op
    }

    pub fn wire_potentials(&self, phi: &[T]) -> Vec<Vec<T>> {
        self.wires.iter().map(|w| w.trace(phi, T::zero())).collect()
    }

    pub fn wire_temperatures(&self, temperature: &[T]) -> Vec<Vec<T>> {
        self.wires.iter().map(|w| w.trace(temperature, self.thermal_reference)).collect()
    }
}
