//! Stationary electric solves, backward-Euler thermal steps, the
//! fractional-step transient loop and the penalty-coupled variant.

mod linear;

pub use linear::{solve_linear, Bordered, CoupledOperator, LowRankTerm, PreparedSolver, Solution, SolverKind};

use crate::assembly::{bulk_stiffness, joule_losses, robin_matrix, DofMap};
use crate::materials::{wire_beta_matrix, MaterialField, MaterialLaw};
use crate::model::Model;
use crate::sparse::SparseMatrix;
use crate::{Error, Real, Result};

/// Nodal and wire fields at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrothermalState<T> {
    pub phi: Vec<T>,
    pub temperature: Vec<T>,
    pub phi_bar: Vec<Vec<T>>,
    pub t_bar: Vec<Vec<T>>,
    pub time: T,
}

impl<T: Real> ElectrothermalState<T> {
    /// Uniform initial temperature, zero potential.
    pub fn initial(model: &Model<T>) -> Self {
        let n = model.num_nodes();
        let temperature = vec![model.t_init; n];
        let phi = vec![T::zero(); n];
        Self {
            phi_bar: model.wire_potentials(&phi),
            t_bar: model.wire_temperatures(&temperature),
            phi,
            temperature,
            time: T::zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.phi.iter().chain(&self.temperature).all(|v| v.is_finite())
            && self.phi_bar.iter().chain(&self.t_bar).flatten().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectricSolution<T> {
    pub phi: Vec<T>,
    pub phi_bar: Vec<Vec<T>>,
    pub residual: T,
}

/// Electric system factored once for fixed materials.
pub struct ElectricSolver<T: Real> {
    dofs: DofMap<T>,
    solver: PreparedSolver<T>,
    rhs: Vec<T>,
}

impl<T: Real> ElectricSolver<T> {
    pub fn new(model: &Model<T>, materials: &MaterialField<T>) -> Result<Self> {
        let (op, rhs) = model.electric_operator(materials);
        let dofs = model.electric_dofs()?;
        let (op, rhs) = op.reduce(&dofs, &rhs);
        Ok(Self { dofs, solver: PreparedSolver::new(op, model.solver)?, rhs })
    }

    pub fn solve(&self, model: &Model<T>) -> Result<ElectricSolution<T>> {
        let sol = self.solver.solve(&self.rhs)?;
        let phi = self.dofs.expand(&sol.x);
        Ok(ElectricSolution { phi_bar: model.wire_potentials(&phi), phi, residual: sol.residual })
    }
}

/// Solves the stationary electric problem with the model's own materials.
pub fn solve_electric<T: Real>(model: &Model<T>) -> Result<ElectricSolution<T>> {
    ElectricSolver::new(model, &model.materials)?.solve(model)
}

/// Backward-Euler thermal step operator for a fixed `Δt`.
pub struct ThermalStepper<T: Real> {
    solver: PreparedSolver<T>,
    capacitance_dt: Vec<T>,
    robin_rhs: Vec<T>,
    pub dt: T,
}

impl<T: Real> ThermalStepper<T> {
    pub fn new(model: &Model<T>, materials: &MaterialField<T>, dt: T) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
        }
        let op = model.thermal_operator(materials, Some(dt));
        let capacitance_dt = model.capacitance(materials).into_iter().map(|c| c / dt).collect();
        let (_, robin_rhs) = robin_matrix(&model.dual, &model.robin);
        Ok(Self { solver: PreparedSolver::new(op, model.solver)?, capacitance_dt, robin_rhs, dt })
    }

    /// `(M/Δt + K_λ + K_λ^w + M^∂D) T' = M/Δt T + Q + M^∂D T_∞`.
    pub fn step(&self, temperature: &[T], q: &[T]) -> Result<Solution<T>> {
        let rhs: Vec<T> = (0..temperature.len())
            .map(|k| self.capacitance_dt[k] * temperature[k] + q[k] + self.robin_rhs[k])
            .collect();
        self.solver.solve(&rhs)
    }
}

/// Nodal Joule losses of the wires for the potential `phi_bar`.
pub fn wire_joule_losses<T: Real>(model: &Model<T>, phi_bar: &[Vec<T>]) -> Vec<T> {
    let cs: Vec<_> = model.wires.iter().map(|w| &w.coupling).collect();
    let ms: Vec<_> = model.wires.iter().map(|w| w.m_sigma()).collect();
    joule_losses(&cs, &ms, phi_bar, model.joule_spreading, model.num_nodes()).0
}

/// One thermal step from `state` with the given nodal losses.
pub fn step_thermal<T: Real>(model: &Model<T>, state: &ElectrothermalState<T>, dt: T, q: &[T]) -> Result<ElectrothermalState<T>> {
    let sol = ThermalStepper::new(model, &model.materials, dt)?.step(&state.temperature, q)?;
    Ok(ElectrothermalState {
        phi: state.phi.clone(),
        phi_bar: state.phi_bar.clone(),
        t_bar: model.wire_temperatures(&sol.x),
        temperature: sol.x,
        time: state.time + dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientConfig<T> {
    pub n_steps: usize,
    pub t_end: T,
}

impl<T: Real> TransientConfig<T> {
    pub fn new(n_steps: usize, t_end: T) -> Result<Self> {
        if n_steps == 0 || !(t_end > T::zero()) {
            return Err(Error::Invalid(format!("transient needs N_t >= 1 and t_0 > 0, got {n_steps}, {t_end}")));
        }
        Ok(Self { n_steps, t_end })
    }

    pub fn dt(&self) -> T {
        self.t_end / T::from_usize_lossy(self.n_steps)
    }
}

/// Fractional-step transient: per step, materials at `T^n`, electric solve,
/// Joule losses, thermal step. Returns the `N_t` states after each step.
pub fn run_transient<T: Real>(
    model: &Model<T>,
    config: &TransientConfig<T>,
    law: Option<&dyn MaterialLaw<T>>,
    mut observer: impl FnMut(usize, &ElectrothermalState<T>),
) -> Result<Vec<ElectrothermalState<T>>> {
    let dt = config.dt();
    let mut state = ElectrothermalState::initial(model);
    let mut cached: Option<(ElectricSolver<T>, ThermalStepper<T>)> = None;
    let mut out = Vec::with_capacity(config.n_steps);
    for n in 1..=config.n_steps {
        let (electric, thermal) = match law {
            Some(law) => {
                let cell_t = MaterialField::cell_temperatures(&model.grid, &state.temperature);
                let mats = law.evaluate(&model.materials, &cell_t);
                cached = None;
                let pair = (ElectricSolver::new(model, &mats)?, ThermalStepper::new(model, &mats, dt)?);
                cached.insert(pair)
            }
            None => match &mut cached {
                Some(pair) => pair,
                slot @ None => slot.insert((
                    ElectricSolver::new(model, &model.materials)?,
                    ThermalStepper::new(model, &model.materials, dt)?,
                )),
            },
        };
        let e = electric.solve(model)?;
        let q = wire_joule_losses(model, &e.phi_bar);
        let t = thermal.step(&state.temperature, &q)?;
        state = ElectrothermalState {
            t_bar: model.wire_temperatures(&t.x),
            temperature: t.x,
            phi_bar: e.phi_bar,
            phi: e.phi,
            time: dt * T::from_usize_lossy(n),
        };
        if !state.is_finite() {
            return Err(Error::NonFinite(format!("state after step {n}")));
        }
        observer(n, &state);
        out.push(state.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySolution<T> {
    pub u: Vec<T>,
    pub u_bar: Vec<Vec<T>>,
    /// `max_i ‖Πᵢ u − ūᵢ‖_∞`.
    pub coupling_residual: T,
    pub residual: T,
}

/// Solves the penalty-coupled electric system with transfer coefficient
/// `beta_bar` on every wire node.
///
/// Per wire, with `z = M̄_β (Π u − ū)` as an auxiliary unknown:
/// `K u + R_Nᵀ z = f`, `P̄_sᵀ M̄_α P̄_s ū − z = 0`, `Π u − ū − M̄_β⁻¹ z = 0`.
/// The exchanged current `z` leaves the bulk and enters the wire.
pub fn solve_penalty<T: Real>(model: &Model<T>, beta_bar: T) -> Result<PenaltySolution<T>> {
    if !(beta_bar > T::zero()) {
        return Err(Error::Invalid(format!("penalty needs beta_bar > 0, got {beta_bar}")));
    }
    if model.lumped.is_some() {
        return Err(Error::Invalid("penalty coupling does not support lumped sources".into()));
    }
    let k = bulk_stiffness(&model.gradient, &model.m_sigma(&model.materials));
    let dofs = model.electric_dofs()?;
    let fixed = dofs.fixed_values();
    let kf = k.matvec(&fixed);
    let r: Vec<T> = dofs.restrict(&kf.iter().map(|&v| -v).collect::<Vec<_>>());
    let p = dofs.prolongation();
    let a = p.transpose().matmul(&k.matmul(&p));
    let n = dofs.n_free;
    let m: usize = model.wires.iter().map(|w| 2 * w.grid1d.num_nodes()).sum();
    let mut b_trip = Vec::new();
    let mut c_rows: Vec<Vec<(usize, T)>> = Vec::with_capacity(m);
    let mut d = vec![vec![T::zero(); m]; m];
    let mut g = vec![T::zero(); m];
    let mut off = 0;
    for w in &model.wires {
        let nw = w.grid1d.num_nodes();
        let (ub, zb) = (off, off + nw);
        let m_beta = wire_beta_matrix(&w.grid1d, &vec![beta_bar; nw]);
        let m_alpha = w.m_sigma();
        let rt = p.transpose().matmul(&w.coupling.r_n.transpose());
        for (i, j, v) in rt.triplets() {
            b_trip.push((i, zb + j, v));
        }
        let lap = w.coupling.ps.transpose().scale_cols(&m_alpha).matmul(&w.coupling.ps);
        for (i, j, v) in lap.triplets() {
            d[ub + i][ub + j] += v;
        }
        let pi_p = w.coupling.pi.matmul(&p);
        let pi_fixed = w.coupling.pi.matvec(&fixed);
        for _ in 0..nw {
            c_rows.push(Vec::new());
        }
        for j in 0..nw {
            d[ub + j][zb + j] = -T::one();
            d[zb + j][ub + j] = -T::one();
            d[zb + j][zb + j] = -T::one() / m_beta[j];
            c_rows.push(pi_p.row(j).collect());
            g[zb + j] = -pi_fixed[j];
        }
        off += 2 * nw;
    }
    let b = SparseMatrix::from_triplets(n, m, &b_trip);
    let c = SparseMatrix::from_rows(n, c_rows);
    let f = Bordered::factor(&a, &b, &c, &d)?;
    // Block residuals `r − A x − B y` and `g − C x − D y`.
    let residuals = |x: &[T], y: &[T]| -> (Vec<T>, Vec<T>) {
        let ax = a.matvec(x);
        let by = b.matvec(y);
        let r1 = (0..n).map(|i| r[i] - ax[i] - by[i]).collect();
        let cx = c.matvec(x);
        let r2 = (0..m).map(|i| g[i] - cx[i] - (0..m).map(|j| d[i][j] * y[j]).sum::<T>()).collect();
        (r1, r2)
    };
    let (mut x, mut y) = f.solve(&r, &g);
    // One step of iterative refinement.
    let (r1, r2) = residuals(&x, &y);
    let (dx, dy) = f.solve(&r1, &r2);
    x.iter_mut().zip(dx).for_each(|(a, d)| *a += d);
    y.iter_mut().zip(dy).for_each(|(a, d)| *a += d);
    let (r1, r2) = residuals(&x, &y);
    let num: T = r1.iter().chain(&r2).map(|&v| v * v).sum();
    let den: T = r.iter().chain(&g).map(|&v| v * v).sum();
    let residual = if den > T::zero() { (num / den).sqrt() } else { T::zero() };
    if !(residual < T::residual_tolerance()) {
        return Err(Error::Residual { residual: residual.to_f64_lossy(), tolerance: T::residual_tolerance().to_f64_lossy() });
    }
    let u = dofs.expand(&x);
    let mut u_bar = Vec::new();
    let mut coupling_residual = T::zero();
    let mut off = 0;
    for w in &model.wires {
        let nw = w.grid1d.num_nodes();
        let ub = y[off..off + nw].to_vec();
        let piu = w.coupling.pi.matvec(&u);
        for (a, b) in piu.iter().zip(&ub) {
            coupling_residual = coupling_residual.max((*a - *b).abs());
        }
        u_bar.push(ub);
        off += 2 * nw;
    }
    Ok(PenaltySolution { u, u_bar, coupling_residual, residual })
}
