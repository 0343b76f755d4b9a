//! Model builders for the shipped experiments and for custom setups.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    analytic_log2d, analytic_rint, analytic_straightwire, error_delta, error_eps, straightwire_exact_norm_3d,
    straightwire_exact_norms, NormKind, NormWeights,
};
use crate::assembly::{DirichletSet, RobinSet};
use crate::geometry::Vec3;
use crate::materials::{Material, MaterialField};
use crate::mesh::{graded_axis, Axis1D, BoundingBox, RectilinearGrid};
use crate::model::{LumpedSource, Model, WireModel};
use crate::solver::{solve_electric, ElectricSolution, SolverKind};
use crate::wire_coupling::{build_pi, build_rn, frenet_curvature_max, CouplingParams, JouleSpreading, ParametricCurve, WireCurve};
use crate::{Error, Result};

const CURVATURE_SAMPLES: usize = 20_001;

/// How the coupling radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum RcplRule {
    Absolute { value: f64 },
    /// `factor · max_l L_l` over edges perpendicular to the wire.
    MaxTransverseEdge { factor: f64 },
    /// `factor / κ̄`.
    InverseCurvature { factor: f64 },
    /// `factor · H̄² · κ̄`.
    HeightCurvature { factor: f64 },
}

impl RcplRule {
    pub fn resolve(&self, max_transverse_edge: f64, kappa: f64, height: f64) -> Result<f64> {
        let r = match *self {
            RcplRule::Absolute { value } => value,
            RcplRule::MaxTransverseEdge { factor } => factor * max_transverse_edge,
            RcplRule::InverseCurvature { factor } => {
                if !(kappa > 0.0) {
                    return Err(Error::InvalidRadius("curvature rule applied to a straight wire".into()));
                }
                factor / kappa
            }
            RcplRule::HeightCurvature { factor } => factor * height * height * kappa,
        };
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::InvalidRadius(format!("coupling radius resolved to {r}")));
        }
        Ok(r)
    }

    pub fn validate(&self, what: &str, errors: &mut Vec<String>) {
        let (name, v) = match *self {
            RcplRule::Absolute { value } => ("value", value),
            RcplRule::MaxTransverseEdge { factor }
            | RcplRule::InverseCurvature { factor }
            | RcplRule::HeightCurvature { factor } => ("factor", factor),
        };
        if !(v >= 0.0 && v.is_finite()) {
            errors.push(format!("{what}: r_cpl {name} must be nonnegative, got {v}"));
        }
    }
}

/// Transverse grid family around a singular line or point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// Equidistant, `n` intervals on each side of the wire.
    Uniform { n: usize },
    /// Global grading with `n` layers on each side.
    GlobalGraded { mu: f64, n: usize },
    /// Equidistant base with `n` intervals per side, then `layers` graded
    /// layers of radius `b` (default: a third of the smallest base interval).
    LocalGraded {
        mu: f64,
        n: usize,
        layers: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
    },
}

impl GridSpec {
    pub fn level(&self) -> usize {
        match *self {
            GridSpec::Uniform { n } | GridSpec::GlobalGraded { n, .. } | GridSpec::LocalGraded { n, .. } => n,
        }
    }

    pub fn with_level(&self, level: usize) -> Self {
        let mut s = *self;
        match &mut s {
            GridSpec::Uniform { n } | GridSpec::GlobalGraded { n, .. } | GridSpec::LocalGraded { n, .. } => *n = level,
        }
        s
    }

    pub fn label(&self) -> String {
        match *self {
            GridSpec::Uniform { .. } => "G_1".into(),
            GridSpec::GlobalGraded { mu, .. } => format!("G_{mu}"),
            GridSpec::LocalGraded { mu, layers, b, .. } => match b {
                Some(b) => format!("G_{mu},{layers}^{b}"),
                None => format!("G_{mu},{layers}^b"),
            },
        }
    }

    pub fn validate(&self, errors: &mut Vec<String>) {
        let (mu, n) = match *self {
            GridSpec::Uniform { n } => (1.0, n),
            GridSpec::GlobalGraded { mu, n } => (mu, n),
            GridSpec::LocalGraded { mu, n, layers, b } => {
                if layers == 0 {
                    errors.push("grid: layers must be at least 1".into());
                }
                if let Some(b) = b {
                    if !(b > 0.0) {
                        errors.push(format!("grid: b must be positive, got {b}"));
                    }
                }
                (mu, n)
            }
        };
        if !(mu > 0.0 && mu <= 1.0) {
            errors.push(format!("grid: mu must lie in (0, 1], got {mu}"));
        }
        if n == 0 {
            errors.push("grid: n must be at least 1".into());
        }
    }

    /// Axis over `[lo, hi]` refined toward `x0`.
    pub fn axis(&self, lo: f64, hi: f64, x0: f64) -> Result<Axis1D<f64>> {
        match *self {
            GridSpec::Uniform { n } => graded_axis(lo, hi, x0, 1.0, n),
            GridSpec::GlobalGraded { mu, n } => graded_axis(lo, hi, x0, mu, n),
            GridSpec::LocalGraded { mu, n, layers, b } => {
                let base = graded_axis(lo, hi, x0, 1.0, n)?;
                let b = b.unwrap_or(base.min_interval() / 3.0);
                base.refine_local(x0, b, layers, mu)
            }
        }
    }
}

fn insert(axis: Axis1D<f64>, points: &[f64], scale: f64) -> Result<Axis1D<f64>> {
    axis.insert_points(points, 1e-12 * scale)
}

fn axis_from_points(lo: f64, hi: f64, points: &[f64], scale: f64) -> Result<Axis1D<f64>> {
    insert(Axis1D::new(vec![lo, hi])?, points, scale)
}

fn max_interval_of(grid: &RectilinearGrid<f64>, dirs: &[usize]) -> f64 {
    dirs.iter().map(|&a| grid.axis(a)).filter(|ax| !ax.is_degenerate()).map(|ax| ax.max_interval()).fold(0.0, f64::max)
}

fn boundary_electrodes(
    grid: &RectilinearGrid<f64>,
    boundary: &[usize],
    value: impl Fn(Vec3<f64>) -> Result<f64>,
) -> Result<DirichletSet<f64>> {
    let mut d = DirichletSet::new();
    for &k in boundary {
        d.add(vec![k], value(grid.node_position(k))?);
    }
    Ok(d)
}

fn nodes_in_box(grid: &RectilinearGrid<f64>, b: &BoundingBox<f64>) -> Vec<usize> {
    let tol = grid.snap_tolerance();
    (0..grid.num_nodes()).filter(|&k| b.contains(grid.node_position(k), tol)).collect()
}

fn bulk(sigma: f64) -> Material {
    Material { sigma, lambda: 1.0, rho: 1.0, c: 1.0 }
}

/// Error measures of one solved level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub h: f64,
    pub h_bar: f64,
    pub measures: Vec<(String, f64)>,
}

impl LevelResult {
    pub fn measure(&self, name: &str) -> Option<f64> {
        self.measures.iter().find(|m| m.0 == name).map(|m| m.1)
    }
}

/// Point electrode in a single-layer domain, fed through an external
/// resistor and voltage source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resistor0d2d {
    pub d: f64,
    pub sigma: f64,
    pub r_bar: f64,
    /// Defaults to `sqrt(d²/π)`.
    pub r0: Option<f64>,
    /// External resistance per unit length (Ω·m).
    pub r0_prime: f64,
    pub v0: f64,
    pub grid: GridSpec,
    pub r_cpl: RcplRule,
    pub n_theta: usize,
}

impl Default for Resistor0d2d {
    fn default() -> Self {
        Self {
            d: 1.0,
            sigma: 1.0,
            r_bar: 1e-6,
            r0: None,
            r0_prime: 1.0,
            v0: 1.0,
            grid: GridSpec::GlobalGraded { mu: 0.5, n: 16 },
            r_cpl: RcplRule::MaxTransverseEdge { factor: 1.0 },
            n_theta: 8,
        }
    }
}

pub struct Resistor0d2dModel {
    pub model: Model<f64>,
    pub setup: Resistor0d2d,
    pub r0: f64,
    pub r_cpl: f64,
    pub i0_prime: f64,
    pub h: f64,
    pub phi_exact: Vec<f64>,
    pub phi_bar_exact: f64,
    pub weights: NormWeights<f64>,
}

impl Resistor0d2d {
    pub fn r0(&self) -> f64 {
        self.r0.unwrap_or((self.d * self.d / std::f64::consts::PI).sqrt())
    }

    pub fn build(&self) -> Result<Resistor0d2dModel> {
        let (d, c) = (self.d, 0.5 * self.d);
        let x = insert(self.grid.axis(0.0, d, c)?, &[0.45 * d], d)?;
        let y = self.grid.axis(0.0, d, c)?;
        let grid = RectilinearGrid::new([x, y, Axis1D::degenerate(0.0)]);
        let r0 = self.r0();
        let r_cpl = self.r_cpl.resolve(max_interval_of(&grid, &[0, 1]), 0.0, 0.0)?;
        let params = CouplingParams { r_cpl, r_bar: self.r_bar, r0, n_theta: self.n_theta };
        let axis_line = WireCurve::segment(Vec3::new(c, c, 0.0), Vec3::new(c, c, d));
        let r_row = build_rn(&grid, &axis_line, &[0.0])?;
        let (pi_row, gamma) = build_pi(&grid, &axis_line, &[0.0], &params)?;
        let r_int = analytic_rint(self.sigma, self.r_bar, r0);
        let i0_prime = self.v0 / (self.r0_prime + r_int);
        let phi_bar_exact = i0_prime * r_int;
        let exact = |p: Vec3<f64>| {
            let r = ((p.x - c).powi(2) + (p.y - c).powi(2)).sqrt();
            if r > 0.0 {
                analytic_log2d(r, i0_prime, self.sigma, r0)
            } else {
                Ok(phi_bar_exact)
            }
        };
        let materials = MaterialField::uniform(&grid, &bulk(self.sigma));
        let mut model = Model::new(grid, materials);
        model.electrodes = boundary_electrodes(&model.grid, &model.dual.boundary_nodes(), exact)?;
        model.lumped = Some(LumpedSource { r_row, pi_row, gamma, g0: 1.0 / self.r0_prime, v0: self.v0 });
        let phi_exact = (0..model.num_nodes()).map(|k| exact(model.grid.node_position(k))).collect::<Result<_>>()?;
        let omega = BoundingBox::new(Vec3::zero(), Vec3::new(0.45 * d, d, d));
        let weights = NormWeights::new(&model.grid, &omega, None);
        let h = model.grid.mean_edge_length_dirs(&[0, 1]);
        Ok(Resistor0d2dModel { model, setup: *self, r0, r_cpl, i0_prime, h, phi_exact, phi_bar_exact, weights })
    }
}

impl Resistor0d2dModel {
    /// Potential of the point electrode, `Π φ`.
    pub fn electrode_potential(&self, phi: &[f64]) -> f64 {
        self.model.lumped.as_ref().map(|l| l.pi_row.matvec(phi)[0]).unwrap_or(0.0)
    }

    pub fn solve(&self) -> Result<(ElectricSolution<f64>, LevelResult)> {
        let sol = solve_electric(&self.model)?;
        let phi_bar = self.electrode_potential(&sol.phi);
        let eps_1d = (phi_bar - self.phi_bar_exact).abs() / self.phi_bar_exact.abs();
        let eps_3d = error_eps(&self.weights, NormKind::L2Volume, &sol.phi, &self.phi_exact)?;
        let res = LevelResult {
            h: self.h,
            h_bar: 0.0,
            measures: vec![("eps_L2_1D".into(), eps_1d), ("eps_L2_3D".into(), eps_3d)],
        };
        Ok((sol, res))
    }
}

/// Straight wire along `z` through the centre of a cube with the
/// manufactured line-source solution imposed on the whole boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StraightWire {
    pub d: f64,
    pub sigma: f64,
    pub r_bar: f64,
    /// `σ̄ = factor · Ā · σ`.
    pub sigma_bar_factor: f64,
    pub r0: Option<f64>,
    pub i0_prime: f64,
    pub grid: GridSpec,
    pub n1d: usize,
    /// Equidistant `z` base; `None` uses the wire nodes as the only `z` lines.
    pub z_intervals: Option<usize>,
    pub r_cpl: RcplRule,
    pub n_theta: usize,
}

impl Default for StraightWire {
    fn default() -> Self {
        Self {
            d: 1.0,
            sigma: 1.0,
            r_bar: 1e-6,
            sigma_bar_factor: 1e15,
            r0: None,
            i0_prime: 1.0,
            grid: GridSpec::GlobalGraded { mu: 0.5, n: 10 },
            n1d: 33,
            z_intervals: None,
            r_cpl: RcplRule::MaxTransverseEdge { factor: 1.0 },
            n_theta: 8,
        }
    }
}

pub struct StraightWireModel {
    pub model: Model<f64>,
    pub setup: StraightWire,
    pub r0: f64,
    pub r_cpl: f64,
    pub h: f64,
    pub h_bar: f64,
    pub phi_exact: Vec<f64>,
    pub phi_bar_exact: Vec<f64>,
    pub weights: NormWeights<f64>,
    /// Continuous `(‖φ̄‖, ‖∂_s φ̄‖, ‖φ‖_Ω)`.
    pub exact_norms: (f64, f64, f64),
}

impl StraightWire {
    pub fn r0(&self) -> f64 {
        self.r0.unwrap_or((self.d * self.d / std::f64::consts::PI).sqrt())
    }

    pub fn curve(&self) -> WireCurve<f64> {
        let c = 0.5 * self.d;
        WireCurve::segment(Vec3::new(c, c, 0.0), Vec3::new(c, c, self.d))
    }

    pub fn build(&self) -> Result<StraightWireModel> {
        let (d, c) = (self.d, 0.5 * self.d);
        let curve = self.curve();
        if self.n1d < 2 {
            return Err(Error::Invalid(format!("straight wire needs n1d >= 2, got {}", self.n1d)));
        }
        let zs: Vec<f64> = (0..self.n1d).map(|j| d * j as f64 / (self.n1d - 1) as f64).collect();
        let z = match self.z_intervals {
            None => axis_from_points(0.0, d, &zs, d)?,
            Some(n) => insert(Axis1D::uniform(0.0, d, n)?, &zs, d)?,
        };
        let x = insert(self.grid.axis(0.0, d, c)?, &[0.45 * d], d)?;
        let y = self.grid.axis(0.0, d, c)?;
        let grid = RectilinearGrid::new([x, y, z]);
        let r0 = self.r0();
        let r_cpl = self.r_cpl.resolve(max_interval_of(&grid, &[0, 1]), 0.0, 0.0)?;
        let params = CouplingParams { r_cpl, r_bar: self.r_bar, r0, n_theta: self.n_theta };
        let area = std::f64::consts::PI * self.r_bar * self.r_bar;
        let sigma_bar = self.sigma_bar_factor * area * self.sigma;
        let wire = WireModel::new(&grid, curve, self.n1d, params, sigma_bar, sigma_bar)?;
        let exact = |p: Vec3<f64>| -> Result<f64> {
            let r = ((p.x - c).powi(2) + (p.y - c).powi(2)).sqrt();
            let rr = if r > 0.0 { r } else { self.r_bar };
            Ok(analytic_straightwire(rr, p.z, self.i0_prime, self.sigma, r0, self.r_bar, d)?.0)
        };
        let materials = MaterialField::uniform(&grid, &bulk(self.sigma));
        let mut model = Model::new(grid, materials);
        model.electrodes = boundary_electrodes(&model.grid, &model.dual.boundary_nodes(), exact)?;
        let phi_exact = (0..model.num_nodes()).map(|k| exact(model.grid.node_position(k))).collect::<Result<_>>()?;
        let phi_bar_exact = wire
            .grid1d
            .s_nodes
            .iter()
            .map(|&s| Ok(analytic_straightwire(self.r_bar, s * d, self.i0_prime, self.sigma, r0, self.r_bar, d)?.1))
            .collect::<Result<_>>()?;
        let omega = BoundingBox::new(Vec3::zero(), Vec3::new(0.45 * d, d, d));
        let weights = NormWeights::new(&model.grid, &omega, Some(&wire.grid1d));
        let h_bar = wire.grid1d.h_bar();
        model.wires.push(wire);
        let (l2, h1) = straightwire_exact_norms(self.i0_prime, self.sigma, r0, self.r_bar, d);
        let l2_3d = straightwire_exact_norm_3d(self.i0_prime, self.sigma, r0, d, 0.45 * d);
        let h = model.grid.mean_edge_length();
        Ok(StraightWireModel {
            model,
            setup: *self,
            r0,
            r_cpl,
            h,
            h_bar,
            phi_exact,
            phi_bar_exact,
            weights,
            exact_norms: (l2, h1, l2_3d),
        })
    }
}

impl StraightWireModel {
    pub fn measures(&self, sol: &ElectricSolution<f64>) -> Result<LevelResult> {
        let w = &self.weights;
        let pb = &sol.phi_bar[0];
        let (l2, h1, l2_3d) = self.exact_norms;
        let measures = vec![
            ("eps_L2_1D".to_string(), error_eps(w, NormKind::L2Wire, pb, &self.phi_bar_exact)?),
            ("eps_H1_1D".to_string(), error_eps(w, NormKind::H1SemiWire, pb, &self.phi_bar_exact)?),
            ("eps_L2_3D".to_string(), error_eps(w, NormKind::L2Volume, &sol.phi, &self.phi_exact)?),
            ("delta_L2_1D".to_string(), error_delta(w, NormKind::L2Wire, pb, l2)?),
            ("delta_H1_1D".to_string(), error_delta(w, NormKind::H1SemiWire, pb, h1)?),
            ("delta_L2_3D".to_string(), error_delta(w, NormKind::L2Volume, &sol.phi, l2_3d)?),
        ];
        Ok(LevelResult { h: self.h, h_bar: self.h_bar, measures })
    }

    pub fn solve(&self) -> Result<(ElectricSolution<f64>, LevelResult)> {
        let sol = solve_electric(&self.model)?;
        let res = self.measures(&sol)?;
        Ok((sol, res))
    }
}

/// Quadratic Bézier wire between two PEC cubes held at fixed potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BentWire {
    pub d: f64,
    pub sigma: f64,
    pub r_bar: f64,
    pub sigma_bar_factor: f64,
    pub r0: Option<f64>,
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub height: f64,
    pub normal: [f64; 3],
    /// Side length of the PEC cubes centred at the wire ends.
    pub pec_side: f64,
    pub v_start: f64,
    pub v_end: f64,
    pub n1d: usize,
    /// Equidistant `x` base; defaults to `⌊2(N_1D − 1)/3⌋` intervals.
    pub x_intervals: Option<usize>,
    /// Lines between the wire apex and the far `y` face; defaults to `⌊N_1D/4⌋`.
    pub lines_beyond: Option<usize>,
    pub r_cpl: RcplRule,
    pub n_theta: usize,
}

impl Default for BentWire {
    fn default() -> Self {
        Self {
            d: 1.0,
            sigma: 1.0,
            r_bar: 1e-6,
            sigma_bar_factor: 1e15,
            r0: None,
            start: [0.5, 0.02, 0.02],
            end: [0.5, 0.02, 0.98],
            height: 0.7,
            normal: [0.0, 1.0, 0.0],
            pec_side: 0.04,
            v_start: 0.0,
            v_end: 1.0,
            n1d: 17,
            x_intervals: None,
            lines_beyond: None,
            r_cpl: RcplRule::InverseCurvature { factor: 1e-2 },
            n_theta: 8,
        }
    }
}

pub struct BentWireModel {
    pub model: Model<f64>,
    pub setup: BentWire,
    pub kappa: f64,
    pub r_cpl: f64,
    pub h: f64,
    pub h_bar: f64,
    pub weights: NormWeights<f64>,
}

impl BentWire {
    pub fn r0(&self) -> f64 {
        self.r0.unwrap_or((self.d * self.d / std::f64::consts::PI).sqrt())
    }

    pub fn curve(&self) -> WireCurve<f64> {
        WireCurve::bezier(Vec3::from_array(self.start), Vec3::from_array(self.end), self.height, Vec3::from_array(self.normal))
    }

    fn pec_box(&self, centre: [f64; 3]) -> BoundingBox<f64> {
        let h = 0.5 * self.pec_side;
        let c = Vec3::from_array(centre);
        let lo = Vec3::from_array(c.to_array().map(|v| (v - h).max(0.0)));
        let hi = Vec3::from_array(c.to_array().map(|v| (v + h).min(self.d)));
        BoundingBox::new(lo, hi)
    }

    pub fn build(&self) -> Result<BentWireModel> {
        let d = self.d;
        let curve = self.curve();
        if self.n1d < 2 {
            return Err(Error::Invalid(format!("bent wire needs n1d >= 2, got {}", self.n1d)));
        }
        let s: Vec<f64> = (0..self.n1d).map(|j| j as f64 / (self.n1d - 1) as f64).collect();
        let pts: Vec<Vec3<f64>> = s.iter().map(|&s| curve.position(s)).collect();
        let boxes = [self.pec_box(self.start), self.pec_box(self.end)];
        let mut lines: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for p in &pts {
            for a in 0..3 {
                lines[a].push(p.component(a));
            }
        }
        for b in &boxes {
            for a in 0..3 {
                lines[a].push(b.lo.component(a));
                lines[a].push(b.hi.component(a));
            }
        }
        lines[0].push(0.45 * d);
        let apex = pts.iter().map(|p| p.y).fold(f64::MIN, f64::max);
        let m = self.lines_beyond.unwrap_or(self.n1d / 4);
        lines[1].extend((1..=m).map(|i| apex + (d - apex) * i as f64 / (m + 1) as f64));
        let nx = self.x_intervals.unwrap_or(2 * (self.n1d - 1) / 3);
        let x = if nx > 0 { insert(Axis1D::uniform(0.0, d, nx)?, &lines[0], d)? } else { axis_from_points(0.0, d, &lines[0], d)? };
        let y = axis_from_points(0.0, d, &lines[1], d)?;
        let z = axis_from_points(0.0, d, &lines[2], d)?;
        let grid = RectilinearGrid::new([x, y, z]);
        let kappa = frenet_curvature_max(&curve, CURVATURE_SAMPLES);
        let r_cpl = self.r_cpl.resolve(max_interval_of(&grid, &[0, 1, 2]), kappa, self.height)?;
        let params = CouplingParams { r_cpl, r_bar: self.r_bar, r0: self.r0(), n_theta: self.n_theta };
        let area = std::f64::consts::PI * self.r_bar * self.r_bar;
        let sigma_bar = self.sigma_bar_factor * area * self.sigma;
        let wire = WireModel::new(&grid, curve, self.n1d, params, sigma_bar, sigma_bar)?;
        let mut materials = MaterialField::uniform(&grid, &bulk(self.sigma));
        for b in &boxes {
            materials.paint_box(&grid, b, &bulk(self.sigma), true);
        }
        let mut model = Model::new(grid, materials);
        model.electrodes.add(nodes_in_box(&model.grid, &boxes[0]), self.v_start);
        model.electrodes.add(nodes_in_box(&model.grid, &boxes[1]), self.v_end);
        let omega = BoundingBox::new(Vec3::zero(), Vec3::new(0.45 * d, d, d));
        let weights = NormWeights::new(&model.grid, &omega, Some(&wire.grid1d));
        let h_bar = wire.grid1d.h_bar();
        model.wires.push(wire);
        let h = model.grid.mean_edge_length();
        Ok(BentWireModel { model, setup: *self, kappa, r_cpl, h, h_bar, weights })
    }
}

/// Chip package: a PEC die on the floor of a moulded box, twelve bond wires
/// (three per side) to PEC pads at the side walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipPackage {
    /// Package extent `(L_x, L_y, L_z)`.
    pub size: [f64; 3],
    pub chip_side: f64,
    pub chip_height: f64,
    /// Pad extent from the side wall toward the die.
    pub pad_length: f64,
    pub pad_width: f64,
    /// Pads span `z ∈ [pad_bottom, chip_height]`.
    pub pad_bottom: f64,
    pub pad_pitch: f64,
    /// Distance of the wire foot from the die edge.
    pub wire_inset: f64,
    pub wire_height: f64,
    pub r_bar: f64,
    pub r0: Option<f64>,
    pub voltage: f64,
    pub h_conv: f64,
    pub t_inf: f64,
    pub t_init: f64,
    pub n1d: usize,
    pub n_t: usize,
    pub t0: f64,
    /// Target mean edge length of the generated grid.
    pub target_h: f64,
    pub r_cpl: RcplRule,
    pub n_theta: usize,
    pub insulator: Material,
    pub conductor: Material,
    pub wire: Material,
    pub joule_spreading: JouleSpreading,
}

impl Default for ChipPackage {
    fn default() -> Self {
        Self {
            size: [2.4e-3, 2.4e-3, 0.4e-3],
            chip_side: 1.2e-3,
            chip_height: 0.25e-3,
            pad_length: 0.3e-3,
            pad_width: 0.2e-3,
            pad_bottom: 0.15e-3,
            pad_pitch: 0.4e-3,
            wire_inset: 0.1e-3,
            wire_height: 0.1e-3,
            r_bar: 1e-6,
            r0: None,
            voltage: 0.1,
            h_conv: 25.0,
            t_inf: 300.0,
            t_init: 300.0,
            n1d: 4,
            n_t: 10,
            t0: 1.0,
            target_h: 8.5e-5,
            r_cpl: RcplRule::HeightCurvature { factor: 1e-4 },
            n_theta: 8,
            insulator: Material { sigma: 1e-4, lambda: 0.87, rho: 1500.0, c: 882.0 },
            conductor: Material::COPPER,
            wire: Material::COPPER,
            joule_spreading: JouleSpreading::Average,
        }
    }
}

pub struct ChipModel {
    pub model: Model<f64>,
    pub setup: ChipPackage,
    pub h: f64,
    pub kappa: f64,
    pub r_cpl: f64,
    /// Wire index pairs that are mirror images of each other.
    pub mirror_pairs: Vec<(usize, usize)>,
}

impl ChipPackage {
    pub fn r0(&self) -> f64 {
        self.r0.unwrap_or((self.size[0] * self.size[1] / std::f64::consts::PI).sqrt())
    }

    pub fn chip_box(&self) -> BoundingBox<f64> {
        let (cx, cy, h) = (0.5 * self.size[0], 0.5 * self.size[1], 0.5 * self.chip_side);
        BoundingBox::new(Vec3::new(cx - h, cy - h, 0.0), Vec3::new(cx + h, cy + h, self.chip_height))
    }

    fn offsets(&self) -> [f64; 3] {
        [-self.pad_pitch, 0.0, self.pad_pitch]
    }

    /// Pads in wire order: left, right, bottom, top; three each.
    pub fn pad_boxes(&self) -> Vec<BoundingBox<f64>> {
        let [lx, ly, _] = self.size;
        let (cx, cy, w) = (0.5 * lx, 0.5 * ly, 0.5 * self.pad_width);
        let (z0, z1) = (self.pad_bottom, self.chip_height);
        let mut out = Vec::with_capacity(12);
        for o in self.offsets() {
            out.push(BoundingBox::new(Vec3::new(0.0, cy + o - w, z0), Vec3::new(self.pad_length, cy + o + w, z1)));
        }
        for o in self.offsets() {
            out.push(BoundingBox::new(Vec3::new(lx - self.pad_length, cy + o - w, z0), Vec3::new(lx, cy + o + w, z1)));
        }
        for o in self.offsets() {
            out.push(BoundingBox::new(Vec3::new(cx + o - w, 0.0, z0), Vec3::new(cx + o + w, self.pad_length, z1)));
        }
        for o in self.offsets() {
            out.push(BoundingBox::new(Vec3::new(cx + o - w, ly - self.pad_length, z0), Vec3::new(cx + o + w, ly, z1)));
        }
        out
    }

    /// Wires from the die top to the pad tops, in the order of
    /// [`pad_boxes`](Self::pad_boxes).
    pub fn wires(&self) -> Vec<WireCurve<f64>> {
        let [lx, ly, _] = self.size;
        let (cx, cy) = (0.5 * lx, 0.5 * ly);
        let zt = self.chip_height;
        let foot = cx - 0.5 * self.chip_side + self.wire_inset;
        let pad = 0.5 * self.pad_length;
        let up = Vec3::new(0.0, 0.0, 1.0);
        let left: Vec<_> = self
            .offsets()
            .iter()
            .map(|&o| WireCurve::bezier(Vec3::new(foot, cy + o, zt), Vec3::new(pad, cy + o, zt), self.wire_height, up))
            .collect();
        let foot_y = cy - 0.5 * self.chip_side + self.wire_inset;
        let bottom: Vec<_> = self
            .offsets()
            .iter()
            .map(|&o| WireCurve::bezier(Vec3::new(cx + o, foot_y, zt), Vec3::new(cx + o, pad, zt), self.wire_height, up))
            .collect();
        let mut out = left.clone();
        out.extend(left.iter().map(|w| w.mirrored(0, cx)));
        out.extend(bottom.iter().cloned());
        out.extend(bottom.iter().map(|w| w.mirrored(1, cy)));
        out
    }

    pub fn mirror_pairs() -> Vec<(usize, usize)> {
        let mut p: Vec<(usize, usize)> = (0..3).map(|k| (k, k + 3)).chain((0..3).map(|k| (k + 6, k + 9))).collect();
        p.extend([(0, 2), (3, 5), (6, 8), (9, 11)]);
        p
    }

    fn grid_lines(&self) -> [Vec<f64>; 3] {
        let mut lines: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut boxes = self.pad_boxes();
        boxes.push(self.chip_box());
        for b in &boxes {
            for a in 0..3 {
                lines[a].push(b.lo.component(a));
                lines[a].push(b.hi.component(a));
            }
        }
        let s: Vec<f64> = (0..self.n1d).map(|j| j as f64 / (self.n1d - 1) as f64).collect();
        for w in self.wires() {
            for &sj in &s {
                let p = w.position(sj);
                for a in 0..3 {
                    lines[a].push(p.component(a));
                }
            }
        }
        lines
    }

    /// Equidistant base refined by the layout lines, with the base spacing
    /// picked so that the mean edge length is closest to `target_h`.
    pub fn grid(&self) -> Result<RectilinearGrid<f64>> {
        let lines = self.grid_lines();
        let scale = self.size.iter().cloned().fold(0.0, f64::max);
        let build = |spacing: f64| -> Result<RectilinearGrid<f64>> {
            let axes = [0, 1, 2].map(|a| {
                let n = ((self.size[a] / spacing).round() as usize).max(1);
                Axis1D::uniform(0.0, self.size[a], n).and_then(|ax| insert(ax, &lines[a], scale))
            });
            let [x, y, z] = axes;
            Ok(RectilinearGrid::new([x?, y?, z?]))
        };
        let mut best: Option<(f64, RectilinearGrid<f64>)> = None;
        for i in 0..200 {
            let spacing = self.target_h * (0.5 + 0.01 * i as f64);
            let g = build(spacing)?;
            let err = (g.mean_edge_length() - self.target_h).abs();
            if best.as_ref().map_or(true, |b| err < b.0) {
                best = Some((err, g));
            }
        }
        Ok(best.unwrap().1)
    }

    pub fn build(&self) -> Result<ChipModel> {
        if self.n1d < 2 {
            return Err(Error::Invalid(format!("chip wires need n1d >= 2, got {}", self.n1d)));
        }
        let grid = self.grid()?;
        let mut materials = MaterialField::uniform(&grid, &self.insulator);
        let chip = self.chip_box();
        let pads = self.pad_boxes();
        materials.paint_box(&grid, &chip, &self.conductor, true);
        for p in &pads {
            materials.paint_box(&grid, p, &self.conductor, true);
        }
        let r0 = self.r0();
        let area = std::f64::consts::PI * self.r_bar * self.r_bar;
        let mut wires = Vec::with_capacity(12);
        let mut kappa = 0.0;
        let mut r_cpl = 0.0;
        for curve in self.wires() {
            kappa = frenet_curvature_max(&curve, CURVATURE_SAMPLES);
            r_cpl = self.r_cpl.resolve(0.0, kappa, self.wire_height)?;
            let params = CouplingParams { r_cpl, r_bar: self.r_bar, r0, n_theta: self.n_theta };
            wires.push(WireModel::new(&grid, curve, self.n1d, params, area * self.wire.sigma, area * self.wire.lambda)?);
        }
        let mut model = Model::new(grid, materials);
        model.electrodes.add(nodes_in_box(&model.grid, &chip), 0.0);
        for p in &pads {
            model.electrodes.add(nodes_in_box(&model.grid, p), self.voltage);
        }
        model.wires = wires;
        model.robin = RobinSet::uniform(model.num_nodes(), self.h_conv, self.t_inf);
        model.t_init = self.t_init;
        model.thermal_reference = self.t_inf;
        model.joule_spreading = self.joule_spreading;
        let h = model.grid.mean_edge_length();
        Ok(ChipModel { model, setup: *self, h, kappa, r_cpl, mirror_pairs: Self::mirror_pairs() })
    }
}

/// A box region with its own material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub material: Material,
    #[serde(default)]
    pub pec: bool,
}

/// All nodes inside the box carry `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Electrode {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomWire {
    pub start: [f64; 3],
    pub end: [f64; 3],
    /// Bending height; zero or absent gives a straight segment.
    #[serde(default)]
    pub height: f64,
    #[serde(default = "default_normal")]
    pub normal: [f64; 3],
    pub n1d: usize,
    pub r_bar: f64,
    pub r0: f64,
    pub r_cpl: RcplRule,
    pub material: Material,
}

fn default_normal() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl CustomWire {
    pub fn curve(&self) -> WireCurve<f64> {
        let (a, b) = (Vec3::from_array(self.start), Vec3::from_array(self.end));
        if self.height == 0.0 {
            WireCurve::segment(a, b)
        } else {
            WireCurve::bezier(a, b, self.height, Vec3::from_array(self.normal))
        }
    }
}

/// Box domain on an equidistant grid with painted regions, box electrodes
/// and wires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSetup {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub intervals: [usize; 3],
    pub background: Material,
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub electrodes: Vec<Electrode>,
    #[serde(default)]
    pub wires: Vec<CustomWire>,
    #[serde(default)]
    pub h_conv: f64,
    #[serde(default = "default_ambient")]
    pub t_inf: f64,
    #[serde(default = "default_ambient")]
    pub t_init: f64,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
}

fn default_ambient() -> f64 {
    300.0
}

fn default_n_theta() -> usize {
    8
}

impl CustomSetup {
    pub fn validate(&self, errors: &mut Vec<String>) {
        for a in 0..3 {
            if !(self.hi[a] > self.lo[a]) {
                errors.push(format!("custom: hi[{a}] must exceed lo[{a}]"));
            }
            if self.intervals[a] == 0 {
                errors.push(format!("custom: intervals[{a}] must be positive"));
            }
        }
        self.background.validate("custom.background", errors);
        for (i, r) in self.regions.iter().enumerate() {
            r.material.validate(&format!("custom.regions[{i}]"), errors);
        }
        for (i, w) in self.wires.iter().enumerate() {
            let what = format!("custom.wires[{i}]");
            w.material.validate(&what, errors);
            w.r_cpl.validate(&what, errors);
            if w.n1d < 2 {
                errors.push(format!("{what}: n1d must be at least 2"));
            }
            if !(w.r_bar > 0.0 && w.r0 > w.r_bar) {
                errors.push(format!("{what}: need 0 < r_bar < r0"));
            }
        }
        if !(self.h_conv >= 0.0) {
            errors.push(format!("custom: h_conv must be nonnegative, got {}", self.h_conv));
        }
    }

    pub fn build(&self) -> Result<Model<f64>> {
        let scale = (0..3).map(|a| self.hi[a] - self.lo[a]).fold(0.0, f64::max);
        let mut lines: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let curves: Vec<WireCurve<f64>> = self.wires.iter().map(|w| w.curve()).collect();
        for (w, c) in self.wires.iter().zip(&curves) {
            for j in 0..w.n1d {
                let p = c.position(j as f64 / (w.n1d - 1) as f64);
                for a in 0..3 {
                    lines[a].push(p.component(a));
                }
            }
        }
        let axes = [0, 1, 2].map(|a| {
            Axis1D::uniform(self.lo[a], self.hi[a], self.intervals[a]).and_then(|ax| insert(ax, &lines[a], scale))
        });
        let [x, y, z] = axes;
        let grid = RectilinearGrid::new([x?, y?, z?]);
        let mut materials = MaterialField::uniform(&grid, &self.background);
        for r in &self.regions {
            let b = BoundingBox::new(Vec3::from_array(r.lo), Vec3::from_array(r.hi));
            materials.paint_box(&grid, &b, &r.material, r.pec);
        }
        let mut wires = Vec::new();
        for (w, c) in self.wires.iter().zip(curves) {
            let kappa = frenet_curvature_max(&c, CURVATURE_SAMPLES);
            let edge = max_interval_of(&grid, &[0, 1, 2]);
            let r_cpl = w.r_cpl.resolve(edge, kappa, w.height)?;
            let params = CouplingParams { r_cpl, r_bar: w.r_bar, r0: w.r0, n_theta: self.n_theta };
            let area = std::f64::consts::PI * w.r_bar * w.r_bar;
            wires.push(WireModel::new(&grid, c, w.n1d, params, area * w.material.sigma, area * w.material.lambda)?);
        }
        let mut model = Model::new(grid, materials);
        for e in &self.electrodes {
            let b = BoundingBox::new(Vec3::from_array(e.lo), Vec3::from_array(e.hi));
            let nodes = nodes_in_box(&model.grid, &b);
            if nodes.is_empty() {
                return Err(Error::Invalid(format!("electrode box {:?}..{:?} contains no grid node", e.lo, e.hi)));
            }
            model.electrodes.add(nodes, e.value);
        }
        model.wires = wires;
        model.robin = RobinSet::uniform(model.num_nodes(), self.h_conv, self.t_inf);
        model.t_init = self.t_init;
        model.thermal_reference = self.t_inf;
        Ok(model)
    }
}

/// Sets the solver of a built model.
pub fn with_solver_kind(mut model: Model<f64>, solver: SolverKind) -> Model<f64> {
    model.solver = solver;
    model
}
