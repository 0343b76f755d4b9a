//! Discrete norms, error measures, closed-form reference solutions and
//! convergence-order fits.

use crate::mesh::{BoundingBox, RectilinearGrid};
use crate::wire_coupling::{integrate_adaptive, Wire1DGrid};
use crate::{Error, Real, Result};

/// Diagonal weights of the discrete norms.
#[derive(Debug, Clone, PartialEq)]
pub struct NormWeights<T> {
    /// Dual volumes clipped to the evaluation domain `Ω`.
    pub dual_volume: Vec<T>,
    /// 1D element lengths `|Λ_j|`.
    pub element_len: Vec<T>,
    /// 1D dual lengths `|Λ̃_j|`.
    pub dual_len: Vec<T>,
}

/// Which discrete norm an error measure uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L2Wire,
    H1SemiWire,
    L2Volume,
}

impl NormKind {
    pub fn label(self) -> &'static str {
        match self {
            NormKind::L2Wire => "L2_1D",
            NormKind::H1SemiWire => "H1_1D",
            NormKind::L2Volume => "L2_3D",
        }
    }
}

/// Length of `[a, b] ∩ [lo, hi]`.
fn overlap<T: Real>(a: T, b: T, lo: T, hi: T) -> T {
    (b.min(hi) - a.max(lo)).max(T::zero())
}

/// Dual volumes of `grid` intersected with `omega`. Degenerate axes keep
/// their unit width.
pub fn clipped_dual_volumes<T: Real>(grid: &RectilinearGrid<T>, omega: &BoundingBox<T>) -> Vec<T> {
    let half = T::lit(0.5);
    let widths: Vec<Vec<T>> = (0..3)
        .map(|a| {
            let ax = grid.axis(a);
            if ax.is_degenerate() {
                return vec![T::one()];
            }
            let c = ax.coords();
            (0..c.len())
                .map(|i| {
                    let lo = if i > 0 { c[i] - half * (c[i] - c[i - 1]) } else { c[i] };
                    let hi = if i + 1 < c.len() { c[i] + half * (c[i + 1] - c[i]) } else { c[i] };
                    overlap(lo, hi, omega.lo.component(a), omega.hi.component(a))
                })
                .collect()
        })
        .collect();
    (0..grid.num_nodes())
        .map(|n| {
            let [i, j, k] = grid.node_ijk(n);
            widths[0][i] * widths[1][j] * widths[2][k]
        })
        .collect()
}

impl<T: Real> NormWeights<T> {
    pub fn new(grid: &RectilinearGrid<T>, omega: &BoundingBox<T>, wire: Option<&Wire1DGrid<T>>) -> Self {
        let (element_len, dual_len) = match wire {
            Some(w) => (w.element_arclen.clone(), w.dual_len.clone()),
            None => (Vec::new(), Vec::new()),
        };
        Self { dual_volume: clipped_dual_volumes(grid, omega), element_len, dual_len }
    }

    pub fn norm(&self, kind: NormKind, u: &[T]) -> T {
        match kind {
            NormKind::L2Wire => norm_1d_l2(u, &self.dual_len),
            NormKind::H1SemiWire => norm_1d_h1semi(u, &self.element_len),
            NormKind::L2Volume => norm_3d_l2(u, &self.dual_volume),
        }
    }
}

/// `sqrt(ūᵀ D_S̃ ū)`.
pub fn norm_1d_l2<T: Real>(u: &[T], dual_len: &[T]) -> T {
    assert_eq!(u.len(), dual_len.len());
    u.iter().zip(dual_len).map(|(&v, &w)| v * v * w).sum::<T>().sqrt()
}

/// `sqrt(ūᵀ P̄_sᵀ D_S⁻¹ P̄_s ū)`.
pub fn norm_1d_h1semi<T: Real>(u: &[T], element_len: &[T]) -> T {
    assert_eq!(u.len(), element_len.len() + 1);
    u.windows(2).zip(element_len).map(|(p, &l)| (p[1] - p[0]) * (p[1] - p[0]) / l).sum::<T>().sqrt()
}

/// `sqrt(uᵀ D_Ṽ u)` with weights already restricted to `Ω`.
pub fn norm_3d_l2<T: Real>(u: &[T], dual_volume: &[T]) -> T {
    assert_eq!(u.len(), dual_volume.len());
    u.iter().zip(dual_volume).map(|(&v, &w)| v * v * w).sum::<T>().sqrt()
}

fn relative<T: Real>(num: T, den: T, what: &str) -> Result<T> {
    if !(den > T::zero()) {
        return Err(Error::UndefinedMeasure(format!("{what}: reference norm is {den}")));
    }
    Ok(num / den)
}

/// `ε`: norm of the difference to the sampled exact solution, relative.
pub fn error_eps<T: Real>(w: &NormWeights<T>, kind: NormKind, u_h: &[T], u_exact: &[T]) -> Result<T> {
    let diff: Vec<T> = u_h.iter().zip(u_exact).map(|(&a, &b)| a - b).collect();
    relative(w.norm(kind, &diff), w.norm(kind, u_exact), "eps")
}

/// `δ`: discrete norm of `u_h` against the continuous norm of the exact
/// solution.
pub fn error_delta<T: Real>(w: &NormWeights<T>, kind: NormKind, u_h: &[T], exact_norm: T) -> Result<T> {
    relative((w.norm(kind, u_h) - exact_norm).abs(), exact_norm, "delta")
}

/// `Δ`: discrete norms of `u_h` and of a fine reference transferred to the
/// same nodes.
pub fn error_big_delta<T: Real>(w: &NormWeights<T>, kind: NormKind, u_h: &[T], u_ref: &[T]) -> Result<T> {
    let r = w.norm(kind, u_ref);
    relative((w.norm(kind, u_h) - r).abs(), r, "Delta")
}

/// Trilinear interpolation of a nodal field on `fine` at the nodes of
/// `coarse`.
pub fn transfer_nodal<T: Real>(fine: &RectilinearGrid<T>, values: &[T], coarse: &RectilinearGrid<T>) -> Result<Vec<T>> {
    (0..coarse.num_nodes())
        .map(|n| Ok(fine.trilinear_row(coarse.node_position(n))?.into_iter().map(|(k, w)| w * values[k]).sum()))
        .collect()
}

/// Piecewise-linear interpolation in `s` of wire values.
pub fn transfer_wire<T: Real>(s_fine: &[T], values: &[T], s_coarse: &[T]) -> Result<Vec<T>> {
    let tol = T::lit(1e-12);
    s_coarse
        .iter()
        .map(|&s| {
            if s < s_fine[0] - tol || s > s_fine[s_fine.len() - 1] + tol {
                return Err(Error::Invalid(format!("wire parameter {s} outside the reference grid")));
            }
            let j = s_fine.partition_point(|&x| x <= s).clamp(1, s_fine.len() - 1);
            let t = ((s - s_fine[j - 1]) / (s_fine[j] - s_fine[j - 1])).max(T::zero()).min(T::one());
            Ok(values[j - 1] * (T::one() - t) + values[j] * t)
        })
        .collect()
}

/// Potential of a line current in 2D: `−I₀'/(2πσ) log(r/r₀)`.
pub fn analytic_log2d<T: Real>(r: T, i0_prime: T, sigma: T, r0: T) -> Result<T> {
    if !(r > T::zero()) {
        return Err(Error::Invalid(format!("log potential is singular at r = {r}")));
    }
    Ok(-i0_prime / (T::lit(2.0) * T::pi() * sigma) * (r / r0).ln())
}

/// Internal resistance per unit length `log(r₀/r̄)/(2πσ)`.
pub fn analytic_rint<T: Real>(sigma: T, r_bar: T, r0: T) -> T {
    (r0 / r_bar).ln() / (T::lit(2.0) * T::pi() * sigma)
}

/// Straight-wire fields with `I'(z) = I₀' z/d`: `(φ(r, z), φ̄(z))`.
pub fn analytic_straightwire<T: Real>(r: T, z: T, i0_prime: T, sigma: T, r0: T, r_bar: T, d: T) -> Result<(T, T)> {
    let i = i0_prime * z / d;
    Ok((analytic_log2d(r, i, sigma, r0)?, analytic_log2d(r_bar, i, sigma, r0)?))
}

/// Continuous `(‖φ̄‖_L², ‖∂_s φ̄‖_L²)` of the straight-wire 1D solution on
/// a wire of length `d`.
pub fn straightwire_exact_norms<T: Real>(i0_prime: T, sigma: T, r0: T, r_bar: T, d: T) -> (T, T) {
    let k = (i0_prime * (r_bar / r0).ln() / (T::lit(2.0) * T::pi() * sigma)).abs();
    (k * (d / T::lit(3.0)).sqrt(), k / d.sqrt())
}

/// Continuous `‖φ‖_L²` of the straight-wire 3D field over
/// `[0, x_max] × [0, d] × [0, d]` with the wire on `x = y = d/2`; needs
/// `x_max < d/2`.
pub fn straightwire_exact_norm_3d<T: Real>(i0_prime: T, sigma: T, r0: T, d: T, x_max: T) -> T {
    let k = i0_prime / (T::lit(2.0) * T::pi() * sigma);
    let c = d * T::lit(0.5);
    let tol = T::lit(1e-12);
    let inner = |x: T| {
        integrate_adaptive(
            |y: T| {
                let r = ((x - c) * (x - c) + (y - c) * (y - c)).sqrt();
                let l = (r / r0).ln();
                l * l
            },
            T::zero(),
            d,
            tol,
        )
    };
    let area = integrate_adaptive(inner, T::zero(), x_max, tol);
    (k * k * d / T::lit(3.0) * area).sqrt()
}

/// Least-squares slope of `log err` against `log h` and the pairwise
/// local orders between consecutive levels.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit<T> {
    pub slope: T,
    pub local: Vec<T>,
}

pub fn fit_order<T: Real>(points: &[(T, T)]) -> Result<OrderFit<T>> {
    if points.len() < 3 {
        return Err(Error::Invalid(format!("order fit needs at least 3 levels, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > T::zero() && p.1 > T::zero())) {
        return Err(Error::Invalid(format!("order fit needs positive data, got ({}, {})", p.0, p.1)));
    }
    let logs: Vec<(T, T)> = points.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let n = T::from_usize_lossy(logs.len());
    let mx = logs.iter().map(|p| p.0).sum::<T>() / n;
    let my = logs.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if !(sxx > T::zero()) {
        return Err(Error::Invalid("order fit needs distinct step sizes".into()));
    }
    let local = logs.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    Ok(OrderFit { slope: sxy / sxx, local })
}

/// Error values of one measure over a sequence of refinement levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord<T> {
    pub measure: String,
    /// `(h, error)` per level, coarse to fine.
    pub points: Vec<(T, T)>,
}

impl<T: Real> ConvergenceRecord<T> {
    pub fn new(measure: impl Into<String>) -> Self {
        Self { measure: measure.into(), points: Vec::new() }
    }

    pub fn push(&mut self, h: T, err: T) {
        self.points.push((h, err));
    }

    pub fn fit(&self) -> Result<OrderFit<T>> {
        fit_order(&self.points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::mesh::{Axis1D, RectilinearGrid};
    use crate::wire_coupling::WireCurve;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn unit_wire(n: usize) -> Wire1DGrid<f64> {
        let c = WireCurve::segment(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0));
        Wire1DGrid::uniform(&c, n).unwrap()
    }

    #[test]
    fn constant_on_unit_wire() {
        let w = unit_wire(7);
        assert!((norm_1d_l2(&[-2.5; 7], &w.dual_len) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn h1_of_linear_over_one_element() {
        assert!((norm_1d_h1semi::<f64>(&[1.0, 4.0], &[1.0]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn volume_norm_of_one_on_omega() {
        let g = RectilinearGrid::new([
            Axis1D::uniform(0.0, 1.0, 20).unwrap(),
            Axis1D::uniform(0.0, 1.0, 7).unwrap(),
            Axis1D::uniform(0.0, 1.0, 5).unwrap(),
        ]);
        let omega = BoundingBox::new(Vec3::zero(), Vec3::new(0.45, 1.0, 1.0));
        let w = NormWeights::new(&g, &omega, None);
        let n = norm_3d_l2(&vec![1.0; g.num_nodes()], &w.dual_volume);
        assert!((n - 0.45f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn full_domain_clipping_matches_dual_volumes() {
        let g = RectilinearGrid::new([
            Axis1D::new(vec![0.0f64, 0.1, 0.35, 1.0]).unwrap(),
            Axis1D::uniform(0.0, 2.0, 3).unwrap(),
            Axis1D::degenerate(0.0),
        ]);
        let dv = clipped_dual_volumes(&g, &g.bounding_box());
        for (a, b) in dv.iter().zip(&g.dual_measures().dual_volume) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn eps_identities() {
        let w = unit_wire(5);
        let nw = NormWeights { dual_volume: vec![], element_len: w.element_arclen.clone(), dual_len: w.dual_len.clone() };
        let ex = [0.0, 0.3, 0.7, 1.2, 2.0];
        assert_eq!(error_eps(&nw, NormKind::L2Wire, &ex, &ex).unwrap(), 0.0);
        let twice: Vec<f64> = ex.iter().map(|v| 2.0 * v).collect();
        assert!((error_eps(&nw, NormKind::L2Wire, &twice, &ex).unwrap() - 1.0).abs() < 1e-14);
        assert!((error_eps(&nw, NormKind::H1SemiWire, &twice, &ex).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(error_eps(&nw, NormKind::L2Wire, &ex, &[0.0; 5]), Err(Error::UndefinedMeasure(_))));
    }

    #[test]
    fn delta_of_constant_is_zero() {
        let w = unit_wire(9);
        let nw = NormWeights { dual_volume: vec![], element_len: w.element_arclen.clone(), dual_len: w.dual_len.clone() };
        assert!(error_delta(&nw, NormKind::L2Wire, &[3.0; 9], 3.0).unwrap() < 1e-15);
    }

    #[test]
    fn measures_are_scale_invariant() {
        let w = unit_wire(6);
        let nw = NormWeights { dual_volume: vec![], element_len: w.element_arclen.clone(), dual_len: w.dual_len.clone() };
        let a = [0.1, 0.5, 0.4, 0.9, 1.3, 1.0];
        let b = [0.0, 0.45, 0.5, 1.0, 1.2, 1.1];
        let c = 37.5;
        let ac: Vec<f64> = a.iter().map(|v| v * c).collect();
        let bc: Vec<f64> = b.iter().map(|v| v * c).collect();
        for kind in [NormKind::L2Wire, NormKind::H1SemiWire] {
            let e1 = error_eps(&nw, kind, &a, &b).unwrap();
            let e2 = error_eps(&nw, kind, &ac, &bc).unwrap();
            assert!((e1 - e2).abs() < 1e-13);
            let d1 = error_big_delta(&nw, kind, &a, &b).unwrap();
            let d2 = error_big_delta(&nw, kind, &ac, &bc).unwrap();
            assert!((d1 - d2).abs() < 1e-13);
        }
    }

    #[test]
    fn log_potential_vanishes_at_r0() {
        assert_eq!(analytic_log2d(0.7, 1.0, 1.0, 0.7).unwrap(), 0.0);
        assert!(analytic_log2d(0.0, 1.0, 1.0, 0.7).is_err());
    }

    #[test]
    fn rint_value() {
        let r0 = (1.0 / std::f64::consts::PI).sqrt();
        let oracle = (r0 / 1e-6).ln() / (2.0 * std::f64::consts::PI);
        let r = analytic_rint(1.0, 1e-6, r0);
        assert!((r - oracle).abs() < 1e-14);
        assert!((r - 2.108).abs() < 1e-3);
    }

    #[test]
    fn straightwire_ratio_is_independent_of_z() {
        let (r0, rb) = ((1.0 / std::f64::consts::PI).sqrt(), 1e-6);
        for z in [0.1, 0.5, 0.9] {
            let (phi, phib) = analytic_straightwire(0.05, z, 1.0, 1.0, r0, rb, 1.0).unwrap();
            assert!((phib / phi - (rb / r0).ln() / (0.05 / r0).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn straightwire_exact_norms_by_quadrature() {
        let (r0, rb, d) = (0.56, 1e-6, 2.0);
        let (l2, h1) = straightwire_exact_norms(1.0, 1.0, r0, rb, d);
        let n = 200_000;
        let dz = d / n as f64;
        let mut s2 = 0.0;
        for i in 0..n {
            let z = (i as f64 + 0.5) * dz;
            s2 += analytic_straightwire(1.0, z, 1.0, 1.0, r0, rb, d).unwrap().1.powi(2) * dz;
        }
        assert!((l2 - s2.sqrt()).abs() / l2 < 1e-9);
        let (_, p1) = analytic_straightwire(1.0, d, 1.0, 1.0, r0, rb, d).unwrap();
        assert!((h1 - (p1 / d).abs() * d.sqrt()).abs() / h1 < 1e-12);
    }

    #[test]
    fn straightwire_volume_norm_by_midpoint_sum() {
        let (i0, sigma, r0, d) = (1.0, 1.0, 1.0 / std::f64::consts::PI.sqrt(), 1.0);
        let n = 600;
        let (hx, hy) = (0.45 / n as f64, 1.0 / n as f64);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = ((i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy);
                let l = (((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt() / r0).ln();
                s += l * l * hx * hy;
            }
        }
        let k = i0 / (2.0 * std::f64::consts::PI * sigma);
        let oracle = (k * k / 3.0 * s).sqrt();
        let n3 = straightwire_exact_norm_3d(i0, sigma, r0, d, 0.45);
        assert!((n3 - oracle).abs() < 1e-5 * oracle, "{n3} vs {oracle}");
    }

    #[test]
    fn fit_exact_powers() {
        let hs = [0.1f64, 0.05, 0.025, 0.0125];
        let f = fit_order(&hs.map(|h| (h, 3.0 * h * h))).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!(f.local.iter().all(|o| (o - 2.0).abs() < 1e-12));
        let f = fit_order(&hs.map(|h| (h, 0.4))).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert!(fit_order(&hs[..2].iter().map(|&h| (h, h)).collect::<Vec<_>>()).is_err());
        assert!(fit_order(&[(0.1, 1.0), (0.05, 0.0), (0.02, 0.1)]).is_err());
    }

    #[test]
    fn fit_noisy_power() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let h = 0.2 / 1.5f64.powi(i);
                (h, h.powf(1.5) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let s = fit_order(&pts).unwrap().slope;
        assert!((1.4..=1.6).contains(&s), "{s}");
    }

    #[test]
    fn transfer_reproduces_trilinear_fields() {
        let fine = RectilinearGrid::new([
            Axis1D::uniform(0.0, 1.0, 8).unwrap(),
            Axis1D::new(vec![0.0, 0.2, 0.3, 1.0]).unwrap(),
            Axis1D::uniform(0.0, 1.0, 3).unwrap(),
        ]);
        let coarse = RectilinearGrid::new([
            Axis1D::new(vec![0.0, 0.33, 1.0]).unwrap(),
            Axis1D::uniform(0.0, 1.0, 5).unwrap(),
            Axis1D::uniform(0.0, 1.0, 2).unwrap(),
        ]);
        let f = |p: Vec3<f64>| 1.0 + 2.0 * p.x - p.y + 0.5 * p.z;
        let vals: Vec<f64> = (0..fine.num_nodes()).map(|n| f(fine.node_position(n))).collect();
        let t = transfer_nodal(&fine, &vals, &coarse).unwrap();
        for (n, v) in t.iter().enumerate() {
            assert!((v - f(coarse.node_position(n))).abs() < 1e-13);
        }
    }

    #[test]
    fn wire_transfer_on_nested_grids() {
        let fine: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let vals: Vec<f64> = fine.iter().map(|s| s * s).collect();
        let coarse = [0.0, 0.25, 0.5, 1.0];
        let t = transfer_wire(&fine, &vals, &coarse).unwrap();
        assert_eq!(t, vec![0.0, 0.0625, 0.25, 1.0]);
        assert!((transfer_wire(&fine, &vals, &[0.0625]).unwrap()[0] - 0.5 * (1.0 / 64.0)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn norms_are_nonnegative_and_homogeneous(v in prop::collection::vec(-10.0f64..10.0, 2..12), c in -5.0f64..5.0) {
            let n = v.len();
            let dual = vec![1.0 / n as f64; n];
            let elem = vec![1.0 / (n - 1) as f64; n - 1];
            let cv: Vec<f64> = v.iter().map(|x| c * x).collect();
            let a = norm_1d_l2(&v, &dual);
            prop_assert!(a >= 0.0);
            prop_assert!((norm_1d_l2(&cv, &dual) - c.abs() * a).abs() < 1e-10 * (1.0 + a));
            let b = norm_1d_h1semi(&v, &elem);
            prop_assert!((norm_1d_h1semi(&cv, &elem) - c.abs() * b).abs() < 1e-10 * (1.0 + b));
        }
    }
}
