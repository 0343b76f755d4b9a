use crate::Real;

const GL_NODES: [f64; 5] =
    [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

fn gauss5<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> T {
    let half = T::lit(0.5);
    let (m, r) = ((a + b) * half, (b - a) * half);
    let mut s = T::zero();
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        s += T::lit(w) * f(m + r * T::lit(*x));
    }
    s * r
}

fn refine<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, whole: T, tol: T, depth: usize) -> T {
    let m = (a + b) * T::lit(0.5);
    let (l, r) = (gauss5(f, a, m), gauss5(f, m, b));
    let both = l + r;
    if depth == 0 || (both - whole).abs() <= tol * both.abs().max(T::min_positive_value()) {
        return both;
    }
    refine(f, a, m, l, tol, depth - 1) + refine(f, m, b, r, tol, depth - 1)
}

/// Adaptive 5-point Gauss-Legendre quadrature of `f` over `[a, b]` with
/// relative tolerance `tol` per panel.
pub fn integrate_adaptive<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    if a == b {
        return T::zero();
    }
    let whole = gauss5(&f, a, b);
    refine(&f, a, b, whole, tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_exact() {
        let v = integrate_adaptive(|x: f64| x.powi(9) - 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert!((v - (102.4 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn smooth_non_polynomial() {
        let v = integrate_adaptive(|x: f64| (1.0 + x * x).sqrt(), 0.0, 1.0, 1e-12);
        let exact = 0.5 * (2f64.sqrt() + (1.0 + 2f64.sqrt()).ln());
        assert!((v - exact).abs() < 1e-13);
    }
}
