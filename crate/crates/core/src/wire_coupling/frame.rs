use super::ParametricCurve;
use crate::geometry::Vec3;
use crate::Real;

/// Orthonormal frame attached to a curve point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<T> {
    pub tangent: Vec3<T>,
    pub n1: Vec3<T>,
    pub n2: Vec3<T>,
}

const SUBSTEPS: usize = 32;

fn initial_normal<T: Real>(t: Vec3<T>) -> Vec3<T> {
    let mut axis = 0;
    for a in 1..3 {
        if t.component(a).abs() < t.component(axis).abs() {
            axis = a;
        }
    }
    let e = Vec3::unit(axis);
    (e - t * e.dot(t)).normalized()
}

fn orthonormal<T: Real>(t: Vec3<T>, r: Vec3<T>) -> Frame<T> {
    let n1 = (r - t * r.dot(t)).normalized();
    Frame { tangent: t, n1, n2: t.cross(n1) }
}

/// Rotation-minimizing frames at `s_nodes`, propagated from `s = 0` by the
/// double-reflection method on a substep subdivision of every element.
pub fn rm_frame<T: Real, C: ParametricCurve<T>>(curve: &C, s_nodes: &[T]) -> Vec<Frame<T>> {
    let two = T::lit(2.0);
    let mut x = curve.position(s_nodes[0]);
    let t0 = curve.derivative(s_nodes[0]).normalized();
    let mut frame = orthonormal(t0, initial_normal(t0));
    let mut out = vec![frame];
    for w in s_nodes.windows(2) {
        for q in 1..=SUBSTEPS {
            let s1 = w[0] + (w[1] - w[0]) * T::from_usize_lossy(q) / T::from_usize_lossy(SUBSTEPS);
            let x1 = curve.position(s1);
            let t1 = curve.derivative(s1).normalized();
            let v1 = x1 - x;
            let c1 = v1.dot(v1);
            let (r_l, t_l) = if c1 > T::zero() {
                (frame.n1 - v1 * (two / c1 * v1.dot(frame.n1)), frame.tangent - v1 * (two / c1 * v1.dot(frame.tangent)))
            } else {
                (frame.n1, frame.tangent)
            };
            let v2 = t1 - t_l;
            let c2 = v2.dot(v2);
            let r1 = if c2 > T::zero() { r_l - v2 * (two / c2 * v2.dot(r_l)) } else { r_l };
            frame = orthonormal(t1, r1);
            x = x1;
        }
        out.push(frame);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire_coupling::WireCurve;

    #[test]
    fn straight_wire_along_z() {
        let c = WireCurve::segment(Vec3::new(0.5, 0.5, 0.0), Vec3::new(0.5, 0.5, 1.0));
        let f = rm_frame(&c, &[0.0, 0.25, 0.5, 0.75, 1.0]);
        for fr in f {
            assert_eq!(fr.tangent, Vec3::new(0.0, 0.0, 1.0));
            assert_eq!(fr.n1, Vec3::new(1.0, 0.0, 0.0));
            assert_eq!(fr.n2, Vec3::new(0.0, 1.0, 0.0));
        }
    }

    #[test]
    fn orthonormal_and_continuous_on_bezier() {
        let c = WireCurve::bezier(Vec3::new(0.5, 0.02, 0.02), Vec3::new(0.5, 0.02, 0.98), 0.7, Vec3::new(0.0, 1.0, 0.0));
        let s: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        let f = rm_frame(&c, &s);
        for fr in &f {
            assert!((fr.tangent.norm() - 1.0).abs() < 1e-12);
            assert!((fr.n1.norm() - 1.0).abs() < 1e-12);
            assert!(fr.n1.dot(fr.tangent).abs() < 1e-12);
            assert!((fr.tangent.cross(fr.n1) - fr.n2).norm() < 1e-12);
            // Planar curve in x = 0.5: n1 stays normal to the plane.
            assert!((fr.n1.x.abs() - 1.0).abs() < 1e-9);
        }
        for w in f.windows(2) {
            assert!(w[0].n1.dot(w[1].n1) > 0.0 && w[0].n2.dot(w[1].n2) > 0.0);
        }
    }

    #[test]
    fn helix_frames_rotate_minimally() {
        // For a general space curve the frame must stay orthonormal and its
        // normal must not twist about the tangent: d(n1)/ds has no n2 part.
        struct Helix;
        impl ParametricCurve<f64> for Helix {
            fn position(&self, s: f64) -> Vec3<f64> {
                let t = 6.0 * s;
                Vec3::new(t.cos(), t.sin(), 0.5 * t)
            }
            fn derivative(&self, s: f64) -> Vec3<f64> {
                let t = 6.0 * s;
                Vec3::new(-t.sin(), t.cos(), 0.5) * 6.0
            }
            fn second_derivative(&self, s: f64) -> Vec3<f64> {
                let t = 6.0 * s;
                Vec3::new(-t.cos(), -t.sin(), 0.0) * 36.0
            }
        }
        let s: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let f = rm_frame(&Helix, &s);
        for w in f.windows(2) {
            let dn = w[1].n1 - w[0].n1;
            let twist = dn.dot((w[0].n2 + w[1].n2) * 0.5);
            assert!(twist.abs() < 1e-5, "twist {twist}");
        }
    }
}
