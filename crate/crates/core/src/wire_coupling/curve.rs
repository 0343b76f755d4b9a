use crate::geometry::Vec3;
use crate::Real;

/// A regular curve `x(s)`, `s ∈ [0, 1]`.
pub trait ParametricCurve<T: Real> {
    fn position(&self, s: T) -> Vec3<T>;
    fn derivative(&self, s: T) -> Vec3<T>;
    fn second_derivative(&self, s: T) -> Vec3<T>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum WireCurve<T> {
    Segment {
        start: Vec3<T>,
        end: Vec3<T>,
    },
    /// Quadratic Bézier whose middle control point is lifted by `2·height`
    /// along `normal`, so the apex sits `height` above the chord midpoint.
    QuadraticBezier {
        start: Vec3<T>,
        end: Vec3<T>,
        height: T,
        normal: Vec3<T>,
    },
}

impl<T: Real> WireCurve<T> {
    pub fn segment(start: Vec3<T>, end: Vec3<T>) -> Self {
        Self::Segment { start, end }
    }

    pub fn bezier(start: Vec3<T>, end: Vec3<T>, height: T, normal: Vec3<T>) -> Self {
        Self::QuadraticBezier { start, end, height, normal: normal.normalized() }
    }

    pub fn start(&self) -> Vec3<T> {
        match self {
            Self::Segment { start, .. } | Self::QuadraticBezier { start, .. } => *start,
        }
    }

    pub fn end(&self) -> Vec3<T> {
        match self {
            Self::Segment { end, .. } | Self::QuadraticBezier { end, .. } => *end,
        }
    }

    fn control(&self) -> Vec3<T> {
        match self {
            Self::Segment { start, end } => (*start + *end) * T::lit(0.5),
            Self::QuadraticBezier { start, end, height, normal } => {
                (*start + *end) * T::lit(0.5) + *normal * (T::lit(2.0) * *height)
            }
        }
    }

    /// Mirror image under `x_axis → 2·plane − x_axis`.
    pub fn mirrored(&self, axis: usize, plane: T) -> Self {
        let m = |v: Vec3<T>| {
            let mut a = v.to_array();
            a[axis] = T::lit(2.0) * plane - a[axis];
            Vec3::from_array(a)
        };
        let flip = |v: Vec3<T>| {
            let mut a = v.to_array();
            a[axis] = -a[axis];
            Vec3::from_array(a)
        };
        match self {
            Self::Segment { start, end } => Self::Segment { start: m(*start), end: m(*end) },
            Self::QuadraticBezier { start, end, height, normal } => {
                Self::QuadraticBezier { start: m(*start), end: m(*end), height: *height, normal: flip(*normal) }
            }
        }
    }
}

impl<T: Real> ParametricCurve<T> for WireCurve<T> {
    fn position(&self, s: T) -> Vec3<T> {
        match self {
            Self::Segment { start, end } => *start + (*end - *start) * s,
            Self::QuadraticBezier { start, end, .. } => {
                let u = T::one() - s;
                *start * (u * u) + self.control() * (T::lit(2.0) * s * u) + *end * (s * s)
            }
        }
    }

    fn derivative(&self, s: T) -> Vec3<T> {
        match self {
            Self::Segment { start, end } => *end - *start,
            Self::QuadraticBezier { start, end, .. } => {
                let c = self.control();
                let two = T::lit(2.0);
                (c - *start) * (two * (T::one() - s)) + (*end - c) * (two * s)
            }
        }
    }

    fn second_derivative(&self, _s: T) -> Vec3<T> {
        match self {
            Self::Segment { .. } => Vec3::zero(),
            Self::QuadraticBezier { start, end, .. } => (*start - self.control() * T::lit(2.0) + *end) * T::lit(2.0),
        }
    }
}

/// Maximum of `|x′ × x″| / |x′|³` over `n_samples` equidistant parameters.
pub fn frenet_curvature_max<T: Real, C: ParametricCurve<T>>(curve: &C, n_samples: usize) -> T {
    let n = n_samples.max(2) - 1;
    (0..=n)
        .map(|i| {
            let s = T::from_usize_lossy(i) / T::from_usize_lossy(n);
            let d1 = curve.derivative(s);
            let d2 = curve.second_derivative(s);
            d1.cross(d2).norm() / d1.norm().powi(3)
        })
        .fold(T::zero(), T::max)
}
