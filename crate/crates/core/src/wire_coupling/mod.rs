//! Wire curves, their 1D grids and the sparse operators coupling a wire to
//! the 3D grid.

mod coupling;
mod curve;
mod frame;
mod quadrature;

pub use coupling::{build_pi, build_ps, build_rn, gamma, CouplingParams, CouplingSet, JouleSpreading};
pub use curve::{frenet_curvature_max, ParametricCurve, WireCurve};
pub use frame::{rm_frame, Frame};
pub use quadrature::integrate_adaptive;

use crate::{Error, Real, Result};

/// Partition of the parameter interval `[0, 1]` of one wire.
#[derive(Debug, Clone, PartialEq)]
pub struct Wire1DGrid<T> {
    pub s_nodes: Vec<T>,
    /// `|Λ_j|` per element.
    pub element_arclen: Vec<T>,
    /// `|Λ̃_j|` per node: half of each adjacent element.
    pub dual_len: Vec<T>,
}

impl<T: Real> Wire1DGrid<T> {
    /// `n1d` nodes equidistant in the curve parameter.
    pub fn uniform<C: ParametricCurve<T>>(curve: &C, n1d: usize) -> Result<Self> {
        if n1d < 2 {
            return Err(Error::Invalid(format!("a wire needs at least 2 nodes, got {n1d}")));
        }
        let n = T::from_usize_lossy(n1d - 1);
        let mut s: Vec<T> = (0..n1d - 1).map(|i| T::from_usize_lossy(i) / n).collect();
        s.push(T::one());
        Self::from_nodes(curve, s)
    }

    pub fn from_nodes<C: ParametricCurve<T>>(curve: &C, s_nodes: Vec<T>) -> Result<Self> {
        if s_nodes.len() < 2
            || s_nodes[0] != T::zero()
            || *s_nodes.last().unwrap() != T::one()
            || s_nodes.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Invalid("wire nodes must increase strictly from 0 to 1".into()));
        }
        let element_arclen = arc_lengths(curve, &s_nodes);
        let half = T::lit(0.5);
        let n = s_nodes.len();
        let dual_len = (0..n)
            .map(|j| {
                let left = if j > 0 { element_arclen[j - 1] * half } else { T::zero() };
                let right = if j + 1 < n { element_arclen[j] * half } else { T::zero() };
                left + right
            })
            .collect();
        Ok(Self { s_nodes, element_arclen, dual_len })
    }

    pub fn num_nodes(&self) -> usize {
        self.s_nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.element_arclen.len()
    }

    pub fn total_length(&self) -> T {
        self.element_arclen.iter().copied().sum()
    }

    /// Arc length from `s = 0` to every node.
    pub fn cumulative_arclen(&self) -> Vec<T> {
        let mut acc = T::zero();
        let mut out = vec![acc];
        for &l in &self.element_arclen {
            acc += l;
            out.push(acc);
        }
        out
    }

    /// Parameter step `h̄` (mean element width in `s`).
    pub fn h_bar(&self) -> T {
        T::one() / T::from_usize_lossy(self.num_elements())
    }
}

/// Arc length of every element `[s_j, s_{j+1}]` by adaptive Gauss quadrature
/// of `|dx/ds|`.
pub fn arc_lengths<T: Real, C: ParametricCurve<T>>(curve: &C, s_nodes: &[T]) -> Vec<T> {
    s_nodes
        .windows(2)
        .map(|w| integrate_adaptive(|s| curve.derivative(s).norm(), w[0], w[1], T::lit(1e-10)))
        .collect()
}
