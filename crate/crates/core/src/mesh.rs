//! Tensor-product primal grids, graded refinement, the incidence operator `G`
//! and the dual-grid measures.
//!
//! Nodes, edges and cells are numbered lexicographically with x running
//! fastest. Edges are grouped by direction: all x-edges first, then y, then z.
//! An axis may be degenerate (a single coordinate); it then stands for a layer
//! of unit thickness and carries no edges, which is how planar problems are
//! represented.

use crate::geometry::Vec3;
use crate::sparse::SparseMatrix;
use crate::{Error, Real, Result};
use std::io::Write;

/// Relative snap tolerance for coincident coordinates.
pub const SNAP_RELATIVE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis1D<T> {
    coords: Vec<T>,
}

impl<T: Real> Axis1D<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidAxis(format!("need at least 2 points, got {}", coords.len())));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidAxis(format!("non-finite coordinate {c}")));
        }
        if let Some(w) = coords.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidAxis(format!("coordinates not strictly increasing at {} -> {}", w[0], w[1])));
        }
        Ok(Self { coords })
    }

    /// A single-coordinate axis standing for a layer of unit thickness.
    pub fn degenerate(c: T) -> Self {
        Self { coords: vec![c] }
    }

    pub fn uniform(lo: T, hi: T, intervals: usize) -> Result<Self> {
        if intervals == 0 || hi <= lo {
            return Err(Error::InvalidAxis(format!("uniform axis [{lo}, {hi}] with {intervals} intervals")));
        }
        let h = (hi - lo) / T::from_usize_lossy(intervals);
        let mut c: Vec<T> = (0..intervals).map(|i| lo + h * T::from_usize_lossy(i)).collect();
        c.push(hi);
        Self::new(c)
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.coords.len() == 1
    }

    pub fn lo(&self) -> T {
        self.coords[0]
    }

    pub fn hi(&self) -> T {
        *self.coords.last().unwrap()
    }

    pub fn extent(&self) -> T {
        self.hi() - self.lo()
    }

    pub fn interval(&self, i: usize) -> T {
        self.coords[i + 1] - self.coords[i]
    }

    pub fn intervals(&self) -> Vec<T> {
        self.coords.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn max_interval(&self) -> T {
        self.intervals().into_iter().fold(T::zero(), T::max)
    }

    pub fn min_interval(&self) -> T {
        self.intervals().into_iter().fold(T::infinity(), T::min)
    }

    /// Number of cell layers along the axis (one for a degenerate axis).
    pub fn cells(&self) -> usize {
        (self.coords.len() - 1).max(1)
    }

    /// Cells touching node `i` together with the part of the node's dual
    /// width lying inside each of them.
    pub fn dual_parts(&self, i: usize) -> Vec<(usize, T)> {
        if self.is_degenerate() {
            return vec![(0, T::one())];
        }
        let half = T::lit(0.5);
        let mut out = Vec::with_capacity(2);
        if i > 0 {
            out.push((i - 1, self.interval(i - 1) * half));
        }
        if i + 1 < self.coords.len() {
            out.push((i, self.interval(i) * half));
        }
        out
    }

    /// Dual width of node `i`: half of each adjacent interval.
    pub fn dual_width(&self, i: usize) -> T {
        self.dual_parts(i).into_iter().map(|p| p.1).sum()
    }

    /// Merges `points` into the axis, dropping those within `tol` of an
    /// existing or previously merged coordinate.
    pub fn insert_points(&self, points: &[T], tol: T) -> Result<Self> {
        let mut all = self.coords.clone();
        for &p in points {
            if !p.is_finite() || p < self.lo() - tol || p > self.hi() + tol {
                return Err(Error::InvalidAxis(format!("inserted point {p} outside [{}, {}]", self.lo(), self.hi())));
            }
            all.push(p);
        }
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut out: Vec<T> = Vec::with_capacity(all.len());
        for c in all {
            match out.last() {
                Some(&l) if (c - l).abs() <= tol => {}
                _ => out.push(c),
            }
        }
        // Keep the original end points exactly.
        if let Some(f) = out.first_mut() {
            *f = self.lo();
        }
        if let Some(l) = out.last_mut() {
            *l = self.hi();
        }
        if self.is_degenerate() {
            return Ok(Self { coords: out });
        }
        Self::new(out)
    }

    /// Inserts the mirrored layers `x0 ± r_i`, `i = 1..n`, of a grading of
    /// radius `b` around the existing point `x0`.
    pub fn refine_local(&self, x0: T, b: T, n: usize, mu: T) -> Result<Self> {
        let tol = T::lit(SNAP_RELATIVE) * self.extent().max(b);
        if !self.coords.iter().any(|&c| (c - x0).abs() <= tol) {
            return Err(Error::InvalidRefinement(format!("{x0} is not a point of the axis")));
        }
        if let Some(c) = self.coords.iter().find(|&&c| (c - x0).abs() > tol && (c - x0).abs() < b - tol) {
            return Err(Error::InvalidRefinement(format!(
                "existing point {c} lies inside the refinement region ({}, {})",
                x0 - b,
                x0 + b
            )));
        }
        if x0 - b < self.lo() - tol || x0 + b > self.hi() + tol {
            return Err(Error::InvalidRefinement(format!("refinement region around {x0} with radius {b} leaves the axis")));
        }
        let r = grade_layers(b, n, mu)?;
        let mut coords = self.coords.clone();
        for &ri in &r[1..] {
            coords.push(x0 - ri);
            coords.push(x0 + ri);
        }
        coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Layers landing on the axis ends coincide with them up to rounding.
        let mut out: Vec<T> = Vec::with_capacity(coords.len());
        for c in coords {
            match out.last() {
                Some(&l) if (c - l).abs() <= tol => {}
                _ => out.push(c),
            }
        }
        Self::new(out)
    }

    /// Locates `p`: returns the interpolation weights of the (at most two)
    /// axis nodes bracketing it.
    pub fn weights(&self, p: T, tol: T) -> Option<Vec<(usize, T)>> {
        if self.is_degenerate() {
            return ((p - self.coords[0]).abs() <= tol).then(|| vec![(0, T::one())]);
        }
        if p < self.lo() - tol || p > self.hi() + tol {
            return None;
        }
        let n = self.coords.len();
        let i = self.coords.partition_point(|&c| c <= p).saturating_sub(1).min(n - 2);
        let (a, b) = (self.coords[i], self.coords[i + 1]);
        if (p - a).abs() <= tol {
            return Some(vec![(i, T::one())]);
        }
        if (p - b).abs() <= tol {
            return Some(vec![(i + 1, T::one())]);
        }
        let t = (p - a) / (b - a);
        Some(vec![(i, T::one() - t), (i + 1, t)])
    }
}

/// Layer radii `r_i = b (i/N)^(1/mu)`, `i = 0..N`.
pub fn grade_layers<T: Real>(b: T, n: usize, mu: T) -> Result<Vec<T>> {
    if !(mu > T::zero() && mu <= T::one()) {
        return Err(Error::InvalidGrading { mu: mu.to_f64_lossy() });
    }
    if !(b > T::zero()) || n == 0 {
        return Err(Error::InvalidRefinement(format!("grading needs b > 0 and N >= 1, got b = {b}, N = {n}")));
    }
    let nn = T::from_usize_lossy(n);
    let e = T::one() / mu;
    let mut r: Vec<T> = (0..n).map(|i| b * (T::from_usize_lossy(i) / nn).powf(e)).collect();
    r.push(b);
    Ok(r)
}

/// Axis over `[lo, hi]` graded toward `x0` with `n` layers on each side.
/// With `x0` at the centre this is the grading with `b = d/2`.
pub fn graded_axis<T: Real>(lo: T, hi: T, x0: T, mu: T, n: usize) -> Result<Axis1D<T>> {
    if !(x0 >= lo && x0 <= hi) || hi <= lo {
        return Err(Error::InvalidRefinement(format!("grading centre {x0} outside [{lo}, {hi}]")));
    }
    let mut coords = vec![x0];
    if x0 > lo {
        let r = grade_layers(x0 - lo, n, mu)?;
        coords.extend(r[1..n].iter().map(|&ri| x0 - ri));
        coords.push(lo);
    }
    if x0 < hi {
        let r = grade_layers(hi - x0, n, mu)?;
        coords.extend(r[1..n].iter().map(|&ri| x0 + ri));
        coords.push(hi);
    }
    coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Axis1D::new(coords)
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<T> {
    pub lo: Vec3<T>,
    pub hi: Vec3<T>,
}

impl<T: Real> BoundingBox<T> {
    pub fn new(lo: Vec3<T>, hi: Vec3<T>) -> Self {
        Self { lo, hi }
    }

    pub fn cube(d: T) -> Self {
        Self::new(Vec3::zero(), Vec3::new(d, d, d))
    }

    pub fn contains(&self, p: Vec3<T>, tol: T) -> bool {
        (0..3).all(|a| p.component(a) >= self.lo.component(a) - tol && p.component(a) <= self.hi.component(a) + tol)
    }
}

/// Builds the globally graded grid: every axis graded toward the matching
/// coordinate of `x0`.
pub fn build_global_graded<T: Real>(domain: BoundingBox<T>, x0: Vec3<T>, mu: T, n: usize) -> Result<RectilinearGrid<T>> {
    let axes = [0, 1, 2].map(|a| graded_axis(domain.lo.component(a), domain.hi.component(a), x0.component(a), mu, n));
    let [ax, ay, az] = axes;
    Ok(RectilinearGrid::new([ax?, ay?, az?]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RectilinearGrid<T> {
    axes: [Axis1D<T>; 3],
}

/// Dual-grid measures of a [`RectilinearGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DualMeasures<T> {
    /// `|Ã_l|` per primal edge.
    pub dual_facet_area: Vec<T>,
    /// `|Ṽ_k|` per primal node.
    pub dual_volume: Vec<T>,
    /// `|L_l|` per primal edge.
    pub primal_edge_len: Vec<T>,
    /// `|∂Ṽ_k ∩ ∂D|` per node, zero for interior nodes.
    pub boundary_dual_area: Vec<T>,
}

impl<T: Real> DualMeasures<T> {
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.boundary_dual_area.len()).filter(|&k| self.boundary_dual_area[k] > T::zero()).collect()
    }
}

impl<T: Real> RectilinearGrid<T> {
    pub fn new(axes: [Axis1D<T>; 3]) -> Self {
        Self { axes }
    }

    pub fn axes(&self) -> &[Axis1D<T>; 3] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &Axis1D<T> {
        &self.axes[a]
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.axes[0].len(), self.axes[1].len(), self.axes[2].len()]
    }

    pub fn num_nodes(&self) -> usize {
        let [nx, ny, nz] = self.dims();
        nx * ny * nz
    }

    /// Node counts of the edge block in direction `dir`.
    pub fn edge_dims(&self, dir: usize) -> [usize; 3] {
        let mut d = self.dims();
        d[dir] -= 1;
        d
    }

    pub fn num_edges_dir(&self, dir: usize) -> usize {
        self.edge_dims(dir).iter().product()
    }

    pub fn num_edges(&self) -> usize {
        (0..3).map(|d| self.num_edges_dir(d)).sum()
    }

    pub fn edge_offset(&self, dir: usize) -> usize {
        (0..dir).map(|d| self.num_edges_dir(d)).sum()
    }

    /// Facets normal to `dir` (spanned by the two other directions).
    pub fn num_facets(&self) -> usize {
        let d = self.dims();
        (0..3)
            .map(|n| {
                let mut c = d;
                for (a, ca) in c.iter_mut().enumerate() {
                    if a != n {
                        *ca = ca.saturating_sub(1);
                    }
                }
                c.iter().product::<usize>()
            })
            .sum()
    }

    pub fn cell_dims(&self) -> [usize; 3] {
        [self.axes[0].cells(), self.axes[1].cells(), self.axes[2].cells()]
    }

    pub fn num_cells(&self) -> usize {
        self.cell_dims().iter().product()
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.dims();
        i + nx * (j + ny * k)
    }

    pub fn node_ijk(&self, n: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims();
        [n % nx, (n / nx) % ny, n / (nx * ny)]
    }

    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [cx, cy, _] = self.cell_dims();
        i + cx * (j + cy * k)
    }

    pub fn cell_ijk(&self, c: usize) -> [usize; 3] {
        let [cx, cy, _] = self.cell_dims();
        [c % cx, (c / cx) % cy, c / (cx * cy)]
    }

    pub fn edge_index(&self, dir: usize, i: usize, j: usize, k: usize) -> usize {
        let [ex, ey, _] = self.edge_dims(dir);
        self.edge_offset(dir) + i + ex * (j + ey * k)
    }

    /// Direction and start-node `(i, j, k)` of edge `e`.
    pub fn edge_location(&self, e: usize) -> (usize, [usize; 3]) {
        let mut local = e;
        for dir in 0..3 {
            let n = self.num_edges_dir(dir);
            if local < n {
                let [ex, ey, _] = self.edge_dims(dir);
                return (dir, [local % ex, (local / ex) % ey, local / (ex * ey)]);
            }
            local -= n;
        }
        panic!("edge index {e} out of range");
    }

    /// Start and end node of edge `e`.
    pub fn edge_nodes(&self, e: usize) -> (usize, usize) {
        let (dir, ijk) = self.edge_location(e);
        let mut end = ijk;
        end[dir] += 1;
        (self.node_index(ijk[0], ijk[1], ijk[2]), self.node_index(end[0], end[1], end[2]))
    }

    pub fn node_position(&self, n: usize) -> Vec3<T> {
        let [i, j, k] = self.node_ijk(n);
        Vec3::new(self.axes[0].coords()[i], self.axes[1].coords()[j], self.axes[2].coords()[k])
    }

    pub fn cell_center(&self, c: usize) -> Vec3<T> {
        let ijk = self.cell_ijk(c);
        let half = T::lit(0.5);
        let comp = |a: usize| {
            let ax = &self.axes[a];
            if ax.is_degenerate() {
                ax.coords()[0]
            } else {
                (ax.coords()[ijk[a]] + ax.coords()[ijk[a] + 1]) * half
            }
        };
        Vec3::new(comp(0), comp(1), comp(2))
    }

    pub fn bounding_box(&self) -> BoundingBox<T> {
        BoundingBox::new(
            Vec3::new(self.axes[0].lo(), self.axes[1].lo(), self.axes[2].lo()),
            Vec3::new(self.axes[0].hi(), self.axes[1].hi(), self.axes[2].hi()),
        )
    }

    /// Largest axis extent, the length scale of the snap tolerance.
    pub fn length_scale(&self) -> T {
        self.axes.iter().map(|a| a.extent()).fold(T::zero(), T::max)
    }

    pub fn snap_tolerance(&self) -> T {
        T::lit(SNAP_RELATIVE) * self.length_scale()
    }

    /// Primal incidence matrix `G` (edges × nodes): −1 at the start node, +1 at
    /// the end node of every edge.
    pub fn gradient(&self) -> SparseMatrix<T> {
        let rows = (0..self.num_edges())
            .map(|e| {
                let (a, b) = self.edge_nodes(e);
                vec![(a, -T::one()), (b, T::one())]
            })
            .collect();
        SparseMatrix::from_rows(self.num_nodes(), rows)
    }

    pub fn edge_length(&self, e: usize) -> T {
        let (dir, ijk) = self.edge_location(e);
        self.axes[dir].interval(ijk[dir])
    }

    /// Cells sharing edge `e` with the area of the edge's dual facet lying in
    /// each of them.
    pub fn edge_cell_parts(&self, e: usize) -> Vec<(usize, T)> {
        let (dir, ijk) = self.edge_location(e);
        let (a1, a2) = ((dir + 1) % 3, (dir + 2) % 3);
        let mut out = Vec::with_capacity(4);
        for (c1, w1) in self.axes[a1].dual_parts(ijk[a1]) {
            for (c2, w2) in self.axes[a2].dual_parts(ijk[a2]) {
                let mut c = [0; 3];
                c[dir] = ijk[dir];
                c[a1] = c1;
                c[a2] = c2;
                out.push((self.cell_index(c[0], c[1], c[2]), w1 * w2));
            }
        }
        out
    }

    /// Cells around node `n` with the part of the dual volume inside each.
    pub fn node_cell_parts(&self, n: usize) -> Vec<(usize, T)> {
        let ijk = self.node_ijk(n);
        let mut out = Vec::with_capacity(8);
        for (cx, wx) in self.axes[0].dual_parts(ijk[0]) {
            for (cy, wy) in self.axes[1].dual_parts(ijk[1]) {
                for (cz, wz) in self.axes[2].dual_parts(ijk[2]) {
                    out.push((self.cell_index(cx, cy, cz), wx * wy * wz));
                }
            }
        }
        out
    }

    pub fn dual_measures(&self) -> DualMeasures<T> {
        let ne = self.num_edges();
        let mut dual_facet_area = Vec::with_capacity(ne);
        let mut primal_edge_len = Vec::with_capacity(ne);
        for e in 0..ne {
            let (dir, ijk) = self.edge_location(e);
            let (a1, a2) = ((dir + 1) % 3, (dir + 2) % 3);
            dual_facet_area.push(self.axes[a1].dual_width(ijk[a1]) * self.axes[a2].dual_width(ijk[a2]));
            primal_edge_len.push(self.axes[dir].interval(ijk[dir]));
        }
        let widths: Vec<Vec<T>> =
            self.axes.iter().map(|ax| (0..ax.len()).map(|i| ax.dual_width(i)).collect()).collect();
        let nn = self.num_nodes();
        let mut dual_volume = Vec::with_capacity(nn);
        let mut boundary_dual_area = Vec::with_capacity(nn);
        for n in 0..nn {
            let ijk = self.node_ijk(n);
            let w = [widths[0][ijk[0]], widths[1][ijk[1]], widths[2][ijk[2]]];
            dual_volume.push(w[0] * w[1] * w[2]);
            let mut area = T::zero();
            for a in 0..3 {
                let ax = &self.axes[a];
                if ax.is_degenerate() {
                    continue;
                }
                let faces = usize::from(ijk[a] == 0) + usize::from(ijk[a] + 1 == ax.len());
                if faces > 0 {
                    area += T::from_usize_lossy(faces) * w[(a + 1) % 3] * w[(a + 2) % 3];
                }
            }
            boundary_dual_area.push(area);
        }
        DualMeasures { dual_facet_area, dual_volume, primal_edge_len, boundary_dual_area }
    }

    /// Trilinear (Whitney) interpolation weights of point `p`. Entries with
    /// zero weight are omitted.
    pub fn trilinear_row(&self, p: Vec3<T>) -> Result<Vec<(usize, T)>> {
        let tol = self.snap_tolerance();
        let out_of_domain =
            || Error::OutOfDomain { x: p.x.to_f64_lossy(), y: p.y.to_f64_lossy(), z: p.z.to_f64_lossy() };
        let wx = self.axes[0].weights(p.x, tol).ok_or_else(out_of_domain)?;
        let wy = self.axes[1].weights(p.y, tol).ok_or_else(out_of_domain)?;
        let wz = self.axes[2].weights(p.z, tol).ok_or_else(out_of_domain)?;
        let mut row = Vec::with_capacity(8);
        for &(k, a) in &wz {
            for &(j, b) in &wy {
                for &(i, c) in &wx {
                    let w = a * b * c;
                    if w != T::zero() {
                        row.push((self.node_index(i, j, k), w));
                    }
                }
            }
        }
        Ok(row)
    }

    /// Arithmetic mean of all primal edge lengths.
    pub fn mean_edge_length(&self) -> T {
        self.mean_edge_length_dirs(&[0, 1, 2])
    }

    /// Mean length over the edges pointing in the listed directions.
    pub fn mean_edge_length_dirs(&self, dirs: &[usize]) -> T {
        let mut total = T::zero();
        let mut count = 0usize;
        for &d in dirs {
            let ax = &self.axes[d];
            if ax.is_degenerate() {
                continue;
            }
            let others: usize = (0..3).filter(|&a| a != d).map(|a| self.axes[a].len()).product();
            total += ax.extent() * T::from_usize_lossy(others);
            count += (ax.len() - 1) * others;
        }
        total / T::from_usize_lossy(count.max(1))
    }

    /// Plain-text dump: one line per axis with its coordinates.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (name, ax) in ["x", "y", "z"].iter().zip(&self.axes) {
            write!(w, "{name} {}", ax.len())?;
            for c in ax.coords() {
                write!(w, " {c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_cube(n: usize) -> RectilinearGrid<f64> {
        let a = Axis1D::uniform(0.0, 1.0, n).unwrap();
        RectilinearGrid::new([a.clone(), a.clone(), a])
    }

    #[test]
    fn axis_validation() {
        assert!(Axis1D::new(vec![0.0]).is_err());
        assert!(Axis1D::new(vec![0.0, 0.0]).is_err());
        assert!(Axis1D::new(vec![0.0, 2.0, 1.0]).is_err());
        assert!(Axis1D::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn two_node_gradient() {
        let g = RectilinearGrid::new([
            Axis1D::new(vec![0.0, 1.0]).unwrap(),
            Axis1D::degenerate(0.0),
            Axis1D::degenerate(0.0),
        ]);
        let gm = g.gradient();
        assert_eq!(gm.to_dense(), vec![vec![-1.0, 1.0]]);
    }

    #[test]
    fn counts_of_small_grid() {
        let g = uniform_cube(2);
        assert_eq!(g.num_nodes(), 27);
        assert_eq!(g.num_edges(), 54);
        assert_eq!(g.num_facets(), 36);
        assert_eq!(g.num_cells(), 8);
        let gm = g.gradient();
        assert_eq!(gm.nrows(), 54);
        assert!(gm.matvec(&vec![1.0; 27]).iter().all(|&v| v == 0.0));
        for e in 0..54 {
            let row: Vec<_> = gm.row(e).collect();
            assert_eq!(row.len(), 2);
            let (a, b) = g.edge_nodes(e);
            assert_eq!(gm.get(e, a), -1.0);
            assert_eq!(gm.get(e, b), 1.0);
            let (pa, pb) = (g.node_position(a), g.node_position(b));
            let d = pb - pa;
            assert!(d.x >= 0.0 && d.y >= 0.0 && d.z >= 0.0 && d.norm() > 0.0);
        }
    }

    #[test]
    fn grading_examples() {
        assert_eq!(grade_layers(1.0, 4, 1.0).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(grade_layers(1.0, 2, 0.5).unwrap(), vec![0.0, 0.25, 1.0]);
        assert!(grade_layers(1.0, 2, 0.0).is_err());
        assert!(grade_layers(1.0, 2, 1.5).is_err());
    }

    #[test]
    fn local_refinement() {
        let a = Axis1D::new(vec![0.0f64, 0.5, 1.0]).unwrap();
        let r = a.refine_local(0.5, 0.2, 1, 1.0).unwrap();
        let c = r.coords();
        assert_eq!(c.len(), 5);
        for (x, e) in c.iter().zip([0.0, 0.3, 0.5, 0.7, 1.0]) {
            assert!((x - e).abs() < 1e-15);
        }
        assert!(a.refine_local(0.5, 0.6, 1, 1.0).is_err());
        let b = Axis1D::new(vec![0.0, 0.45, 0.5, 1.0]).unwrap();
        assert!(b.refine_local(0.5, 0.2, 2, 1.0).is_err());
        assert!(b.refine_local(0.2, 0.1, 2, 1.0).is_err());
    }

    #[test]
    fn tensor_refinement_adds_expected_points() {
        let a = Axis1D::new(vec![0.0, 0.5, 1.0]).unwrap();
        let (n, b) = (3, 0.3);
        let r = a.refine_local(0.5, b, n, 0.5).unwrap();
        let inside = |ax: &Axis1D<f64>| ax.coords().iter().filter(|&&c| (c - 0.5).abs() <= b + 1e-12).count();
        let before = inside(&a) * inside(&a);
        let after = inside(&r) * inside(&r);
        assert_eq!(after - before, (2 * n + 1).pow(2) - 1);
    }

    #[test]
    fn global_grading_half() {
        // r_i = 0.5 (i/2)^2 mirrored about the centre.
        let a = graded_axis(0.0, 1.0, 0.5, 0.5, 2).unwrap();
        assert_eq!(a.coords(), &[0.0, 0.375, 0.5, 0.625, 1.0]);
        let u = graded_axis(0.0f64, 1.0, 0.5, 1.0, 4).unwrap();
        assert_eq!(u.len(), 9);
        for h in u.intervals() {
            assert!((h - 0.125).abs() < 1e-15);
        }
        let g = build_global_graded(BoundingBox::cube(1.0), Vec3::new(0.5, 0.5, 0.5), 0.5, 3).unwrap();
        let g1 = build_global_graded(BoundingBox::cube(1.0), Vec3::new(0.5, 0.5, 0.5), 1.0, 3).unwrap();
        assert_eq!(g.num_nodes(), g1.num_nodes());
    }

    #[test]
    fn dual_measures_uniform() {
        let h = 0.25;
        let g = uniform_cube(4);
        let dm = g.dual_measures();
        let interior = g.node_index(2, 2, 2);
        assert!((dm.dual_volume[interior] - h * h * h).abs() < 1e-15);
        assert!((dm.dual_volume[0] - h * h * h / 8.0).abs() < 1e-15);
        let e = g.edge_index(0, 1, 2, 2);
        assert!((dm.dual_facet_area[e] - h * h).abs() < 1e-15);
        let total: f64 = dm.dual_volume.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let surf: f64 = dm.boundary_dual_area.iter().sum();
        assert!((surf - 6.0).abs() < 1e-12);
        // Face-interior, domain-edge and corner boundary nodes.
        assert!((dm.boundary_dual_area[g.node_index(0, 2, 2)] - h * h).abs() < 1e-15);
        assert!((dm.boundary_dual_area[g.node_index(0, 0, 2)] - h * h).abs() < 1e-15);
        assert!((dm.boundary_dual_area[0] - 0.75 * h * h).abs() < 1e-15);
        assert_eq!(dm.boundary_dual_area[interior], 0.0);
    }

    #[test]
    fn trilinear_examples() {
        let g = uniform_cube(2);
        let r = g.trilinear_row(Vec3::new(0.5, 0.5, 0.5)).unwrap();
        assert_eq!(r, vec![(g.node_index(1, 1, 1), 1.0)]);
        let r = g.trilinear_row(Vec3::new(0.25, 0.25, 0.25)).unwrap();
        assert_eq!(r.len(), 8);
        assert!(r.iter().all(|e| e.1 == 0.125));
        let r = g.trilinear_row(Vec3::new(0.25, 0.25, 0.5)).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r.iter().all(|e| e.1 == 0.25));
        assert!(g.trilinear_row(Vec3::new(1.1, 0.5, 0.5)).is_err());
    }

    #[test]
    fn mean_edge_length_uniform() {
        let g = uniform_cube(4);
        assert!((g.mean_edge_length() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dump_lists_axes() {
        let g = uniform_cube(1);
        let mut buf = Vec::new();
        g.write_dump(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x 2 0 1\ny 2 0 1\nz 2 0 1\n");
    }

    #[test]
    fn generic_over_f32() {
        let a = Axis1D::<f32>::uniform(0.0, 1.0, 3).unwrap();
        let g = RectilinearGrid::new([a.clone(), a.clone(), a]);
        let dm = g.dual_measures();
        let total: f32 = dm.dual_volume.iter().sum();
        assert!((total - 1.0).abs() < 1e-5);
        assert!(g.gradient().matvec(&vec![1.0f32; g.num_nodes()]).iter().all(|&v| v == 0.0));
    }

    fn arb_axis() -> impl Strategy<Value = Axis1D<f64>> {
        prop::collection::vec(0.05f64..1.0, 1..6).prop_map(|steps| {
            let mut c = vec![0.0];
            for s in steps {
                let l = *c.last().unwrap();
                c.push(l + s);
            }
            Axis1D::new(c).unwrap()
        })
    }

    proptest! {
        #[test]
        fn dual_measures_partition(ax in arb_axis(), ay in arb_axis(), az in arb_axis()) {
            let g = RectilinearGrid::new([ax.clone(), ay.clone(), az.clone()]);
            let dm = g.dual_measures();
            let (lx, ly, lz) = (ax.extent(), ay.extent(), az.extent());
            let vol: f64 = dm.dual_volume.iter().sum();
            prop_assert!((vol - lx * ly * lz).abs() <= 1e-12 * lx * ly * lz);
            let surf: f64 = dm.boundary_dual_area.iter().sum();
            let exact = 2.0 * (lx * ly + ly * lz + lz * lx);
            prop_assert!((surf - exact).abs() <= 1e-12 * exact);
            // Dual facets of the x-edges in one layer tile the y-z cross-section.
            let mut cross = 0.0;
            for k in 0..az.len() {
                for j in 0..ay.len() {
                    cross += dm.dual_facet_area[g.edge_index(0, 0, j, k)];
                }
            }
            prop_assert!((cross - ly * lz).abs() <= 1e-12 * ly * lz);
            prop_assert!(dm.dual_volume.iter().all(|&v| v > 0.0));
            prop_assert!(dm.dual_facet_area.iter().all(|&v| v > 0.0));
        }

        #[test]
        fn gradient_annihilates_constants(ax in arb_axis(), ay in arb_axis(), az in arb_axis(), c in -5.0f64..5.0) {
            let g = RectilinearGrid::new([ax, ay, az]);
            let gm = g.gradient();
            prop_assert!(gm.matvec(&vec![c; g.num_nodes()]).iter().all(|&v| v == 0.0));
            for e in 0..gm.nrows() {
                prop_assert_eq!(gm.row_nnz(e), 2);
            }
        }

        #[test]
        fn trilinear_partition_of_unity(ax in arb_axis(), ay in arb_axis(), az in arb_axis(),
                                        fx in 0.0f64..=1.0, fy in 0.0f64..=1.0, fz in 0.0f64..=1.0) {
            let g = RectilinearGrid::new([ax.clone(), ay.clone(), az.clone()]);
            let p = Vec3::new(fx * ax.hi(), fy * ay.hi(), fz * az.hi());
            let row = g.trilinear_row(p).unwrap();
            prop_assert!(row.len() <= 8);
            let s: f64 = row.iter().map(|e| e.1).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|e| e.1 >= 0.0 && e.1 <= 1.0));
            // Linear fields are reproduced exactly.
            let lin = |q: Vec3<f64>| 1.0 + 2.0 * q.x - q.y + 0.5 * q.z;
            let v: f64 = row.iter().map(|&(n, w)| w * lin(g.node_position(n))).sum();
            prop_assert!((v - lin(p)).abs() < 1e-12);
        }

        #[test]
        fn grading_monotone(b in 0.01f64..10.0, n in 1usize..20, mu in 0.05f64..=1.0) {
            let r = grade_layers(b, n, mu).unwrap();
            prop_assert_eq!(r[0], 0.0);
            prop_assert_eq!(r[n], b);
            prop_assert!(r.windows(2).all(|w| w[1] > w[0]));
        }

        #[test]
        fn local_refinement_inserts_2n(n in 1usize..8, mu in 0.1f64..=1.0) {
            let a = Axis1D::new(vec![0.0, 0.2, 0.5, 0.9, 1.0]).unwrap();
            let r = a.refine_local(0.5, 0.25, n, mu).unwrap();
            prop_assert_eq!(r.len(), a.len() + 2 * n);
        }
    }
}
