//! Linear solves. The bulk operator is factored by sparse Cholesky; the low
//! rank wire terms are handled through a dense Schur complement on the
//! bordered system
//!
//! ```text
//! [ A  B ] [x]   [r]
//! [ C  D ] [y] = [g]
//! ```

use crate::assembly::DofMap;
use crate::sparse::SparseMatrix;
use crate::{Error, Real, Result};
use faer::linalg::solvers::Solve;
use faer::Mat;

/// Low-rank correction `U diag(c) V`.
#[derive(Debug, Clone)]
pub struct LowRankTerm<T> {
    /// n × m
    pub u: SparseMatrix<T>,
    pub c: Vec<T>,
    /// m × n
    pub v: SparseMatrix<T>,
}

/// `K = A + Σ U diag(c) V` with `A` sparse (symmetric positive definite in
/// every shipped experiment).
#[derive(Debug, Clone)]
pub struct CoupledOperator<T> {
    pub a: SparseMatrix<T>,
    pub terms: Vec<LowRankTerm<T>>,
}

impl<T: Real> CoupledOperator<T> {
    pub fn new(a: SparseMatrix<T>) -> Self {
        Self { a, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = self.a.matvec(x);
        for t in &self.terms {
            let vx: Vec<T> = t.v.matvec(x).iter().zip(&t.c).map(|(&a, &c)| a * c).collect();
            for (yi, ui) in y.iter_mut().zip(t.u.matvec(&vx)) {
                *yi += ui;
            }
        }
        y
    }

    /// The operator as one explicit sparse matrix.
    pub fn to_sparse(&self) -> SparseMatrix<T> {
        self.terms.iter().fold(self.a.clone(), |k, t| k.add(&t.u.scale_cols(&t.c).matmul(&t.v)))
    }

    pub fn diagonal(&self) -> Vec<T> {
        let mut d = self.a.diagonal();
        for t in &self.terms {
            for j in 0..t.v.nrows() {
                for (i, vji) in t.v.row(j) {
                    d[i] += t.u.get(i, j) * t.c[j] * vji;
                }
            }
        }
        d
    }

    /// Restricts to the free unknowns of `dofs`; returns the reduced operator
    /// and right-hand side `Pᵀ (rhs − K φ_fixed)`.
    pub fn reduce(&self, dofs: &DofMap<T>, rhs: &[T]) -> (Self, Vec<T>) {
        if dofs.is_identity() {
            return (self.clone(), rhs.to_vec());
        }
        let p = dofs.prolongation();
        let pt = p.transpose();
        let kf = self.apply(&dofs.fixed_values());
        let moved: Vec<T> = rhs.iter().zip(&kf).map(|(&b, &f)| b - f).collect();
        let a = pt.matmul(&self.a.matmul(&p));
        let terms = self
            .terms
            .iter()
            .map(|t| LowRankTerm { u: pt.matmul(&t.u), c: t.c.clone(), v: t.v.matmul(&p) })
            .collect();
        (Self { a, terms }, dofs.restrict(&moved))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum SolverKind {
    /// Sparse direct factorization.
    Direct,
    /// BiCGSTAB with diagonal preconditioning.
    Iterative { tol: f64, max_iter: usize },
}

impl Default for SolverKind {
    fn default() -> Self {
        SolverKind::Direct
    }
}

enum BaseFactor<T: Real> {
    Cholesky(faer::sparse::linalg::solvers::Llt<usize, T>),
    Lu(faer::sparse::linalg::solvers::Lu<usize, T>),
}

impl<T: Real> BaseFactor<T> {
    fn new(a: &SparseMatrix<T>) -> Result<Self> {
        let fa = a.to_faer();
        if a.asymmetry() == T::zero() {
            return match fa.sp_cholesky(faer::Side::Lower) {
                Ok(l) => Ok(Self::Cholesky(l)),
                Err(_) => Err(Error::Singular(
                    "symmetric operator is not positive definite; the system is probably not anchored by a Dirichlet or Robin condition"
                        .into(),
                )),
            };
        }
        fa.sp_lu().map(Self::Lu).map_err(|e| Error::Singular(format!("sparse LU failed: {e:?}")))
    }

    fn solve(&self, rhs: &Mat<T>) -> Mat<T> {
        match self {
            Self::Cholesky(l) => l.solve(rhs),
            Self::Lu(l) => l.solve(rhs),
        }
    }
}

fn column<T: Real>(v: &[T]) -> Mat<T> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn to_vec<T: Real>(m: &Mat<T>, col: usize) -> Vec<T> {
    (0..m.nrows()).map(|i| m[(i, col)]).collect()
}

/// Factored bordered system with a sparse `A` block and `m` border rows.
pub struct Bordered<T: Real> {
    base: BaseFactor<T>,
    c: SparseMatrix<T>,
    z: Mat<T>,
    schur: Option<faer::linalg::solvers::PartialPivLu<T>>,
}

impl<T: Real> Bordered<T> {
    /// `b` is n × m, `c` is m × n and `d` is m × m (row major).
    pub fn factor(a: &SparseMatrix<T>, b: &SparseMatrix<T>, c: &SparseMatrix<T>, d: &[Vec<T>]) -> Result<Self> {
        let n = a.nrows();
        let m = d.len();
        if b.nrows() != n || b.ncols() != m || c.nrows() != m || c.ncols() != n {
            return Err(Error::Dimension(format!("border blocks do not match n = {n}, m = {m}")));
        }
        let base = BaseFactor::new(a)?;
        if m == 0 {
            return Ok(Self { base, c: c.clone(), z: Mat::zeros(n, 0), schur: None });
        }
        let mut bd = Mat::<T>::zeros(n, m);
        for (i, j, v) in b.triplets() {
            bd[(i, j)] += v;
        }
        let z = base.solve(&bd);
        let mut s = Mat::<T>::from_fn(m, m, |i, j| d[i][j]);
        for i in 0..m {
            for (k, v) in c.row(i) {
                for j in 0..m {
                    s[(i, j)] -= v * z[(k, j)];
                }
            }
        }
        let schur = Some(s.partial_piv_lu());
        Ok(Self { base, c: c.clone(), z, schur })
    }

    pub fn solve(&self, r: &[T], g: &[T]) -> (Vec<T>, Vec<T>) {
        let w = self.base.solve(&column(r));
        let Some(lu) = &self.schur else {
            return (to_vec(&w, 0), Vec::new());
        };
        let m = g.len();
        let cw = self.c.matvec(&to_vec(&w, 0));
        let rhs = Mat::from_fn(m, 1, |i, _| g[i] - cw[i]);
        let y = lu.solve(&rhs);
        let x = (0..w.nrows())
            .map(|i| {
                let mut s = w[(i, 0)];
                for j in 0..m {
                    s -= self.z[(i, j)] * y[(j, 0)];
                }
                s
            })
            .collect();
        (x, to_vec(&y, 0))
    }
}

/// A solution together with its relative residual.
#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub x: Vec<T>,
    pub residual: T,
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn relative_residual<T: Real>(op: &CoupledOperator<T>, x: &[T], b: &[T]) -> T {
    let kx = op.apply(x);
    let r: Vec<T> = kx.iter().zip(b).map(|(&a, &b)| a - b).collect();
    norm(&r) / norm(b)
}

/// Border blocks `B = [U…]`, `C = [V…]`, `D = −diag(1/c)` of the low-rank
/// terms. Entries with `c = 0` contribute nothing and are dropped.
fn border_from_terms<T: Real>(op: &CoupledOperator<T>) -> (SparseMatrix<T>, SparseMatrix<T>, Vec<Vec<T>>) {
    let n = op.dim();
    let mut d = Vec::new();
    let mut c_rows = Vec::new();
    let mut b_trip = Vec::new();
    for t in &op.terms {
        let mut col_of = vec![None; t.c.len()];
        for (j, &cj) in t.c.iter().enumerate() {
            if cj != T::zero() {
                col_of[j] = Some(d.len());
                d.push(-T::one() / cj);
                c_rows.push(t.v.row(j).collect::<Vec<_>>());
            }
        }
        for (i, j, v) in t.u.triplets() {
            if let Some(col) = col_of[j] {
                b_trip.push((i, col, v));
            }
        }
    }
    let m = d.len();
    let dense = (0..m).map(|i| (0..m).map(|j| if i == j { d[i] } else { T::zero() }).collect()).collect();
    (SparseMatrix::from_triplets(n, m, &b_trip), SparseMatrix::from_rows(n, c_rows), dense)
}

enum Method<T: Real> {
    Direct(Bordered<T>),
    Iterative { diag_inv: Vec<T>, tol: T, max_iter: usize },
}

/// A coupled operator prepared for repeated solves.
pub struct PreparedSolver<T: Real> {
    op: CoupledOperator<T>,
    method: Method<T>,
}

impl<T: Real> PreparedSolver<T> {
    pub fn new(op: CoupledOperator<T>, kind: SolverKind) -> Result<Self> {
        let method = match kind {
            SolverKind::Direct => {
                let (b, c, d) = border_from_terms(&op);
                Method::Direct(Bordered::factor(&op.a, &b, &c, &d)?)
            }
            SolverKind::Iterative { tol, max_iter } => {
                let diag_inv = op
                    .diagonal()
                    .into_iter()
                    .map(|d| if d != T::zero() { T::one() / d } else { T::one() })
                    .collect();
                Method::Iterative { diag_inv, tol: T::lit(tol), max_iter }
            }
        };
        Ok(Self { op, method })
    }

    pub fn operator(&self) -> &CoupledOperator<T> {
        &self.op
    }

    /// Solves `K x = b` and rejects the result if the relative residual
    /// exceeds [`Real::residual_tolerance`].
    pub fn solve(&self, b: &[T]) -> Result<Solution<T>> {
        if b.len() != self.op.dim() {
            return Err(Error::Dimension(format!("rhs has {} entries, operator {}", b.len(), self.op.dim())));
        }
        if norm(b) == T::zero() {
            return Ok(Solution { x: vec![T::zero(); b.len()], residual: T::zero() });
        }
        let x = match &self.method {
            Method::Direct(f) => {
                let m = f.z.ncols();
                let (mut x, _) = f.solve(b, &vec![T::zero(); m]);
                // One step of iterative refinement.
                let kx = self.op.apply(&x);
                let r: Vec<T> = b.iter().zip(&kx).map(|(&b, &k)| b - k).collect();
                let (dx, _) = f.solve(&r, &vec![T::zero(); m]);
                x.iter_mut().zip(dx).for_each(|(a, d)| *a += d);
                x
            }
            Method::Iterative { diag_inv, tol, max_iter } => bicgstab(&self.op, b, diag_inv, *tol, *max_iter)?,
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("solution contains non-finite values".into()));
        }
        let residual = relative_residual(&self.op, &x, b);
        if !(residual < T::residual_tolerance()) {
            return Err(Error::Residual { residual: residual.to_f64_lossy(), tolerance: T::residual_tolerance().to_f64_lossy() });
        }
        Ok(Solution { x, residual })
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Right-preconditioned BiCGSTAB.
fn bicgstab<T: Real>(op: &CoupledOperator<T>, b: &[T], diag_inv: &[T], tol: T, max_iter: usize) -> Result<Vec<T>> {
    let n = b.len();
    let precond = |v: &[T]| -> Vec<T> { v.iter().zip(diag_inv).map(|(&a, &d)| a * d).collect() };
    let bn = norm(b);
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    for _ in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == T::zero() {
            return Err(Error::NoConvergence("BiCGSTAB breakdown (rho = 0)".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        v = op.apply(&p_hat);
        alpha = rho_new / dot(&r_hat, &v);
        let s: Vec<T> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        if norm(&s) <= tol * bn {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok(x);
        }
        let s_hat = precond(&s);
        let t = op.apply(&s_hat);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= tol * bn {
            return Ok(x);
        }
        rho = rho_new;
    }
    Err(Error::NoConvergence(format!("BiCGSTAB reached {max_iter} iterations")))
}

/// Solves a plain sparse system (symmetric → Cholesky, otherwise LU).
pub fn solve_linear<T: Real>(k: &SparseMatrix<T>, rhs: &[T]) -> Result<Solution<T>> {
    PreparedSolver::new(CoupledOperator::new(k.clone()), SolverKind::Direct)?.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            b.swap(c, p);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    fn random_spd(n: usize, seed: u64) -> SparseMatrix<f64> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 1.0));
        }
        for _ in 0..3 * n {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i != j {
                // Each off-diagonal pair adds a PSD 2×2 block.
                let w = rng.gen_range(0.1..2.0);
                trip.extend([(i, i, w), (j, j, w), (i, j, -w), (j, i, -w)]);
            }
        }
        SparseMatrix::from_triplets(n, n, &trip)
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        let s = solve_linear(&SparseMatrix::identity(3), &b).unwrap();
        assert_eq!(s.x, b);
    }

    #[test]
    fn chain_with_one_dirichlet() {
        // Nodes 0-1-2 with conductances 1 and 3, node 2 fixed at 2 V, 1 A
        // injected at node 0.
        let k = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 4.0)]);
        let s = solve_linear(&k, &[1.0, 6.0]).unwrap();
        let phi1: f64 = 2.0 + 1.0 / 3.0;
        assert!((s.x[1] - phi1).abs() < 1e-14);
        assert!((s.x[0] - (phi1 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn random_spd_matches_dense() {
        let k = random_spd(50, 3);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).cos()).collect();
        let x = solve_linear(&k, &b).unwrap().x;
        let oracle = dense_solve(k.to_dense(), b);
        assert!(x.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn singular_operator_is_reported() {
        let k = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)]);
        assert!(matches!(solve_linear(&k, &[1.0, -1.0]), Err(Error::Singular(_))));
    }

    fn coupled(n: usize) -> CoupledOperator<f64> {
        let mut op = CoupledOperator::new(random_spd(n, 11));
        let u = SparseMatrix::from_rows(2, (0..n).map(|i| if i % 7 == 0 { vec![(0, 1.0)] } else if i % 5 == 0 { vec![(1, -0.5)] } else { vec![] }).collect());
        let v = SparseMatrix::from_rows(n, vec![vec![(1, 1.0), (3, -1.0)], vec![(2, 0.3), (n - 1, 0.7)]]);
        op.terms.push(LowRankTerm { u, c: vec![2.0, 5.0], v });
        op
    }

    #[test]
    fn bordered_low_rank_matches_dense() {
        let op = coupled(40);
        let b: Vec<f64> = (0..40).map(|i| 1.0 + (i as f64 * 0.3).sin()).collect();
        let s = PreparedSolver::new(op.clone(), SolverKind::Direct).unwrap().solve(&b).unwrap();
        let oracle = dense_solve(op.to_sparse().to_dense(), b);
        assert!(s.x.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-10));
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn bicgstab_matches_direct() {
        let op = coupled(40);
        let b: Vec<f64> = (0..40).map(|i| (i as f64).sqrt()).collect();
        let direct = PreparedSolver::new(op.clone(), SolverKind::Direct).unwrap().solve(&b).unwrap();
        let it = PreparedSolver::new(op, SolverKind::Iterative { tol: 1e-13, max_iter: 500 }).unwrap().solve(&b).unwrap();
        assert!(direct.x.iter().zip(&it.x).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn bicgstab_reports_iteration_limit() {
        let op = coupled(40);
        let b = vec![1.0; 40];
        let r = PreparedSolver::new(op, SolverKind::Iterative { tol: 1e-14, max_iter: 1 }).unwrap().solve(&b);
        assert!(matches!(r, Err(Error::NoConvergence(_))));
    }

    #[test]
    fn bordered_general_blocks() {
        let a = random_spd(12, 5);
        let b = SparseMatrix::from_triplets(12, 2, &[(0, 0, 1.0), (4, 1, -2.0), (7, 0, 0.5)]);
        let c = SparseMatrix::from_triplets(2, 12, &[(0, 3, 1.0), (1, 9, 1.0), (1, 0, -1.0)]);
        let d = vec![vec![-1.0, 0.2], vec![0.0, -3.0]];
        let f = Bordered::factor(&a, &b, &c, &d).unwrap();
        let r: Vec<f64> = (0..12).map(|i| i as f64 - 5.0).collect();
        let g = vec![0.5, -1.5];
        let (x, y) = f.solve(&r, &g);
        let mut full = vec![vec![0.0; 14]; 14];
        for (i, j, v) in a.triplets() {
            full[i][j] += v;
        }
        for (i, j, v) in b.triplets() {
            full[i][12 + j] += v;
        }
        for (i, j, v) in c.triplets() {
            full[12 + i][j] += v;
        }
        for i in 0..2 {
            for j in 0..2 {
                full[12 + i][12 + j] = d[i][j];
            }
        }
        let oracle = dense_solve(full, r.iter().chain(&g).cloned().collect());
        for (a, b) in x.iter().chain(&y).zip(&oracle) {
            assert!((a - b).abs() < 1e-11);
        }
    }
}
