//! Global discrete operators: stiffness matrices, Joule losses, boundary
//! conditions, PEC node merging and the penalty block system.

use crate::materials::{wire_beta_matrix, wire_mass_matrix};
use crate::mesh::{DualMeasures, RectilinearGrid};
use crate::sparse::SparseMatrix;
use crate::wire_coupling::{CouplingSet, JouleSpreading, Wire1DGrid};
use crate::{Error, Real, Result};
use std::collections::BTreeMap;

/// `K_α = Gᵀ M_α G`.
pub fn bulk_stiffness<T: Real>(g: &SparseMatrix<T>, m_alpha: &[T]) -> SparseMatrix<T> {
    g.transpose().scale_cols(m_alpha).matmul(g)
}

/// `K_α^w = Σ_i Xᵢᵀ M̄ᵢ P̄_s Πᵢ`.
pub fn wire_stiffness<T: Real>(couplings: &[&CouplingSet<T>], m_bar: &[Vec<T>], n_nodes: usize) -> SparseMatrix<T> {
    assert_eq!(couplings.len(), m_bar.len());
    let mut k = SparseMatrix::zeros(n_nodes, n_nodes);
    for (cs, m) in couplings.iter().zip(m_bar) {
        let term = cs.x.transpose().scale_cols(m).matmul(&cs.ps.matmul(&cs.pi));
        k = k.add(&term);
    }
    k
}

/// Element powers `Q̄_j = M̄_σ,jj ((P̄_s φ̄)_j)²` of one wire.
pub fn element_joule_losses<T: Real>(cs: &CouplingSet<T>, m_sigma: &[T], phi_bar: &[T]) -> Vec<T> {
    let d = cs.ps.matvec(phi_bar);
    d.iter().zip(m_sigma).map(|(&v, &m)| m * v * v).collect()
}

/// Nodal Joule losses `Q^w = Σ_i Sᵢᵀ Q̄ᵢ` with the spreading matrix `S`
/// selected by `mode`. Returns the nodal vector and the element powers.
pub fn joule_losses<T: Real>(
    couplings: &[&CouplingSet<T>],
    m_sigma: &[Vec<T>],
    phi_bar: &[Vec<T>],
    mode: JouleSpreading,
    n_nodes: usize,
) -> (Vec<T>, Vec<Vec<T>>) {
    let mut q = vec![T::zero(); n_nodes];
    let mut elements = Vec::with_capacity(couplings.len());
    for ((cs, m), pb) in couplings.iter().zip(m_sigma).zip(phi_bar) {
        let qe = element_joule_losses(cs, m, pb);
        let spread = cs.spreading(mode).tmatvec(&qe);
        for (a, b) in q.iter_mut().zip(spread) {
            *a += b;
        }
        elements.push(qe);
    }
    (q, elements)
}

/// Electrodes: node groups with a prescribed value each.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirichletSet<T> {
    pub electrodes: Vec<(Vec<usize>, T)>,
}

impl<T: Real> DirichletSet<T> {
    pub fn new() -> Self {
        Self { electrodes: Vec::new() }
    }

    pub fn add(&mut self, nodes: Vec<usize>, value: T) {
        self.electrodes.push((nodes, value));
    }

    /// Node → value map; a node listed twice must carry the same value.
    pub fn values(&self) -> Result<BTreeMap<usize, T>> {
        let mut map = BTreeMap::new();
        for (nodes, v) in &self.electrodes {
            for &n in nodes {
                if let Some(old) = map.insert(n, *v) {
                    if old != *v {
                        return Err(Error::Invalid(format!("node {n} carries two Dirichlet values {old} and {v}")));
                    }
                }
            }
        }
        Ok(map)
    }
}

/// Per-node Robin data.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinSet<T> {
    /// Heat transfer coefficient per node (only boundary nodes matter).
    pub h: Vec<T>,
    pub t_inf: T,
}

impl<T: Real> RobinSet<T> {
    pub fn uniform(n_nodes: usize, h: T, t_inf: T) -> Self {
        Self { h: vec![h; n_nodes], t_inf }
    }
}

/// Diagonal of `M^∂D` and the right-hand side `M^∂D T_∞`.
pub fn robin_matrix<T: Real>(dual: &DualMeasures<T>, rset: &RobinSet<T>) -> (Vec<T>, Vec<T>) {
    let diag: Vec<T> = dual.boundary_dual_area.iter().zip(&rset.h).map(|(&a, &h)| a * h).collect();
    let rhs = diag.iter().map(|&d| d * rset.t_inf).collect();
    (diag, rhs)
}

/// Connected groups of nodes belonging to PEC cells. Cells sharing at least
/// one node are connected.
pub fn pec_groups<T: Real>(grid: &RectilinearGrid<T>, pec_cells: &[bool]) -> Vec<Vec<usize>> {
    let n = grid.num_nodes();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    let mut in_pec = vec![false; n];
    for (c, _) in pec_cells.iter().enumerate().filter(|e| *e.1) {
        let [i, j, k] = grid.cell_ijk(c);
        let dims = grid.dims();
        let mut corners = Vec::with_capacity(8);
        for dk in 0..2 {
            for dj in 0..2 {
                for di in 0..2 {
                    let (ii, jj, kk) = (i + di, j + dj, k + dk);
                    if ii < dims[0] && jj < dims[1] && kk < dims[2] {
                        corners.push(grid.node_index(ii, jj, kk));
                    }
                }
            }
        }
        for &nd in &corners {
            in_pec[nd] = true;
            let (ra, rb) = (find(&mut parent, corners[0]), find(&mut parent, nd));
            if ra != rb {
                parent[rb] = ra;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for nd in (0..n).filter(|&nd| in_pec[nd]) {
        let r = find(&mut parent, nd);
        groups.entry(r).or_default().push(nd);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

/// Where a global node lives in a reduced system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeDof<T> {
    Free(usize),
    Fixed(T),
}

/// Map from global nodes to reduced unknowns. Dirichlet nodes are fixed; the
/// nodes of a PEC group share one unknown (or one fixed value).
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap<T> {
    pub node: Vec<NodeDof<T>>,
    pub n_free: usize,
}

impl<T: Real> DofMap<T> {
    pub fn identity(n: usize) -> Self {
        Self { node: (0..n).map(NodeDof::Free).collect(), n_free: n }
    }

    pub fn new(n_nodes: usize, dset: &DirichletSet<T>, groups: &[Vec<usize>]) -> Result<Self> {
        let values = dset.values()?;
        let mut node: Vec<Option<NodeDof<T>>> = vec![None; n_nodes];
        for (&k, &v) in &values {
            node[k] = Some(NodeDof::Fixed(v));
        }
        let mut n_free = 0;
        for (gi, g) in groups.iter().enumerate() {
            let mut fixed: Option<T> = None;
            for &k in g {
                if let Some(&v) = values.get(&k) {
                    match fixed {
                        Some(f) if f != v => {
                            return Err(Error::PecConflict { group: gi, a: f.to_f64_lossy(), b: v.to_f64_lossy() })
                        }
                        _ => fixed = Some(v),
                    }
                }
            }
            let dof = match fixed {
                Some(v) => NodeDof::Fixed(v),
                None => {
                    n_free += 1;
                    NodeDof::Free(n_free - 1)
                }
            };
            for &k in g {
                node[k] = Some(dof);
            }
        }
        let node = node
            .into_iter()
            .map(|d| {
                d.unwrap_or_else(|| {
                    n_free += 1;
                    NodeDof::Free(n_free - 1)
                })
            })
            .collect();
        if n_free == 0 {
            return Err(Error::FullyConstrained);
        }
        Ok(Self { node, n_free })
    }

    pub fn is_identity(&self) -> bool {
        self.n_free == self.node.len() && self.node.iter().enumerate().all(|(k, d)| *d == NodeDof::Free(k))
    }

    /// Prolongation `P` (nodes × unknowns): `φ = P x + φ_fixed`.
    pub fn prolongation(&self) -> SparseMatrix<T> {
        let rows = self
            .node
            .iter()
            .map(|d| match d {
                NodeDof::Free(i) => vec![(*i, T::one())],
                NodeDof::Fixed(_) => vec![],
            })
            .collect();
        SparseMatrix::from_rows(self.n_free, rows)
    }

    pub fn fixed_values(&self) -> Vec<T> {
        self.node
            .iter()
            .map(|d| match d {
                NodeDof::Fixed(v) => *v,
                NodeDof::Free(_) => T::zero(),
            })
            .collect()
    }

    pub fn expand(&self, x: &[T]) -> Vec<T> {
        self.node
            .iter()
            .map(|d| match d {
                NodeDof::Free(i) => x[*i],
                NodeDof::Fixed(v) => *v,
            })
            .collect()
    }

    /// `Pᵀ v`.
    pub fn restrict(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_free];
        for (d, &x) in self.node.iter().zip(v) {
            if let NodeDof::Free(i) = d {
                out[*i] += x;
            }
        }
        out
    }
}

/// A reduced linear system `K x = rhs` together with its node map.
#[derive(Debug, Clone)]
pub struct AssembledSystem<T> {
    pub k: SparseMatrix<T>,
    pub rhs: Vec<T>,
    /// Nodal capacitances (thermal systems only).
    pub mass: Option<Vec<T>>,
    pub dofs: DofMap<T>,
}

impl<T: Real> AssembledSystem<T> {
    pub fn reduce(k: &SparseMatrix<T>, rhs: &[T], dofs: DofMap<T>) -> Self {
        if dofs.is_identity() {
            return Self { k: k.clone(), rhs: rhs.to_vec(), mass: None, dofs };
        }
        let p = dofs.prolongation();
        let kr = p.transpose().matmul(&k.matmul(&p));
        let kf = k.matvec(&dofs.fixed_values());
        let moved: Vec<T> = rhs.iter().zip(&kf).map(|(&b, &f)| b - f).collect();
        Self { k: kr, rhs: dofs.restrict(&moved), mass: None, dofs }
    }

    pub fn expand(&self, x: &[T]) -> Vec<T> {
        self.dofs.expand(x)
    }
}

/// Eliminates Dirichlet nodes: `K^a = R^a K R^aᵀ`, `rhs^a = R^a rhs − R^a K R^Dirᵀ φ^Dir`.
pub fn dirichlet_reduce<T: Real>(k: &SparseMatrix<T>, rhs: &[T], dset: &DirichletSet<T>) -> Result<AssembledSystem<T>> {
    let dofs = DofMap::new(k.nrows(), dset, &[])?;
    Ok(AssembledSystem::reduce(k, rhs, dofs))
}

/// Merges every connected PEC group into one unknown (or one fixed value if
/// it touches an electrode) in addition to eliminating Dirichlet nodes.
pub fn pec_reduce<T: Real>(
    k: &SparseMatrix<T>,
    rhs: &[T],
    grid: &RectilinearGrid<T>,
    pec_cells: &[bool],
    dset: &DirichletSet<T>,
) -> Result<AssembledSystem<T>> {
    let groups = pec_groups(grid, pec_cells);
    let dofs = DofMap::new(k.nrows(), dset, &groups)?;
    Ok(AssembledSystem::reduce(k, rhs, dofs))
}

/// Explicit penalty block matrix for unknowns `(u, ū)` of one wire:
///
/// ```text
/// [ K + R_Nᵀ M̄_β Π    −R_Nᵀ M̄_β          ] [u]   [f]
/// [ −M̄_β Π            P̄_sᵀ M̄_α P̄_s + M̄_β ] [ū] = [0]
/// ```
pub fn penalty_blocks<T: Real>(
    k_bulk: &SparseMatrix<T>,
    cs: &CouplingSet<T>,
    m_alpha_bar: &[T],
    m_beta: &[T],
) -> SparseMatrix<T> {
    let n = k_bulk.nrows();
    let m = cs.num_wire_nodes();
    let beta_pi = cs.pi.scale_rows(m_beta);
    let rt_beta_pi = cs.r_n.transpose().matmul(&beta_pi);
    let top_left = k_bulk.add(&rt_beta_pi);
    let top_right = cs.r_n.transpose().scale_cols(m_beta);
    let lap1d = cs.ps.transpose().scale_cols(m_alpha_bar).matmul(&cs.ps);
    let bottom_right = lap1d.add(&SparseMatrix::diag(m_beta));
    let mut trip = Vec::new();
    trip.extend(top_left.triplets());
    trip.extend(top_right.triplets().into_iter().map(|(i, j, v)| (i, n + j, -v)));
    trip.extend(beta_pi.triplets().into_iter().map(|(i, j, v)| (n + i, j, -v)));
    trip.extend(bottom_right.triplets().into_iter().map(|(i, j, v)| (n + i, n + j, v)));
    SparseMatrix::from_triplets(n + m, n + m, &trip)
}

/// Convenience: wire mass and beta diagonals for the penalty system.
pub fn penalty_diagonals<T: Real>(wire: &Wire1DGrid<T>, alpha_bar: &[T], beta_bar: &[T]) -> (Vec<T>, Vec<T>) {
    (wire_mass_matrix(wire, alpha_bar), wire_beta_matrix(wire, beta_bar))
}
