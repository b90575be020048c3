//! Grid-based belief propagation.
//!
//! Messages are densities tabulated on the quadrature grid and updated
//! synchronously over all directed edges. On trees the iteration reaches
//! the exact fixed point after `diameter` sweeps; the fixed point is the
//! reference that SOSMP runs are scored against.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::basis::{Basis, BasisSpec};
use crate::model::{Graph, PairwiseMrf};
use crate::{Error, Result};

/// One density per directed edge.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMessages {
    msgs: Vec<Vec<f64>>,
}

impl DenseMessages {
    /// Every message uniform on the state space.
    pub fn uniform(mrf: &PairwiseMrf) -> Self {
        let grid = mrf.grid();
        let u = 1.0 / grid.volume();
        Self {
            msgs: vec![vec![u; grid.len()]; mrf.graph().num_directed()],
        }
    }

    pub fn from_vecs(msgs: Vec<Vec<f64>>) -> Self {
        Self { msgs }
    }

    pub fn len(&self) -> usize {
        self.msgs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.msgs.is_empty()
    }

    pub fn message(&self, i: usize) -> &[f64] {
        &self.msgs[i]
    }

    pub fn messages(&self) -> &[Vec<f64>] {
        &self.msgs
    }

    /// Basis coefficients of every message.
    pub fn project(&self, basis: &Basis) -> Result<Vec<Vec<f64>>> {
        self.msgs.iter().map(|m| basis.project(m)).collect()
    }
}

/// `[F_{v->u}(m)](x) = kappa * int psi_uv(x, y) psi_v(y) prod_w m_{w->v}(y) dy`.
pub fn bp_update_edge(mrf: &PairwiseMrf, msgs: &DenseMessages, edge: usize) -> Result<Vec<f64>> {
    let grid = mrf.grid();
    let graph = mrf.graph();
    let (v, _) = graph.directed_edge(edge);
    let mut h: Vec<f64> = mrf
        .node_table(v)
        .iter()
        .zip(grid.weights())
        .map(|(p, w)| p * w)
        .collect();
    for &k in graph.inputs(edge) {
        h.iter_mut().zip(msgs.message(k)).for_each(|(a, m)| *a *= m);
    }
    let mut out = vec![0.0; grid.len()];
    mrf.apply_edge(edge, &h, &mut out);
    grid.normalize(&mut out).map_err(|_| {
        Error::Degenerate(format!("update on directed edge {edge} has zero mass"))
    })?;
    Ok(out)
}

/// One synchronous sweep; returns the new messages and the largest
/// per-edge `L^2` change.
pub fn sweep(mrf: &PairwiseMrf, msgs: &DenseMessages) -> Result<(DenseMessages, f64)> {
    let grid = mrf.grid();
    let next = (0..mrf.graph().num_directed())
        .into_par_iter()
        .map(|i| bp_update_edge(mrf, msgs, i))
        .collect::<Result<Vec<_>>>()?;
    let residual = next
        .iter()
        .zip(&msgs.msgs)
        .map(|(a, b)| grid.dist_sq(a, b).sqrt())
        .fold(0.0, f64::max);
    Ok((DenseMessages { msgs: next }, residual))
}

#[derive(Debug, Clone)]
pub struct FixedPointRun {
    pub messages: DenseMessages,
    pub sweeps: usize,
    /// Largest per-edge `L^2` change in the final sweep.
    pub residual: f64,
    pub converged: bool,
}

/// Synchronous BP from uniform messages until the largest per-edge change
/// drops below `tol` or `max_iters` sweeps have run. Non-convergence is
/// reported through [`FixedPointRun::converged`], not as an error.
pub fn run_to_fixed_point(mrf: &PairwiseMrf, tol: f64, max_iters: usize) -> Result<FixedPointRun> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let mut msgs = DenseMessages::uniform(mrf);
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < max_iters {
        let (next, r) = sweep(mrf, &msgs)?;
        msgs = next;
        residual = r;
        sweeps += 1;
        if residual < tol {
            break;
        }
    }
    Ok(FixedPointRun {
        messages: msgs,
        sweeps,
        residual,
        converged: residual < tol,
    })
}

/// `tau_u ∝ psi_u prod_{v in N(u)} m_{v->u}`, normalized on the grid.
pub fn marginal(mrf: &PairwiseMrf, msgs: &DenseMessages, u: usize) -> Result<Vec<f64>> {
    let mut tau = mrf.node_table(u).to_vec();
    for &k in mrf.graph().incoming(u) {
        tau.iter_mut().zip(msgs.message(k)).for_each(|(a, m)| *a *= m);
    }
    mrf.grid()
        .normalize(&mut tau)
        .map_err(|_| Error::Degenerate(format!("marginal at node {u} has zero mass")))?;
    Ok(tau)
}

/// Largest model accepted by [`brute_force_marginal`].
pub const BRUTE_FORCE_MAX_NODES: usize = 4;

/// A factor over one or two variables, tabulated on the grid.
struct Factor {
    vars: Vec<usize>,
    table: Vec<f64>,
}

impl Factor {
    #[inline]
    fn at(&self, n: usize, assign: impl Fn(usize) -> usize) -> f64 {
        match self.vars.as_slice() {
            [] => self.table[0],
            [a] => self.table[assign(*a)],
            [a, b] => self.table[assign(*a) * n + assign(*b)],
            _ => unreachable!("factors have at most two variables"),
        }
    }
}

/// Marginal of node `u` by direct quadrature of the joint density over all
/// other nodes.
///
/// The nested sums are evaluated one variable at a time (minimum-degree
/// order) over explicit factor tables; intermediate factors wider than two
/// variables are refused.
pub fn brute_force_marginal(mrf: &PairwiseMrf, u: usize) -> Result<Vec<f64>> {
    let graph = mrf.graph();
    let n_nodes = graph.num_nodes();
    if n_nodes > BRUTE_FORCE_MAX_NODES {
        return Err(Error::TooLarge(format!(
            "brute-force marginal on {n_nodes} nodes (limit {BRUTE_FORCE_MAX_NODES})"
        )));
    }
    let grid = mrf.grid();
    let n = grid.len();
    let w = grid.weights();
    let mut factors: Vec<Factor> = (0..n_nodes)
        .map(|v| Factor {
            vars: vec![v],
            table: mrf.node_table(v).to_vec(),
        })
        .collect();
    for (e, &(a, b)) in graph.edges().iter().enumerate() {
        let t = mrf.edge_table(e);
        let mut table = vec![0.0; n * n];
        for xa in 0..n {
            for xb in 0..n {
                table[xa * n + xb] = t.value(grid, xa, xb, false);
            }
        }
        factors.push(Factor {
            vars: vec![a, b],
            table,
        });
    }

    let mut remaining: Vec<usize> = (0..n_nodes).filter(|&v| v != u).collect();
    while !remaining.is_empty() {
        let scope = |v: usize, fs: &[Factor]| {
            let mut s: Vec<usize> = fs
                .iter()
                .filter(|f| f.vars.contains(&v))
                .flat_map(|f| f.vars.iter().copied())
                .filter(|&x| x != v)
                .collect();
            s.sort_unstable();
            s.dedup();
            s
        };
        let (pos, v) = remaining
            .iter()
            .copied()
            .enumerate()
            .min_by_key(|&(_, v)| (scope(v, &factors).len(), v))
            .expect("non-empty");
        remaining.swap_remove(pos);
        let s = scope(v, &factors);
        if s.len() > 2 {
            return Err(Error::TooLarge(format!(
                "eliminating node {v} creates a factor over {} variables",
                s.len()
            )));
        }
        let (bucket, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = rest;
        let combos = n.pow(s.len() as u32);
        let table: Vec<f64> = (0..combos)
            .into_par_iter()
            .map(|c| {
                let (s0, s1) = if s.len() == 2 { (c / n, c % n) } else { (c, 0) };
                let mut acc = 0.0;
                for x in 0..n {
                    let assign = |var: usize| {
                        if var == v {
                            x
                        } else if var == s[0] {
                            s0
                        } else {
                            s1
                        }
                    };
                    let mut p = w[x];
                    for f in &bucket {
                        p *= f.at(n, assign);
                    }
                    acc += p;
                }
                acc
            })
            .collect();
        factors.push(Factor { vars: s, table });
    }

    let mut tau = vec![1.0; n];
    for f in &factors {
        for (x, t) in tau.iter_mut().enumerate() {
            *t *= f.at(n, |_| x);
        }
    }
    grid.normalize(&mut tau)
        .map_err(|_| Error::Degenerate(format!("brute-force marginal at node {u} has zero mass")))?;
    Ok(tau)
}

/// Directed-edge dependency matrix of a tree: row `v -> u` carries `weight`
/// in the columns `w -> v`, `w in N(v) \ {u}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NilpotentMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl NilpotentMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.dim + col]
    }

    pub fn identity(dim: usize) -> Self {
        let mut values = vec![0.0; dim * dim];
        (0..dim).for_each(|i| values[i * dim + i] = 1.0);
        Self { dim, values }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut values = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.values[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    values[i * d + j] += a * other.values[k * d + j];
                }
            }
        }
        Self { dim: d, values }
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::identity(self.dim), |acc, _| acc.mul(self))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn row_nonzeros(&self, row: usize) -> usize {
        self.values[row * self.dim..(row + 1) * self.dim]
            .iter()
            .filter(|v| **v != 0.0)
            .count()
    }

    /// Smallest `l` with `N^l = 0`, searched up to `dim + 1`.
    pub fn nilpotency_index(&self) -> Option<usize> {
        let mut p = Self::identity(self.dim);
        for l in 0..=self.dim + 1 {
            if p.is_zero() {
                return Some(l);
            }
            p = p.mul(self);
        }
        None
    }
}

/// Builds the dependency matrix for a tree; cyclic or disconnected graphs
/// are rejected.
pub fn build_nilpotent_matrix(graph: &Graph, weight: f64) -> Result<NilpotentMatrix> {
    if !graph.is_tree() {
        return Err(Error::Structure("nilpotent matrix requires a tree".into()));
    }
    let dim = graph.num_directed();
    let mut values = vec![0.0; dim * dim];
    for i in 0..dim {
        for &k in graph.inputs(i) {
            values[i * dim + k] = weight;
        }
    }
    Ok(NilpotentMatrix { dim, values })
}

/// Empirical contraction ratio of the BP operator around `base`.
///
/// Each trial draws two smooth positive perturbations `m`, `m'` of `base`
/// and evaluates, for every directed edge with at least one input,
/// `|F(m) - F(m')| / sqrt(mean_w |m_w - m'_w|^2)`. Returns the maximum;
/// a value below one is consistent with (but never proves)
/// `(1 - gamma / 2)`-contractivity.
pub fn estimate_contraction(
    mrf: &PairwiseMrf,
    base: &DenseMessages,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let grid = mrf.grid();
    let graph = mrf.graph();
    let probe = Basis::new(BasisSpec::for_space(mrf.space(), 4)?, grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let mut perturb = || -> Result<DenseMessages> {
            let msgs = base
                .msgs
                .iter()
                .map(|m| {
                    let z: Vec<f64> = (0..probe.len())
                        .map(|_| 0.5 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                        .collect();
                    let xi = probe.synthesize(&z)?;
                    let mut p: Vec<f64> = m.iter().zip(&xi).map(|(a, s)| a * s.exp()).collect();
                    grid.normalize(&mut p)?;
                    Ok(p)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DenseMessages { msgs })
        };
        let m = perturb()?;
        let mp = perturb()?;
        let ratios = (0..graph.num_directed())
            .into_par_iter()
            .filter(|&i| !graph.inputs(i).is_empty())
            .map(|i| {
                let ins = graph.inputs(i);
                let den = (ins
                    .iter()
                    .map(|&k| grid.dist_sq(m.message(k), mp.message(k)))
                    .sum::<f64>()
                    / ins.len() as f64)
                    .sqrt();
                if den == 0.0 {
                    return Ok(0.0);
                }
                let a = bp_update_edge(mrf, &m, i)?;
                let b = bp_update_edge(mrf, &mp, i)?;
                Ok(grid.dist_sq(&a, &b).sqrt() / den)
            })
            .collect::<Result<Vec<f64>>>()?;
        worst = ratios.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}
