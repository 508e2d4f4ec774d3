//! Approximate feature PPR by forward push followed by residue-weighted
//! random walks.
//!
//! For a non-negative source distribution `x` the estimate `π̂(x; t)` is
//! built in two phases. Forward push moves an `alpha` share of a node's
//! residue into its reserve and spreads the rest over its out-neighbors,
//! until every residue satisfies `residue[u] <= r_max * d(u)`. Whatever
//! residue is left is then resolved by Monte-Carlo walks: node `u` launches
//! `ceil(residue[u] / beta)` walks, each carrying an equal share of
//! `residue[u]` to wherever it stops. The combination is unbiased, and with
//! `beta = β_s` each entry is within `lambda` of the truth with probability
//! at least `1 - phi`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{prescale_normalize, sign_split, NormalizedFeature, Sign};
use crate::graph::Graph;

/// Propagation knobs shared by Feature-Push, Feature-Reuse and the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushConfig {
    /// Teleport (stopping) probability.
    pub alpha: f64,
    /// Convolution coefficient `r` of `D^{r-1} A D^{-r}`.
    pub conv_r: f64,
    /// Absolute error bound.
    pub lambda: f64,
    /// Failure probability.
    pub phi: f64,
    /// PPR threshold; only consulted by verification.
    pub delta: f64,
    pub seed: u64,
}

impl PushConfig {
    /// Defaults for a graph with `n` nodes: `lambda = 1e-4`, `phi = delta = 1/n`.
    pub fn for_graph(n: usize) -> Self {
        let inv = 1.0 / n.max(2) as f64;
        PushConfig {
            alpha: 0.1,
            conv_r: 0.5,
            lambda: 1e-4,
            phi: inv,
            delta: inv,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha = {} not in (0, 1)", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.conv_r) {
            return Err(Error::InvalidParameter(format!(
                "conv_r = {} not in [0, 1]",
                self.conv_r
            )));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda = {} not in (0, 1]",
                self.lambda
            )));
        }
        if !open_unit(self.phi) {
            return Err(Error::InvalidParameter(format!("phi = {} not in (0, 1)", self.phi)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidParameter(format!("delta = {} not in (0, 1]", self.delta)));
        }
        Ok(())
    }

    pub fn standard_coefficient(&self) -> PushCoefficient {
        standard_push_coefficient(self.lambda, self.phi)
    }
}

/// Ratio between the residue left after push and the number of walks.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PushCoefficient(pub f64);

impl PushCoefficient {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn scaled(self, factor: f64) -> Self {
        PushCoefficient(self.0 * factor)
    }
}

/// `β_s = λ² / ((2λ/3 + 2) · ln(2/φ))`.
pub fn standard_push_coefficient(lambda: f64, phi: f64) -> PushCoefficient {
    PushCoefficient(lambda * lambda / ((2.0 * lambda / 3.0 + 2.0) * (2.0 / phi).ln()))
}

/// Threshold balancing push and walk cost: `sqrt(beta * ‖x‖₁ / m)`.
pub fn optimal_rmax(beta: PushCoefficient, x_l1: f64, num_edges: usize) -> f64 {
    (beta.0 * x_l1 / num_edges.max(1) as f64).sqrt()
}

/// Work done by one or more propagations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkStats {
    pub pops: u64,
    /// Neighbor updates performed by push (sum of popped degrees).
    pub push_edges: u64,
    pub walks: u64,
    /// Moves taken by walks; a walk that stops immediately takes none.
    pub walk_steps: u64,
}

impl WorkStats {
    pub fn total(&self) -> u64 {
        self.push_edges + self.walks + self.walk_steps
    }
}

impl std::ops::AddAssign for WorkStats {
    fn add_assign(&mut self, rhs: Self) {
        self.pops += rhs.pops;
        self.push_edges += rhs.push_edges;
        self.walks += rhs.walks;
        self.walk_steps += rhs.walk_steps;
    }
}

impl std::iter::Sum for WorkStats {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let mut acc = WorkStats::default();
        for s in iter {
            acc += s;
        }
        acc
    }
}

/// Per-worker scratch: reserve, residue and the active-node queue.
#[derive(Debug, Clone)]
pub struct PushWorkspace {
    pub reserve: Vec<f64>,
    pub residue: Vec<f64>,
    queue: VecDeque<u32>,
    queued: Vec<bool>,
    pub r_sum: f64,
}

impl PushWorkspace {
    pub fn new(n: usize) -> Self {
        PushWorkspace {
            reserve: vec![0.0; n],
            residue: vec![0.0; n],
            queue: VecDeque::new(),
            queued: vec![false; n],
            r_sum: 0.0,
        }
    }

    /// Loads `source` into the residue and clears everything else.
    pub fn reset(&mut self, source: &[f64]) {
        assert_eq!(source.len(), self.residue.len(), "source length must equal node count");
        self.reserve.iter_mut().for_each(|x| *x = 0.0);
        self.residue.copy_from_slice(source);
        self.queue.clear();
        self.queued.iter_mut().for_each(|q| *q = false);
        self.r_sum = source.iter().sum();
    }

    pub fn heap_bytes(&self) -> usize {
        workspace_bytes(self.reserve.len())
    }
}

/// Reserve, residue, queue bitmap and worst-case queue for `n` nodes.
pub fn workspace_bytes(n: usize) -> usize {
    n * (2 * std::mem::size_of::<f64>() + std::mem::size_of::<bool>() + std::mem::size_of::<u32>())
}

/// Forward push until `residue[u] <= r_max * d(u)` for every node.
///
/// The workspace must have been [`reset`](PushWorkspace::reset) with the
/// source distribution. On return `w.r_sum` holds the leftover residue mass.
pub fn forward_push(g: &Graph, alpha: f64, r_max: f64, w: &mut PushWorkspace) -> WorkStats {
    let n = g.num_nodes();
    let mut stats = WorkStats::default();
    for v in 0..n {
        if w.residue[v] > r_max * g.degree(v) as f64 {
            w.queue.push_back(v as u32);
            w.queued[v] = true;
        }
    }
    let keep = 1.0 - alpha;
    while let Some(u) = w.queue.pop_front() {
        let u = u as usize;
        w.queued[u] = false;
        let ru = w.residue[u];
        let du = g.degree(u);
        // a node re-queued after its residue was drained can sit below threshold
        if ru <= r_max * du as f64 {
            continue;
        }
        w.residue[u] = 0.0;
        w.reserve[u] += alpha * ru;
        let share = keep * ru / du as f64;
        for &t in g.neighbors(u) {
            let t = t as usize;
            w.residue[t] += share;
            if !w.queued[t] && w.residue[t] > r_max * g.degree(t) as f64 {
                w.queue.push_back(t as u32);
                w.queued[t] = true;
            }
        }
        stats.pops += 1;
        stats.push_edges += du as u64;
    }
    w.r_sum = w.residue.iter().sum();
    stats
}

/// One walk from `start`: stop with probability `alpha` before each move.
#[inline]
fn walk<R: Rng>(g: &Graph, start: usize, alpha: f64, rng: &mut R, steps: &mut u64) -> usize {
    let mut at = start;
    while rng.random::<f64>() >= alpha {
        let nbrs = g.neighbors(at);
        at = nbrs[rng.random_range(0..nbrs.len())] as usize;
        *steps += 1;
    }
    at
}

/// Resolves the remaining residue by random walks, adding the deposits to
/// the reserve. Residue is left untouched so callers can inspect it.
pub fn random_walk_refine<R: Rng>(
    g: &Graph,
    w: &mut PushWorkspace,
    alpha: f64,
    beta: PushCoefficient,
    rng: &mut R,
) -> WorkStats {
    assert!(beta.0 > 0.0, "push coefficient must be positive");
    let mut stats = WorkStats::default();
    for u in 0..g.num_nodes() {
        let ru = w.residue[u];
        if ru <= 0.0 {
            continue;
        }
        let walks = (ru / beta.0).ceil().max(1.0) as u64;
        let weight = ru / walks as f64;
        for _ in 0..walks {
            let t = walk(g, u, alpha, rng, &mut stats.walk_steps);
            w.reserve[t] += weight;
        }
        stats.walks += walks;
    }
    stats
}

/// Full estimate of `π(x; ·)` for a non-negative `source` whose L1 mass is
/// `source_l1` (one for normalized input). The estimate is left in
/// `w.reserve`.
pub fn estimate_feature_ppr<R: Rng>(
    g: &Graph,
    source: &[f64],
    source_l1: f64,
    alpha: f64,
    beta: PushCoefficient,
    w: &mut PushWorkspace,
    rng: &mut R,
) -> WorkStats {
    w.reset(source);
    if source_l1 <= 0.0 {
        return WorkStats::default();
    }
    let r_max = optimal_rmax(beta, source_l1, g.num_edges());
    let mut stats = forward_push(g, alpha, r_max, w);
    stats += random_walk_refine(g, w, alpha, beta, rng);
    stats
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for one `(column, sign part)`; independent of scheduling.
pub fn part_rng(seed: u64, column: usize, sign: Sign) -> ChaCha8Rng {
    let salt = splitmix64(splitmix64(column as u64) ^ sign.index());
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

/// Normalizes both sign parts of a column. Zero parts are returned as such.
pub fn normalize_column(g: &Graph, column: &[f64], conv_r: f64) -> [NormalizedFeature; 2] {
    let prescale = g.degree_powers(1.0 - conv_r);
    let (pos, neg) = sign_split(column);
    [
        prescale_normalize(&pos, &prescale, Sign::Positive),
        prescale_normalize(&neg, &prescale, Sign::Negative),
    ]
}

/// Adds `sign * scale * d(t)^{r-1} * estimate[t]` into `out`.
pub(crate) fn accumulate_postscaled(
    g: &Graph,
    conv_r: f64,
    part: &NormalizedFeature,
    estimate: &[f64],
    out: &mut [f64],
) {
    let post = g.degree_powers(conv_r - 1.0);
    let k = part.sign.factor() * part.scale;
    for ((o, &e), &p) in out.iter_mut().zip(estimate).zip(&post.values) {
        *o += k * p * e;
    }
}

pub(crate) fn check_column(g: &Graph, column: &[f64]) -> Result<()> {
    if column.len() != g.num_nodes() {
        return Err(Error::Dimension(format!(
            "feature column has {} entries, graph has {} nodes",
            column.len(),
            g.num_nodes()
        )));
    }
    if let Some(row) = column.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { row, column: 0 });
    }
    Ok(())
}

/// Propagates one signed attribute column into one embedding column.
///
/// `column_index` only feeds the per-part seed.
pub fn feature_push(
    g: &Graph,
    column: &[f64],
    column_index: usize,
    cfg: &PushConfig,
    beta: PushCoefficient,
    w: &mut PushWorkspace,
) -> Result<(Vec<f64>, WorkStats)> {
    check_column(g, column)?;
    let mut out = vec![0.0; g.num_nodes()];
    let mut stats = WorkStats::default();
    for part in normalize_column(g, column, cfg.conv_r) {
        if part.is_zero() {
            continue;
        }
        let mut rng = part_rng(cfg.seed, column_index, part.sign);
        stats += estimate_feature_ppr(g, &part.weights, 1.0, cfg.alpha, beta, w, &mut rng);
        accumulate_postscaled(g, cfg.conv_r, &part, &w.reserve, &mut out);
    }
    Ok((out, stats))
}
