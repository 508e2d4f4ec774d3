//! Exact reference propagation by truncated power iteration.
//!
//! `P = Σ_{l=0}^{L} α(1-α)^l Ã_(r)^l X` with `Ã_(r) = D^{r-1} A D^{-r}`,
//! accumulated one sparse hop at a time. The tail `(1-α)^{L+1}` is left as a
//! documented deficit instead of being renormalized away.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ColumnMatrix, EmbeddingMatrix, FeatureMatrix};
use crate::graph::Graph;

/// Largest graph the oracle will touch.
pub const ORACLE_MAX_NODES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub alpha: f64,
    pub conv_r: f64,
    pub max_hops: usize,
    pub tail_tol: f64,
}

impl OracleConfig {
    /// Picks the fewest hops with `(1-α)^{L+1} <= tail_tol`.
    pub fn with_tail(alpha: f64, conv_r: f64, tail_tol: f64) -> Self {
        OracleConfig {
            alpha,
            conv_r,
            max_hops: hops_for_tail(alpha, tail_tol),
            tail_tol,
        }
    }

    /// Default tolerance of `lambda / 10`.
    pub fn for_lambda(alpha: f64, conv_r: f64, lambda: f64) -> Self {
        Self::with_tail(alpha, conv_r, lambda / 10.0)
    }

    pub fn tail(&self) -> f64 {
        (1.0 - self.alpha).powi(self.max_hops as i32 + 1)
    }
}

pub fn hops_for_tail(alpha: f64, tail_tol: f64) -> usize {
    let keep = 1.0 - alpha;
    let mut hops = 0usize;
    let mut tail = keep;
    while tail > tail_tol && hops < 100_000 {
        hops += 1;
        tail *= keep;
    }
    hops
}

fn guard(g: &Graph) -> Result<()> {
    if g.num_nodes() > ORACLE_MAX_NODES {
        return Err(Error::OracleGuard(format!(
            "{} nodes exceed the exact-propagation limit of {ORACLE_MAX_NODES}",
            g.num_nodes()
        )));
    }
    Ok(())
}

/// `out = A D^{-1} x`: each node spreads its value evenly over its
/// out-neighbors.
pub fn apply_transition(g: &Graph, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (u, &xu) in x.iter().enumerate() {
        if xu == 0.0 {
            continue;
        }
        let share = xu / g.degree(u) as f64;
        for &t in g.neighbors(u) {
            out[t as usize] += share;
        }
    }
}

/// `out = Ã_(r) x = D^{r-1} A D^{-r} x`.
pub fn apply_normalized_adjacency(g: &Graph, conv_r: f64, x: &[f64], out: &mut [f64]) {
    let pre = g.degree_powers(-conv_r);
    let post = g.degree_powers(conv_r - 1.0);
    out.iter_mut().for_each(|o| *o = 0.0);
    for (u, &xu) in x.iter().enumerate() {
        if xu == 0.0 {
            continue;
        }
        let v = xu * pre.values[u];
        for &t in g.neighbors(u) {
            out[t as usize] += v;
        }
    }
    for (o, &p) in out.iter_mut().zip(&post.values) {
        *o *= p;
    }
}

fn diffuse(x: &[f64], alpha: f64, hops: usize, mut step: impl FnMut(&[f64], &mut [f64])) -> Vec<f64> {
    let mut acc: Vec<f64> = x.iter().map(|&v| alpha * v).collect();
    let mut cur = x.to_vec();
    let mut next = vec![0.0; x.len()];
    let mut weight = alpha;
    for _ in 0..hops {
        step(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        weight *= 1.0 - alpha;
        for (a, &c) in acc.iter_mut().zip(&cur) {
            *a += weight * c;
        }
    }
    acc
}

/// One exact embedding column.
pub fn exact_embedding_column(g: &Graph, x: &[f64], cfg: &OracleConfig) -> Result<Vec<f64>> {
    guard(g)?;
    if x.len() != g.num_nodes() {
        return Err(Error::Dimension(format!(
            "column has {} entries, graph has {} nodes",
            x.len(),
            g.num_nodes()
        )));
    }
    Ok(diffuse(x, cfg.alpha, cfg.max_hops, |cur, next| {
        apply_normalized_adjacency(g, cfg.conv_r, cur, next)
    }))
}

/// Exact (truncated) embedding matrix.
pub fn exact_embedding(g: &Graph, x: &FeatureMatrix, cfg: &OracleConfig) -> Result<EmbeddingMatrix> {
    guard(g)?;
    if x.num_rows() != g.num_nodes() {
        return Err(Error::Dimension(format!(
            "features have {} rows, graph has {} nodes",
            x.num_rows(),
            g.num_nodes()
        )));
    }
    let mut out = ColumnMatrix::zeros(x.num_rows(), x.num_cols());
    for c in 0..x.num_cols() {
        let col = exact_embedding_column(g, x.column(c), cfg)?;
        out.column_mut(c).copy_from_slice(&col);
    }
    Ok(out)
}

/// `Σ_{l<=max_hops} α(1-α)^l (A D^{-1})^l x`; sums to
/// `‖x‖₁ (1 - (1-α)^{max_hops+1})`.
pub fn exact_feature_ppr(g: &Graph, x: &[f64], alpha: f64, max_hops: usize) -> Result<Vec<f64>> {
    guard(g)?;
    if x.len() != g.num_nodes() {
        return Err(Error::Dimension(format!(
            "distribution has {} entries, graph has {} nodes",
            x.len(),
            g.num_nodes()
        )));
    }
    Ok(diffuse(x, alpha, max_hops, |cur, next| apply_transition(g, cur, next)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hop_count_meets_tail() {
        for (alpha, tol) in [(0.1, 1e-5), (0.5, 1e-9), (0.2, 0.9)] {
            let cfg = OracleConfig::with_tail(alpha, 0.5, tol);
            assert!(cfg.tail() <= tol);
            if cfg.max_hops > 0 {
                assert!((1.0 - alpha).powi(cfg.max_hops as i32) > tol);
            }
        }
    }

    #[test]
    fn single_node_embedding() {
        let g = Graph::from_edges(1, &[], false).unwrap();
        let x = ColumnMatrix::from_columns(1, vec![vec![3.0]]).unwrap();
        let cfg = OracleConfig::with_tail(0.2, 0.5, 1e-14);
        let p = exact_embedding(&g, &x, &cfg).unwrap();
        assert!((p.get(0, 0) - 3.0).abs() < 1e-13);
    }

    #[test]
    fn zero_hops_scales_by_alpha() {
        let g = Graph::parse_edge_list("0 1\n1 2\n", true).unwrap();
        let x = ColumnMatrix::from_columns(3, vec![vec![1.0, -2.0, 4.0]]).unwrap();
        let cfg = OracleConfig {
            alpha: 0.3,
            conv_r: 0.5,
            max_hops: 0,
            tail_tol: 1.0,
        };
        let p = exact_embedding(&g, &x, &cfg).unwrap();
        assert_eq!(p.column(0), &[0.3, -0.6, 1.2]);
    }

    #[test]
    fn ppr_on_self_loop_node() {
        let g = Graph::from_edges(2, &[], false).unwrap();
        let out = exact_feature_ppr(&g, &[0.0, 1.0], 0.25, 10).unwrap();
        let tail = 0.75f64.powi(11);
        assert_eq!(out[0], 0.0);
        assert!((out[1] - (1.0 - tail)).abs() < 1e-15);
    }

    #[test]
    fn alpha_near_one_returns_source() {
        let g = Graph::parse_edge_list("0 1\n1 2\n", true).unwrap();
        let x = [0.2, 0.5, 0.3];
        let out = exact_feature_ppr(&g, &x, 1.0 - 1e-12, 20).unwrap();
        for (a, b) in out.iter().zip(&x) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn guard_refuses_large_graphs() {
        let n = ORACLE_MAX_NODES + 1;
        let g = Graph::from_edges(n, &[], false).unwrap();
        assert!(matches!(
            exact_feature_ppr(&g, &vec![0.0; n], 0.2, 1),
            Err(Error::OracleGuard(_))
        ));
    }
}
