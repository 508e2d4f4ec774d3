//! Column-parallel precomputation of the embedding matrix, with or without
//! Feature-Reuse.
//!
//! Work is split into *parts*: the non-zero positive and negative halves of
//! every attribute column. Each part draws its randomness from
//! [`part_rng`], and parts are summed into their column in a fixed order,
//! so the output is identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ColumnMatrix, EmbeddingMatrix, FeatureMatrix, NormalizedFeature, Sign};
use crate::graph::Graph;
use crate::push::{
    accumulate_postscaled, estimate_feature_ppr, normalize_column, part_rng, workspace_bytes, PushCoefficient,
    PushConfig, PushWorkspace, WorkStats,
};
use crate::reuse::{decompose, min_l1_distance_counter_strided, reuse_coefficients, select_bases, ReuseConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecomputeOptions {
    pub push: PushConfig,
    /// `None` (or zero bases) runs plain Feature-Push on every part.
    pub reuse: Option<ReuseConfig>,
    pub threads: usize,
    /// Keep each part's pre-post-scaling estimate in the report.
    pub keep_estimates: bool,
}

impl PrecomputeOptions {
    pub fn plain(push: PushConfig) -> Self {
        PrecomputeOptions {
            push,
            reuse: None,
            threads: 1,
            keep_estimates: false,
        }
    }

    pub fn with_reuse(push: PushConfig, reuse: ReuseConfig) -> Self {
        PrecomputeOptions {
            reuse: Some(reuse),
            ..Self::plain(push)
        }
    }
}

/// Estimate, role, coefficient and work of one propagated part.
type PartResult = (Vec<f64>, PartRole, f64, WorkStats);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PartRole {
    Plain,
    Base,
    Decomposed {
        theta_sum: f64,
        num_terms: usize,
        iterations: usize,
        /// L1 mass of the residual that was pushed.
        residual_l1: f64,
        floored: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartReport {
    pub column: usize,
    pub sign: Sign,
    pub scale: f64,
    pub role: PartRole,
    /// Push coefficient the part's own propagation ran with.
    pub beta: f64,
    pub work: WorkStats,
    /// `π̂(x; ·)` for the normalized part, before degree post-scaling.
    #[serde(skip)]
    pub estimate: Option<Vec<f64>>,
}

/// Bytes held by the run's major buffers, from allocation accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryAccount {
    pub graph: usize,
    pub features: usize,
    pub embedding: usize,
    pub normalized_parts: usize,
    pub part_results: usize,
    pub base_estimates: usize,
    pub workspaces: usize,
}

impl MemoryAccount {
    /// Accounting for a run on `n` nodes, `m` edges, `f` columns.
    pub fn estimate(n: usize, m: usize, f: usize, num_parts: usize, num_bases: usize, threads: usize) -> Self {
        let word = std::mem::size_of::<f64>();
        MemoryAccount {
            graph: (n + 1) * std::mem::size_of::<usize>() + m * 4 + n * 4,
            features: n * f * word,
            embedding: n * f * word,
            normalized_parts: num_parts * n * word,
            part_results: num_parts * n * word,
            base_estimates: num_bases * n * word,
            workspaces: threads.max(1) * workspace_bytes(n),
        }
    }

    pub fn total(&self) -> usize {
        self.graph
            + self.features
            + self.embedding
            + self.normalized_parts
            + self.part_results
            + self.base_estimates
            + self.workspaces
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecomputeReport {
    pub beta_s: f64,
    /// `(column, sign)` of every base part, ascending by part order.
    pub bases: Vec<(usize, Sign)>,
    pub parts: Vec<PartReport>,
    pub work: WorkStats,
    pub memory: MemoryAccount,
    pub threads: usize,
}

#[derive(Debug, Clone)]
pub struct Precomputation {
    pub embedding: EmbeddingMatrix,
    pub report: PrecomputeReport,
}

struct Part {
    column: usize,
    feature: NormalizedFeature,
}

fn par_map<T, F>(threads: usize, n: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut PushWorkspace) -> T + Sync + Send,
{
    if threads <= 1 {
        let mut w = PushWorkspace::new(n);
        return Ok((0..count).map(|i| f(i, &mut w)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {threads} workers: {e}")))?;
    Ok(pool.install(|| {
        (0..count)
            .into_par_iter()
            .map_init(|| PushWorkspace::new(n), |w, i| f(i, w))
            .collect()
    }))
}

/// Computes `P̂` for every column of `features`.
pub fn precompute(g: &Graph, features: &FeatureMatrix, opts: &PrecomputeOptions) -> Result<Precomputation> {
    let cfg = &opts.push;
    cfg.validate()?;
    if let Some(rc) = &opts.reuse {
        rc.validate()?;
    }
    let n = g.num_nodes();
    if features.num_rows() != n {
        return Err(Error::Dimension(format!(
            "features have {} rows but the graph has {n} nodes",
            features.num_rows()
        )));
    }

    let mut parts = Vec::new();
    for c in 0..features.num_cols() {
        for feature in normalize_column(g, features.column(c), cfg.conv_r) {
            if !feature.is_zero() {
                parts.push(Part { column: c, feature });
            }
        }
    }

    let beta_s = cfg.standard_coefficient();
    let threads = opts.threads.max(1);
    let num_bases = match opts.reuse {
        Some(rc) if parts.len() >= 2 => rc.num_bases.min(parts.len()),
        _ => 0,
    };

    let estimate_part = |part: &Part, source: &[f64], l1: f64, beta: PushCoefficient, w: &mut PushWorkspace| {
        let mut rng = part_rng(cfg.seed, part.column, part.feature.sign);
        let work = estimate_feature_ppr(g, source, l1, cfg.alpha, beta, w, &mut rng);
        (w.reserve.clone(), work)
    };

    let results: Vec<(Vec<f64>, PartRole, f64, WorkStats)> = if num_bases == 0 {
        par_map(threads, n, parts.len(), |i, w| {
            let p = &parts[i];
            let (est, work) = estimate_part(p, &p.feature.weights, 1.0, beta_s, w);
            (est, PartRole::Plain, beta_s.0, work)
        })?
    } else {
        let rc = opts.reuse.expect("reuse enabled");
        let views: Vec<&[f64]> = parts.iter().map(|p| p.feature.weights.as_slice()).collect();
        let counter = min_l1_distance_counter_strided(&views, rc.counter_row_stride.unwrap_or(1));
        let base_ids = select_bases(&counter, num_bases);
        let mut is_base = vec![false; parts.len()];
        for &b in &base_ids {
            is_base[b] = true;
        }
        let beta_star = PushCoefficient(rc.gamma * beta_s.0);

        // phase one: bases at high precision
        let base_results = par_map(threads, n, base_ids.len(), |k, w| {
            let p = &parts[base_ids[k]];
            estimate_part(p, &p.feature.weights, 1.0, beta_star, w)
        })?;

        // phase two: everything else against the frozen base estimates
        let others: Vec<usize> = (0..parts.len()).filter(|&i| !is_base[i]).collect();
        let other_results = par_map(threads, n, others.len(), |k, w| {
            let p = &parts[others[k]];
            let usable: Vec<usize> = (0..base_ids.len())
                .filter(|&j| parts[base_ids[j]].column != p.column)
                .collect();
            let base_views: Vec<&[f64]> = usable
                .iter()
                .map(|&j| parts[base_ids[j]].feature.weights.as_slice())
                .collect();
            let d = decompose(&p.feature.weights, &base_views, rc.delta0);
            let coeffs = reuse_coefficients(cfg.lambda, cfg.phi, rc.gamma, d.theta_sum);
            let (mut est, work) = if d.theta.is_empty() {
                estimate_part(p, &p.feature.weights, 1.0, beta_s, w)
            } else {
                let l1 = d.residual_l1();
                estimate_part(p, &d.residual, l1, coeffs.beta_prime, w)
            };
            for &(j, theta) in &d.theta {
                let base_est = &base_results[usable[j]].0;
                for (e, &b) in est.iter_mut().zip(base_est) {
                    *e += theta * b;
                }
            }
            let role = PartRole::Decomposed {
                theta_sum: d.theta_sum,
                num_terms: d.theta.len(),
                iterations: d.iterations,
                residual_l1: d.residual_l1(),
                floored: coeffs.floored,
            };
            let beta = if d.theta.is_empty() {
                beta_s.0
            } else {
                coeffs.beta_prime.0
            };
            (est, role, beta, work)
        })?;

        let mut merged: Vec<Option<PartResult>> = (0..parts.len()).map(|_| None).collect();
        for (k, (est, work)) in base_results.into_iter().enumerate() {
            merged[base_ids[k]] = Some((est, PartRole::Base, beta_star.0, work));
        }
        for (k, r) in other_results.into_iter().enumerate() {
            merged[others[k]] = Some(r);
        }
        merged.into_iter().map(|r| r.expect("every part computed")).collect()
    };

    let mut embedding = ColumnMatrix::zeros(n, features.num_cols());
    let mut reports = Vec::with_capacity(parts.len());
    let mut total = WorkStats::default();
    for (part, (est, role, beta, work)) in parts.iter().zip(results) {
        accumulate_postscaled(g, cfg.conv_r, &part.feature, &est, embedding.column_mut(part.column));
        total += work;
        reports.push(PartReport {
            column: part.column,
            sign: part.feature.sign,
            scale: part.feature.scale,
            role,
            beta,
            work,
            estimate: opts.keep_estimates.then_some(est),
        });
    }
    let bases = reports
        .iter()
        .filter(|r| r.role == PartRole::Base)
        .map(|r| (r.column, r.sign))
        .collect();
    let memory = MemoryAccount::estimate(n, g.num_edges(), features.num_cols(), parts.len(), num_bases, threads);
    Ok(Precomputation {
        embedding,
        report: PrecomputeReport {
            beta_s: beta_s.0,
            bases,
            parts: reports,
            work: total,
            memory,
            threads,
        },
    })
}

/// Feature-Reuse over the whole matrix, single-threaded.
pub fn feature_reuse_embed(
    g: &Graph,
    features: &FeatureMatrix,
    cfg: &PushConfig,
    rc: &ReuseConfig,
) -> Result<EmbeddingMatrix> {
    Ok(precompute(g, features, &PrecomputeOptions::with_reuse(*cfg, *rc))?.embedding)
}
