//! Seeded synthetic graphs, attributes and labels for tests and benches.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::features::{ColumnMatrix, FeatureMatrix};
use crate::graph::{Graph, NodeId};

/// Uniform random graph with `num_nodes` nodes and about `avg_degree`
/// undirected neighbors per node, plus a ring so it is connected.
pub fn random_graph(num_nodes: usize, avg_degree: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = num_nodes as u32;
    let extra = ((avg_degree / 2.0 - 1.0).max(0.0) * num_nodes as f64).round() as usize;
    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(num_nodes + extra);
    if num_nodes > 1 {
        for v in 0..n {
            edges.push((v, (v + 1) % n));
        }
    }
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.push((u, v));
        }
    }
    Graph::from_edges(num_nodes, &edges, true).expect("generated ids are in range")
}

/// How generated attribute columns relate to each other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureStyle {
    /// Sparse non-negative columns with random supports.
    Independent { density: f64 },
    /// `num_sources` sparse prototype columns; every column keeps its
    /// prototype's support and mixes the prototype values (weight
    /// `correlation`) with fresh noise on that support.
    Correlated {
        num_sources: usize,
        correlation: f64,
        density: f64,
    },
    /// Columns on pairwise disjoint node blocks.
    Orthogonal,
    /// Standard-normal dense values of both signs.
    Signed,
}

fn sparse_column(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<f64> {
    let mut col: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < density {
                rng.random::<f64>()
            } else {
                0.0
            }
        })
        .collect();
    if col.iter().all(|&x| x == 0.0) {
        col[rng.random_range(0..n)] = 1.0;
    }
    col
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn features(num_nodes: usize, num_features: usize, style: FeatureStyle, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f00d);
    let n = num_nodes;
    let columns: Vec<Vec<f64>> = match style {
        FeatureStyle::Independent { density } => {
            (0..num_features).map(|_| sparse_column(&mut rng, n, density)).collect()
        }
        FeatureStyle::Correlated {
            num_sources,
            correlation,
            density,
        } => {
            let sources: Vec<Vec<f64>> = (0..num_sources.max(1))
                .map(|_| sparse_column(&mut rng, n, density))
                .collect();
            (0..num_features)
                .map(|f| {
                    let src = &sources[f % sources.len()];
                    src.iter()
                        .map(|&s| {
                            if s == 0.0 {
                                0.0
                            } else {
                                correlation * s + (1.0 - correlation) * rng.random::<f64>()
                            }
                        })
                        .collect()
                })
                .collect()
        }
        FeatureStyle::Orthogonal => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut cols = vec![vec![0.0; n]; num_features];
            for (k, &v) in order.iter().enumerate() {
                cols[k % num_features.max(1)][v] = 0.5 + rng.random::<f64>();
            }
            cols
        }
        FeatureStyle::Signed => (0..num_features)
            .map(|_| (0..n).map(|_| standard_normal(&mut rng)).collect())
            .collect(),
    };
    ColumnMatrix::from_columns(n, columns).expect("generated values are finite")
}

/// Two Gaussian blobs per class in `dim` dimensions, as an embedding-shaped
/// matrix with one class id per row.
pub fn separable_blobs(num_nodes: usize, dim: usize, num_classes: usize, seed: u64) -> (ColumnMatrix, Vec<u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| (0..dim).map(|_| 4.0 * standard_normal(&mut rng)).collect())
        .collect();
    let mut rows = Vec::with_capacity(num_nodes * dim);
    let mut labels = Vec::with_capacity(num_nodes);
    for i in 0..num_nodes {
        let c = i % num_classes;
        for &center in &centers[c] {
            rows.push(center + 0.3 * standard_normal(&mut rng));
        }
        labels.push(c as u32);
    }
    let m = ColumnMatrix::from_rows(num_nodes, dim, &rows).expect("finite");
    (m, labels)
}

/// Labels that follow a planted partition of the graph: node `v` gets
/// class `v * num_classes / n`, and each feature column leans towards one
/// class. Useful for end-to-end pipeline demos.
pub fn planted_labels(num_nodes: usize, num_classes: usize) -> Vec<u32> {
    (0..num_nodes)
        .map(|v| (v * num_classes / num_nodes.max(1)) as u32)
        .collect()
}

/// Graph with `num_classes` dense blocks and sparse cross links.
pub fn planted_partition(num_nodes: usize, num_classes: usize, avg_degree: f64, mixing: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = planted_labels(num_nodes, num_classes);
    let block = num_nodes.div_ceil(num_classes.max(1));
    let target = (avg_degree / 2.0 * num_nodes as f64).round() as usize;
    let mut edges = Vec::with_capacity(target);
    while edges.len() < target {
        let u = rng.random_range(0..num_nodes);
        let v = if rng.random::<f64>() < mixing {
            rng.random_range(0..num_nodes)
        } else {
            let c = labels[u] as usize;
            let lo = c * block;
            let hi = ((c + 1) * block).min(num_nodes);
            rng.random_range(lo..hi)
        };
        if u != v {
            edges.push((u as NodeId, v as NodeId));
        }
    }
    Graph::from_edges(num_nodes, &edges, true).expect("generated ids are in range")
}
