//! Feature-oriented propagation for decoupled graph neural networks.
//!
//! The crate precomputes the embedding matrix
//!
//! ```text
//! P = Σ_{l>=0} α(1-α)^l Ã_(r)^l X,    Ã_(r) = D^{r-1} A D^{-r}
//! ```
//!
//! one attribute column at a time. Each column is degree-prescaled and
//! L1-normalized into a distribution, propagated with forward push plus
//! random walks ([`push`]), and post-scaled back. [`reuse`] shortcuts
//! columns that resemble a few high-precision base columns. [`oracle`]
//! computes the same matrix exactly for verification, and [`train`] fits a
//! plain feed-forward classifier on the result.
//!
//! ```
//! use featprop::{precompute, synth, PrecomputeOptions, PushConfig, ReuseConfig};
//!
//! let g = synth::random_graph(200, 8.0, 7);
//! let x = synth::features(200, 8, synth::FeatureStyle::Signed, 7);
//! let cfg = PushConfig { lambda: 1e-3, ..PushConfig::for_graph(g.num_nodes()) };
//! let run = precompute(&g, &x, &PrecomputeOptions::with_reuse(cfg, ReuseConfig::for_features(8)))?;
//! assert_eq!(run.embedding.num_cols(), 8);
//! # Ok::<(), featprop::Error>(())
//! ```

mod binio;
pub mod error;
pub mod features;
pub mod graph;
pub mod labels;
pub mod oracle;
pub mod precompute;
pub mod push;
pub mod reuse;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use features::{
    load_features, prescale_normalize, sign_split, ColumnMatrix, EmbeddingMatrix, FeatureMatrix, NormalizedFeature,
    Sign,
};
pub use graph::{DegreePowers, Graph, NodeId};
pub use labels::{micro_f1, LabelSet, Task};
pub use oracle::{exact_embedding, exact_feature_ppr, OracleConfig};
pub use precompute::{
    feature_reuse_embed, precompute, MemoryAccount, PartRole, Precomputation, PrecomputeOptions, PrecomputeReport,
};
pub use push::{
    feature_push, forward_push, optimal_rmax, random_walk_refine, standard_push_coefficient, PushCoefficient,
    PushConfig, PushWorkspace, WorkStats,
};
pub use reuse::{decompose, min_l1_distance_counter, reuse_coefficients, select_bases, Decomposition, ReuseConfig};
pub use train::{predict, train, Model, TrainConfig};
