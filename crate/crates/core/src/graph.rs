//! Compact adjacency (CSR) storage with self-loops and degree utilities.
//!
//! Every node carries a self-loop, so out-degrees are at least one and the
//! column-stochastic transition `A D^{-1}` never loses mass at a dangling
//! node. The adjacency convention used throughout the crate is
//! `A[t][u] = 1` iff the edge `u -> t` exists, which makes the column sums
//! of `A` the out-degrees.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, RwLock};

use crate::binio::Reader;
use crate::error::{Error, Result};

pub type NodeId = u32;

const CACHE_MAGIC: &[u8; 4] = b"SCGR";
const CACHE_VERSION: u32 = 1;

/// Read-only CSR graph. Rows are sorted and deduplicated.
#[derive(Debug)]
pub struct Graph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    column_targets: Vec<NodeId>,
    out_degree: Vec<u32>,
    powers: RwLock<HashMap<u64, Arc<DegreePowers>>>,
}

/// `values[v] = d(v)^exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreePowers {
    pub exponent: f64,
    pub values: Vec<f64>,
}

impl Graph {
    /// Builds a graph from a directed edge list. Self-loops are added for
    /// every node and duplicate edges collapse to one.
    pub fn from_edges(num_nodes: usize, edges: &[(NodeId, NodeId)], symmetrize: bool) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::Empty("graph has no nodes".into()));
        }
        if num_nodes > NodeId::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "{num_nodes} nodes exceed the 32-bit node id width"
            )));
        }
        let per_edge = if symmetrize { 2 } else { 1 };
        let mut counts = vec![1usize; num_nodes];
        for &(u, v) in edges {
            for id in [u, v] {
                if id as usize >= num_nodes {
                    return Err(Error::NodeOutOfRange {
                        id: id as usize,
                        num_nodes,
                    });
                }
            }
            counts[u as usize] += 1;
            if symmetrize {
                counts[v as usize] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        offsets.push(0usize);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let mut cursor = offsets[..num_nodes].to_vec();
        let mut targets = vec![0 as NodeId; edges.len() * per_edge + num_nodes];
        let mut put = |u: NodeId, v: NodeId| {
            targets[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
        };
        for v in 0..num_nodes as NodeId {
            put(v, v);
        }
        for &(u, v) in edges {
            put(u, v);
            if symmetrize {
                put(v, u);
            }
        }

        // sort + dedup each row, compacting in place
        let mut row_offsets = Vec::with_capacity(num_nodes + 1);
        row_offsets.push(0usize);
        let mut write = 0usize;
        for v in 0..num_nodes {
            let row = &mut targets[offsets[v]..offsets[v + 1]];
            row.sort_unstable();
            let mut last: Option<NodeId> = None;
            for i in offsets[v]..offsets[v + 1] {
                let t = targets[i];
                if last != Some(t) {
                    targets[write] = t;
                    write += 1;
                    last = Some(t);
                }
            }
            row_offsets.push(write);
        }
        targets.truncate(write);
        targets.shrink_to_fit();
        Ok(Self::from_csr_unchecked(row_offsets, targets))
    }

    fn from_csr_unchecked(row_offsets: Vec<usize>, column_targets: Vec<NodeId>) -> Self {
        let num_nodes = row_offsets.len() - 1;
        let out_degree = row_offsets.windows(2).map(|w| (w[1] - w[0]) as u32).collect();
        Graph {
            num_nodes,
            row_offsets,
            column_targets,
            out_degree,
            powers: RwLock::new(HashMap::new()),
        }
    }

    /// Builds from raw CSR arrays, checking every structural invariant.
    pub fn from_csr(row_offsets: Vec<usize>, column_targets: Vec<NodeId>) -> Result<Self> {
        if row_offsets.len() < 2 {
            return Err(Error::Empty("graph has no nodes".into()));
        }
        let n = row_offsets.len() - 1;
        if row_offsets[0] != 0 || row_offsets[n] != column_targets.len() {
            return Err(Error::Format(format!(
                "row offsets must start at 0 and end at m = {}",
                column_targets.len()
            )));
        }
        for v in 0..n {
            let (lo, hi) = (row_offsets[v], row_offsets[v + 1]);
            if hi < lo {
                return Err(Error::Format(format!("row offsets decrease at node {v}")));
            }
            let row = &column_targets[lo..hi];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Format(format!("row {v} is not strictly sorted")));
            }
            if let Some(&t) = row.iter().find(|&&t| t as usize >= n) {
                return Err(Error::NodeOutOfRange {
                    id: t as usize,
                    num_nodes: n,
                });
            }
            if row.binary_search(&(v as NodeId)).is_err() {
                return Err(Error::Format(format!("node {v} lacks its self-loop")));
            }
        }
        Ok(Self::from_csr_unchecked(row_offsets, column_targets))
    }

    /// Parses a whitespace-separated edge list. Lines starting with `#` are
    /// comments, except a `# nodes: N` header which fixes the node count.
    pub fn load_edge_list(path: impl AsRef<Path>, symmetrize: bool) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text, symmetrize).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            },
            other => other,
        })
    }

    pub fn parse_edge_list(text: &str, symmetrize: bool) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: "<edge list>".into(),
            line,
            message,
        };
        let mut edges = Vec::new();
        let mut header_nodes: Option<usize> = None;
        let mut max_id: Option<NodeId> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(rest) = comment.strip_prefix("nodes") {
                    let count = rest.trim_start_matches(':').trim();
                    let n = count
                        .parse::<usize>()
                        .map_err(|_| parse_err(lineno, format!("bad node-count header {count:?}")))?;
                    header_nodes = Some(n);
                }
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(lineno, format!("expected two node ids, got {line:?}")));
            };
            let parse_id = |s: &str| -> Result<NodeId> {
                let wide: u64 = s
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("{s:?} is not a non-negative integer")))?;
                if wide >= NodeId::MAX as u64 {
                    return Err(parse_err(lineno, format!("node id {wide} overflows 32 bits")));
                }
                Ok(wide as NodeId)
            };
            let (u, v) = (parse_id(a)?, parse_id(b)?);
            max_id = max_id.max(Some(u.max(v)));
            edges.push((u, v));
        }
        let seen = max_id.map(|m| m as usize + 1);
        let num_nodes = match (header_nodes, seen) {
            (None, None) => return Err(Error::Empty("edge list holds no edges".into())),
            (Some(h), Some(s)) if h < s => {
                return Err(Error::Dimension(format!(
                    "header declares {h} nodes but ids reach {}",
                    s - 1
                )))
            }
            (Some(h), _) => h,
            (None, Some(s)) => s,
        };
        Self::from_edges(num_nodes, &edges, symmetrize)
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Directed edge count including self-loops.
    #[inline]
    pub fn num_edges(&self) -> usize {
        self.column_targets.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn column_targets(&self) -> &[NodeId] {
        &self.column_targets
    }

    pub fn out_degrees(&self) -> &[u32] {
        &self.out_degree
    }

    #[inline]
    pub fn degree(&self, v: usize) -> u32 {
        self.out_degree[v]
    }

    pub fn out_neighbors(&self, v: usize) -> Result<&[NodeId]> {
        if v >= self.num_nodes {
            return Err(Error::NodeOutOfRange {
                id: v,
                num_nodes: self.num_nodes,
            });
        }
        Ok(self.neighbors(v))
    }

    /// Unchecked variant used on hot paths.
    #[inline]
    pub(crate) fn neighbors(&self, v: usize) -> &[NodeId] {
        &self.column_targets[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    /// Degree powers for `exponent`, computed once and cached.
    pub fn degree_powers(&self, exponent: f64) -> Arc<DegreePowers> {
        let key = exponent.to_bits();
        if let Some(hit) = self.powers.read().unwrap().get(&key) {
            return Arc::clone(hit);
        }
        let values = self
            .out_degree
            .iter()
            .map(|&d| {
                if exponent == 0.0 {
                    1.0
                } else {
                    (d as f64).powf(exponent)
                }
            })
            .collect();
        let dp = Arc::new(DegreePowers { exponent, values });
        self.powers.write().unwrap().entry(key).or_insert(dp).clone()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.num_nodes).all(|u| {
            self.neighbors(u)
                .iter()
                .all(|&t| self.neighbors(t as usize).binary_search(&(u as NodeId)).is_ok())
        })
    }

    /// Bytes held by the CSR arrays.
    pub fn heap_bytes(&self) -> usize {
        self.row_offsets.len() * std::mem::size_of::<usize>()
            + self.column_targets.len() * std::mem::size_of::<NodeId>()
            + self.out_degree.len() * std::mem::size_of::<u32>()
    }

    /// Serializes to the binary cache format: `SCGR`, version, `n`, `m`,
    /// 64-bit row offsets, 32-bit targets, all little-endian.
    pub fn to_cache_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * (self.num_nodes + 1) + 4 * self.num_edges());
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.num_nodes as u64).to_le_bytes());
        out.extend_from_slice(&(self.num_edges() as u64).to_le_bytes());
        for &o in &self.row_offsets {
            out.extend_from_slice(&(o as u64).to_le_bytes());
        }
        for &t in &self.column_targets {
            out.extend_from_slice(&t.to_le_bytes());
        }
        out
    }

    pub fn from_cache_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(CACHE_MAGIC)?;
        let version = r.u32("version")?;
        if version != CACHE_VERSION {
            return Err(Error::Format(format!("unsupported graph cache version {version}")));
        }
        let n = r.usize("node count")?;
        let m = r.usize("edge count")?;
        let mut offsets = Vec::with_capacity(n.saturating_add(1).min(bytes.len() / 8 + 1));
        for _ in 0..=n {
            offsets.push(r.usize("row offset")?);
        }
        let mut targets = Vec::with_capacity(m.min(bytes.len() / 4 + 1));
        for _ in 0..m {
            targets.push(r.u32("column target")?);
        }
        r.finish()?;
        Self::from_csr(offsets, targets)
    }

    pub fn write_cache(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_cache_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_cache(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_cache_bytes(&bytes)
    }

    /// Loads either format, sniffing the cache magic.
    pub fn load(path: impl AsRef<Path>, symmetrize: bool) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(CACHE_MAGIC) {
            Self::from_cache_bytes(&bytes)
        } else {
            Self::load_edge_list(path, symmetrize)
        }
    }
}

impl Clone for Graph {
    fn clone(&self) -> Self {
        Self::from_csr_unchecked(self.row_offsets.clone(), self.column_targets.clone())
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.row_offsets == other.row_offsets && self.column_targets == other.column_targets
    }
}
