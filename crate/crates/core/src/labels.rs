//! Node labels, train/validation/test splits and micro-F1.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    /// Exactly one class per node; softmax output.
    MultiClass,
    /// Any subset of classes per node; per-class logistic output.
    MultiLabel,
}

/// Sorted class ids of one node.
pub type ClassSet = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub task: Task,
    pub num_classes: usize,
    /// `None` for unlabeled nodes.
    pub labels: Vec<Option<ClassSet>>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl LabelSet {
    /// Multi-class labels for every node, no split yet.
    pub fn from_classes(classes: &[u32]) -> Self {
        let num_classes = classes.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        LabelSet {
            task: Task::MultiClass,
            num_classes,
            labels: classes.iter().map(|&c| Some(vec![c])).collect(),
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        }
    }

    /// Parses `node class` or `node c1,c2,...` lines. `#` starts a comment.
    /// A file with any comma-separated line is multi-label unless `task`
    /// says otherwise.
    pub fn parse(text: &str, num_nodes: usize, task: Option<Task>) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: "<labels>".into(),
            line,
            message,
        };
        let mut labels: Vec<Option<ClassSet>> = vec![None; num_nodes];
        let mut saw_list = false;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let node: usize = fields
                .next()
                .unwrap()
                .parse()
                .map_err(|_| err(lineno, format!("bad node id in {line:?}")))?;
            if node >= num_nodes {
                return Err(err(lineno, format!("node {node} outside graph of {num_nodes} nodes")));
            }
            let classes_field = fields.next().unwrap_or("");
            if fields.next().is_some() {
                return Err(err(lineno, format!("too many fields in {line:?}")));
            }
            saw_list |= classes_field.contains(',') || classes_field.is_empty();
            let mut classes = Vec::new();
            for tok in classes_field.split(',').filter(|t| !t.is_empty()) {
                classes.push(
                    tok.parse::<u32>()
                        .map_err(|_| err(lineno, format!("bad class id {tok:?}")))?,
                );
            }
            classes.sort_unstable();
            classes.dedup();
            if labels[node].is_some() {
                return Err(err(lineno, format!("node {node} labeled twice")));
            }
            labels[node] = Some(classes);
        }
        let task = task.unwrap_or(if saw_list { Task::MultiLabel } else { Task::MultiClass });
        if task == Task::MultiClass {
            if let Some(v) = labels.iter().position(|l| matches!(l, Some(c) if c.len() != 1)) {
                return Err(Error::InvalidParameter(format!(
                    "multi-class labels need exactly one class per node (node {v})"
                )));
            }
        }
        let num_classes = labels
            .iter()
            .flatten()
            .flat_map(|c| c.iter())
            .map(|&c| c as usize + 1)
            .max()
            .unwrap_or(0);
        if labels.iter().all(|l| l.is_none()) {
            return Err(Error::Empty("label file names no nodes".into()));
        }
        Ok(LabelSet {
            task,
            num_classes,
            labels,
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        })
    }

    pub fn load(path: impl AsRef<Path>, num_nodes: usize, task: Option<Task>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, num_nodes, task).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            },
            other => other,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn labeled(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&v| self.labels[v].is_some()).collect()
    }

    pub fn classes(&self, v: usize) -> &[u32] {
        self.labels[v].as_deref().unwrap_or(&[])
    }

    /// `20 N_c` training and `200 N_c` validation nodes when that leaves a
    /// test set, otherwise a 60/20/20 split of the labeled nodes.
    pub fn default_split_sizes(&self) -> (usize, usize) {
        let labeled = self.labeled().len();
        let (train, val) = (20 * self.num_classes, 200 * self.num_classes);
        if train + val < labeled {
            (train, val)
        } else {
            let train = (labeled * 3) / 5;
            let val = labeled / 5;
            (train.max(1), val)
        }
    }

    /// Random disjoint split of the labeled nodes; the rest become test.
    pub fn with_random_split(mut self, train: usize, val: usize, seed: u64) -> Result<Self> {
        let mut pool = self.labeled();
        if train == 0 || train + val > pool.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot draw {train} training and {val} validation nodes from {} labeled",
                pool.len()
            )));
        }
        pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut test = pool.split_off(train + val);
        let mut val_set = pool.split_off(train);
        pool.sort_unstable();
        val_set.sort_unstable();
        test.sort_unstable();
        self.train = pool;
        self.val = val_set;
        self.test = test;
        Ok(self)
    }

    /// Uses the given index sets; they must be disjoint and labeled.
    pub fn with_split(mut self, train: Vec<usize>, val: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; self.labels.len()];
        for &v in train.iter().chain(&val).chain(&test) {
            if v >= self.labels.len() || self.labels[v].is_none() {
                return Err(Error::InvalidParameter(format!(
                    "split node {v} is unlabeled or out of range"
                )));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidParameter(format!("node {v} appears in two splits")));
            }
        }
        self.train = train;
        self.val = val;
        self.test = test;
        Ok(self)
    }
}

/// Pooled counts over every (node, class) pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct F1Counts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl F1Counts {
    pub fn tally(pred: &[ClassSet], truth: &[ClassSet]) -> Self {
        assert_eq!(pred.len(), truth.len(), "prediction and truth lengths differ");
        let mut c = F1Counts::default();
        for (p, t) in pred.iter().zip(truth) {
            let hit = p.iter().filter(|x| t.binary_search(x).is_ok()).count() as u64;
            c.true_pos += hit;
            c.false_pos += p.len() as u64 - hit;
            c.false_neg += t.len() as u64 - hit;
        }
        c
    }

    /// Zero when there is nothing to score.
    pub fn score(&self) -> f64 {
        let denom = 2 * self.true_pos + self.false_pos + self.false_neg;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.true_pos as f64 / denom as f64
        }
    }

    pub fn is_degenerate(&self) -> bool {
        2 * self.true_pos + self.false_pos + self.false_neg == 0
    }
}

/// Micro-averaged F1. For single-label multi-class input this is accuracy.
pub fn micro_f1(pred: &[ClassSet], truth: &[ClassSet]) -> f64 {
    F1Counts::tally(pred, truth).score()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_examples() {
        let truth = vec![vec![0], vec![1], vec![2]];
        assert_eq!(micro_f1(&truth, &truth), 1.0);
        let wrong = vec![vec![1], vec![2], vec![0]];
        assert_eq!(micro_f1(&wrong, &truth), 0.0);
        // TP = 2, FP = 1, FN = 1
        let truth = vec![vec![0, 1], vec![2]];
        let pred = vec![vec![0, 1, 2], vec![]];
        let c = F1Counts::tally(&pred, &truth);
        assert_eq!((c.true_pos, c.false_pos, c.false_neg), (2, 1, 1));
        assert!((micro_f1(&pred, &truth) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn f1_equals_accuracy_for_multiclass() {
        let truth = vec![vec![0], vec![1], vec![1], vec![0]];
        let pred = vec![vec![0], vec![0], vec![1], vec![1]];
        assert_eq!(micro_f1(&pred, &truth), 0.5);
    }

    #[test]
    fn degenerate_scores_zero() {
        let c = F1Counts::tally(&[vec![]], &[vec![]]);
        assert!(c.is_degenerate());
        assert_eq!(c.score(), 0.0);
    }

    #[test]
    fn parse_formats() {
        let ls = LabelSet::parse("0 1\n2 0\n# c\n", 4, None).unwrap();
        assert_eq!(ls.task, Task::MultiClass);
        assert_eq!(ls.num_classes, 2);
        assert_eq!(ls.labeled(), vec![0, 2]);
        let ml = LabelSet::parse("0 1,3\n1 2\n", 2, None).unwrap();
        assert_eq!(ml.task, Task::MultiLabel);
        assert_eq!(ml.classes(0), &[1, 3]);
        assert_eq!(ml.num_classes, 4);
        assert!(LabelSet::parse("5 1\n", 3, None).is_err());
        assert!(LabelSet::parse("0 1\n0 2\n", 3, None).is_err());
        assert!(LabelSet::parse("0 1,2\n", 3, Some(Task::MultiClass)).is_err());
    }

    #[test]
    fn splits_are_disjoint_and_seeded() {
        let ls = LabelSet::from_classes(&[0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
        let a = ls.clone().with_random_split(4, 3, 5).unwrap();
        let b = ls.clone().with_random_split(4, 3, 5).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.train.iter().chain(&a.val).chain(&a.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(ls.clone().with_random_split(0, 3, 5).is_err());
        assert!(ls.clone().with_split(vec![0, 1], vec![1], vec![]).is_err());
        // 40 + 400 > 10 labeled -> fractions
        assert_eq!(ls.default_split_sizes(), (6, 2));
    }
}
