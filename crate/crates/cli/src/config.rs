//! Tunables shared by the subcommands, resolved as flag > config file > default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use featprop::{PushConfig, ReuseConfig, TrainConfig};

use crate::CliError;

/// Keys accepted in a `--config` file, one `key = value` per line.
const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "conv-r",
    "lambda",
    "phi",
    "delta",
    "seed",
    "threads",
    "symmetrize",
    "reuse",
    "gamma",
    "num-bases",
    "delta0",
    "counter-row-stride",
    "layers",
    "width",
    "batch-size",
    "epochs",
    "learning-rate",
    "momentum",
    "patience",
    "bias",
    "train-size",
    "val-size",
    "split-seed",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key = value", path.display(), idx + 1)))?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "{}:{}: unknown key {key:?}",
                    path.display(),
                    idx + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile {
            path: Some(path.to_path_buf()),
            values,
        })
    }

    /// `flag` if given, else the file value, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::Usage(format!(
                    "{}: bad value {raw:?} for {key}",
                    self.path.as_deref().unwrap_or(Path::new("config")).display()
                ))
            }),
        }
    }
}

/// Flag pairs like `--symmetrize/--no-symmetrize` collapse to an option.
fn switch(on: bool, off: bool) -> Option<bool> {
    match (on, off) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct PushArgs {
    /// Restart probability α.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Convolution coefficient r.
    #[arg(long = "conv-r")]
    pub conv_r: Option<f64>,
    /// Absolute error target λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Failure probability φ [default: 1/n].
    #[arg(long)]
    pub phi: Option<f64>,
    /// Significance threshold δ [default: 1/n].
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: 1].
    #[arg(long)]
    pub threads: Option<usize>,
}

impl PushArgs {
    pub fn resolve(&self, file: &ConfigFile, num_nodes: usize) -> Result<(PushConfig, usize), CliError> {
        let d = PushConfig::for_graph(num_nodes);
        let cfg = PushConfig {
            alpha: file.pick(self.alpha, "alpha")?.unwrap_or(d.alpha),
            conv_r: file.pick(self.conv_r, "conv-r")?.unwrap_or(d.conv_r),
            lambda: file.pick(self.lambda, "lambda")?.unwrap_or(d.lambda),
            phi: file.pick(self.phi, "phi")?.unwrap_or(d.phi),
            delta: file.pick(self.delta, "delta")?.unwrap_or(d.delta),
            seed: file.pick(self.seed, "seed")?.unwrap_or(d.seed),
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let threads = file.pick(self.threads, "threads")?.unwrap_or(1);
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        Ok((cfg, threads))
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct GraphArgs {
    /// Add the reverse of every edge (default).
    #[arg(long, overrides_with = "no_symmetrize")]
    pub symmetrize: bool,
    /// Keep edges directed.
    #[arg(long = "no-symmetrize")]
    pub no_symmetrize: bool,
}

impl GraphArgs {
    pub fn resolve(&self, file: &ConfigFile) -> Result<bool, CliError> {
        Ok(file
            .pick(switch(self.symmetrize, self.no_symmetrize), "symmetrize")?
            .unwrap_or(true))
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct ReuseArgs {
    /// Skip Feature-Reuse and push every column independently.
    #[arg(long = "no-reuse")]
    pub no_reuse: bool,
    /// Precision factor γ for the bases.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Number of base parts n_B [default: ceil(0.02 F)].
    #[arg(long = "num-bases")]
    pub num_bases: Option<usize>,
    /// Decomposition threshold δ0.
    #[arg(long)]
    pub delta0: Option<f64>,
    /// Estimate base-selection distances on every k-th row only.
    #[arg(long = "counter-row-stride")]
    pub counter_row_stride: Option<usize>,
}

impl ReuseArgs {
    pub fn resolve(&self, file: &ConfigFile, num_features: usize) -> Result<Option<ReuseConfig>, CliError> {
        let enabled = if self.no_reuse {
            false
        } else {
            file.pick(None, "reuse")?.unwrap_or(true)
        };
        let d = ReuseConfig::for_features(num_features);
        let rc = ReuseConfig {
            num_bases: file.pick(self.num_bases, "num-bases")?.unwrap_or(d.num_bases),
            gamma: file.pick(self.gamma, "gamma")?.unwrap_or(d.gamma),
            delta0: file.pick(self.delta0, "delta0")?.unwrap_or(d.delta0),
            counter_row_stride: file.pick(self.counter_row_stride, "counter-row-stride")?,
        };
        rc.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(enabled.then_some(rc))
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct TrainArgs {
    /// Number of layers L (1 is logistic regression).
    #[arg(long)]
    pub layers: Option<usize>,
    /// Hidden width W.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long = "batch-size")]
    pub batch_size: Option<usize>,
    /// Maximum epochs I.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "learning-rate")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Epochs without validation improvement before stopping.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Drop the bias terms.
    #[arg(long = "no-bias")]
    pub no_bias: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl TrainArgs {
    pub fn resolve(&self, file: &ConfigFile) -> Result<TrainConfig, CliError> {
        let d = TrainConfig::default();
        let bias = if self.no_bias {
            false
        } else {
            file.pick(None, "bias")?.unwrap_or(d.bias)
        };
        let cfg = TrainConfig {
            layers: file.pick(self.layers, "layers")?.unwrap_or(d.layers),
            width: file.pick(self.width, "width")?.unwrap_or(d.width),
            batch_size: file.pick(self.batch_size, "batch-size")?.unwrap_or(d.batch_size),
            max_epochs: file.pick(self.epochs, "epochs")?.unwrap_or(d.max_epochs),
            learning_rate: file
                .pick(self.learning_rate, "learning-rate")?
                .unwrap_or(d.learning_rate),
            momentum: file.pick(self.momentum, "momentum")?.unwrap_or(d.momentum),
            patience: file.pick(self.patience, "patience")?.unwrap_or(d.patience),
            bias,
            seed: file.pick(self.seed, "seed")?.unwrap_or(d.seed),
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct SplitArgs {
    /// Training nodes [default: 20 per class, or 60% of labeled].
    #[arg(long = "train-size")]
    pub train_size: Option<usize>,
    /// Validation nodes [default: 200 per class, or 20% of labeled].
    #[arg(long = "val-size")]
    pub val_size: Option<usize>,
    #[arg(long = "split-seed")]
    pub split_seed: Option<u64>,
}

impl SplitArgs {
    pub fn resolve(&self, file: &ConfigFile, defaults: (usize, usize)) -> Result<(usize, usize, u64), CliError> {
        Ok((
            file.pick(self.train_size, "train-size")?.unwrap_or(defaults.0),
            file.pick(self.val_size, "val-size")?.unwrap_or(defaults.1),
            file.pick(self.split_seed, "split-seed")?.unwrap_or(0),
        ))
    }
}
