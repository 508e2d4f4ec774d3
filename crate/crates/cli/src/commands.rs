use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use featprop::oracle::hops_for_tail;
use featprop::push::normalize_column;
use featprop::synth::{self, FeatureStyle};
use featprop::train::predict_batched;
use featprop::{
    exact_feature_ppr, load_features, micro_f1, precompute, ColumnMatrix, FeatureMatrix, Graph, LabelSet, Model,
    PartRole, PrecomputeOptions, PushConfig, ReuseConfig, Sign, Task,
};
use serde_json::json;

use crate::config::{ConfigFile, GraphArgs, PushArgs, ReuseArgs, SplitArgs, TrainArgs};
use crate::manifest::{digest, manifest_path, Manifest};
use crate::{CliError, SplitName, Style, TaskArg};

pub struct Inputs {
    pub graph: PathBuf,
    pub features: PathBuf,
    pub graph_args: GraphArgs,
    pub push: PushArgs,
    pub reuse: ReuseArgs,
}

struct Loaded {
    graph: Graph,
    features: FeatureMatrix,
    opts: PrecomputeOptions,
    symmetrize: bool,
}

impl Inputs {
    fn load(&self, file: &ConfigFile) -> Result<Loaded, CliError> {
        let symmetrize = self.graph_args.resolve(file)?;
        let graph = Graph::load(&self.graph, symmetrize)?;
        let features = load_features(&self.features)?;
        if features.num_rows() != graph.num_nodes() {
            return Err(CliError::Usage(format!(
                "attribute matrix has {} rows but the graph has {} nodes",
                features.num_rows(),
                graph.num_nodes()
            )));
        }
        let (push, threads) = self.push.resolve(file, graph.num_nodes())?;
        let reuse = self.reuse.resolve(file, features.num_cols())?;
        Ok(Loaded {
            graph,
            features,
            opts: PrecomputeOptions {
                push,
                reuse,
                threads,
                keep_estimates: false,
            },
            symmetrize,
        })
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

fn base_manifest(command: &str, loaded: &Loaded, inputs: &Inputs) -> Result<Manifest, CliError> {
    let mut m = Manifest::new(command, loaded.opts.push.seed);
    m.config.push = Some(loaded.opts.push);
    m.config.reuse = loaded.opts.reuse;
    m.config.reuse_enabled = loaded.opts.reuse.is_some();
    m.config.symmetrize = Some(loaded.symmetrize);
    m.config.threads = loaded.opts.threads;
    m.inputs = vec![digest(&inputs.graph)?, digest(&inputs.features)?];
    Ok(m)
}

pub fn precompute_cmd(
    file: &ConfigFile,
    inputs: &Inputs,
    out: &Path,
    manifest: Option<&Path>,
    parts_csv: Option<&Path>,
) -> Result<(), CliError> {
    let loaded = inputs.load(file)?;
    let start = Instant::now();
    let run = precompute(&loaded.graph, &loaded.features, &loaded.opts)?;
    let secs = start.elapsed().as_secs_f64();
    run.embedding.write(out)?;

    let report = &run.report;
    let mut m = base_manifest("precompute", &loaded, inputs)?;
    m.outputs.push(out.to_path_buf());
    m.timings.precompute_s = secs;
    m.peak_memory_bytes = report.memory.total();
    m.memory = Some(report.memory);
    m.work = Some(report.work);
    let reused = report
        .parts
        .iter()
        .filter(|p| matches!(p.role, PartRole::Decomposed { num_terms, .. } if num_terms > 0))
        .count();
    m.summary = json!({
        "nodes": loaded.graph.num_nodes(),
        "edges": loaded.graph.num_edges(),
        "features": loaded.features.num_cols(),
        "beta_s": report.beta_s,
        "parts": report.parts.len(),
        "bases": report.bases.iter().map(|(c, s)| json!({"column": c, "sign": s})).collect::<Vec<_>>(),
        "reused_parts": reused,
        "total_work": report.work.total(),
    });
    if let Some(path) = parts_csv {
        let mut csv = String::from("column,sign,role,theta_sum,beta,pops,push_edges,walks,walk_steps\n");
        for p in &report.parts {
            let (role, theta) = match p.role {
                PartRole::Plain => ("plain", 0.0),
                PartRole::Base => ("base", 0.0),
                PartRole::Decomposed { theta_sum, .. } => ("decomposed", theta_sum),
            };
            let sign = if p.sign == Sign::Positive { "+" } else { "-" };
            let _ = writeln!(
                csv,
                "{},{sign},{role},{theta},{:e},{},{},{},{}",
                p.column, p.beta, p.work.pops, p.work.push_edges, p.work.walks, p.work.walk_steps
            );
        }
        write_text(path, &csv)?;
        m.outputs.push(path.to_path_buf());
    }
    m.write(&manifest_path(manifest, out))?;
    eprintln!(
        "wrote {} ({} x {}) in {secs:.3}s, work {}, {reused} reused parts",
        out.display(),
        run.embedding.num_rows(),
        run.embedding.num_cols(),
        report.work.total()
    );
    Ok(())
}

#[derive(Default, Clone)]
struct ColumnTally {
    qualifying: usize,
    max_err: f64,
    runs: u64,
    within: u64,
}

impl ColumnTally {
    fn add(&mut self, qualifying: usize, err: f64, lambda: f64) {
        if qualifying == 0 {
            return;
        }
        self.qualifying = self.qualifying.max(qualifying);
        self.max_err = self.max_err.max(err);
        self.runs += 1;
        self.within += u64::from(err <= lambda);
    }

    fn fraction(&self) -> f64 {
        if self.runs == 0 {
            1.0
        } else {
            self.within as f64 / self.runs as f64
        }
    }
}

/// Smallest passing fraction: `1 - φ` less three binomial standard errors.
pub fn pass_threshold(phi: f64, runs: u64) -> f64 {
    1.0 - phi - 3.0 * (phi * (1.0 - phi) / runs.max(1) as f64).sqrt()
}

fn verdict(all: &ColumnTally, phi: f64) -> &'static str {
    if all.runs == 0 {
        "vacuous"
    } else if all.fraction() >= pass_threshold(phi, all.runs) {
        "pass"
    } else {
        "fail"
    }
}

pub fn verify(
    file: &ConfigFile,
    inputs: &Inputs,
    seeds: u64,
    out: Option<&Path>,
    manifest: Option<&Path>,
) -> Result<(), CliError> {
    if seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let loaded = inputs.load(file)?;
    let (g, x, base) = (&loaded.graph, &loaded.features, loaded.opts);
    let cfg = base.push;
    let start = Instant::now();

    // the normalized parts do not depend on the seed
    let hops = hops_for_tail(cfg.alpha, cfg.lambda / 10.0);
    let mut oracles: Vec<[Option<Vec<f64>>; 2]> = Vec::with_capacity(x.num_cols());
    for c in 0..x.num_cols() {
        let parts = normalize_column(g, x.column(c), cfg.conv_r);
        let mut pair = [None, None];
        for (slot, part) in pair.iter_mut().zip(&parts) {
            if !part.is_zero() {
                *slot = Some(exact_feature_ppr(g, &part.weights, cfg.alpha, hops)?);
            }
        }
        oracles.push(pair);
    }

    let mut modes = vec![("plain", None)];
    if let Some(rc) = base.reuse {
        modes.push(("reuse", Some(rc)));
    }
    let mut csv = String::from("mode,column,qualifying_entries,max_abs_error,runs,within_lambda,fraction,status\n");
    let mut failures = Vec::new();
    let mut summary = serde_json::Map::new();
    for (mode, reuse) in &modes {
        let mut tallies = vec![ColumnTally::default(); x.num_cols()];
        for s in 0..seeds {
            let opts = PrecomputeOptions {
                push: PushConfig {
                    seed: cfg.seed.wrapping_add(s),
                    ..cfg
                },
                reuse: *reuse,
                keep_estimates: true,
                ..base
            };
            let run = precompute(g, x, &opts)?;
            let mut per_col = vec![(0usize, 0.0f64); x.num_cols()];
            for p in &run.report.parts {
                let Some(oracle) = &oracles[p.column][usize::from(p.sign == Sign::Negative)] else {
                    continue;
                };
                let est = p.estimate.as_ref().expect("estimates kept");
                let slot = &mut per_col[p.column];
                for (e, &o) in est.iter().zip(oracle) {
                    if o > cfg.delta {
                        slot.0 += 1;
                        slot.1 = slot.1.max((e - o).abs());
                    }
                }
            }
            for (t, &(q, err)) in tallies.iter_mut().zip(&per_col) {
                t.add(q, err, cfg.lambda);
            }
        }
        let mut all = ColumnTally::default();
        for (c, t) in tallies.iter().enumerate() {
            let status = if t.runs == 0 { "vacuous" } else { "measured" };
            let _ = writeln!(
                csv,
                "{mode},{c},{},{:e},{},{},{:.6},{status}",
                t.qualifying,
                t.max_err,
                t.runs,
                t.within,
                t.fraction()
            );
            all.qualifying += t.qualifying;
            all.max_err = all.max_err.max(t.max_err);
            all.runs += t.runs;
            all.within += t.within;
        }
        let threshold = pass_threshold(cfg.phi, all.runs);
        let status = verdict(&all, cfg.phi);
        match status {
            "vacuous" => eprintln!("{mode}: no entry exceeds delta = {:e}; the check is vacuous", cfg.delta),
            "fail" => failures.push(format!(
                "{mode}: {}/{} runs within lambda, need fraction {threshold:.4}",
                all.within, all.runs
            )),
            _ => {}
        }
        let _ = writeln!(
            csv,
            "{mode},all,{},{:e},{},{},{:.6},{status}",
            all.qualifying,
            all.max_err,
            all.runs,
            all.within,
            all.fraction()
        );
        summary.insert(
            (*mode).to_string(),
            json!({
                "runs": all.runs,
                "within_lambda": all.within,
                "fraction": all.fraction(),
                "threshold": threshold,
                "max_abs_error": all.max_err,
                "status": status,
            }),
        );
    }

    if let Some(rc) = base.reuse {
        let plain = precompute(g, x, &PrecomputeOptions { reuse: None, ..base })?.embedding;
        let reused = precompute(
            g,
            x,
            &PrecomputeOptions {
                reuse: Some(rc),
                ..base
            },
        )?
        .embedding;
        let mut total = 0.0;
        for c in 0..x.num_cols() {
            total += plain
                .column(c)
                .iter()
                .zip(reused.column(c))
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        }
        let mean = total / (x.num_rows() * x.num_cols()).max(1) as f64;
        eprintln!("mean |reuse - plain| = {mean:e} (lambda {:e})", cfg.lambda);
        summary.insert("reuse_vs_plain_mean_abs_diff".into(), json!(mean));
    }
    let secs = start.elapsed().as_secs_f64();
    emit(out, &csv)?;

    let mut m = base_manifest("verify", &loaded, inputs)?;
    m.timings.precompute_s = secs;
    m.summary = json!({"seeds": seeds, "oracle_hops": hops, "modes": summary});
    if let Some(path) = out {
        m.outputs.push(path.to_path_buf());
        m.write(&manifest_path(manifest, path))?;
    } else if let Some(path) = manifest {
        m.write(path)?;
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}

fn task_of(arg: Option<TaskArg>) -> Option<Task> {
    arg.map(|t| match t {
        TaskArg::MultiClass => Task::MultiClass,
        TaskArg::MultiLabel => Task::MultiLabel,
    })
}

fn load_split_labels(
    file: &ConfigFile,
    path: &Path,
    num_nodes: usize,
    task: Option<Task>,
    split: &SplitArgs,
) -> Result<(LabelSet, u64), CliError> {
    let y = LabelSet::load(path, num_nodes, task)?;
    let (train, val, seed) = split.resolve(file, y.default_split_sizes())?;
    Ok((y.with_random_split(train, val, seed)?, seed))
}

fn score(pred: &[Vec<u32>], y: &LabelSet, nodes: &[usize]) -> f64 {
    let p: Vec<Vec<u32>> = nodes.iter().map(|&v| pred[v].clone()).collect();
    let t: Vec<Vec<u32>> = nodes.iter().map(|&v| y.classes(v).to_vec()).collect();
    micro_f1(&p, &t)
}

#[allow(clippy::too_many_arguments)]
pub fn train(
    file: &ConfigFile,
    embedding: &Path,
    labels: &Path,
    out: &Path,
    task: Option<TaskArg>,
    manifest: Option<&Path>,
    split: &SplitArgs,
    args: &TrainArgs,
) -> Result<(), CliError> {
    let cfg = args.resolve(file)?;
    let p = ColumnMatrix::read(embedding)?;
    let (y, split_seed) = load_split_labels(file, labels, p.num_rows(), task_of(task), split)?;
    let start = Instant::now();
    let outcome = featprop::train(&p, &y, &cfg)?;
    let secs = start.elapsed().as_secs_f64();
    outcome.model.save(out)?;

    let start = Instant::now();
    let pred = predict_batched(&outcome.model, &p, cfg.batch_size)?;
    let infer = start.elapsed().as_secs_f64();
    let test_f1 = (!y.test.is_empty()).then(|| score(&pred, &y, &y.test));

    let mut m = Manifest::new("train", cfg.seed);
    m.config.train = Some(cfg);
    m.config.threads = 1;
    m.inputs = vec![digest(embedding)?, digest(labels)?];
    m.outputs.push(out.to_path_buf());
    m.timings.train_s = secs;
    m.timings.inference_s = infer;
    m.peak_memory_bytes = p.heap_bytes() + outcome.model.num_params() * std::mem::size_of::<f64>() * 3;
    m.summary = json!({
        "task": y.task,
        "classes": y.num_classes,
        "split_seed": split_seed,
        "train_nodes": y.train.len(),
        "val_nodes": y.val.len(),
        "test_nodes": y.test.len(),
        "parameters": outcome.model.num_params(),
        "epochs_run": outcome.history.len(),
        "best_epoch": outcome.best_epoch,
        "best_val_micro_f1": outcome.best_val_f1,
        "test_micro_f1": test_f1,
    });
    m.write(&manifest_path(manifest, out))?;
    eprintln!(
        "trained {} epochs (best {}), val micro-F1 {:.4}",
        outcome.history.len(),
        outcome.best_epoch,
        outcome.best_val_f1
    );
    if let Some(f1) = test_f1 {
        println!("test micro-F1 {f1:.6}");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn predict(
    file: &ConfigFile,
    embedding: &Path,
    model_path: &Path,
    out: &Path,
    labels: Option<&Path>,
    task: Option<TaskArg>,
    split_name: SplitName,
    manifest: Option<&Path>,
    split: &SplitArgs,
) -> Result<(), CliError> {
    let p = ColumnMatrix::read(embedding)?;
    let model = Model::load(model_path)?;
    if model.input_dim() != p.num_cols() {
        return Err(CliError::Usage(format!(
            "model expects {} input columns but the embedding has {}",
            model.input_dim(),
            p.num_cols()
        )));
    }
    let start = Instant::now();
    let pred = predict_batched(&model, &p, 1024)?;
    let secs = start.elapsed().as_secs_f64();

    let mut text = String::new();
    for (v, classes) in pred.iter().enumerate() {
        let list: Vec<String> = classes.iter().map(u32::to_string).collect();
        let _ = writeln!(text, "{v} {}", list.join(","));
    }
    write_text(out, &text)?;

    let mut m = Manifest::new("predict", 0);
    m.inputs = vec![digest(embedding)?, digest(model_path)?];
    m.outputs.push(out.to_path_buf());
    m.timings.inference_s = secs;
    m.config.threads = 1;
    m.peak_memory_bytes = p.heap_bytes() + pred.len() * std::mem::size_of::<Vec<u32>>();
    let mut summary = json!({"nodes": pred.len(), "task": model.task});
    if let Some(path) = labels {
        let (y, split_seed) = load_split_labels(
            file,
            path,
            p.num_rows(),
            Some(task_of(task).unwrap_or(model.task)),
            split,
        )?;
        if y.num_classes > model.output_dim() {
            return Err(CliError::Usage(format!(
                "labels use {} classes but the model outputs {}",
                y.num_classes,
                model.output_dim()
            )));
        }
        let nodes = match split_name {
            SplitName::Train => y.train.clone(),
            SplitName::Val => y.val.clone(),
            SplitName::Test => y.test.clone(),
            SplitName::All => y.labeled(),
        };
        let f1 = score(&pred, &y, &nodes);
        let name = format!("{split_name:?}").to_lowercase();
        println!("{name} micro-F1 {f1:.6}");
        m.inputs.push(digest(path)?);
        summary["split"] = json!(name);
        summary["split_seed"] = json!(split_seed);
        summary["scored_nodes"] = json!(nodes.len());
        summary["micro_f1"] = json!(f1);
    }
    m.summary = summary;
    m.write(&manifest_path(manifest, out))
}

pub struct BenchSpec {
    pub nodes: Vec<usize>,
    pub degree: f64,
    pub num_features: usize,
    pub style: Style,
    pub correlation: f64,
    pub sources: usize,
    pub density: f64,
}

fn feature_style(style: Style, correlation: f64, sources: usize, density: f64) -> FeatureStyle {
    match style {
        Style::Correlated => FeatureStyle::Correlated {
            num_sources: sources,
            correlation,
            density,
        },
        Style::Orthogonal => FeatureStyle::Orthogonal,
        Style::Independent => FeatureStyle::Independent { density },
        Style::Signed => FeatureStyle::Signed,
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.max(1.0).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

pub fn bench(
    file: &ConfigFile,
    spec: &BenchSpec,
    push: &PushArgs,
    reuse: &ReuseArgs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if spec.nodes.is_empty() || spec.nodes.iter().any(|&n| n < 2) {
        return Err(CliError::Usage("--nodes needs sizes of at least 2".into()));
    }
    if spec.num_features == 0 || spec.sources == 0 || spec.degree.is_nan() || spec.degree <= 0.0 {
        return Err(CliError::Usage(
            "--num-features, --sources and --degree must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.correlation) || !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(CliError::Usage(
            "--correlation must lie in [0, 1] and --density in (0, 1]".into(),
        ));
    }
    let style = feature_style(spec.style, spec.correlation, spec.sources, spec.density);
    let style_name = format!("{:?}", spec.style).to_lowercase();
    let mut csv = String::from(
        "nodes,edges,features,style,threads,plain_s,reuse_s,plain_work,reuse_work,plain_pops,reuse_pops,\
         plain_walk_steps,reuse_walk_steps,reused_parts,time_speedup,work_speedup\n",
    );
    let mut points = Vec::new();
    for &n in &spec.nodes {
        let (cfg, threads) = push.resolve(file, n)?;
        let rc = reuse
            .resolve(file, spec.num_features)?
            .unwrap_or_else(ReuseConfig::disabled);
        let g = synth::random_graph(n, spec.degree, cfg.seed);
        let x = synth::features(n, spec.num_features, style, cfg.seed);
        let plain_opts = PrecomputeOptions {
            threads,
            ..PrecomputeOptions::plain(cfg)
        };
        let t = Instant::now();
        let plain = precompute(&g, &x, &plain_opts)?;
        let plain_s = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let reused = precompute(
            &g,
            &x,
            &PrecomputeOptions {
                reuse: Some(rc),
                ..plain_opts
            },
        )?;
        let reuse_s = t.elapsed().as_secs_f64();
        let (pw, rw) = (plain.report.work, reused.report.work);
        let reused_parts = reused
            .report
            .parts
            .iter()
            .filter(|p| matches!(p.role, PartRole::Decomposed { num_terms, .. } if num_terms > 0))
            .count();
        points.push((g.num_edges() as f64, pw.total() as f64));
        let _ = writeln!(
            csv,
            "{n},{},{},{style_name},{threads},{plain_s:.6},{reuse_s:.6},{},{},{},{},{},{},{reused_parts},{:.4},{:.4}",
            g.num_edges(),
            spec.num_features,
            pw.total(),
            rw.total(),
            pw.pops,
            rw.pops,
            pw.walk_steps,
            rw.walk_steps,
            plain_s / reuse_s.max(1e-9),
            pw.total() as f64 / rw.total().max(1) as f64,
        );
    }
    emit(out, &csv)?;
    if points.len() >= 2 {
        eprintln!("plain work grows as m^{:.3}", log_slope(&points));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn generate(
    nodes: usize,
    degree: f64,
    num_features: usize,
    classes: usize,
    mixing: f64,
    style: Style,
    signal: f64,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    if nodes < 2 || classes == 0 || classes > nodes || num_features == 0 || degree.is_nan() || degree <= 0.0 {
        return Err(CliError::Usage(
            "need at least 2 nodes, 1..=nodes classes, a feature and a positive degree".into(),
        ));
    }
    if !(0.0..=1.0).contains(&mixing) || !signal.is_finite() {
        return Err(CliError::Usage(
            "--mixing must lie in [0, 1] and --signal must be finite".into(),
        ));
    }
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let g = synth::planted_partition(nodes, classes, degree, mixing, seed);
    let labels = synth::planted_labels(nodes, classes);
    let base = synth::features(nodes, num_features, feature_style(style, 0.9, 4, 0.05), seed);
    let cols: Vec<Vec<f64>> = (0..num_features)
        .map(|f| {
            base.column(f)
                .iter()
                .zip(&labels)
                .map(|(&x, &c)| if c as usize == f % classes { x + signal } else { x })
                .collect()
        })
        .collect();
    let x = ColumnMatrix::from_columns(nodes, cols)?;

    let mut edges = format!("# nodes: {nodes}\n");
    for u in 0..nodes {
        for &t in g.out_neighbors(u)? {
            if t as usize > u {
                let _ = writeln!(edges, "{u} {t}");
            }
        }
    }
    write_text(&out_dir.join("graph.txt"), &edges)?;
    x.write(out_dir.join("features.bin"))?;
    let label_text: String = labels.iter().enumerate().map(|(v, c)| format!("{v} {c}\n")).collect();
    write_text(&out_dir.join("labels.txt"), &label_text)?;
    eprintln!(
        "wrote {nodes} nodes, {} edges, {num_features} features, {classes} classes to {}",
        g.num_edges(),
        out_dir.display()
    );
    Ok(())
}

pub fn convert(input: &Path, out: &Path, to_text: bool) -> Result<(), CliError> {
    if to_text {
        let x = ColumnMatrix::read(input)?;
        let mut text = String::new();
        let mut row = vec![0.0; x.num_cols()];
        for r in 0..x.num_rows() {
            x.row_into(r, &mut row);
            let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(text, "{}", vals.join(" "));
        }
        return write_text(out, &text);
    }
    let text = fs::read_to_string(input).map_err(|e| CliError::Io(format!("cannot read {}: {e}", input.display())))?;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let before = values.len();
        for tok in line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            let v: f64 = tok
                .parse()
                .map_err(|_| CliError::Io(format!("{}:{}: bad number {tok:?}", input.display(), idx + 1)))?;
            values.push(v);
        }
        let got = values.len() - before;
        if *width.get_or_insert(got) != got {
            return Err(CliError::Io(format!(
                "{}:{}: row has {got} values, expected {}",
                input.display(),
                idx + 1,
                width.unwrap()
            )));
        }
        rows += 1;
    }
    let width = width.ok_or_else(|| CliError::Io(format!("{} has no rows", input.display())))?;
    let x = ColumnMatrix::from_rows(rows, width, &values).map_err(|e| CliError::Io(e.to_string()))?;
    x.write(out)?;
    Ok(())
}
