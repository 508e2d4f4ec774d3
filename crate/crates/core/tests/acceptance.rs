//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use featprop::labels::ClassSet;
use featprop::oracle::{apply_normalized_adjacency, apply_transition, exact_embedding_column, hops_for_tail};
use featprop::push::{normalize_column, PushWorkspace};
use featprop::synth::{self, FeatureStyle};
use featprop::train::predict;
use featprop::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sparse_signed(n: usize, f: usize, density: f64, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = (0..f)
        .map(|_| {
            let mut col: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random::<f64>() < density {
                        rng.random_range(-1.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            if col.iter().all(|&x| x == 0.0) {
                col[rng.random_range(0..n)] = 1.0;
            }
            col
        })
        .collect();
    ColumnMatrix::from_columns(n, cols).unwrap()
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Results of the λ-bound sweep, shared by criteria 1, 3 and 6.
struct BoundSweep {
    runs: usize,
    plain_ok: usize,
    reuse_ok: usize,
    worst_plain: f64,
    worst_reuse: f64,
    mass_checks: usize,
    worst_mass: f64,
    reused_parts: usize,
    secs: f64,
}

const BOUND_LAMBDA: f64 = 0.05;
const BOUND_PHI: f64 = 0.1;
const BOUND_RUNS: usize = 200;

fn bound_sweep() -> BoundSweep {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut s = BoundSweep {
        runs: 0,
        plain_ok: 0,
        reuse_ok: 0,
        worst_plain: 0.0,
        worst_reuse: 0.0,
        mass_checks: 0,
        worst_mass: 0.0,
        reused_parts: 0,
        secs: 0.0,
    };
    for graph_id in 0..10u64 {
        let n = rng.random_range(100..=500);
        let degree = rng.random_range(5.0..=20.0);
        let g = synth::random_graph(n, degree, 100 + graph_id);
        // half sparse signed columns, half correlated ones that reuse can decompose
        let signed = sparse_signed(n, 8, 0.05, 200 + graph_id);
        let correlated = synth::features(
            n,
            8,
            FeatureStyle::Correlated {
                num_sources: 2,
                correlation: 0.7,
                density: 0.05,
            },
            300 + graph_id,
        );
        let x = ColumnMatrix::from_columns(
            n,
            signed
                .columns()
                .chain(correlated.columns())
                .map(|c| c.to_vec())
                .collect(),
        )
        .unwrap();
        let base_cfg = PushConfig {
            lambda: BOUND_LAMBDA,
            phi: BOUND_PHI,
            ..PushConfig::for_graph(n)
        };
        let hops = hops_for_tail(base_cfg.alpha, 1e-4 * BOUND_LAMBDA);
        // oracle per part; parts do not depend on the seed
        let probe = precompute(
            &g,
            &x,
            &PrecomputeOptions {
                keep_estimates: false,
                ..PrecomputeOptions::plain(base_cfg)
            },
        )
        .unwrap();
        let oracles: Vec<Vec<f64>> = probe
            .report
            .parts
            .iter()
            .map(|p| {
                let part =
                    &normalize_column(&g, x.column(p.column), base_cfg.conv_r)[usize::from(p.sign == Sign::Negative)];
                exact_feature_ppr(&g, &part.weights, base_cfg.alpha, hops).unwrap()
            })
            .collect();
        let delta = base_cfg.delta;
        let worst_err = |report: &PrecomputeReport| -> (f64, f64) {
            let mut err: f64 = 0.0;
            let mut mass: f64 = 0.0;
            for (p, oracle) in report.parts.iter().zip(&oracles) {
                let est = p.estimate.as_ref().unwrap();
                for (e, &o) in est.iter().zip(oracle) {
                    if o > delta {
                        err = err.max((e - o).abs());
                    }
                }
                mass = mass.max((est.iter().sum::<f64>() - 1.0).abs());
            }
            (err, mass)
        };
        for run in 0..BOUND_RUNS as u64 {
            let cfg = PushConfig {
                seed: graph_id * 1_000_003 + run,
                ..base_cfg
            };
            let plain = precompute(
                &g,
                &x,
                &PrecomputeOptions {
                    keep_estimates: true,
                    ..PrecomputeOptions::plain(cfg)
                },
            )
            .unwrap();
            let reuse = precompute(
                &g,
                &x,
                &PrecomputeOptions {
                    keep_estimates: true,
                    ..PrecomputeOptions::with_reuse(cfg, ReuseConfig::for_features(16))
                },
            )
            .unwrap();
            let (ep, mp) = worst_err(&plain.report);
            let (er, mr) = worst_err(&reuse.report);
            s.runs += 1;
            s.plain_ok += (ep <= BOUND_LAMBDA) as usize;
            s.reuse_ok += (er <= BOUND_LAMBDA) as usize;
            s.worst_plain = s.worst_plain.max(ep);
            s.worst_reuse = s.worst_reuse.max(er);
            s.mass_checks += plain.report.parts.len() + reuse.report.parts.len();
            s.worst_mass = s.worst_mass.max(mp).max(mr);
            s.reused_parts += reused(&reuse.report);
        }
    }
    s.secs = start.elapsed().as_secs_f64();
    s
}

/// Parts whose estimate combines at least one base.
fn reused(report: &PrecomputeReport) -> usize {
    report
        .parts
        .iter()
        .filter(|p| matches!(p.role, PartRole::Decomposed { num_terms, .. } if num_terms > 0))
        .count()
}

fn criterion_1(s: &BoundSweep) -> Verdict {
    let per_graph = BOUND_RUNS as f64;
    let sigma = (BOUND_PHI * (1.0 - BOUND_PHI) / per_graph).sqrt();
    let need = 1.0 - BOUND_PHI - 3.0 * sigma;
    let fp = s.plain_ok as f64 / s.runs as f64;
    let fr = s.reuse_ok as f64 / s.runs as f64;
    verdict(
        fp >= need && fr >= need && s.reused_parts > 0,
        format!(
            "{} runs on 10 graphs; within λ: plain {fp:.4}, reuse {fr:.4} (need ≥ {need:.4}); worst error plain {:.2e}, reuse {:.2e}; {} reused parts",
            s.runs, s.worst_plain, s.worst_reuse, s.reused_parts
        ),
    )
}

fn criterion_2() -> Verdict {
    let seeds = 10_000u64;
    let mut worst_z: f64 = 0.0;
    let mut random_entries = 0;
    let mut pass = true;
    let inputs = [
        (synth::random_graph(40, 4.0, 5), 0.5),
        (
            Graph::from_edges(
                30,
                &(0..60u32).map(|k| (k % 30, (k * 7 + 3) % 30)).collect::<Vec<_>>(),
                false,
            )
            .unwrap(),
            0.0,
        ),
    ];
    for (gi, (g, r)) in inputs.iter().enumerate() {
        let n = g.num_nodes();
        let x = sparse_signed(n, 1, 0.3, 40 + gi as u64);
        let cfg = PushConfig {
            lambda: 0.2,
            phi: 0.5,
            conv_r: *r,
            ..PushConfig::for_graph(n)
        };
        let beta = cfg.standard_coefficient();
        let oracle = exact_embedding_column(g, x.column(0), &OracleConfig::with_tail(cfg.alpha, *r, 1e-15));
        let oracle = oracle.unwrap();
        let mut sum = vec![0.0; n];
        let mut sum_sq = vec![0.0; n];
        let mut w = PushWorkspace::new(n);
        for seed in 0..seeds {
            let c = PushConfig { seed, ..cfg };
            let (est, _) = feature_push(g, x.column(0), 0, &c, beta, &mut w).unwrap();
            for t in 0..n {
                sum[t] += est[t];
                sum_sq[t] += est[t] * est[t];
            }
        }
        let k = seeds as f64;
        for t in 0..n {
            let mean = sum[t] / k;
            let var = ((sum_sq[t] / k - mean * mean) * k / (k - 1.0)).max(0.0);
            let se = (var / k).sqrt();
            if se > 0.0 {
                random_entries += 1;
            }
            // floor covers entries the push resolves deterministically
            let gap = (mean - oracle[t]).abs();
            let tol = 4.0 * se + 1e-12;
            if gap > tol {
                pass = false;
            }
            if se > 0.0 {
                worst_z = worst_z.max(gap / se);
            }
        }
    }
    verdict(
        pass && random_entries > 0,
        format!("1e4 seeds on 2 graphs (n=40 symmetric r=0.5, n=30 directed r=0); {random_entries} random entries; worst |mean-oracle|/SE = {worst_z:.2} (limit 4)"),
    )
}

fn criterion_3(s: &BoundSweep) -> Verdict {
    verdict(
        s.worst_mass <= 1e-9,
        format!(
            "{} part estimates; worst |Σπ̂ - 1| = {:.2e}",
            s.mass_checks, s.worst_mass
        ),
    )
}

fn dense_adjacency(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.num_nodes();
    let mut a = vec![vec![0.0; n]; n];
    for u in 0..n {
        for &t in g.out_neighbors(u).unwrap() {
            a[t as usize][u] = 1.0;
        }
    }
    a
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..k {
            if a[i][j] != 0.0 {
                for c in 0..m {
                    out[i][c] += a[i][j] * b[j][c];
                }
            }
        }
    }
    out
}

fn diag_scale(d: &[f64], exp: f64, m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    m.iter()
        .zip(d)
        .map(|(row, &di)| row.iter().map(|v| di.powf(exp) * v).collect())
        .collect()
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for gi in 0..6u64 {
        let n = rng.random_range(3..=20);
        let g = if gi % 2 == 0 {
            synth::random_graph(n, 4.0, gi)
        } else {
            let edges: Vec<(u32, u32)> = (0..3 * n)
                .map(|_| (rng.random_range(0..n as u32), rng.random_range(0..n as u32)))
                .collect();
            Graph::from_edges(n, &edges, false).unwrap()
        };
        let a = dense_adjacency(&g);
        let d: Vec<f64> = (0..n).map(|v| g.degree(v) as f64).collect();
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        // A D^{-1}
        let ad: Vec<Vec<f64>> = a
            .iter()
            .map(|row| row.iter().zip(&d).map(|(v, di)| v / di).collect())
            .collect();
        for r in [0.0, 0.25, 0.5, 1.0] {
            // Ã = D^{r-1} A D^{-r}
            let tilde: Vec<Vec<f64>> = diag_scale(&d, r - 1.0, &a)
                .iter()
                .map(|row| row.iter().zip(&d).map(|(v, di)| v * di.powf(-r)).collect())
                .collect();
            let mut lhs = x.clone();
            let mut rhs_inner = diag_scale(&d, 1.0 - r, &x);
            let mut lib: Vec<Vec<f64>> = (0..3).map(|c| x.iter().map(|row| row[c]).collect()).collect();
            for l in 0..=5 {
                if l > 0 {
                    lhs = matmul(&tilde, &lhs);
                    rhs_inner = matmul(&ad, &rhs_inner);
                    for col in lib.iter_mut() {
                        let mut next = vec![0.0; n];
                        apply_normalized_adjacency(&g, r, col, &mut next);
                        *col = next;
                    }
                }
                let rhs = diag_scale(&d, r - 1.0, &rhs_inner);
                for i in 0..n {
                    for c in 0..3 {
                        worst = worst.max((lhs[i][c] - rhs[i][c]).abs());
                        worst = worst.max((lhs[i][c] - lib[c][i]).abs());
                    }
                }
                checks += 1;
            }
        }
        // the transition operator is the r = 1 case
        let v: Vec<f64> = x.iter().map(|row| row[0]).collect();
        let mut t1 = vec![0.0; n];
        let mut t2 = vec![0.0; n];
        apply_transition(&g, &v, &mut t1);
        apply_normalized_adjacency(&g, 1.0, &v, &mut t2);
        worst = worst.max(max_abs_diff(&t1, &t2));
    }
    verdict(
        worst <= 1e-10,
        format!("{checks} (graph, r, l) cases, 3 dense columns each; worst deviation {worst:.2e}"),
    )
}

fn criterion_5() -> Verdict {
    let toy = decompose(&[0.4, 0.6], &[&[0.5, 0.5]], 1.0 / 16.0);
    let toy_ok = toy.theta.len() == 1
        && (toy.theta[0].1 - 0.8).abs() < 1e-15
        && (toy.residual[0]).abs() < 1e-15
        && (toy.residual[1] - 0.2).abs() < 1e-15;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_rec: f64 = 0.0;
    let mut worst_l1: f64 = 0.0;
    let mut min_res = f64::INFINITY;
    let mut theta_ok = true;
    let normalized = |v: Vec<f64>| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    for _ in 0..1000 {
        let n = rng.random_range(2..=30);
        let nb = rng.random_range(1..=5);
        let bases: Vec<Vec<f64>> = (0..nb)
            .map(|_| {
                let mut b: Vec<f64> = (0..n)
                    .map(|_| {
                        if rng.random::<f64>() < 0.5 {
                            rng.random::<f64>()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                b[rng.random_range(0..n)] += 0.1;
                normalized(b)
            })
            .collect();
        let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 0.3).collect();
        for b in &bases {
            let w = rng.random::<f64>();
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += w * bi;
            }
        }
        let x = normalized(x);
        let delta0 = [1.0 / 16.0, 0.25, 1.0][rng.random_range(0..3)];
        let views: Vec<&[f64]> = bases.iter().map(|b| b.as_slice()).collect();
        let d = decompose(&x, &views, delta0);
        let mut rebuilt = d.residual.clone();
        for &(j, t) in &d.theta {
            theta_ok &= (0.0..1.0).contains(&t);
            for (r, b) in rebuilt.iter_mut().zip(&bases[j]) {
                *r += t * b;
            }
        }
        worst_rec = worst_rec.max(max_abs_diff(&rebuilt, &x));
        worst_l1 = worst_l1.max((d.residual_l1() - (1.0 - d.theta_sum)).abs());
        min_res = min_res.min(d.residual.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    verdict(
        toy_ok && theta_ok && worst_rec <= 1e-12 && worst_l1 <= 1e-12 && min_res >= -1e-12,
        format!(
            "toy θ={:.3} x'=({:.3},{:.3}); 1000 random: reconstruction {worst_rec:.2e}, |‖x'‖₁-(1-Σθ)| {worst_l1:.2e}, min x' {min_res:.2e}",
            toy.theta.first().map_or(0.0, |t| t.1),
            toy.residual[0],
            toy.residual[1]
        ),
    )
}

fn criterion_6(s: &BoundSweep) -> Verdict {
    let n = 200;
    let f = 64;
    let lambda = 1e-3;
    let g = synth::random_graph(n, 8.0, 6);
    let x = synth::features(
        n,
        f,
        FeatureStyle::Correlated {
            num_sources: 4,
            correlation: 0.8,
            density: 0.1,
        },
        6,
    );
    let cfg = PushConfig {
        lambda,
        seed: 6,
        ..PushConfig::for_graph(n)
    };
    let plain = precompute(&g, &x, &PrecomputeOptions::plain(cfg)).unwrap();
    let reuse = precompute(
        &g,
        &x,
        &PrecomputeOptions::with_reuse(cfg, ReuseConfig::for_features(f)),
    )
    .unwrap();
    let mut total = 0.0;
    for c in 0..f {
        for (a, b) in plain.embedding.column(c).iter().zip(reuse.embedding.column(c)) {
            total += (a - b).abs();
        }
    }
    let mean = total / (n * f) as f64;
    let decomposed = reused(&reuse.report);
    let fr = s.reuse_ok as f64 / s.runs as f64;
    let need = 1.0 - BOUND_PHI - 3.0 * (BOUND_PHI * (1.0 - BOUND_PHI) / BOUND_RUNS as f64).sqrt();
    verdict(
        mean <= lambda && decomposed > 0 && fr >= need,
        format!(
            "n={n} F={f} λ={lambda}: mean |P_reuse - P_plain| = {mean:.2e}; {decomposed} parts reused a base; reuse λ-bound fraction {fr:.4}"
        ),
    )
}

fn criterion_7() -> Verdict {
    // base b and columns 0.5 b + 0.5 z_i with pairwise disjoint supports;
    // r = 1 keeps every value a power of two so the counter ties are exact
    let n = 20_000;
    let supp = 8;
    let g = synth::random_graph(n, 10.0, 7);
    let block = |k: usize| -> Vec<f64> {
        let mut v = vec![0.0; n];
        for j in 0..supp {
            v[(k * supp + j) * 37 % n] = 1.0 / supp as f64;
        }
        v
    };
    let b = block(0);
    let mut cols = vec![b.clone()];
    for i in 1..9 {
        let z = block(i);
        cols.push(b.iter().zip(&z).map(|(x, y)| 0.5 * x + 0.5 * y).collect());
    }
    let x = ColumnMatrix::from_columns(n, cols).unwrap();
    let cfg = PushConfig {
        lambda: 0.02,
        conv_r: 1.0,
        seed: 7,
        ..PushConfig::for_graph(n)
    };
    let rc = ReuseConfig {
        num_bases: 1,
        gamma: 0.25,
        ..ReuseConfig::for_features(9)
    };
    let ratio = |x: &FeatureMatrix, rc: ReuseConfig| {
        let plain = precompute(&g, x, &PrecomputeOptions::plain(cfg)).unwrap();
        let reuse = precompute(&g, x, &PrecomputeOptions::with_reuse(cfg, rc)).unwrap();
        let (mut r_work, mut p_work, mut thetas) = (0u64, 0u64, Vec::new());
        for (p, r) in plain.report.parts.iter().zip(&reuse.report.parts) {
            if let PartRole::Decomposed { theta_sum, .. } = r.role {
                r_work += r.work.total();
                p_work += p.work.total();
                thetas.push(theta_sum);
            }
        }
        let all = reuse.report.work.total() as f64 / plain.report.work.total() as f64;
        (r_work as f64 / p_work as f64, thetas, all)
    };
    let (constructed, thetas, _) = ratio(&x, rc);
    let theta_ok = !thetas.is_empty() && thetas.iter().all(|t| (t - 0.5).abs() < 1e-12);

    let xo = synth::features(n, 16, FeatureStyle::Orthogonal, 7);
    let (orthogonal, _, orth_all) = ratio(
        &xo,
        ReuseConfig {
            gamma: 0.25,
            ..ReuseConfig::for_features(16)
        },
    );
    verdict(
        theta_ok && constructed <= 0.85 && (orthogonal - 1.0).abs() <= 0.1,
        format!(
            "θ_sum=0.5, γ=0.25: residual work ratio {constructed:.3} (limit 0.85, theory 0.756); orthogonal: residual ratio {orthogonal:.3}, whole run incl. bases {orth_all:.3}"
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut points = Vec::new();
    let mut sizes = Vec::new();
    for &n in &[100usize, 1_000, 10_000] {
        let g = synth::random_graph(n, 10.0, 8);
        let cols: Vec<Vec<f64>> = (0..16)
            .map(|c| {
                let mut v = vec![0.0; n];
                v[(c * 7919) % n] = 1.0;
                v
            })
            .collect();
        let x = ColumnMatrix::from_columns(n, cols).unwrap();
        let cfg = PushConfig {
            lambda: 0.02,
            seed: 8,
            ..PushConfig::for_graph(n)
        };
        let run = precompute(&g, &x, &PrecomputeOptions::plain(cfg)).unwrap();
        points.push(((g.num_edges() as f64).ln(), (run.report.work.total() as f64).ln()));
        sizes.push(g.num_edges());
    }
    let exponent = slope(&points);

    // memory over an (n, F) grid with m = 10 n, fit through the origin
    let mut grid = Vec::new();
    for &n in &[1_000usize, 10_000, 100_000] {
        for &f in &[16usize, 32, 64] {
            let rc = ReuseConfig::for_features(f);
            let mem = MemoryAccount::estimate(n, 10 * n, f, 2 * f, rc.num_bases, 1).total();
            grid.push(((n * f) as f64, mem as f64));
        }
    }
    let c = grid.iter().map(|(x, y)| x * y).sum::<f64>() / grid.iter().map(|(x, _)| x * x).sum::<f64>();
    let worst_rel = grid.iter().map(|(x, y)| (y / (c * x) - 1.0).abs()).fold(0.0, f64::max);

    // the account matches the real allocations of a run
    let g = synth::random_graph(300, 6.0, 8);
    let x = synth::features(300, 5, FeatureStyle::Signed, 8);
    let run = precompute(&g, &x, &PrecomputeOptions::plain(PushConfig::for_graph(300))).unwrap();
    let mem = run.report.memory;
    let real_ok =
        mem.graph == g.heap_bytes() && mem.features == x.heap_bytes() && mem.embedding == run.embedding.heap_bytes();

    verdict(
        (0.3..=0.7).contains(&exponent) && worst_rel <= 0.2 && real_ok,
        format!(
            "m = {sizes:?}: work exponent {exponent:.3} (need 0.3..0.7); memory ≈ {c:.1} bytes per n·F, worst deviation {:.1}% (limit 20%); account matches allocations: {real_ok}",
            100.0 * worst_rel
        ),
    )
}

fn criterion_9() -> Verdict {
    let n = 300;
    let g = synth::random_graph(n, 6.0, 9);
    let x = synth::features(
        n,
        32,
        FeatureStyle::Correlated {
            num_sources: 3,
            correlation: 0.7,
            density: 0.2,
        },
        9,
    );
    let rc = ReuseConfig {
        num_bases: 4,
        delta0: 1.0,
        ..ReuseConfig::for_features(32)
    };
    let run = precompute(&g, &x, &PrecomputeOptions::with_reuse(PushConfig::for_graph(n), rc)).unwrap();
    let iterations: Vec<usize> = run
        .report
        .parts
        .iter()
        .filter_map(|p| match p.role {
            PartRole::Decomposed { iterations, .. } => Some(iterations),
            _ => None,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut direct_ok = true;
    for _ in 0..200 {
        let bases: Vec<Vec<f64>> = (0..4).map(|_| (0..10).map(|_| rng.random::<f64>()).collect()).collect();
        let x: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
        let views: Vec<&[f64]> = bases.iter().map(|b| b.as_slice()).collect();
        direct_ok &= decompose(&x, &views, 1.0).iterations == 1;
    }
    verdict(
        !iterations.is_empty() && iterations.iter().all(|&i| i == 1) && direct_ok,
        format!(
            "{} decomposed parts, iteration counts {:?}; 200 direct decompositions with 4 bases all ran once: {direct_ok}",
            iterations.len(),
            {
                let mut u = iterations.clone();
                u.dedup();
                u
            }
        ),
    )
}

fn criterion_10() -> Verdict {
    // gradient check
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_rel: f64 = 0.0;
    for (task, layers) in [(Task::MultiClass, 3), (Task::MultiLabel, 2), (Task::MultiClass, 1)] {
        let cfg = TrainConfig {
            layers,
            width: 5,
            seed: 10,
            ..TrainConfig::default()
        };
        let mut model = Model::init(4, 3, task, &cfg);
        for l in &mut model.layers {
            for b in &mut l.bias {
                *b = rng.random_range(-0.3..0.3);
            }
        }
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let targets: Vec<Vec<u32>> = (0..5u32)
            .map(|i| {
                if task == Task::MultiClass {
                    vec![i % 3]
                } else {
                    vec![i % 3, 2]
                        .into_iter()
                        .collect::<std::collections::BTreeSet<_>>()
                        .into_iter()
                        .collect()
                }
            })
            .collect();
        let rr: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let tt: Vec<&[u32]> = targets.iter().map(|t| t.as_slice()).collect();
        let (_, grads) = model.loss_and_grad(&rr, &tt);
        let h = 1e-6;
        for l in 0..model.layers.len() {
            for k in 0..model.layers[l].weights.len() + model.layers[l].bias.len() {
                let nw = model.layers[l].weights.len();
                let analytic = if k < nw {
                    grads[l].weights[k]
                } else {
                    grads[l].bias[k - nw]
                };
                let eval = |delta: f64| {
                    let mut m = model.clone();
                    if k < nw {
                        m.layers[l].weights[k] += delta;
                    } else {
                        m.layers[l].bias[k - nw] += delta;
                    }
                    m.loss(&rr, &tt)
                };
                let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                let rel = (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-6);
                worst_rel = worst_rel.max(rel);
            }
        }
    }

    // separable toy, scored on the held-out test split
    let (p, classes) = synth::separable_blobs(600, 8, 4, 10);
    let y = LabelSet::from_classes(&classes)
        .with_random_split(300, 100, 10)
        .unwrap();
    let cfg = TrainConfig {
        max_epochs: 200,
        seed: 10,
        width: 32,
        ..TrainConfig::default()
    };
    let out = train(&p, &y, &cfg).unwrap();
    let pred = predict(&out.model, &p).unwrap();
    let test_pred: Vec<ClassSet> = y.test.iter().map(|&v| pred[v].clone()).collect();
    let test_truth: Vec<ClassSet> = y.test.iter().map(|&v| y.classes(v).to_vec()).collect();
    let f1 = micro_f1(&test_pred, &test_truth);

    let again = train(&p, &y, &cfg).unwrap();
    let deterministic = again.model.to_bytes() == out.model.to_bytes();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    out.model.save(&path).unwrap();
    let reloaded = Model::load(&path).unwrap();
    let reload_ok = reloaded.to_bytes() == out.model.to_bytes() && predict(&reloaded, &p).unwrap() == pred;

    verdict(
        worst_rel <= 1e-4 && f1 >= 0.99 && deterministic && reload_ok,
        format!(
            "gradient worst relative error {worst_rel:.2e}; separable test micro-F1 {f1:.4} (epoch {}); identical checkpoints: {deterministic}; reload round trip: {reload_ok}",
            out.best_epoch
        ),
    )
}

fn criterion_11() -> Verdict {
    let inputs: Vec<(Graph, FeatureMatrix, Option<ReuseConfig>)> = vec![
        (
            synth::random_graph(400, 8.0, 11),
            synth::features(400, 12, FeatureStyle::Signed, 11),
            None,
        ),
        (
            synth::random_graph(300, 6.0, 12),
            synth::features(
                300,
                24,
                FeatureStyle::Correlated {
                    num_sources: 3,
                    correlation: 0.8,
                    density: 0.2,
                },
                12,
            ),
            Some(ReuseConfig {
                num_bases: 3,
                ..ReuseConfig::for_features(24)
            }),
        ),
        (
            synth::planted_partition(500, 5, 6.0, 0.1, 13),
            synth::features(500, 10, FeatureStyle::Independent { density: 0.1 }, 13),
            Some(ReuseConfig::for_features(10)),
        ),
    ];
    let mut identical = 0;
    for (g, x, reuse) in &inputs {
        let cfg = PushConfig {
            lambda: 0.01,
            seed: 11,
            ..PushConfig::for_graph(g.num_nodes())
        };
        let bits = |threads: usize| {
            let opts = PrecomputeOptions {
                push: cfg,
                reuse: *reuse,
                threads,
                keep_estimates: false,
            };
            let e = precompute(g, x, &opts).unwrap().embedding;
            e.columns()
                .flat_map(|c| c.iter().map(|v| v.to_bits()))
                .collect::<Vec<u64>>()
        };
        let one = bits(1);
        if bits(4) == one && bits(8) == one {
            identical += 1;
        }
    }
    verdict(
        identical == inputs.len(),
        format!(
            "{identical}/{} inputs bit-identical across 1, 4 and 8 threads",
            inputs.len()
        ),
    )
}

fn main() -> ExitCode {
    // a filter argument from `cargo test <name>` selects nothing here
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }

    let mut failed = 0;
    let mut report = |id: u32, name: &str, v: Verdict, secs: f64| {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name}: {} [{secs:.1}s]", v.detail);
        if !v.pass {
            failed += 1;
        }
    };
    let timed = |f: &dyn Fn() -> Verdict| {
        let t = Instant::now();
        let v = f();
        (v, t.elapsed().as_secs_f64())
    };

    let sweep = bound_sweep();
    report(1, "λ-error bound", criterion_1(&sweep), sweep.secs);
    let (v, t) = timed(&criterion_2);
    report(2, "unbiasedness", v, t);
    report(3, "mass conservation", criterion_3(&sweep), 0.0);
    let (v, t) = timed(&criterion_4);
    report(4, "normalization identity", v, t);
    let (v, t) = timed(&criterion_5);
    report(5, "decomposition fidelity", v, t);
    let (v, t) = timed(&|| criterion_6(&sweep));
    report(6, "reuse correctness", v, t);
    let (v, t) = timed(&criterion_7);
    report(7, "reuse work reduction", v, t);
    let (v, t) = timed(&criterion_8);
    report(8, "complexity scaling", v, t);
    let (v, t) = timed(&criterion_9);
    report(9, "δ0 semantics", v, t);
    let (v, t) = timed(&criterion_10);
    report(10, "trainer soundness", v, t);
    let (v, t) = timed(&criterion_11);
    report(11, "thread determinism", v, t);

    if failed == 0 {
        println!("acceptance: all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
