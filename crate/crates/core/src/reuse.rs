//! Feature-Reuse: approximate most columns as a combination of a few
//! high-precision base columns plus a residual pushed at relaxed precision.
//!
//! ```text
//! π*(x) = Σ θ_i · π̂(b_i, β*) + π̂(x', β')
//! β* = γ β_s              β' = (1 - γ Σθ_i) β_s
//! ```
//!
//! Bases are the columns with the highest *minimum L1 distance counter*.
//! The counter is realized as a nearest-neighbor vote: every column votes
//! for the other column closest to it in L1, so a high count marks a column
//! that many others resemble. This reading of the counter is an
//! interpretation; the rest of the scheme does not depend on it.

use serde::{Deserialize, Serialize};

use crate::push::PushCoefficient;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReuseConfig {
    /// Number of base parts `n_B`; zero disables reuse.
    pub num_bases: usize,
    /// Precision factor `γ` in `(0, 1]`.
    pub gamma: f64,
    /// Decomposition continues while the last coefficient is at least this.
    pub delta0: f64,
    /// Estimate pairwise distances on every `k`-th row only. Off by default.
    pub counter_row_stride: Option<usize>,
}

impl ReuseConfig {
    /// `n_B = ceil(0.02 F)`, `γ = 0.2`, `δ_0 = 1/16`.
    pub fn for_features(num_features: usize) -> Self {
        ReuseConfig {
            num_bases: (0.02 * num_features as f64).ceil() as usize,
            gamma: 0.2,
            delta0: 1.0 / 16.0,
            counter_row_stride: None,
        }
    }

    pub fn disabled() -> Self {
        ReuseConfig {
            num_bases: 0,
            ..Self::for_features(0)
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(crate::Error::InvalidParameter(format!(
                "gamma = {} not in (0, 1]",
                self.gamma
            )));
        }
        if !(self.delta0 > 0.0 && self.delta0 <= 1.0) {
            return Err(crate::Error::InvalidParameter(format!(
                "delta0 = {} not in (0, 1]",
                self.delta0
            )));
        }
        if self.counter_row_stride == Some(0) {
            return Err(crate::Error::InvalidParameter("row stride must be positive".into()));
        }
        Ok(())
    }
}

fn l1_distance(a: &[f64], b: &[f64], stride: usize) -> f64 {
    if stride <= 1 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    } else {
        a.iter()
            .step_by(stride)
            .zip(b.iter().step_by(stride))
            .map(|(x, y)| (x - y).abs())
            .sum()
    }
}

/// Nearest-neighbor vote counts. Entry `f` counts the columns whose
/// L1-nearest other column is `f`; ties go to the lowest index. All-zero
/// columns neither vote nor receive votes.
pub fn min_l1_distance_counter(columns: &[&[f64]]) -> Vec<u32> {
    min_l1_distance_counter_strided(columns, 1)
}

pub fn min_l1_distance_counter_strided(columns: &[&[f64]], row_stride: usize) -> Vec<u32> {
    let k = columns.len();
    let live: Vec<bool> = columns.iter().map(|c| c.iter().any(|&x| x != 0.0)).collect();
    let mut dist = vec![f64::INFINITY; k * k];
    for i in 0..k {
        if !live[i] {
            continue;
        }
        for j in (i + 1)..k {
            if live[j] {
                let d = l1_distance(columns[i], columns[j], row_stride);
                dist[i * k + j] = d;
                dist[j * k + i] = d;
            }
        }
    }
    let mut counter = vec![0u32; k];
    for g in 0..k {
        if !live[g] {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for f in 0..k {
            if f == g || !live[f] {
                continue;
            }
            let d = dist[g * k + f];
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, f));
            }
        }
        if let Some((_, f)) = best {
            counter[f] += 1;
        }
    }
    counter
}

/// Indices of the `num_bases` largest counters (ties to the lower index),
/// sorted ascending.
pub fn select_bases(counter: &[u32], num_bases: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counter.len()).collect();
    order.sort_by(|&a, &b| counter[b].cmp(&counter[a]).then(a.cmp(&b)));
    order.truncate(num_bases.min(counter.len()));
    order.sort_unstable();
    order
}

/// `x = Σ θ_i b_i + residual`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// `(index into the base slice, θ)` in the order they were taken.
    pub theta: Vec<(usize, f64)>,
    pub residual: Vec<f64>,
    pub theta_sum: f64,
    /// Passes of the greedy loop, including a final pass that found nothing.
    pub iterations: usize,
}

impl Decomposition {
    pub fn residual_l1(&self) -> f64 {
        self.residual.iter().sum()
    }
}

/// Largest `θ` with `x - θ b >= 0`, kept strictly below one.
fn max_coefficient(x: &[f64], b: &[f64]) -> f64 {
    let mut theta = f64::INFINITY;
    let mut support = false;
    for (&xv, &bv) in x.iter().zip(b) {
        if bv > 0.0 {
            support = true;
            theta = theta.min(xv / bv);
            if theta == 0.0 {
                break;
            }
        }
    }
    if !support {
        return 0.0;
    }
    if theta >= 1.0 {
        1.0f64.next_down()
    } else {
        theta
    }
}

/// Greedy decomposition of `x` over `bases`.
///
/// Each pass evaluates every unused base, takes the one admitting the
/// largest coefficient and subtracts it. The first pass always runs; later
/// passes run while the last coefficient was at least `delta0` and unused
/// bases remain.
pub fn decompose(x: &[f64], bases: &[&[f64]], delta0: f64) -> Decomposition {
    let mut residual = x.to_vec();
    let mut used = vec![false; bases.len()];
    let mut theta = Vec::new();
    let mut theta_sum = 0.0;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut best: Option<(f64, usize)> = None;
        for (i, b) in bases.iter().enumerate() {
            if used[i] {
                continue;
            }
            let t = max_coefficient(&residual, b);
            if best.is_none_or(|(bt, _)| t > bt) {
                best = Some((t, i));
            }
        }
        let Some((t, i)) = best else { break };
        if t > 0.0 {
            for (r, &bv) in residual.iter_mut().zip(bases[i]) {
                if bv > 0.0 {
                    *r = (*r - t * bv).max(0.0);
                }
            }
            used[i] = true;
            theta.push((i, t));
            theta_sum += t;
        }
        if t < delta0 || used.iter().all(|&u| u) {
            break;
        }
    }
    Decomposition {
        theta,
        residual,
        theta_sum,
        iterations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReuseCoefficients {
    /// Coefficient for base pushes, `γ β_s`.
    pub beta_star: PushCoefficient,
    /// Coefficient for the residual push, floored at `beta_star`.
    pub beta_prime: PushCoefficient,
    pub floored: bool,
}

/// Base and residual push coefficients for a column with `theta_sum`
/// already covered by bases.
///
/// Panics if the pair violates the precision condition
/// `β' <= (λ²/ln(2/φ) - 2 θ_sum β*) / (2λ/3 + 2)`, which the closed form
/// satisfies for every valid `γ`.
pub fn reuse_coefficients(lambda: f64, phi: f64, gamma: f64, theta_sum: f64) -> ReuseCoefficients {
    let beta_s = crate::push::standard_push_coefficient(lambda, phi).0;
    let beta_star = gamma * beta_s;
    let raw = (1.0 - gamma * theta_sum) * beta_s;
    let bound = (lambda * lambda / (2.0 / phi).ln() - 2.0 * theta_sum * beta_star) / (2.0 * lambda / 3.0 + 2.0);
    assert!(
        raw <= bound * (1.0 + 1e-12) + f64::MIN_POSITIVE,
        "residual push coefficient {raw} exceeds precision bound {bound}"
    );
    let floored = raw < beta_star;
    let beta_prime = if floored { beta_star } else { raw };
    ReuseCoefficients {
        beta_star: PushCoefficient(beta_star),
        beta_prime: PushCoefficient(beta_prime),
        floored,
    }
}
