use rayon::prelude::*;
use serde::Serialize;

use super::learners::{hedge_rate, Family, Learner};
use super::losses::{player_losses, scale_loss, Evaluator};
use super::regret::{LossMatrix, StrategySequence};
use crate::counters::laplace;
use crate::error::{Error, Result};
use crate::games::{validate_types, Game};
use crate::rng::{derived_rng, stream_id};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NrParams {
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub lambda: f64,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "T")]
    pub rounds: usize,
    /// Laplace scale `b = λ/ε · √(8nkT ln(1/δ))`.
    pub b: f64,
    pub family: Family,
}

/// `b = λ/ε · √(8nkT ln(1/δ))`.
pub fn laplace_scale(lambda: f64, epsilon: f64, delta: f64, n: usize, k: usize, rounds: usize) -> f64 {
    lambda / epsilon * (8.0 * (n * k * rounds) as f64 * (1.0 / delta).ln()).sqrt()
}

#[allow(clippy::too_many_arguments)]
pub fn nr_params(
    lambda: f64,
    n: usize,
    k: usize,
    epsilon: f64,
    delta: f64,
    beta: f64,
    rounds: usize,
    family: Family,
) -> Result<NrParams> {
    if n == 0 || k == 0 || rounds == 0 {
        return Err(Error::Parameter("n, k and T must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter(format!("ε = {epsilon} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("δ = {delta} must lie in (0, 1)")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!("β = {beta} must lie in (0, 1)")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("λ = {lambda} must be nonnegative")));
    }
    Ok(NrParams {
        epsilon,
        delta,
        beta,
        lambda,
        n,
        k,
        rounds,
        b: laplace_scale(lambda, epsilon, delta, n, k, rounds),
        family,
    })
}

/// The accuracy condition `b ≤ 1/(6 ln(4nkT/β))` with both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    pub b: f64,
    pub limit: f64,
    pub ok: bool,
}

pub fn feasibility(params: &NrParams) -> Feasibility {
    let limit = 1.0 / (6.0 * (4.0 * (params.n * params.k * params.rounds) as f64 / params.beta).ln());
    Feasibility { b: params.b, limit, ok: params.b <= limit }
}

/// Largest `T` satisfying the accuracy condition, found by bisection (the
/// left side grows and the right side shrinks with `T`).
pub fn max_feasible_rounds(
    lambda: f64,
    n: usize,
    k: usize,
    epsilon: f64,
    delta: f64,
    beta: f64,
) -> Result<usize> {
    let ok = |t: usize| {
        nr_params(lambda, n, k, epsilon, delta, beta, t, Family::Swap).map(|p| feasibility(&p).ok)
    };
    if !ok(1)? {
        let f = feasibility(&nr_params(lambda, n, k, epsilon, delta, beta, 1, Family::Swap)?);
        return Err(Error::Infeasible(format!(
            "no T ≥ 1 satisfies b ≤ 1/(6 ln(4nkT/β)): at T = 1, b = {:.6} > {:.6}",
            f.b, f.limit
        )));
    }
    let mut lo = 1usize;
    let mut hi = 2usize;
    while ok(hi)? {
        lo = hi;
        hi = hi.checked_mul(2).ok_or_else(|| Error::Numeric("round count overflow".into()))?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Privacy parameters balancing the incentive bound for `U = 1`:
/// `δ = β = λ/n` and `ε = √(kλ) · (n ln(1/β) ln(1/δ))^{1/4}`.
pub fn balanced_budget(n: usize, k: usize, lambda: f64) -> (f64, f64, f64) {
    let beta = (lambda / n as f64).min(0.5);
    let delta = beta;
    let eps = (k as f64 * lambda).sqrt()
        * (n as f64 * (1.0 / beta).ln() * (1.0 / delta).ln()).powf(0.25);
    (eps, delta, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretBounds {
    pub fixed: f64,
    pub swap: f64,
}

/// High-probability regret bounds under `Lap(b)` noise:
/// `√(2 ln k/T) + b√(24 ln(4k/β)/T)` and `k√(2 ln k/T) + b√(24k ln(4k/β)/T)`,
/// tripled when the learners ran on rescaled losses. Requires
/// `b < 1/(6 ln(4kT/β))`.
pub fn regret_bounds(b: f64, k: usize, rounds: usize, beta: f64, scaled: bool) -> Result<RegretBounds> {
    if rounds == 0 || k == 0 {
        return Err(Error::Parameter("k and T must be positive".into()));
    }
    let (kf, t) = (k as f64, rounds as f64);
    let limit = 1.0 / (6.0 * (4.0 * kf * t / beta).ln());
    if b > 0.0 && !(b < limit) {
        return Err(Error::Infeasible(format!("noise scale b = {b} is not below 1/(6 ln(4kT/β)) = {limit}")));
    }
    let base = (2.0 * kf.ln() / t).sqrt();
    let noise = |mult: f64| if b > 0.0 { b * (24.0 * mult * (4.0 * kf / beta).ln() / t).sqrt() } else { 0.0 };
    let factor = if scaled { 3.0 } else { 1.0 };
    Ok(RegretBounds { fixed: factor * (base + noise(1.0)), swap: factor * (kf * base + noise(kf)) })
}

#[derive(Debug, Clone)]
pub struct NrConfig {
    pub evaluator: Evaluator,
    /// Run without noise (`b = 0`).
    pub noiseless: bool,
    /// Skip the accuracy-condition check.
    pub force: bool,
    /// Players held at a fixed distribution instead of learning.
    pub fixed: Vec<Option<Vec<f64>>>,
}

impl Default for NrConfig {
    fn default() -> Self {
        NrConfig { evaluator: Evaluator::Auto, noiseless: false, force: false, fixed: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NrOutcome {
    /// `sequences[i][t]` is `π_{i,t+1}`.
    pub sequences: Vec<StrategySequence>,
    /// Unscaled losses `l_{i,t}` computed against the true utilities.
    pub true_losses: Vec<LossMatrix>,
    /// Rescaled noisy losses fed to the learners.
    pub noisy_losses: Vec<LossMatrix>,
    /// Number of noisy loss entries outside `[0, 1]`.
    pub range_violations: usize,
    pub b: f64,
}

/// Replays a run, feeding every player except `player` the noisy losses a
/// previous run recorded.
#[derive(Debug, Clone, Copy)]
pub struct Replay<'a> {
    pub recorded: &'a NrOutcome,
    pub player: usize,
}

/// Runs the Laplace-perturbed no-regret dynamics for `params.rounds` rounds.
/// Noise for player `i` in round `t` comes from stream `(i, t)` of `seed`.
pub fn run_nr_laplace<G: Game + ?Sized>(
    game: &G,
    types: &[usize],
    params: &NrParams,
    config: &NrConfig,
    seed: u64,
) -> Result<NrOutcome> {
    run_inner(game, types, params, config, seed, None)
}

pub fn replay_nr_laplace<G: Game + ?Sized>(
    game: &G,
    types: &[usize],
    params: &NrParams,
    config: &NrConfig,
    seed: u64,
    replay: Replay<'_>,
) -> Result<NrOutcome> {
    if replay.recorded.noisy_losses.len() != types.len() {
        return Err(Error::validation("recorded run has a different player count"));
    }
    run_inner(game, types, params, config, seed, Some(replay))
}

fn run_inner<G: Game + ?Sized>(
    game: &G,
    types: &[usize],
    params: &NrParams,
    config: &NrConfig,
    seed: u64,
    replay: Option<Replay<'_>>,
) -> Result<NrOutcome> {
    validate_types(game, types)?;
    let n = types.len();
    if n != params.n {
        return Err(Error::validation(format!("parameters were set for {} players, got {n}", params.n)));
    }
    let ks: Vec<usize> = types.iter().enumerate().map(|(i, &t)| game.num_actions(i, t)).collect();
    if let Some(&kmax) = ks.iter().max() {
        if kmax > params.k {
            return Err(Error::validation(format!("a player has {kmax} actions but k = {}", params.k)));
        }
    }
    let b = if config.noiseless { 0.0 } else { params.b };
    if b > 0.0 && !config.force {
        let f = feasibility(params);
        if !f.ok {
            return Err(Error::Infeasible(format!(
                "b ≤ 1/(6 ln(4nkT/β)) violated: b = {:.6}, limit = {:.6} (λ = {}, n = {}, k = {}, T = {}, ε = {}, δ = {}, β = {})",
                f.b, f.limit, params.lambda, n, params.k, params.rounds, params.epsilon, params.delta, params.beta
            )));
        }
    }
    let mut learners: Vec<Learner> =
        ks.iter().map(|&k| Learner::new(params.family, k, hedge_rate(k, params.rounds))).collect();
    let fixed: Vec<Option<Vec<f64>>> = (0..n).map(|i| config.fixed.get(i).cloned().flatten()).collect();
    for (i, f) in fixed.iter().enumerate() {
        if let Some(d) = f {
            if d.len() != ks[i] {
                return Err(Error::validation(format!("fixed strategy of player {i} has the wrong length")));
            }
        }
    }
    let t_total = params.rounds;
    let mut sequences: Vec<StrategySequence> = vec![Vec::with_capacity(t_total); n];
    let mut true_losses: Vec<LossMatrix> = vec![Vec::with_capacity(t_total); n];
    let mut noisy_losses: Vec<LossMatrix> = vec![Vec::with_capacity(t_total); n];
    let mut violations = 0usize;

    for t in 0..t_total {
        let mixed: Vec<Vec<f64>> = (0..n)
            .map(|i| fixed[i].clone().unwrap_or_else(|| learners[i].distribution().to_vec()))
            .collect();
        let round_id = u32::try_from(t + 1).map_err(|_| Error::Parameter("too many rounds".into()))?;
        let results: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = derived_rng(seed, stream_id(i as u32, round_id));
                let noise: Vec<f64> =
                    (0..ks[i]).map(|_| if b > 0.0 { laplace(&mut rng, b) } else { 0.0 }).collect();
                let l = player_losses(game, types, &mixed, i, config.evaluator, &mut rng)?;
                let noisy = match replay {
                    Some(r) if r.player != i => r.recorded.noisy_losses[i][t].clone(),
                    _ => l.iter().zip(&noise).map(|(&x, &z)| scale_loss(x) + z).collect(),
                };
                Ok((l, noisy))
            })
            .collect();
        for (i, r) in results.into_iter().enumerate() {
            let (l, noisy) = r?;
            violations += noisy.iter().filter(|v| !(0.0..=1.0).contains(*v)).count();
            sequences[i].push(mixed[i].clone());
            true_losses[i].push(l);
            noisy_losses[i].push(noisy);
        }
        if t + 1 < t_total {
            learners
                .par_iter_mut()
                .enumerate()
                .filter(|(i, _)| fixed[*i].is_none())
                .try_for_each(|(i, learner)| learner.update(&noisy_losses[i][t]))?;
        }
    }
    Ok(NrOutcome { sequences, true_losses, noisy_losses, range_violations: violations, b })
}
