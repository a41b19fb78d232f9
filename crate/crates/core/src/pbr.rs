//! Private best-response dynamics for congestion games.
//!
//! Players move in round-robin order. Each facility's load is tracked by a
//! binary-mechanism counter, and a scheduled player switches action only when
//! the switch lowers her cost, computed from the noisy loads, by at least `α`.
//! A player who moves more than `p` times makes the run fail.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::counters::PartialSumTable;
use crate::error::{Error, Result};
use crate::games::{validate_types, ActionProfile, CongestionGame};

/// Tolerance on the improvement threshold, absorbing floating-point rounding
/// in sums of table entries.
const IMPROVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PbrParams {
    pub m: usize,
    pub n: usize,
    pub sigma: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub c_alpha: f64,
    pub alpha: f64,
    /// Maximum number of noisy best responses; the run lasts `n·T` rounds.
    #[serde(rename = "T")]
    pub t_rounds: usize,
    pub p: usize,
    /// Per-cell privacy parameter; infinite when noise is disabled.
    pub eps_prime: f64,
    /// Per-counter error bound `E`.
    pub error_bound: f64,
    /// Cost error bound `Δ = mσE`.
    #[serde(rename = "Delta")]
    pub delta_cost: f64,
    /// Lower bound on the noisy gap, `(α − 2Δ)/(mσ)`. Diagnostic only.
    pub gamma_diagnostic: f64,
}

impl PbrParams {
    pub fn stream_len(&self) -> usize {
        self.n * self.t_rounds
    }

    pub fn noise_enabled(&self) -> bool {
        self.eps_prime.is_finite()
    }

    pub fn is_feasible(&self) -> bool {
        !self.noise_enabled() || self.alpha > 4.0 * self.delta_cost
    }
}

fn check_inputs(m: usize, n: usize, sigma: f64, epsilon: f64, beta: f64) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::Parameter("m and n must be positive".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("sensitivity σ = {sigma} must be positive")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter(format!("ε = {epsilon} must be positive")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!("β = {beta} must lie in (0, 1)")));
    }
    Ok(())
}

/// `α = c_alpha · (m⁴ n σ² ln²(mn/β) / ε)^{1/3}`.
pub fn alpha_formula(m: usize, n: usize, sigma: f64, epsilon: f64, beta: f64, c_alpha: f64) -> f64 {
    let (m, n) = (m as f64, n as f64);
    c_alpha * (m.powi(4) * n * sigma * sigma * ((m * n) / beta).ln().powi(2) / epsilon).cbrt()
}

/// Schedule for a given threshold `α`, without the feasibility check.
///
/// `ε′ = ε / W` where `W = max(3·p·m·log₂(nT), 2·p·m·(⌊log₂ nT⌋ + 1))` is the
/// number of noisy cells one player's report can influence.
pub fn params_for_alpha(
    m: usize,
    n: usize,
    sigma: f64,
    epsilon: f64,
    beta: f64,
    alpha: f64,
) -> Result<PbrParams> {
    check_inputs(m, n, sigma, epsilon, beta)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("α = {alpha} must be positive")));
    }
    let (mf, nf) = (m as f64, n as f64);
    let t_rounds = (2.0 * mf * nf / alpha).ceil().max(1.0) as usize;
    let p = (4.0 * mf * mf * nf * sigma / (alpha * alpha)).ceil().max(1.0) as usize;
    let len = (n * t_rounds) as f64;
    let levels = crate::counters::table_levels(n * t_rounds) as f64;
    let width = (3.0 * p as f64 * mf * len.log2()).max(2.0 * p as f64 * mf * levels);
    let eps_prime = epsilon / width;
    let error_bound = (8.0 * len.ln().max(0.0) * (2.0 * mf / beta).ln()).sqrt() / eps_prime;
    let delta_cost = mf * sigma * error_bound;
    Ok(PbrParams {
        m,
        n,
        sigma,
        epsilon,
        beta,
        c_alpha: f64::NAN,
        alpha,
        t_rounds,
        p,
        eps_prime,
        error_bound,
        delta_cost,
        gamma_diagnostic: (alpha - 2.0 * delta_cost) / (mf * sigma),
    })
}

/// Schedule from the `α` formula, without the feasibility check.
pub fn compute_params(
    m: usize,
    n: usize,
    sigma: f64,
    epsilon: f64,
    beta: f64,
    c_alpha: f64,
) -> Result<PbrParams> {
    if !(c_alpha > 0.0 && c_alpha.is_finite()) {
        return Err(Error::Parameter(format!("c_alpha = {c_alpha} must be positive")));
    }
    check_inputs(m, n, sigma, epsilon, beta)?;
    let alpha = alpha_formula(m, n, sigma, epsilon, beta, c_alpha);
    let mut params = params_for_alpha(m, n, sigma, epsilon, beta, alpha)?;
    params.c_alpha = c_alpha;
    Ok(params)
}

/// Schedule from the `α` formula; errors unless `α > 4Δ`.
pub fn derive_params(
    m: usize,
    n: usize,
    sigma: f64,
    epsilon: f64,
    beta: f64,
    c_alpha: f64,
) -> Result<PbrParams> {
    let params = compute_params(m, n, sigma, epsilon, beta, c_alpha)?;
    ensure_feasible(&params)?;
    Ok(params)
}

pub fn ensure_feasible(params: &PbrParams) -> Result<()> {
    if params.is_feasible() {
        Ok(())
    } else {
        Err(Error::Infeasible(format!(
            "α > 4Δ violated: α = {:.6}, 4Δ = {:.6} (T = {}, p = {}, ε′ = {:.3e}, E = {:.6})",
            params.alpha,
            4.0 * params.delta_cost,
            params.t_rounds,
            params.p,
            params.eps_prime,
            params.error_bound
        )))
    }
}

/// Smallest `c_alpha ≥ start` (to relative precision 1e-3) whose schedule
/// satisfies `α > 4Δ`: doubling to bracket, then bisection.
pub fn feasible_c_alpha(
    m: usize,
    n: usize,
    sigma: f64,
    epsilon: f64,
    beta: f64,
    start: f64,
) -> Result<f64> {
    let feasible = |c: f64| compute_params(m, n, sigma, epsilon, beta, c).map(|p| p.is_feasible());
    if feasible(start)? {
        return Ok(start);
    }
    let mut lo = start;
    let mut hi = start * 2.0;
    let mut steps = 0;
    while !feasible(hi)? {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(Error::Infeasible("no feasible c_alpha found".into()));
        }
    }
    while (hi - lo) / hi > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Noise-free schedule: `ε′ = ∞`, `Δ = 0`, with `T` and `p` from `α`.
pub fn noiseless_params(m: usize, n: usize, sigma: f64, alpha: f64) -> Result<PbrParams> {
    let mut params = params_for_alpha(m, n, sigma.max(f64::MIN_POSITIVE), 1.0, 0.5, alpha)?;
    params.sigma = sigma;
    params.epsilon = f64::INFINITY;
    params.beta = 0.0;
    params.eps_prime = f64::INFINITY;
    params.error_bound = 0.0;
    params.delta_cost = 0.0;
    if sigma > 0.0 {
        params.gamma_diagnostic = alpha / (m as f64 * sigma);
    } else {
        // constant losses: the move cap carries no information
        params.gamma_diagnostic = f64::INFINITY;
        params.p = params.t_rounds + 1;
    }
    Ok(params)
}

/// Privacy parameters that balance the incentive bound:
/// `ε = (mnσ² ln²(mn/β))^{1/4}` with `β = √σ / n`.
pub fn balanced_budget(m: usize, n: usize, sigma: f64) -> (f64, f64) {
    let beta = sigma.sqrt() / n as f64;
    let (m, n) = (m as f64, n as f64);
    let eps = (m * n * sigma * sigma * ((m * n) / beta).ln().powi(2)).powf(0.25);
    (eps, beta.min(0.5))
}

/// Guaranteed approximation on success: `α + 2Δ`.
pub fn eta_bound(params: &PbrParams) -> f64 {
    params.alpha + 2.0 * params.delta_cost
}

/// Noisy cost of `candidate` for a player currently on `current`: loads on
/// newly joined facilities count the player herself.
pub fn noisy_cost(game: &CongestionGame, current: &[usize], candidate: &[usize], noisy_counts: &[f64]) -> f64 {
    candidate
        .iter()
        .map(|&e| {
            let extra = if current.binary_search(&e).is_ok() { 0.0 } else { 1.0 };
            game.loss_at(e, noisy_counts[e] + extra)
        })
        .sum()
}

/// Action with the lowest noisy cost among those improving the current
/// noisy cost by at least `α`; ties go to the lowest index. `None` when no
/// action qualifies.
pub fn noisy_best_response(
    game: &CongestionGame,
    ty: usize,
    current: usize,
    noisy_counts: &[f64],
    alpha: f64,
) -> Option<usize> {
    let actions = game.actions(ty);
    let cur = &actions[current];
    let stay = noisy_cost(game, cur, cur, noisy_counts);
    let mut best: Option<(usize, f64)> = None;
    for (idx, a) in actions.iter().enumerate() {
        if idx == current {
            continue;
        }
        let c = noisy_cost(game, cur, a, noisy_counts);
        if stay - c >= alpha - IMPROVE_TOL && best.is_none_or(|(_, bc)| c < bc) {
            best = Some((idx, c));
        }
    }
    best.map(|(idx, _)| idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    /// Each player starts on her type's first action.
    #[default]
    First,
    /// Uniformly random initial actions drawn from the run's generator.
    Random,
}

#[derive(Debug, Clone, Default)]
pub struct PbrConfig {
    pub init: InitPolicy,
    pub record_trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub mover: usize,
    pub moved: bool,
    pub from: usize,
    pub to: usize,
    pub noisy_counts: Vec<f64>,
}

/// A nonzero stream bit: `(round, player, facility)`.
pub type StreamEvent = (usize, usize, usize);

#[derive(Debug, Clone, Serialize)]
pub struct PbrOutcome {
    /// Final profile, or `None` when the run failed.
    pub result: Option<ActionProfile>,
    /// Profile at the moment the run stopped.
    pub last_profile: ActionProfile,
    pub initial_profile: ActionProfile,
    pub rounds_used: usize,
    /// Number of action changes per player, excluding the initial placement.
    pub moves: Vec<usize>,
    pub failed_player: Option<usize>,
    /// Largest `|ŷ − y|` observed over all facilities and rounds.
    pub max_count_error: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<RoundRecord>,
    #[serde(skip)]
    pub events: Vec<StreamEvent>,
}

impl PbrOutcome {
    pub fn is_fail(&self) -> bool {
        self.result.is_none()
    }

    pub fn total_moves(&self) -> usize {
        self.moves.iter().sum()
    }

    /// Number of distinct noisy cells whose value depends on `player`'s
    /// stream bits.
    pub fn influence_cells(&self, player: usize, stream_len: usize) -> usize {
        let probe = PartialSumTable::new(stream_len, f64::INFINITY).expect("positive ε′");
        let mut cells = BTreeSet::new();
        for &(round, who, e) in &self.events {
            if who == player {
                for cell in probe.cells_covering(round) {
                    cells.insert((e, cell));
                }
            }
        }
        cells.len()
    }
}

/// Runs the dynamics for `n·T` rounds (or until a player exceeds `p` moves).
/// Without noise, the run also stops after a full pass in which nobody
/// moved, since the state can no longer change.
pub fn run_pbr<R: Rng + ?Sized>(
    game: &CongestionGame,
    types: &[usize],
    params: &PbrParams,
    config: &PbrConfig,
    rng: &mut R,
) -> Result<PbrOutcome> {
    validate_types(game, types)?;
    let n = types.len();
    if n == 0 {
        return Err(Error::validation("at least one player is required"));
    }
    if n != params.n {
        return Err(Error::validation(format!(
            "parameters were derived for {} players, got {n}",
            params.n
        )));
    }
    let m = game.m();
    let len = params.stream_len();
    let mut tables: Vec<PartialSumTable> =
        (0..m).map(|_| PartialSumTable::new(len, params.eps_prime)).collect::<Result<_>>()?;
    let mut profile: ActionProfile = match config.init {
        InitPolicy::First => vec![0; n],
        InitPolicy::Random => types.iter().map(|&t| rng.gen_range(0..game.actions(t).len())).collect(),
    };
    let initial_profile = profile.clone();
    let mut events = Vec::new();
    let mut max_err: f64 = 0.0;
    let mut exact = vec![0i64; m];

    // rounds 1..=n: each player's initial placement enters the streams
    for (i, (&ty, &a)) in types.iter().zip(&profile).enumerate() {
        let action = game.action(ty, a);
        let round = i + 1;
        for (e, table) in tables.iter_mut().enumerate() {
            let bit = i8::from(action.binary_search(&e).is_ok());
            table.push(bit, rng)?;
            if bit != 0 {
                events.push((round, i, e));
                exact[e] += 1;
            }
            max_err = max_err.max((table.current() - exact[e] as f64).abs());
        }
    }

    let mut count = vec![1usize; n];
    let mut trace = Vec::new();
    let mut idle_streak = 0usize;
    let mut failed_player = None;
    let mut rounds_used = n;
    for round in n + 1..=len {
        let i = (round - 1) % n;
        let ty = types[i];
        let noisy: Vec<f64> = tables.iter().map(|t| t.current()).collect();
        let cur = profile[i];
        let br = noisy_best_response(game, ty, cur, &noisy, params.alpha);
        if config.record_trace {
            trace.push(RoundRecord {
                round,
                mover: i,
                moved: br.is_some(),
                from: cur,
                to: br.unwrap_or(cur),
                noisy_counts: noisy,
            });
        }
        rounds_used = round;
        let (old, new) = match br {
            Some(next) => {
                count[i] += 1;
                profile[i] = next;
                idle_streak = 0;
                (game.action(ty, cur), game.action(ty, next))
            }
            None => {
                idle_streak += 1;
                (game.action(ty, cur), game.action(ty, cur))
            }
        };
        if count[i] > params.p {
            failed_player = Some(i);
            break;
        }
        for (e, table) in tables.iter_mut().enumerate() {
            let was = old.binary_search(&e).is_ok();
            let is = new.binary_search(&e).is_ok();
            let bit: i8 = match (was, is) {
                (true, false) => -1,
                (false, true) => 1,
                _ => 0,
            };
            table.push(bit, rng)?;
            if bit != 0 {
                events.push((round, i, e));
                exact[e] += i64::from(bit);
            }
            max_err = max_err.max((table.current() - exact[e] as f64).abs());
        }
        if !params.noise_enabled() && idle_streak >= n {
            break;
        }
    }

    let moves = count.iter().map(|c| c - 1).collect();
    Ok(PbrOutcome {
        result: if failed_player.is_none() { Some(profile.clone()) } else { None },
        last_profile: profile,
        initial_profile,
        rounds_used,
        moves,
        failed_player,
        max_count_error: max_err,
        trace,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::parallel_links;
    use crate::rng::derived_rng;

    #[test]
    fn schedule_for_forced_alpha() {
        let p = params_for_alpha(2, 100, 0.01, 0.5, 0.1, 1.0).unwrap();
        assert_eq!(p.t_rounds, 400);
        assert_eq!(p.p, 16);
    }

    #[test]
    fn alpha_formula_matches_direct_arithmetic() {
        let oracle = (16.0 * 100.0 * 1e-4 * 2000f64.ln().powi(2) / 0.5).cbrt();
        let p = compute_params(2, 100, 0.01, 0.5, 0.1, 1.0).unwrap();
        assert!((p.alpha - oracle).abs() < 1e-12);
        assert!((p.alpha - 2.64).abs() < 0.01);
    }

    #[test]
    fn tight_budget_is_refused() {
        let r = derive_params(2, 10, 0.1, 0.01, 0.1, 1.0);
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn feasible_c_alpha_is_minimal() {
        let c = feasible_c_alpha(2, 50, 0.02, 1.0, 0.1, 1.0).unwrap();
        assert!(compute_params(2, 50, 0.02, 1.0, 0.1, c).unwrap().is_feasible());
        assert!(!compute_params(2, 50, 0.02, 1.0, 0.1, c * 0.99).unwrap().is_feasible());
    }

    #[test]
    fn noisy_best_response_examples() {
        let g = parallel_links(10, 2).unwrap();
        assert_eq!(noisy_best_response(&g, 0, 0, &[6.0, 2.0], 0.2), Some(1));
        assert_eq!(noisy_best_response(&g, 0, 0, &[6.0, 2.0], 0.4), None);
        let single = parallel_links(10, 1).unwrap();
        assert_eq!(noisy_best_response(&single, 0, 0, &[9.0], 0.0), None);
    }

    #[test]
    fn eta_bound_examples() {
        let mut p = params_for_alpha(2, 100, 0.01, 0.5, 0.1, 1.0).unwrap();
        p.delta_cost = 0.0;
        assert_eq!(eta_bound(&p), 1.0);
        p.delta_cost = 0.1;
        assert!((eta_bound(&p) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn doubling_epsilon_shrinks_the_error_terms() {
        let a = params_for_alpha(2, 100, 0.01, 1.0, 0.1, 1.0).unwrap();
        let b = params_for_alpha(2, 100, 0.01, 2.0, 0.1, 1.0).unwrap();
        assert!((b.eps_prime - 2.0 * a.eps_prime).abs() < 1e-15);
        assert!((b.delta_cost - a.delta_cost / 2.0).abs() < 1e-9 * a.delta_cost);
        assert!(eta_bound(&b) < eta_bound(&a));
    }

    #[test]
    fn noiseless_three_player_links_reach_nash() {
        let g = parallel_links(3, 2).unwrap();
        let params = noiseless_params(2, 3, g.sensitivity(), 0.1).unwrap();
        let out = run_pbr(&g, &[0, 0, 0], &params, &PbrConfig::default(), &mut derived_rng(1, 0)).unwrap();
        let profile = out.result.unwrap();
        let y = g.facility_counts(&[0, 0, 0], &profile).unwrap();
        let mut sorted = y.0.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 2]);
        assert_eq!(out.max_count_error, 0.0);
    }
}
