//! Desk-scale privacy evidence.
//!
//! None of this proves privacy. The checks here are distributional tests of
//! the noise primitive, provenance accounting of which noisy cells a
//! player's reports can reach, an exact replay test of the no-regret loss
//! sensitivity, and a heuristic empirical-ε witness for tiny mechanisms.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::counters::{laplace_cdf, table_levels, PartialSumTable};
use crate::error::{Error, Result};
use crate::games::Game;
use crate::noregret::{laplace_scale, replay_nr_laplace, run_nr_laplace, NrConfig, NrParams, Replay};
use crate::pbr::PbrOutcome;
use crate::rng::{derived_rng, stream_id, DetRng};

/// Minimum sample size accepted by [`ks_test_laplace`].
pub const KS_MIN_SAMPLES: usize = 10_000;

/// Asymptotic Kolmogorov–Smirnov critical constant at level 0.01.
const KS_CRIT_001: f64 = 1.6276;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// One-sample KS test of `samples` against `Lap(b)` at level 0.01.
pub fn ks_test_laplace(samples: &[f64], b: f64) -> Result<KsResult> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::validation(format!(
            "the KS test needs at least {KS_MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(b > 0.0) {
        return Err(Error::Parameter(format!("Laplace scale b = {b} must be positive")));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = laplace_cdf(x, b);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let critical = KS_CRIT_001 / n.sqrt();
    Ok(KsResult { statistic: d, critical, pass: d <= critical })
}

/// A noisy cell `(facility, level, column)` of the per-facility counters.
pub type CellId = (usize, usize, usize);

/// For every player, the noisy cells whose pre-noise value sums at least one
/// of that player's stream entries. Built from the stream events of a run,
/// so it over-approximates true dependence: an entry counts even when other
/// entries in the same cell cancel it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceTrace {
    pub stream_len: usize,
    pub cells: BTreeMap<usize, BTreeSet<CellId>>,
}

impl InfluenceTrace {
    pub fn from_outcome(outcome: &PbrOutcome, stream_len: usize) -> Result<Self> {
        let probe = PartialSumTable::new(stream_len, f64::INFINITY)?;
        let mut cells: BTreeMap<usize, BTreeSet<CellId>> = BTreeMap::new();
        for &(round, player, e) in &outcome.events {
            let set = cells.entry(player).or_default();
            for (j, c) in probe.cells_covering(round) {
                set.insert((e, j, c));
            }
        }
        Ok(InfluenceTrace { stream_len, cells })
    }
}

/// Number of noisy cells that can depend on `player`'s report.
pub fn influence_count(trace: &InfluenceTrace, player: usize) -> usize {
    trace.cells.get(&player).map_or(0, BTreeSet::len)
}

/// `2·p·m·(⌊log₂ len⌋ + 1)`: at most `p` action changes, each flipping at
/// most `2m` stream entries, each inside one cell per level.
pub fn influence_bound(p: usize, m: usize, stream_len: usize) -> usize {
    2 * p * m * table_levels(stream_len)
}

/// An event over a vector-valued output.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    /// `x[coord] > threshold`, or `≤` when `upper` is false.
    HalfLine { coord: usize, threshold: f64, upper: bool },
    /// `lo ≤ x ≤ hi` coordinatewise on the listed coordinates.
    Box { coords: Vec<usize>, lo: Vec<f64>, hi: Vec<f64> },
}

impl Event {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Event::HalfLine { coord, threshold, upper } => (x[*coord] > *threshold) == *upper,
            Event::Box { coords, lo, hi } => {
                coords.iter().zip(lo.iter().zip(hi)).all(|(&c, (&l, &h))| x[c] >= l && x[c] <= h)
            }
        }
    }
}

/// Both halflines at each of `per_coord` pooled empirical quantiles of every
/// coordinate.
pub fn halfline_events(outputs: &[&[Vec<f64>]], per_coord: usize) -> Vec<Event> {
    let Some(dim) = outputs.iter().flat_map(|o| o.first()).map(Vec::len).next() else {
        return Vec::new();
    };
    let mut events = Vec::new();
    for coord in 0..dim {
        let mut vals: Vec<f64> = outputs.iter().flat_map(|o| o.iter().map(|x| x[coord])).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        if vals.is_empty() {
            continue;
        }
        let mut seen = BTreeSet::new();
        for q in 1..=per_coord {
            let idx = (q * vals.len() / (per_coord + 1)).min(vals.len() - 1);
            if seen.insert(idx) {
                for upper in [true, false] {
                    events.push(Event::HalfLine { coord, threshold: vals[idx], upper });
                }
            }
        }
    }
    events
}

/// Heuristic lower-bound witness for ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonEstimate {
    /// Largest margin-adjusted log ratio, never negative.
    pub epsilon_hat: f64,
    /// Largest unadjusted log ratio.
    pub raw_max: f64,
    pub best_event: Option<Event>,
    pub events_used: usize,
    pub events_skipped: usize,
    /// Always true: this is evidence, not a privacy proof.
    pub heuristic: bool,
}

/// Events hit fewer times than this on either side are skipped.
pub const MIN_EVENT_HITS: usize = 50;

/// Margin, in standard errors of the log ratio, subtracted from each event's
/// estimate so that the maximum over many events does not overshoot.
pub const EPSILON_MARGIN_Z: f64 = 3.0;

/// `max_B |ln(P̂₁(B)/P̂₂(B))| − z·se` over the events, using add-one
/// smoothing `P̂ = (hits + 1)/(N + 2)`.
pub fn estimate_epsilon(a: &[Vec<f64>], b: &[Vec<f64>], events: &[Event]) -> EpsilonEstimate {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut best: (f64, Option<Event>) = (0.0, None);
    let mut raw_max: f64 = 0.0;
    let (mut used, mut skipped) = (0, 0);
    for ev in events {
        let ha = a.iter().filter(|x| ev.contains(x)).count();
        let hb = b.iter().filter(|x| ev.contains(x)).count();
        if ha.min(hb) < MIN_EVENT_HITS {
            skipped += 1;
            continue;
        }
        used += 1;
        let pa = (ha as f64 + 1.0) / (na + 2.0);
        let pb = (hb as f64 + 1.0) / (nb + 2.0);
        let ratio = (pa / pb).ln().abs();
        let se = ((1.0 - pa) / (na * pa) + (1.0 - pb) / (nb * pb)).sqrt();
        raw_max = raw_max.max(ratio);
        let adjusted = ratio - EPSILON_MARGIN_Z * se;
        if adjusted > best.0 {
            best = (adjusted, Some(ev.clone()));
        }
    }
    EpsilonEstimate {
        epsilon_hat: best.0,
        raw_max,
        best_event: best.1,
        events_used: used,
        events_skipped: skipped,
        heuristic: true,
    }
}

/// Draws `trials` outputs of `mechanism` on both neighboring inputs
/// (`false`, `true`) and estimates ε over `events`; when `events` is empty
/// the default halfline family with 20 quantiles per coordinate is used.
/// Trial `t` of input `x` uses stream `(x, t)` of `seed`.
pub fn empirical_epsilon<F>(mechanism: F, events: &[Event], trials: usize, seed: u64) -> Result<EpsilonEstimate>
where
    F: Fn(bool, &mut DetRng) -> Vec<f64> + Sync,
{
    if trials == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    let sample = |which: bool| -> Vec<Vec<f64>> {
        (0..trials)
            .into_par_iter()
            .map(|t| mechanism(which, &mut derived_rng(seed, stream_id(u32::from(which), t as u32))))
            .collect()
    };
    let a = sample(false);
    let b = sample(true);
    let defaults;
    let events = if events.is_empty() {
        defaults = halfline_events(&[&a, &b], 20);
        &defaults
    } else {
        events
    };
    Ok(estimate_epsilon(&a, &b, events))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub player: usize,
    pub new_type: usize,
    /// Largest change of another player's loss entry.
    pub max_change: f64,
    /// Allowed change `λ/U`.
    pub limit: f64,
    pub entries_checked: usize,
    pub violations: usize,
}

/// Reruns NR-LAPLACE with `player`'s type replaced by `new_type`, feeding
/// every other player the noisy losses recorded in the original run, and
/// compares the other players' pre-noise losses entry by entry.
pub fn nr_sensitivity_replay<G: Game + ?Sized>(
    game: &G,
    types: &[usize],
    player: usize,
    new_type: usize,
    params: &NrParams,
    config: &NrConfig,
    seed: u64,
) -> Result<SensitivityReport> {
    if player >= types.len() {
        return Err(Error::validation(format!("no player {player}")));
    }
    let base = run_nr_laplace(game, types, params, config, seed)?;
    let mut swapped = types.to_vec();
    swapped[player] = new_type;
    let replay = replay_nr_laplace(game, &swapped, params, config, seed, Replay { recorded: &base, player })?;
    let limit = game.largeness() / game.utility_bound();
    let (mut max_change, mut checked, mut violations) = (0.0f64, 0, 0);
    for i in (0..types.len()).filter(|&i| i != player) {
        for (l0, l1) in base.true_losses[i].iter().zip(&replay.true_losses[i]) {
            for (x, y) in l0.iter().zip(l1) {
                let d = (x - y).abs();
                max_change = max_change.max(d);
                checked += 1;
                if d > limit + 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    Ok(SensitivityReport { player, new_type, max_change, limit, entries_checked: checked, violations })
}

/// Per-query privacy level under advanced composition: `count` queries at
/// `ε₀ = ε/√(8·count·ln(1/δ))` compose to `(ε, δ)`.
pub fn composition_epsilon(epsilon: f64, delta: f64, count: usize) -> f64 {
    epsilon / (8.0 * count as f64 * (1.0 / delta).ln()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompositionCheck {
    pub b_mechanism: f64,
    pub b_schedule: f64,
    pub relative_error: f64,
}

/// Compares the Laplace scale the mechanism uses with `λ/ε₀` for `nkT`
/// queries of sensitivity `λ`.
pub fn composition_check(params: &NrParams) -> CompositionCheck {
    let b_mechanism =
        laplace_scale(params.lambda, params.epsilon, params.delta, params.n, params.k, params.rounds);
    let count = params.n * params.k * params.rounds;
    let b_schedule = params.lambda / composition_epsilon(params.epsilon, params.delta, count);
    let relative_error = if b_schedule == 0.0 { b_mechanism.abs() } else { (b_mechanism - b_schedule).abs() / b_schedule };
    CompositionCheck { b_mechanism, b_schedule, relative_error }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counters::laplace_sample;
    use crate::games::{parallel_links, random_large_game};
    use crate::noregret::{nr_params, Family};
    use crate::pbr::{params_for_alpha, run_pbr, PbrConfig};
    use rand::Rng;

    /// Box–Muller draw.
    fn normal<R: Rng>(rng: &mut R, sd: f64) -> f64 {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    #[test]
    fn ks_accepts_laplace_and_rejects_impostors() {
        let mut rng = derived_rng(1, 0);
        let lap: Vec<f64> = (0..20_000).map(|_| laplace_sample(&mut rng, 1.0).unwrap()).collect();
        assert!(ks_test_laplace(&lap, 1.0).unwrap().pass);
        assert!(!ks_test_laplace(&lap, 2.0).unwrap().pass);
        let gauss: Vec<f64> = (0..20_000).map(|_| normal(&mut rng, 2f64.sqrt())).collect();
        assert!(!ks_test_laplace(&gauss, 1.0).unwrap().pass);
        assert!(ks_test_laplace(&lap[..100], 1.0).is_err());
    }

    #[test]
    fn influence_bound_arithmetic() {
        assert_eq!(influence_bound(16, 2, 100 * 400), 1024);
    }

    #[test]
    fn idle_player_touches_only_initial_cells() {
        let g = parallel_links(4, 2).unwrap();
        let params = params_for_alpha(2, 4, 0.25, 1.0, 0.1, 50.0).unwrap();
        let out = run_pbr(&g, &[0; 4], &params, &PbrConfig::default(), &mut derived_rng(2, 0)).unwrap();
        let trace = InfluenceTrace::from_outcome(&out, params.stream_len()).unwrap();
        let levels = table_levels(params.stream_len());
        for i in 0..4 {
            assert_eq!(out.moves[i], 0);
            assert!(influence_count(&trace, i) <= 2 * levels);
            assert_eq!(influence_count(&trace, i), out.influence_cells(i, params.stream_len()));
        }
    }

    #[test]
    fn laplace_count_epsilon_is_recovered() {
        let eps = 1.0;
        let est = empirical_epsilon(
            |shift, rng| vec![f64::from(u8::from(shift)) + laplace_sample(rng, 1.0 / eps).unwrap()],
            &[],
            100_000,
            3,
        )
        .unwrap();
        assert!(est.epsilon_hat >= 0.8 * eps && est.epsilon_hat <= eps, "{est:?}");
    }

    #[test]
    fn identical_inputs_give_small_epsilon() {
        let est = empirical_epsilon(|_, rng| vec![rng.gen::<f64>()], &[], 20_000, 4).unwrap();
        assert!(est.epsilon_hat < 0.05, "{est:?}");
    }

    #[test]
    fn replay_respects_largeness() {
        let mut rng = derived_rng(5, 0);
        let inst = random_large_game(4, 2, 0.25, 2, &mut rng).unwrap();
        let params = nr_params(inst.game.largeness(), 4, 2, 1.0, 1e-3, 0.1, 30, Family::Swap).unwrap();
        let config = NrConfig { force: true, ..NrConfig::default() };
        let new_type = 1 - inst.types[1];
        let r = nr_sensitivity_replay(&inst.game, &inst.types, 1, new_type, &params, &config, 9).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.max_change > 0.0);
    }

    #[test]
    fn composition_schedule_matches() {
        let params = nr_params(0.125, 8, 2, 1.0, 1e-3, 0.1, 100, Family::Swap).unwrap();
        assert!(composition_check(&params).relative_error < 1e-12);
    }
}
