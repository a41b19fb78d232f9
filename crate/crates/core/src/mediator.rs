//! Mediated-game harness.
//!
//! A mediator collects reported types (or an opt-out) and hands every player
//! a suggested action. This module estimates, by simulation over the
//! mechanism's randomness, how much one player can gain by misreporting,
//! opting out, or remapping the suggestion she receives, and compares that
//! with the incentive bound `η′ = η + U(ε + δ + β)`.
//!
//! For every trial the harness records a matrix `M[s][j]`: the deviator's
//! payoff from playing `j` weighted by the probability that she was
//! suggested `s`. The best remap sends each suggestion to the column with
//! the largest mean, so it is the per-suggestion conditional best response.
//! Trials of every report share per-trial seeds.
//!
//! Payoffs follow [`Game::payoff`] for pure-output mechanisms (so congestion
//! games are compared by cost) and utilities for the no-regret mechanism.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::spec::GameSpec;
use crate::games::{expected_utilities, validate_types, AnyGame, Game, UtilityModel, BEACH, MOUNTAIN};
use crate::noregret::{
    max_feasible_rounds, nr_params, regret_bounds, run_nr_laplace, CorrelatedDistribution, Evaluator, Family,
    NrConfig, NrParams,
};
use crate::pbr::{
    derive_params, eta_bound, feasible_c_alpha, compute_params, noiseless_params, run_pbr, InitPolicy,
    PbrConfig, PbrParams,
};
use crate::rng::{child_seed, derived_rng, stream_id};

/// `η′ = η + U(ε + δ + β)`.
pub fn eta_prime_bound(eta: f64, u: f64, epsilon: f64, delta: f64, beta: f64) -> f64 {
    eta + u * (epsilon + delta + beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediatorKind {
    /// Types cannot be verified: any type may be reported.
    Weak,
    /// Opted-in players report truthfully; the only choice is opting out.
    Strong,
}

fn default_family() -> Family {
    Family::Swap
}

fn default_evaluator() -> Evaluator {
    Evaluator::Auto
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Mechanism {
    /// Private best-response dynamics. `c_alpha = None` picks the smallest
    /// feasible constant.
    Pbr {
        epsilon: f64,
        beta: f64,
        #[serde(default)]
        c_alpha: Option<f64>,
        #[serde(default)]
        noiseless: bool,
        /// Threshold used when `noiseless` is set.
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        init: InitPolicy,
    },
    /// Laplace-perturbed no-regret dynamics. `rounds = None` takes the
    /// largest round count meeting the accuracy condition.
    Nrlaplace {
        epsilon: f64,
        delta: f64,
        beta: f64,
        #[serde(default)]
        rounds: Option<usize>,
        #[serde(default = "default_family")]
        family: Family,
        #[serde(default)]
        noiseless: bool,
        #[serde(default)]
        force: bool,
        #[serde(default = "default_evaluator")]
        evaluator: Evaluator,
    },
    /// The hand-built correlated-equilibrium mediator of the Beach/Mountain
    /// game: the first players get independent uniform suggestions, and the
    /// last player is told Beach if she reports the social type and the
    /// opposite of the majority otherwise.
    BeachMountain,
}

#[derive(Debug, Clone)]
pub struct MediatedGameConfig {
    pub kind: MediatorKind,
    pub mechanism: Mechanism,
    pub game: AnyGame,
    pub types: Vec<usize>,
}

/// JSON form of a mediated game: the game spec's `players` list gives the
/// true types.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MediatorSpec {
    pub kind: MediatorKind,
    pub mechanism: Mechanism,
    pub game: GameSpec,
}

impl MediatorSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<MediatedGameConfig> {
        let inst = self.game.build()?;
        MediatedGameConfig::new(self.kind, self.mechanism.clone(), inst.game, inst.types)
    }
}

impl MediatedGameConfig {
    pub fn new(kind: MediatorKind, mechanism: Mechanism, game: AnyGame, types: Vec<usize>) -> Result<Self> {
        validate_types(&game, &types)?;
        match &mechanism {
            Mechanism::Pbr { .. } => {
                if game.as_congestion().is_none() {
                    return Err(Error::validation("best-response dynamics need a congestion game"));
                }
            }
            Mechanism::Nrlaplace { .. } => {
                if kind == MediatorKind::Weak {
                    return Err(Error::validation(
                        "a weak mediator needs a mechanism that computes a Nash equilibrium",
                    ));
                }
            }
            Mechanism::BeachMountain => match &game {
                AnyGame::General(g) if matches!(g.model(), UtilityModel::BeachMountain { .. }) => {
                    if g.type_names().len() < 3 {
                        return Err(Error::validation("the Beach/Mountain mediator needs the antisocial type"));
                    }
                }
                _ => return Err(Error::validation("the Beach/Mountain mediator needs the Beach/Mountain game")),
            },
        }
        Ok(MediatedGameConfig { kind, mechanism, game, types })
    }

    pub fn num_players(&self) -> usize {
        self.types.len()
    }

    /// Reports available to `player`: her true type first, then (weak
    /// mediators only) every other type, then opting out.
    pub fn reports(&self, player: usize) -> Vec<Report> {
        let truth = self.types[player];
        let mut out = vec![Report::Type(truth)];
        if self.kind == MediatorKind::Weak {
            out.extend((0..self.game.type_names().len()).filter(|&t| t != truth).map(Report::Type));
        }
        out.push(Report::OptOut);
        out
    }

    fn report_name(&self, report: Report) -> String {
        match report {
            Report::Type(t) => self.game.type_names()[t].clone(),
            Report::OptOut => "opt-out".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Report {
    Type(usize),
    OptOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyClass {
    RemapOnly,
    MisreportRemap,
    OptOutFixedAction,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, se: f64::NAN, samples: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, se, samples: n }
    }
}

/// One evaluated deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub class: StrategyClass,
    pub report: Report,
    pub report_name: String,
    /// `remap[s]` is the action played on suggestion `s`.
    pub remap: Vec<usize>,
    pub utility: Estimate,
    /// Deviating utility minus the good-behavior utility.
    pub gain: f64,
    /// `√(se_deviation² + se_baseline²)`.
    pub se: f64,
    /// Trials discarded because the mechanism failed.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub player: usize,
    pub true_type: String,
    pub trials: usize,
    pub baseline: Estimate,
    pub baseline_failures: usize,
    pub best: Candidate,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodBehavior {
    pub utilities: Vec<Estimate>,
    pub trials: usize,
    pub failures: usize,
}

/// What the mechanism produced in one trial.
enum Draw {
    /// A pure profile; the deviator's entry is her suggestion, an index into
    /// her reported type's actions (0 after opting out).
    Pure(Vec<usize>),
    /// A mixture of product distributions; the deviator's entry is the
    /// distribution of her suggestion.
    Mixed(CorrelatedDistribution),
    Failed,
}

/// Mechanism state that depends on the report but not on the trial.
enum Prepared {
    Pbr { params: PbrParams, init: InitPolicy, players: Vec<usize>, types: Vec<usize> },
    Nr { params: NrParams, config: NrConfig, types: Vec<usize> },
    BeachMountain { n_ones: usize, reports: Vec<Option<usize>> },
}

fn pbr_params(mechanism: &Mechanism, m: usize, n: usize, sigma: f64) -> Result<PbrParams> {
    let Mechanism::Pbr { epsilon, beta, c_alpha, noiseless, alpha, .. } = mechanism else {
        unreachable!("caller matched the mechanism")
    };
    if *noiseless {
        let alpha = alpha.ok_or_else(|| Error::validation("noiseless runs need an explicit alpha"))?;
        return noiseless_params(m, n, sigma, alpha);
    }
    match c_alpha {
        Some(c) => derive_params(m, n, sigma, *epsilon, *beta, *c),
        None => {
            let c = feasible_c_alpha(m, n, sigma, *epsilon, *beta, 1.0)?;
            compute_params(m, n, sigma, *epsilon, *beta, c)
        }
    }
}

fn nr_round_count(mechanism: &Mechanism, lambda: f64, n: usize, k: usize) -> Result<usize> {
    let Mechanism::Nrlaplace { epsilon, delta, beta, rounds, .. } = mechanism else {
        unreachable!("caller matched the mechanism")
    };
    match rounds {
        Some(t) => Ok(*t),
        None => max_feasible_rounds(lambda, n, k, *epsilon, *delta, *beta),
    }
}

fn max_actions(game: &AnyGame, types: &[usize]) -> usize {
    types.iter().enumerate().map(|(i, &t)| game.num_actions(i, t)).max().unwrap_or(1)
}

fn prepare(config: &MediatedGameConfig, player: usize, report: Report) -> Result<Prepared> {
    let n = config.num_players();
    let mut reported: Vec<Option<usize>> = config.types.iter().map(|&t| Some(t)).collect();
    reported[player] = match report {
        Report::Type(t) => Some(t),
        Report::OptOut => None,
    };
    match &config.mechanism {
        Mechanism::Pbr { init, .. } => {
            let g = config.game.as_congestion().expect("validated on construction");
            let players: Vec<usize> = (0..n).filter(|&i| reported[i].is_some()).collect();
            let types: Vec<usize> = players.iter().map(|&i| reported[i].expect("opted in")).collect();
            let params = pbr_params(&config.mechanism, g.m(), players.len(), g.sensitivity())?;
            Ok(Prepared::Pbr { params, init: *init, players, types })
        }
        Mechanism::Nrlaplace { epsilon, delta, beta, family, noiseless, force, evaluator, .. } => {
            // an opted-out player is held at the uniform distribution
            let types: Vec<usize> = reported.iter().zip(&config.types).map(|(r, &t)| r.unwrap_or(t)).collect();
            let k = max_actions(&config.game, &types);
            let lambda = config.game.largeness();
            let rounds = nr_round_count(&config.mechanism, lambda, n, k)?;
            let params = nr_params(lambda, n, k, *epsilon, *delta, *beta, rounds, *family)?;
            let mut fixed = vec![None; n];
            if report == Report::OptOut {
                let kp = config.game.num_actions(player, types[player]);
                fixed[player] = Some(vec![1.0 / kp as f64; kp]);
            }
            let nr_config = NrConfig { evaluator: *evaluator, noiseless: *noiseless, force: *force, fixed };
            Ok(Prepared::Nr { params, config: nr_config, types })
        }
        Mechanism::BeachMountain => {
            let AnyGame::General(g) = &config.game else { unreachable!("validated on construction") };
            let UtilityModel::BeachMountain { n_ones } = g.model() else { unreachable!("validated on construction") };
            Ok(Prepared::BeachMountain { n_ones: *n_ones, reports: reported })
        }
    }
}

const SOCIAL: usize = 1;
const ANTISOCIAL: usize = 2;

fn draw<R: Rng + ?Sized>(config: &MediatedGameConfig, prepared: &Prepared, player: usize, rng: &mut R) -> Result<Draw> {
    let n = config.num_players();
    match prepared {
        Prepared::Pbr { params, init, players, types } => {
            let g = config.game.as_congestion().expect("validated on construction");
            let pc = PbrConfig { init: *init, record_trace: false };
            let out = run_pbr(g, types, params, &pc, rng)?;
            let Some(result) = out.result else { return Ok(Draw::Failed) };
            let mut profile = vec![0usize; n];
            for (&i, &a) in players.iter().zip(&result) {
                profile[i] = a;
            }
            Ok(Draw::Pure(profile))
        }
        Prepared::Nr { params, config: nr_config, types } => {
            let seed = child_seed(rng);
            let out = run_nr_laplace(&config.game, types, params, nr_config, seed)?;
            let mut dist = CorrelatedDistribution::from_sequences(&out.sequences)?;
            if nr_config.fixed.get(player).is_some_and(|f| f.is_some()) {
                for round in &mut dist.rounds {
                    round[player] = vec![1.0];
                }
            }
            Ok(Draw::Mixed(dist))
        }
        Prepared::BeachMountain { n_ones, reports } => {
            let mut profile: Vec<usize> = (0..*n_ones).map(|_| if rng.gen::<bool>() { MOUNTAIN } else { BEACH }).collect();
            let mountains = profile.iter().filter(|&&a| a == MOUNTAIN).count();
            let majority = if 2 * mountains > *n_ones { MOUNTAIN } else { BEACH };
            let last = match reports[*n_ones] {
                Some(SOCIAL) => BEACH,
                Some(ANTISOCIAL) => 1 - majority,
                Some(_) => {
                    if rng.gen::<bool>() {
                        MOUNTAIN
                    } else {
                        BEACH
                    }
                }
                None => 0,
            };
            profile.push(last);
            // an opted-out first player receives no suggestion
            if player < *n_ones && reports[player].is_none() {
                profile[player] = 0;
            }
            Ok(Draw::Pure(profile))
        }
    }
}

/// `M[s][j]` for `player` with true types `types` from one draw; `rows` is
/// the size of the suggestion space.
fn payoff_matrix(game: &AnyGame, types: &[usize], player: usize, rows: usize, draw: &Draw) -> Result<Option<Vec<Vec<f64>>>> {
    let k = game.num_actions(player, types[player]);
    let mut m = vec![vec![0.0; k]; rows];
    match draw {
        Draw::Failed => return Ok(None),
        Draw::Pure(profile) => {
            let s = profile[player];
            let mut dev = profile.clone();
            for (j, slot) in m[s].iter_mut().enumerate() {
                dev[player] = j;
                *slot = game.payoff(types, &dev, player);
            }
        }
        Draw::Mixed(dist) => {
            for (round, w) in dist.rounds.iter().zip(&dist.weights) {
                let mut mixed = round.clone();
                mixed[player] = vec![1.0 / k as f64; k];
                let v = expected_utilities(game, types, &mixed, player)?;
                for (s, &ps) in round[player].iter().enumerate() {
                    if ps > 0.0 {
                        for (slot, &vj) in m[s].iter_mut().zip(&v) {
                            *slot += w * ps * vj;
                        }
                    }
                }
            }
        }
    }
    Ok(Some(m))
}

fn suggestion_rows(config: &MediatedGameConfig, player: usize, report: Report) -> usize {
    match report {
        Report::Type(t) => config.game.num_actions(player, t),
        Report::OptOut => 1,
    }
}

/// Per-trial payoff matrices for one report, in trial order. Trial `t` uses
/// stream `(player, t)` of `seed` whatever the report.
fn simulate(
    config: &MediatedGameConfig,
    player: usize,
    report: Report,
    trials: usize,
    seed: u64,
) -> Result<Vec<Option<Vec<Vec<f64>>>>> {
    let prepared = prepare(config, player, report)?;
    let rows = suggestion_rows(config, player, report);
    let pid = u32::try_from(player).map_err(|_| Error::validation("player index too large"))?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = derived_rng(seed, stream_id(pid, t as u32));
            let d = draw(config, &prepared, player, &mut rng)?;
            payoff_matrix(&config.game, &config.types, player, rows, &d)
        })
        .collect()
}

fn remap_utilities(runs: &[Option<Vec<Vec<f64>>>], remap: &[usize]) -> Vec<f64> {
    runs.iter().flatten().map(|m| m.iter().zip(remap).map(|(row, &j)| row[j]).sum()).collect()
}

/// Per-suggestion best response to the mean payoff matrix (ties go to the
/// lowest action).
fn best_remap(runs: &[Option<Vec<Vec<f64>>>], rows: usize, k: usize) -> Vec<usize> {
    let mut mean = vec![vec![0.0; k]; rows];
    for m in runs.iter().flatten() {
        for (acc, row) in mean.iter_mut().zip(m) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
    }
    mean.iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn check_player(config: &MediatedGameConfig, player: usize, trials: usize) -> Result<()> {
    if player >= config.num_players() {
        return Err(Error::validation(format!("no player {player}")));
    }
    if trials == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    Ok(())
}

fn baseline(config: &MediatedGameConfig, player: usize, runs: &[Option<Vec<Vec<f64>>>]) -> Estimate {
    let k = config.game.num_actions(player, config.types[player]);
    let identity: Vec<usize> = (0..k).collect();
    Estimate::from_samples(&remap_utilities(runs, &identity))
}

fn candidate(
    config: &MediatedGameConfig,
    player: usize,
    report: Report,
    remap: Vec<usize>,
    runs: &[Option<Vec<Vec<f64>>>],
    base: &Estimate,
) -> Candidate {
    let utility = Estimate::from_samples(&remap_utilities(runs, &remap));
    let class = match report {
        Report::OptOut => StrategyClass::OptOutFixedAction,
        Report::Type(t) if t == config.types[player] => StrategyClass::RemapOnly,
        Report::Type(_) => StrategyClass::MisreportRemap,
    };
    Candidate {
        class,
        report,
        report_name: config.report_name(report),
        remap,
        gain: utility.mean - base.mean,
        se: (utility.se.powi(2) + base.se.powi(2)).sqrt(),
        utility,
        failures: runs.iter().filter(|r| r.is_none()).count(),
    }
}

/// Mean utility of every player when all report truthfully and follow their
/// suggestions. Failed P-BR runs are discarded and counted.
pub fn good_behavior_utility(config: &MediatedGameConfig, trials: usize, seed: u64) -> Result<GoodBehavior> {
    check_player(config, 0, trials)?;
    let n = config.num_players();
    let prepared = prepare(config, 0, Report::Type(config.types[0]))?;
    let draws: Vec<Vec<Option<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = derived_rng(seed, stream_id(0, t as u32));
            let d = draw(config, &prepared, 0, &mut rng)?;
            (0..n)
                .map(|i| {
                    let rows = config.game.num_actions(i, config.types[i]);
                    let m = payoff_matrix(&config.game, &config.types, i, rows, &d)?;
                    Ok(m.map(|m| (0..rows).map(|s| m[s][s]).sum()))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let failures = draws.iter().filter(|d| d[0].is_none()).count();
    let utilities = (0..n)
        .map(|i| Estimate::from_samples(&draws.iter().filter_map(|d| d[i]).collect::<Vec<_>>()))
        .collect();
    Ok(GoodBehavior { utilities, trials, failures })
}

/// Searches every report available to `player` and, for each, the optimal
/// remap of suggestions. The truthful report with the identity remap is part
/// of the search, so the best gain is never negative.
pub fn best_deviation(config: &MediatedGameConfig, player: usize, trials: usize, seed: u64) -> Result<DeviationReport> {
    check_player(config, player, trials)?;
    let truth = Report::Type(config.types[player]);
    let k = config.game.num_actions(player, config.types[player]);
    let base_runs = simulate(config, player, truth, trials, seed)?;
    let base = baseline(config, player, &base_runs);
    let mut candidates = Vec::new();
    for report in config.reports(player) {
        let runs = if report == truth { base_runs.clone() } else { simulate(config, player, report, trials, seed)? };
        let rows = suggestion_rows(config, player, report);
        let remap = best_remap(&runs, rows, k);
        candidates.push(candidate(config, player, report, remap, &runs, &base));
    }
    let identity = candidate(config, player, truth, (0..k).collect(), &base_runs, &base);
    let mut best = identity;
    for c in &candidates {
        if c.gain > best.gain {
            best = c.clone();
        }
    }
    Ok(DeviationReport {
        player,
        true_type: config.report_name(truth),
        trials,
        baseline: base,
        baseline_failures: base_runs.iter().filter(|r| r.is_none()).count(),
        best,
        candidates,
    })
}

/// Evaluates one hand-specified deviation against the same trials
/// [`best_deviation`] would use.
pub fn evaluate_deviation(
    config: &MediatedGameConfig,
    player: usize,
    report: Report,
    remap: Vec<usize>,
    trials: usize,
    seed: u64,
) -> Result<Candidate> {
    check_player(config, player, trials)?;
    let k = config.game.num_actions(player, config.types[player]);
    if remap.len() != suggestion_rows(config, player, report) || remap.iter().any(|&j| j >= k) {
        return Err(Error::validation("remap does not fit the suggestion and action sets"));
    }
    if let Report::Type(t) = report {
        if t >= config.game.type_names().len() {
            return Err(Error::validation(format!("no type {t}")));
        }
        if config.kind == MediatorKind::Strong && t != config.types[player] {
            return Err(Error::validation("strong mediators accept only truthful reports"));
        }
    }
    let truth = Report::Type(config.types[player]);
    let base_runs = simulate(config, player, truth, trials, seed)?;
    let base = baseline(config, player, &base_runs);
    let runs = if report == truth { base_runs } else { simulate(config, player, report, trials, seed)? };
    Ok(candidate(config, player, report, remap, &runs, &base))
}

/// Ingredients of the incentive bound for a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncentiveBound {
    pub eta: f64,
    pub u: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub eta_prime: f64,
}

/// `η′` for the configured mechanism with all players opted in; `None` for
/// the Beach/Mountain fixture, which carries no guarantee. Best-response
/// dynamics are `(ε, β)`-jointly private, so `δ = β` there.
pub fn incentive_bound(config: &MediatedGameConfig) -> Result<Option<IncentiveBound>> {
    let n = config.num_players();
    let u = config.game.utility_bound();
    let (eta, epsilon, delta, beta) = match &config.mechanism {
        Mechanism::Pbr { epsilon, beta, noiseless, .. } => {
            let g = config.game.as_congestion().expect("validated on construction");
            let params = pbr_params(&config.mechanism, g.m(), n, g.sensitivity())?;
            if *noiseless {
                (eta_bound(&params), 0.0, 0.0, 0.0)
            } else {
                (eta_bound(&params), *epsilon, *beta, *beta)
            }
        }
        Mechanism::Nrlaplace { epsilon, delta, beta, family, noiseless, .. } => {
            let k = max_actions(&config.game, &config.types);
            let lambda = config.game.largeness();
            let rounds = nr_round_count(&config.mechanism, lambda, n, k)?;
            let params = nr_params(lambda, n, k, *epsilon, *delta, *beta, rounds, *family)?;
            let b = if *noiseless { 0.0 } else { params.b };
            let bounds = regret_bounds(b, k, rounds, *beta, !*noiseless)?;
            let rho = match family {
                Family::Fixed => bounds.fixed,
                Family::Swap => bounds.swap,
            };
            if *noiseless {
                (u * rho, 0.0, 0.0, 0.0)
            } else {
                (u * rho, *epsilon, *delta, *beta)
            }
        }
        Mechanism::BeachMountain => return Ok(None),
    };
    Ok(Some(IncentiveBound { eta, u, epsilon, delta, beta, eta_prime: eta_prime_bound(eta, u, epsilon, delta, beta) }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{make_beach_mountain, parallel_links, random_large_game};

    fn beach_mountain(truth: usize) -> MediatedGameConfig {
        let inst = make_beach_mountain(1, true).unwrap();
        let mut types = inst.types.clone();
        types[1] = truth;
        MediatedGameConfig::new(MediatorKind::Weak, Mechanism::BeachMountain, AnyGame::General(inst.game), types)
            .unwrap()
    }

    #[test]
    fn eta_prime_examples() {
        assert!((eta_prime_bound(0.1, 1.0, 0.05, 0.01, 0.01) - 0.17).abs() < 1e-15);
        assert_eq!(eta_prime_bound(0.0, 1.0, 0.0, 0.0, 0.0), 0.0);
        assert!((eta_prime_bound(0.1, 2.0, 0.05, 0.01, 0.01) - 0.24).abs() < 1e-15);
    }

    #[test]
    fn truthful_social_player_gets_one() {
        let cfg = beach_mountain(SOCIAL);
        let gb = good_behavior_utility(&cfg, 2000, 1).unwrap();
        // beach + matching half the time
        assert!((gb.utilities[1].mean - 1.0).abs() < 4.0 * gb.utilities[1].se + 1e-12);
        assert_eq!(gb.utilities[0].mean, 0.0);
    }

    #[test]
    fn misreport_and_flip_gains_a_quarter() {
        let cfg = beach_mountain(SOCIAL);
        let flip = evaluate_deviation(&cfg, 1, Report::Type(ANTISOCIAL), vec![1, 0], 20_000, 2).unwrap();
        assert_eq!(flip.class, StrategyClass::MisreportRemap);
        assert!((flip.gain - 0.25).abs() < 4.0 * flip.se, "gain {} se {}", flip.gain, flip.se);
        let best = best_deviation(&cfg, 1, 20_000, 2).unwrap();
        assert!(best.best.gain >= flip.gain - 1e-12);
        assert_eq!(best.best.report, Report::Type(ANTISOCIAL));
        assert_eq!(best.best.remap, vec![1, 0]);
    }

    #[test]
    fn identity_deviation_has_zero_gain() {
        let cfg = beach_mountain(SOCIAL);
        let id = evaluate_deviation(&cfg, 1, Report::Type(SOCIAL), vec![0, 1], 500, 3).unwrap();
        assert_eq!(id.gain, 0.0);
        assert_eq!(id.class, StrategyClass::RemapOnly);
    }

    #[test]
    fn noiseless_pbr_trials_agree() {
        let g = parallel_links(6, 2).unwrap();
        let mech = Mechanism::Pbr {
            epsilon: 1.0,
            beta: 0.1,
            c_alpha: None,
            noiseless: true,
            alpha: Some(0.1),
            init: InitPolicy::First,
        };
        let cfg = MediatedGameConfig::new(MediatorKind::Weak, mech, AnyGame::Congestion(g), vec![0; 6]).unwrap();
        let gb = good_behavior_utility(&cfg, 5, 4).unwrap();
        assert!(gb.utilities.iter().all(|e| e.se == 0.0));
        let dev = best_deviation(&cfg, 2, 5, 4).unwrap();
        assert!(dev.best.gain >= 0.0);
        // three on each link is an exact equilibrium
        assert!(dev.best.gain < 1e-12);
    }

    #[test]
    fn strong_mediator_offers_only_truth_and_opt_out() {
        let mut rng = derived_rng(5, 0);
        let inst = random_large_game(3, 2, 0.3, 2, &mut rng).unwrap();
        let mech = Mechanism::Nrlaplace {
            epsilon: 1.0,
            delta: 1e-3,
            beta: 0.1,
            rounds: Some(20),
            family: Family::Swap,
            noiseless: true,
            force: false,
            evaluator: Evaluator::Auto,
        };
        let cfg = MediatedGameConfig::new(MediatorKind::Strong, mech.clone(), AnyGame::General(inst.game.clone()), inst.types.clone())
            .unwrap();
        assert_eq!(cfg.reports(0).len(), 2);
        let dev = best_deviation(&cfg, 0, 3, 6).unwrap();
        assert!(dev.best.gain >= 0.0);
        assert!(MediatedGameConfig::new(MediatorKind::Weak, mech, AnyGame::General(inst.game), inst.types).is_err());
    }

    #[test]
    fn constant_game_has_constant_utility() {
        let g = parallel_links(4, 1).unwrap();
        let mech = Mechanism::Pbr {
            epsilon: 1.0,
            beta: 0.1,
            c_alpha: None,
            noiseless: true,
            alpha: Some(0.1),
            init: InitPolicy::First,
        };
        let cfg = MediatedGameConfig::new(MediatorKind::Weak, mech, AnyGame::Congestion(g), vec![0; 4]).unwrap();
        let gb = good_behavior_utility(&cfg, 4, 0).unwrap();
        assert!(gb.utilities.iter().all(|e| (e.mean - 0.0).abs() < 1e-12 && e.se == 0.0));
    }

    use crate::rng::derived_rng;
}
