//! Exact verifiers for pure Nash, correlated and coarse correlated
//! equilibria.
//!
//! Correlated distributions are represented as weighted mixtures of product
//! distributions (one per no-regret round), so every expectation splits into
//! per-round expected utilities against independent opponents. Pure-Nash
//! checks compare [`Game::payoff`], which for congestion games is a cost
//! reduction; the distribution checks compare utilities.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{
    action_counts, expected_utilities_enumerate, expected_utilities_sampled, validate_profile,
    validate_types, Game, ENUMERATION_CAP,
};
use crate::noregret::CorrelatedDistribution;

/// Gains below this are treated as float noise.
pub const GAIN_FLOOR: f64 = 1e-12;

/// Largest total number of actions scanned by the pure-Nash check.
pub const PURE_ACTION_CAP: usize = 1 << 20;

/// Largest player count verified exactly by enumeration in games without a
/// factorized evaluator.
pub const EXACT_PLAYER_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Concept {
    PureNash,
    Correlated,
    Coarse,
}

impl std::str::FromStr for Concept {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure" | "pure-nash" => Ok(Concept::PureNash),
            "ce" | "correlated" => Ok(Concept::Correlated),
            "cce" | "coarse" => Ok(Concept::Coarse),
            other => Err(Error::validation(format!("unknown equilibrium concept {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Deviation {
    /// Switch to a single action.
    Action(usize),
    /// Replace each recommended action `j` by `map[j]`.
    Map(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub player: usize,
    pub deviation: Deviation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub concept: Concept,
    /// Largest deviation gain over all players, never negative.
    pub eta: f64,
    /// Deviation achieving `eta`; `None` when no gain is positive.
    pub witness: Option<Witness>,
    /// Best gain of each player.
    pub player_gains: Vec<f64>,
}

fn clamp_gain(g: f64) -> f64 {
    if g < GAIN_FLOOR {
        0.0
    } else {
        g
    }
}

fn assemble(concept: Concept, best: Vec<(f64, Deviation)>) -> EquilibriumReport {
    let player_gains: Vec<f64> = best.iter().map(|(g, _)| clamp_gain(*g)).collect();
    let mut witness = None;
    let mut eta = 0.0;
    for (i, (g, d)) in best.into_iter().enumerate() {
        let g = clamp_gain(g);
        if g > eta {
            eta = g;
            witness = Some(Witness { player: i, deviation: d });
        }
    }
    EquilibriumReport { concept, eta, witness, player_gains }
}

/// `η = max_i max_{a′} payoff_i(a′, a_{−i}) − payoff_i(a)`.
pub fn check_pure_nash<G: Game + ?Sized>(game: &G, types: &[usize], profile: &[usize]) -> Result<EquilibriumReport> {
    validate_profile(game, types, profile)?;
    let counts = action_counts(game, types);
    let total: usize = counts.iter().sum();
    if total > PURE_ACTION_CAP {
        return Err(Error::CapExceeded(format!(
            "{total} actions exceed the pure-Nash scan cap {PURE_ACTION_CAP}"
        )));
    }
    let best: Vec<(f64, Deviation)> = (0..types.len())
        .into_par_iter()
        .map(|i| {
            let base = game.payoff(types, profile, i);
            let mut dev = profile.to_vec();
            let mut best = (0.0, Deviation::Action(profile[i]));
            for a in 0..counts[i] {
                if a == profile[i] {
                    continue;
                }
                dev[i] = a;
                let gain = game.payoff(types, &dev, i) - base;
                if gain > best.0 {
                    best = (gain, Deviation::Action(a));
                }
            }
            best
        })
        .collect();
    Ok(assemble(Concept::PureNash, best))
}

fn check_distribution<G: Game + ?Sized>(game: &G, types: &[usize], dist: &CorrelatedDistribution) -> Result<()> {
    validate_types(game, types)?;
    if dist.num_players() != types.len() {
        return Err(Error::validation(format!(
            "distribution has {} players but the type profile has {}",
            dist.num_players(),
            types.len()
        )));
    }
    if dist.rounds.len() != dist.weights.len() || dist.rounds.is_empty() {
        return Err(Error::validation("distribution needs one weight per round"));
    }
    let counts = action_counts(game, types);
    for r in &dist.rounds {
        if r.len() != types.len() {
            return Err(Error::validation("round with the wrong player count"));
        }
        for (d, &k) in r.iter().zip(&counts) {
            if d.len() != k {
                return Err(Error::validation("round distribution has the wrong number of actions"));
            }
        }
    }
    Ok(())
}

/// `u[r][i][j]`: expected utility of action `j` for player `i` against the
/// round-`r` product of the other players.
fn round_utilities_exact<G: Game + ?Sized>(
    game: &G,
    types: &[usize],
    dist: &CorrelatedDistribution,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = types.len();
    dist.rounds
        .par_iter()
        .map(|round| {
            (0..n)
                .map(|i| match game.factorized_expected_utilities(types, round, i) {
                    Some(v) => Ok(v),
                    None if n > EXACT_PLAYER_CAP => Err(Error::CapExceeded(format!(
                        "{n} players exceed the exact verification cap {EXACT_PLAYER_CAP}"
                    ))),
                    None => expected_utilities_enumerate(game, types, round, i, ENUMERATION_CAP),
                })
                .collect()
        })
        .collect()
}

/// `gains[i][j][j′] = Σ_r w_r π_{r,i}(j) (u[r][i][j′] − u[r][i][j])`.
fn gain_matrices(dist: &CorrelatedDistribution, utils: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    let n = dist.num_players();
    (0..n)
        .map(|i| {
            let k = dist.rounds[0][i].len();
            let mut g = vec![vec![0.0; k]; k];
            for ((round, w), u) in dist.rounds.iter().zip(&dist.weights).zip(utils) {
                let (pi, u) = (&round[i], &u[i]);
                for j in 0..k {
                    let mass = w * pi[j];
                    if mass == 0.0 {
                        continue;
                    }
                    for j2 in 0..k {
                        g[j][j2] += mass * (u[j2] - u[j]);
                    }
                }
            }
            g
        })
        .collect()
}

fn best_swap(g: &[Vec<f64>]) -> (f64, Deviation) {
    let mut total = 0.0;
    let map: Vec<usize> = g
        .iter()
        .enumerate()
        .map(|(j, row)| {
            let mut best = j;
            for (j2, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j2;
                }
            }
            total += row[best];
            best
        })
        .collect();
    (total, Deviation::Map(map))
}

fn best_fixed(g: &[Vec<f64>]) -> (f64, Deviation) {
    let k = g.len();
    let mut best = (f64::NEG_INFINITY, 0);
    for j2 in 0..k {
        let v: f64 = g.iter().map(|row| row[j2]).sum();
        if v > best.0 {
            best = (v, j2);
        }
    }
    (best.0, Deviation::Map(vec![best.1; k]))
}

fn report_from_utils(concept: Concept, dist: &CorrelatedDistribution, utils: &[Vec<Vec<f64>>]) -> EquilibriumReport {
    let best = gain_matrices(dist, utils)
        .iter()
        .map(|g| match concept {
            Concept::Coarse => best_fixed(g),
            _ => best_swap(g),
        })
        .collect();
    assemble(concept, best)
}

/// `η = max_i max_f E_D[u_i(f(a_i), a_{−i})] − E_D[u_i(a)]` over swap maps
/// `f`, found per recommended action.
pub fn check_correlated<G: Game + ?Sized>(
    game: &G,
    types: &[usize],
    dist: &CorrelatedDistribution,
) -> Result<EquilibriumReport> {
    check_distribution(game, types, dist)?;
    let utils = round_utilities_exact(game, types, dist)?;
    Ok(report_from_utils(Concept::Correlated, dist, &utils))
}

/// `η = max_i max_j E_D[u_i(j, a_{−i})] − E_D[u_i(a)]`.
pub fn check_coarse<G: Game + ?Sized>(
    game: &G,
    types: &[usize],
    dist: &CorrelatedDistribution,
) -> Result<EquilibriumReport> {
    check_distribution(game, types, dist)?;
    let utils = round_utilities_exact(game, types, dist)?;
    Ok(report_from_utils(Concept::Coarse, dist, &utils))
}

/// Exact gain of `player` from applying `map` to her recommendations.
pub fn deviation_gain<G: Game + ?Sized>(
    game: &G,
    types: &[usize],
    dist: &CorrelatedDistribution,
    player: usize,
    map: &[usize],
) -> Result<f64> {
    check_distribution(game, types, dist)?;
    if player >= types.len() {
        return Err(Error::validation(format!("no player {player}")));
    }
    let k = dist.rounds[0][player].len();
    if map.len() != k || map.iter().any(|&j| j >= k) {
        return Err(Error::validation("deviation map does not fit the action set"));
    }
    let utils = round_utilities_exact(game, types, dist)?;
    let g = &gain_matrices(dist, &utils)[player];
    Ok((0..k).map(|j| g[j][map[j]]).sum())
}

/// A sampled verification with a 95% confidence half-width.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledReport {
    pub report: EquilibriumReport,
    pub half_width: f64,
}

/// Monte Carlo variant for instances beyond the exact caps. Each per-round
/// expected utility uses `samples` opponent draws; the half-width is the
/// Hoeffding-style 95% width for a `k`-term sum of bounded estimates.
pub fn estimate_equilibrium<G: Game + ?Sized, R: Rng + ?Sized>(
    game: &G,
    types: &[usize],
    dist: &CorrelatedDistribution,
    concept: Concept,
    samples: usize,
    rng: &mut R,
) -> Result<SampledReport> {
    if concept == Concept::PureNash {
        return Err(Error::validation("pure-Nash checks are always exact"));
    }
    check_distribution(game, types, dist)?;
    if samples == 0 {
        return Err(Error::Parameter("at least one sample is required".into()));
    }
    let n = types.len();
    let utils: Vec<Vec<Vec<f64>>> = dist
        .rounds
        .iter()
        .map(|round| (0..n).map(|i| expected_utilities_sampled(game, types, round, i, samples, rng)).collect())
        .collect();
    let report = report_from_utils(concept, dist, &utils);
    let kmax = action_counts(game, types).into_iter().max().unwrap_or(1) as f64;
    let half_width = 1.96 * kmax * game.utility_bound() / (samples as f64).sqrt();
    Ok(SampledReport { report, half_width })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{parallel_links, random_large_game, GeneralGame, UtilityModel};
    use crate::noregret::{nr_params, regret, run_nr_laplace, Family, NrConfig};
    use crate::rng::derived_rng;

    fn table_game(tables: Vec<Vec<f64>>, k: usize) -> GeneralGame {
        let n = tables.len();
        GeneralGame::new(
            vec![k; n],
            vec!["t".into()],
            UtilityModel::Table { tables: tables.into_iter().map(|t| vec![t]).collect() },
            1.0,
            1.0,
        )
        .unwrap()
    }

    fn random_dist<R: Rng>(rng: &mut R, rounds: usize, n: usize, k: usize) -> CorrelatedDistribution {
        let rounds: Vec<Vec<Vec<f64>>> = (0..rounds)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let v: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
                        let z: f64 = v.iter().sum();
                        v.iter().map(|x| x / z).collect()
                    })
                    .collect()
            })
            .collect();
        let w: Vec<f64> = (0..rounds.len()).map(|_| rng.gen::<f64>() + 0.1).collect();
        let z: f64 = w.iter().sum();
        CorrelatedDistribution { rounds, weights: w.iter().map(|x| x / z).collect() }
    }

    /// Brute force over all profiles and all `k^k` maps.
    fn correlated_oracle<G: Game>(game: &G, types: &[usize], d: &CorrelatedDistribution, k: usize) -> f64 {
        let n = types.len();
        let profiles: Vec<Vec<usize>> = (0..k.pow(n as u32))
            .map(|mut x| {
                let mut p = vec![0; n];
                for slot in p.iter_mut().rev() {
                    *slot = x % k;
                    x /= k;
                }
                p
            })
            .collect();
        let mut eta: f64 = 0.0;
        for i in 0..n {
            for code in 0..k.pow(k as u32) {
                let map: Vec<usize> = (0..k).map(|j| code / k.pow(j as u32) % k).collect();
                let mut gain = 0.0;
                for p in &profiles {
                    let pr = d.probability(p);
                    let mut q = p.clone();
                    q[i] = map[p[i]];
                    gain += pr * (game.utility(types, &q, i) - game.utility(types, p, i));
                }
                eta = eta.max(gain);
            }
        }
        eta
    }

    #[test]
    fn two_link_examples() {
        let g = parallel_links(2, 2).unwrap();
        let split = check_pure_nash(&g, &[0, 0], &[0, 1]).unwrap();
        assert_eq!(split.eta, 0.0);
        assert!(split.witness.is_none());
        let piled = check_pure_nash(&g, &[0, 0], &[0, 0]).unwrap();
        assert!((piled.eta - 0.5).abs() < 1e-12);
        assert_eq!(piled.witness.unwrap().deviation, Deviation::Action(1));
    }

    #[test]
    fn single_player_at_argmin() {
        let g = table_game(vec![vec![0.2, 0.9, 0.4]], 3);
        assert_eq!(check_pure_nash(&g, &[0], &[1]).unwrap().eta, 0.0);
        assert!((check_pure_nash(&g, &[0], &[0]).unwrap().eta - 0.7).abs() < 1e-12);
    }

    #[test]
    fn matching_pennies_uniform_is_correlated() {
        let g = table_game(vec![vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, 1.0, 0.0]], 2);
        let d = CorrelatedDistribution { rounds: vec![vec![vec![0.5, 0.5]; 2]], weights: vec![1.0] };
        assert_eq!(check_correlated(&g, &[0, 0], &d).unwrap().eta, 0.0);
    }

    #[test]
    fn point_mass_matches_pure_check() {
        let mut rng = derived_rng(3, 0);
        for _ in 0..20 {
            let inst = random_large_game(3, 3, 0.5, 1, &mut rng).unwrap();
            let profile: Vec<usize> = (0..3).map(|_| rng.gen_range(0..3)).collect();
            let d = CorrelatedDistribution::point(&profile, &[3, 3, 3]);
            let a = check_correlated(&inst.game, &inst.types, &d).unwrap().eta;
            let b = check_pure_nash(&inst.game, &inst.types, &profile).unwrap().eta;
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_matches_brute_force_and_witness_reproduces() {
        let mut rng = derived_rng(4, 0);
        for _ in 0..30 {
            let inst = random_large_game(2, 3, 0.7, 1, &mut rng).unwrap();
            let d = random_dist(&mut rng, 4, 2, 3);
            let r = check_correlated(&inst.game, &inst.types, &d).unwrap();
            let oracle = correlated_oracle(&inst.game, &inst.types, &d, 3);
            assert!((r.eta - oracle).abs() < 1e-9, "{} vs {oracle}", r.eta);
            if let Some(w) = r.witness {
                let Deviation::Map(map) = w.deviation else { panic!("expected a map") };
                let g = deviation_gain(&inst.game, &inst.types, &d, w.player, &map).unwrap();
                assert!((g - r.eta).abs() < 1e-12);
            }
            let c = check_coarse(&inst.game, &inst.types, &d).unwrap();
            assert!(c.eta <= r.eta + 1e-12);
        }
    }

    #[test]
    fn hand_built_coarse_deviation() {
        // player 0 gets 0.5 at (0, 0) and 0.75 by switching to 1
        let g = table_game(vec![vec![0.5, 0.0, 0.75, 0.0], vec![0.3; 4]], 2);
        let d = CorrelatedDistribution::point(&[0, 0], &[2, 2]);
        let r = check_coarse(&g, &[0, 0], &d).unwrap();
        assert!((r.eta - 0.25).abs() < 1e-12);
        assert_eq!(r.witness.unwrap().player, 0);
    }

    #[test]
    fn constant_utilities_give_zero() {
        let g = table_game(vec![vec![0.4; 4]; 2], 2);
        let d = CorrelatedDistribution { rounds: vec![vec![vec![0.5, 0.5]; 2]], weights: vec![1.0] };
        assert_eq!(check_coarse(&g, &[0, 0], &d).unwrap().eta, 0.0);
        assert_eq!(check_correlated(&g, &[0, 0], &d).unwrap().eta, 0.0);
    }

    #[test]
    fn mixing_never_exceeds_the_mixed_etas() {
        let mut rng = derived_rng(5, 0);
        for _ in 0..20 {
            let inst = random_large_game(3, 2, 0.5, 1, &mut rng).unwrap();
            let a = random_dist(&mut rng, 2, 3, 2);
            let b = random_dist(&mut rng, 3, 3, 2);
            let w: f64 = rng.gen();
            let mix = CorrelatedDistribution::mixture(&[(w, a.clone()), (1.0 - w, b.clone())]).unwrap();
            let ea = check_correlated(&inst.game, &inst.types, &a).unwrap().eta;
            let eb = check_correlated(&inst.game, &inst.types, &b).unwrap().eta;
            let em = check_correlated(&inst.game, &inst.types, &mix).unwrap().eta;
            assert!(em <= w * ea + (1.0 - w) * eb + 1e-12);
        }
    }

    #[test]
    fn eta_equals_swap_regret_of_the_learners() {
        let mut rng = derived_rng(6, 0);
        let inst = random_large_game(4, 3, 0.25, 1, &mut rng).unwrap();
        let params = nr_params(0.25, 4, 3, 1.0, 1e-3, 0.1, 40, Family::Swap).unwrap();
        let config = NrConfig { noiseless: true, ..NrConfig::default() };
        let out = run_nr_laplace(&inst.game, &inst.types, &params, &config, 11).unwrap();
        let d = CorrelatedDistribution::from_sequences(&out.sequences).unwrap();
        let eta = check_correlated(&inst.game, &inst.types, &d).unwrap().eta;
        let rho = (0..4)
            .map(|i| regret(&out.sequences[i], &out.true_losses[i], Family::Swap).unwrap())
            .fold(0.0, f64::max);
        assert!((eta - inst.game.utility_bound() * rho).abs() < 1e-9);
    }

    #[test]
    fn sampled_estimate_brackets_the_exact_value() {
        let mut rng = derived_rng(7, 0);
        let inst = random_large_game(3, 2, 0.5, 1, &mut rng).unwrap();
        let d = random_dist(&mut rng, 2, 3, 2);
        let exact = check_correlated(&inst.game, &inst.types, &d).unwrap().eta;
        let s = estimate_equilibrium(&inst.game, &inst.types, &d, Concept::Correlated, 20_000, &mut rng).unwrap();
        assert!((s.report.eta - exact).abs() <= s.half_width);
    }

    #[test]
    fn too_many_players_for_enumeration() {
        let g = table_game(vec![vec![0.5; 1 << 11]; 11], 2);
        let d = CorrelatedDistribution { rounds: vec![vec![vec![0.5, 0.5]; 11]], weights: vec![1.0] };
        assert!(matches!(check_correlated(&g, &[0; 11], &d), Err(Error::CapExceeded(_))));
    }
}
