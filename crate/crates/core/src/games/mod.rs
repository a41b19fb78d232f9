//! Game models.
//!
//! Two families are supported: congestion games, where a player's cost is a
//! sum of per-facility losses that depend only on facility loads, and general
//! finite games with a bounded utility oracle and a declared largeness `λ`.
//! Both are exposed through the [`Game`] trait, so verifiers, learners and the
//! mediator harness are written once.
//!
//! Players are indexed `0..n`. A player's type is an index into the game's
//! type list and an action is an index into that player's action list.

mod congestion;
mod general;
mod generators;
mod routing;
pub mod spec;

pub use congestion::{CongestionGame, Facility, FacilityCounts, TypeActions};
pub use general::{AggregativeModel, GeneralGame, QueryModel, UtilityModel};
pub use generators::{
    make_beach_mountain, make_query_game, parallel_links, query_bit_utility, query_f, query_g,
    random_congestion_game, random_large_game, BEACH, MOUNTAIN,
};
pub use routing::{make_routing_game, Edge, Terminals, DEFAULT_PATH_CAP};

use rand::Rng;

use crate::error::{Error, Result};

/// One action index per player.
pub type ActionProfile = Vec<usize>;

/// Default cap on the number of opponent profiles enumerated exactly.
pub const ENUMERATION_CAP: u64 = 1 << 22;

pub trait Game: Send + Sync {
    /// Maximum number of players the game is defined for.
    fn num_players(&self) -> usize;

    fn type_names(&self) -> &[String];

    fn num_actions(&self, player: usize, ty: usize) -> usize;

    /// Utility of `player` at `profile`. Callers must pass a validated profile.
    fn utility(&self, types: &[usize], profile: &[usize], player: usize) -> f64;

    /// Payoff compared by pure-strategy deviation checks. Defaults to the
    /// utility; congestion games use `U − cost` so that gains are cost
    /// reductions, the quantity best-response dynamics controls.
    fn payoff(&self, types: &[usize], profile: &[usize], player: usize) -> f64 {
        self.utility(types, profile, player)
    }

    /// Upper bound `U` on every utility value (utilities lie in `[0, U]`).
    fn utility_bound(&self) -> f64;

    /// Declared largeness `λ`.
    fn largeness(&self) -> f64;

    /// Exact expected utility of each of `player`'s actions against the
    /// product distribution `mixed` (entry `player` is ignored), when the game
    /// admits a structure cheaper than enumeration.
    fn factorized_expected_utilities(
        &self,
        _types: &[usize],
        _mixed: &[Vec<f64>],
        _player: usize,
    ) -> Option<Vec<f64>> {
        None
    }

    fn type_index(&self, name: &str) -> Option<usize> {
        self.type_names().iter().position(|t| t == name)
    }
}

/// A game together with a realized type profile.
#[derive(Debug, Clone)]
pub struct Instance<G> {
    pub game: G,
    pub types: Vec<usize>,
}

/// Either supported game family.
#[derive(Debug, Clone)]
pub enum AnyGame {
    Congestion(CongestionGame),
    General(GeneralGame),
}

impl AnyGame {
    pub fn as_congestion(&self) -> Option<&CongestionGame> {
        match self {
            AnyGame::Congestion(g) => Some(g),
            AnyGame::General(_) => None,
        }
    }
}

impl Game for AnyGame {
    fn num_players(&self) -> usize {
        match self {
            AnyGame::Congestion(g) => g.num_players(),
            AnyGame::General(g) => g.num_players(),
        }
    }
    fn type_names(&self) -> &[String] {
        match self {
            AnyGame::Congestion(g) => g.type_names(),
            AnyGame::General(g) => g.type_names(),
        }
    }
    fn num_actions(&self, player: usize, ty: usize) -> usize {
        match self {
            AnyGame::Congestion(g) => g.num_actions(player, ty),
            AnyGame::General(g) => g.num_actions(player, ty),
        }
    }
    fn utility(&self, types: &[usize], profile: &[usize], player: usize) -> f64 {
        match self {
            AnyGame::Congestion(g) => g.utility(types, profile, player),
            AnyGame::General(g) => g.utility(types, profile, player),
        }
    }
    fn payoff(&self, types: &[usize], profile: &[usize], player: usize) -> f64 {
        match self {
            AnyGame::Congestion(g) => g.payoff(types, profile, player),
            AnyGame::General(g) => g.payoff(types, profile, player),
        }
    }
    fn utility_bound(&self) -> f64 {
        match self {
            AnyGame::Congestion(g) => g.utility_bound(),
            AnyGame::General(g) => g.utility_bound(),
        }
    }
    fn largeness(&self) -> f64 {
        match self {
            AnyGame::Congestion(g) => g.largeness(),
            AnyGame::General(g) => g.largeness(),
        }
    }
    fn factorized_expected_utilities(
        &self,
        types: &[usize],
        mixed: &[Vec<f64>],
        player: usize,
    ) -> Option<Vec<f64>> {
        match self {
            AnyGame::Congestion(g) => g.factorized_expected_utilities(types, mixed, player),
            AnyGame::General(g) => g.factorized_expected_utilities(types, mixed, player),
        }
    }
}

/// Checks that `types` and `profile` are well formed for `game`.
pub fn validate_profile<G: Game + ?Sized>(game: &G, types: &[usize], profile: &[usize]) -> Result<()> {
    validate_types(game, types)?;
    if profile.len() != types.len() {
        return Err(Error::validation(format!(
            "profile has {} entries for {} players",
            profile.len(),
            types.len()
        )));
    }
    for (i, (&ty, &a)) in types.iter().zip(profile).enumerate() {
        let k = game.num_actions(i, ty);
        if a >= k {
            return Err(Error::validation(format!(
                "player {i} plays action {a} but type {} has {k} actions",
                game.type_names()[ty]
            )));
        }
    }
    Ok(())
}

pub fn validate_types<G: Game + ?Sized>(game: &G, types: &[usize]) -> Result<()> {
    if types.len() > game.num_players() {
        return Err(Error::validation(format!(
            "{} players exceed the game's capacity of {}",
            types.len(),
            game.num_players()
        )));
    }
    let nt = game.type_names().len();
    if let Some(&bad) = types.iter().find(|&&t| t >= nt) {
        return Err(Error::validation(format!("unknown type index {bad}")));
    }
    Ok(())
}

/// Resolves type names into indices.
pub fn resolve_types<G: Game + ?Sized>(game: &G, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| game.type_index(n).ok_or_else(|| Error::validation(format!("unknown type {n:?}"))))
        .collect()
}

/// Action counts of every player under `types`.
pub fn action_counts<G: Game + ?Sized>(game: &G, types: &[usize]) -> Vec<usize> {
    types.iter().enumerate().map(|(i, &t)| game.num_actions(i, t)).collect()
}

/// Exact expected utility of each of `player`'s actions when the others play
/// the independent mixed strategies in `mixed`. Uses the game's factorized
/// form when available and falls back to enumeration of opponent profiles.
pub fn expected_utilities<G: Game + ?Sized>(
    game: &G,
    types: &[usize],
    mixed: &[Vec<f64>],
    player: usize,
) -> Result<Vec<f64>> {
    if let Some(v) = game.factorized_expected_utilities(types, mixed, player) {
        return Ok(v);
    }
    expected_utilities_enumerate(game, types, mixed, player, ENUMERATION_CAP)
}

/// Expected utilities by summing over every opponent profile with positive
/// probability. Errors when the opponent profile space exceeds `cap`.
pub fn expected_utilities_enumerate<G: Game + ?Sized>(
    game: &G,
    types: &[usize],
    mixed: &[Vec<f64>],
    player: usize,
    cap: u64,
) -> Result<Vec<f64>> {
    let n = types.len();
    let k_own = game.num_actions(player, types[player]);
    let others: Vec<usize> = (0..n).filter(|&l| l != player).collect();
    let mut space: u64 = 1;
    for &l in &others {
        space = space.saturating_mul(mixed[l].len() as u64);
    }
    if space > cap {
        return Err(Error::CapExceeded(format!(
            "{space} opponent profiles exceed the enumeration cap {cap}"
        )));
    }
    let mut out = vec![0.0; k_own];
    let mut profile = vec![0usize; n];
    // odometer over the opponents' supports
    let supports: Vec<Vec<usize>> = others
        .iter()
        .map(|&l| (0..mixed[l].len()).filter(|&a| mixed[l][a] > 0.0).collect())
        .collect();
    if supports.iter().any(|s| s.is_empty()) {
        return Err(Error::validation("mixed strategy with empty support"));
    }
    let mut cursor = vec![0usize; others.len()];
    loop {
        let mut weight = 1.0;
        for (slot, &l) in others.iter().enumerate() {
            let a = supports[slot][cursor[slot]];
            profile[l] = a;
            weight *= mixed[l][a];
        }
        for (j, o) in out.iter_mut().enumerate() {
            profile[player] = j;
            *o += weight * game.utility(types, &profile, player);
        }
        let mut slot = 0;
        loop {
            if slot == others.len() {
                return Ok(out);
            }
            cursor[slot] += 1;
            if cursor[slot] < supports[slot].len() {
                break;
            }
            cursor[slot] = 0;
            slot += 1;
        }
    }
}

/// Unbiased Monte Carlo estimate of the expected utilities from `samples`
/// opponent profiles.
pub fn expected_utilities_sampled<G: Game + ?Sized, R: Rng + ?Sized>(
    game: &G,
    types: &[usize],
    mixed: &[Vec<f64>],
    player: usize,
    samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    let n = types.len();
    let k_own = game.num_actions(player, types[player]);
    let mut out = vec![0.0; k_own];
    let mut profile = vec![0usize; n];
    for _ in 0..samples {
        for l in (0..n).filter(|&l| l != player) {
            profile[l] = sample_index(&mixed[l], rng);
        }
        for (j, o) in out.iter_mut().enumerate() {
            profile[player] = j;
            *o += game.utility(types, &profile, player);
        }
    }
    let s = samples.max(1) as f64;
    out.iter_mut().for_each(|o| *o /= s);
    out
}

/// Samples an index from a probability vector.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding slack: last index with positive mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Largest utility change to any other player caused by a unilateral
/// deviation, over `samples` random `(profile, deviator, deviation)` draws.
pub fn spot_check_largeness<G: Game + ?Sized, R: Rng + ?Sized>(
    game: &G,
    types: &[usize],
    samples: usize,
    rng: &mut R,
) -> f64 {
    let n = types.len();
    if n < 2 {
        return 0.0;
    }
    let counts = action_counts(game, types);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut profile: Vec<usize> = counts.iter().map(|&k| rng.gen_range(0..k)).collect();
        let i = rng.gen_range(0..n);
        let before: Vec<f64> = (0..n).map(|l| game.utility(types, &profile, l)).collect();
        profile[i] = rng.gen_range(0..counts[i]);
        for l in (0..n).filter(|&l| l != i) {
            worst = worst.max((game.utility(types, &profile, l) - before[l]).abs());
        }
    }
    worst
}
