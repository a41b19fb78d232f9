use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{expected_utilities_enumerate, expected_utilities_sampled, Game, ENUMERATION_CAP};

/// `l ↦ (l + 1)/3`, mapping `[0, 1]` into `[1/3, 2/3]`.
pub fn scale_loss(l: f64) -> f64 {
    (l + 1.0) / 3.0
}

pub fn scale_losses(losses: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    losses
        .iter()
        .map(|row| {
            row.iter()
                .map(|&l| {
                    if (0.0..=1.0).contains(&l) {
                        Ok(scale_loss(l))
                    } else {
                        Err(Error::validation(format!("loss {l} outside [0, 1]")))
                    }
                })
                .collect()
        })
        .collect()
}

/// How expected utilities against a mixed profile are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluator {
    /// Exact: the game's factorized form when it has one, else enumeration.
    Auto,
    /// Exact summation over opponent profiles, refused beyond the cap.
    Enumerate { cap: u64 },
    /// Exact structured form; errors for games without one.
    Factorized,
    /// Unbiased estimate from `samples` opponent profiles. Outside the
    /// accuracy and privacy analysis.
    MonteCarlo { samples: usize },
}

impl Evaluator {
    pub fn is_exact(&self) -> bool {
        !matches!(self, Evaluator::MonteCarlo { .. })
    }

    pub fn enumerate() -> Self {
        Evaluator::Enumerate { cap: ENUMERATION_CAP }
    }
}

/// Expected utility of each of `player`'s actions under `evaluator`.
pub fn player_expected_utilities<G: Game + ?Sized, R: Rng + ?Sized>(
    game: &G,
    types: &[usize],
    mixed: &[Vec<f64>],
    player: usize,
    evaluator: Evaluator,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match evaluator {
        Evaluator::Auto => crate::games::expected_utilities(game, types, mixed, player),
        Evaluator::Enumerate { cap } => expected_utilities_enumerate(game, types, mixed, player, cap),
        Evaluator::Factorized => game
            .factorized_expected_utilities(types, mixed, player)
            .ok_or_else(|| Error::validation("this game has no factorized evaluator")),
        Evaluator::MonteCarlo { samples } => {
            Ok(expected_utilities_sampled(game, types, mixed, player, samples, rng))
        }
    }
}

/// Loss vector `l^j = 1 − E[u(τ_i, (j, a_{−i}))] / U` of one player.
pub fn player_losses<G: Game + ?Sized, R: Rng + ?Sized>(
    game: &G,
    types: &[usize],
    mixed: &[Vec<f64>],
    player: usize,
    evaluator: Evaluator,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let u = game.utility_bound();
    Ok(player_expected_utilities(game, types, mixed, player, evaluator, rng)?
        .into_iter()
        .map(|v| (1.0 - v / u).clamp(0.0, 1.0))
        .collect())
}

/// Loss vectors of every player against the mixed profile.
pub fn expected_losses<G: Game + ?Sized, R: Rng + ?Sized>(
    game: &G,
    types: &[usize],
    mixed: &[Vec<f64>],
    evaluator: Evaluator,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    (0..types.len()).map(|i| player_losses(game, types, mixed, i, evaluator, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{GeneralGame, UtilityModel};
    use crate::rng::derived_rng;

    #[test]
    fn scaling_examples() {
        assert!((scale_loss(0.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((scale_loss(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((scale_loss(0.5) - 0.5).abs() < 1e-15);
        assert!(scale_losses(&[vec![1.5]]).is_err());
    }

    #[test]
    fn matching_against_uniform_opponent() {
        // u = 1 when actions match
        let g = GeneralGame::new(
            vec![2, 2],
            vec!["t".into()],
            UtilityModel::Table { tables: vec![vec![vec![1.0, 0.0, 0.0, 1.0]]; 2] },
            1.0,
            1.0,
        )
        .unwrap();
        let mixed = vec![vec![0.5, 0.5]; 2];
        let l = expected_losses(&g, &[0, 0], &mixed, Evaluator::enumerate(), &mut derived_rng(0, 0)).unwrap();
        assert_eq!(l, vec![vec![0.5, 0.5]; 2]);
    }
}
