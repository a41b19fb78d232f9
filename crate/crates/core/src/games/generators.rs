use rand::seq::SliceRandom;
use rand::Rng;

use super::general::{AggregativeModel, QueryModel, UtilityModel};
use super::{CongestionGame, Facility, GeneralGame, Instance, TypeActions};
use crate::error::{Error, Result};

pub const BEACH: usize = 0;
pub const MOUNTAIN: usize = 1;

fn nearest_gap(h: usize, x: f64, offset: f64) -> f64 {
    let step = 2f64.powi(-(h as i32 - 1));
    let count = 1usize << (h - 1);
    (0..count)
        .map(|r| (x - (offset + r as f64 * step)).abs())
        .fold(f64::INFINITY, f64::min)
}

/// `f_h(x) = 1 − min_r |x − (2^{−(h+1)} + r·2^{−(h−1)})|`, `r < 2^{h−1}`.
pub fn query_f(h: usize, x: f64) -> f64 {
    1.0 - nearest_gap(h, x, 2f64.powi(-(h as i32 + 1)))
}

/// `g_h(x) = 1 − min_r |x − (2^{−h} + 2^{−(h+1)} + r·2^{−(h−1)})|`.
pub fn query_g(h: usize, x: f64) -> f64 {
    1.0 - nearest_gap(h, x, 2f64.powi(-(h as i32)) + 2f64.powi(-(h as i32 + 1)))
}

/// Utility of a bit-`h` query player choosing `a` when the answer is `x`.
pub fn query_bit_utility(h: usize, a: usize, x: f64) -> f64 {
    if a == 0 {
        query_f(h, x)
    } else {
        query_g(h, x)
    }
}

/// The query-release game for `database` and subset-sum `queries`: `n` data
/// players paid for matching their bit, followed by `⌈log₂ n⌉` bit players per
/// query. Returns the game with its type profile.
pub fn make_query_game(database: &[bool], queries: &[Vec<usize>]) -> Result<Instance<GeneralGame>> {
    let n = database.len();
    if n == 0 {
        return Err(Error::validation("database must be nonempty"));
    }
    for q in queries {
        if let Some(&i) = q.iter().find(|&&i| i >= n) {
            return Err(Error::validation(format!("query references data player {i} of {n}")));
        }
    }
    let bits = (usize::BITS - (n - 1).leading_zeros()).max(1) as usize;
    let mut type_names = vec!["d0".to_string(), "d1".to_string()];
    for j in 0..queries.len() {
        for h in 1..=bits {
            type_names.push(format!("q{j}_{h}"));
        }
    }
    let model = QueryModel { n_data: n, queries: queries.to_vec(), bits };
    let mut types: Vec<usize> = database.iter().map(|&d| usize::from(d)).collect();
    for j in 0..queries.len() {
        for h in 1..=bits {
            types.push(model.query_type(j, h));
        }
    }
    let game = GeneralGame::new(
        vec![2; types.len()],
        type_names,
        UtilityModel::Query(model),
        1.0,
        1.0 / n as f64,
    )?;
    Ok(Instance { game, types })
}

/// Beach/Mountain game: `n_ones` copies of player 1 (type `P1`, utility 0)
/// and a final player 2 of type `S` (social) or `A` (antisocial). Player 2
/// gets ½ for Beach plus 1 for matching (S) or mismatching (A) the majority of
/// player 1's actions. The returned type profile has player 2 social.
pub fn make_beach_mountain(n_ones: usize, with_antisocial: bool) -> Result<Instance<GeneralGame>> {
    if n_ones == 0 {
        return Err(Error::validation("at least one copy of player 1 is required"));
    }
    let mut type_names = vec!["P1".to_string(), "S".to_string()];
    if with_antisocial {
        type_names.push("A".to_string());
    }
    let game = GeneralGame::new(
        vec![2; n_ones + 1],
        type_names,
        UtilityModel::BeachMountain { n_ones },
        1.5,
        1.0,
    )?;
    let mut types = vec![0; n_ones];
    types.push(1);
    Ok(Instance { game, types })
}

/// `m` parallel links with `ℓ(y) = y/n` and one type choosing any single link.
pub fn parallel_links(n: usize, m: usize) -> Result<CongestionGame> {
    let loss: Vec<f64> = (0..=n).map(|y| y as f64 / n.max(1) as f64).collect();
    let facilities = (0..m).map(|e| Facility { name: format!("e{}", e + 1), loss: loss.clone() }).collect();
    CongestionGame::new(
        n,
        facilities,
        vec![TypeActions { name: "t".into(), actions: (0..m).map(|e| vec![e]).collect() }],
    )
}

/// Random congestion game with nondecreasing loss tables whose one-step
/// increments are uniform in `[0, max_step]`, `num_types` types, and
/// `actions_per_type` random nonempty facility subsets per type.
pub fn random_congestion_game<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    num_types: usize,
    actions_per_type: usize,
    max_step: f64,
    rng: &mut R,
) -> Result<CongestionGame> {
    if m == 0 || num_types == 0 || actions_per_type == 0 {
        return Err(Error::validation("random game dimensions must be positive"));
    }
    let facilities = (0..m)
        .map(|e| {
            let mut loss = Vec::with_capacity(n + 1);
            let mut v: f64 = rng.gen_range(0.0..=max_step.min(1.0));
            loss.push(v);
            for _ in 0..n {
                v = (v + rng.gen_range(0.0..=max_step)).min(1.0);
                loss.push(v);
            }
            Facility { name: format!("e{}", e + 1), loss }
        })
        .collect();
    let ids: Vec<usize> = (0..m).collect();
    let types = (0..num_types)
        .map(|t| TypeActions {
            name: format!("t{}", t + 1),
            actions: (0..actions_per_type)
                .map(|_| {
                    let size = rng.gen_range(1..=m);
                    ids.choose_multiple(rng, size).copied().collect()
                })
                .collect(),
        })
        .collect();
    CongestionGame::new(n, facilities, types)
}

/// Random `λ`-large game with `k` actions per player and `num_types` types
/// assigned uniformly at random. Utilities lie in `[0, 1]`.
pub fn random_large_game<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    lambda: f64,
    num_types: usize,
    rng: &mut R,
) -> Result<Instance<GeneralGame>> {
    if n == 0 || k == 0 || num_types == 0 {
        return Err(Error::validation("random game dimensions must be positive"));
    }
    if !(lambda > 0.0) {
        return Err(Error::validation("largeness must be positive"));
    }
    let others = n.saturating_sub(1).max(1) as f64;
    let own_weight = (1.0 - lambda * others).max(0.0);
    let declared = (1.0 - own_weight) / others;
    let own = (0..num_types).map(|_| (0..k).map(|_| rng.gen()).collect()).collect();
    let pair = (0..num_types)
        .map(|_| (0..k).map(|_| (0..k).map(|_| rng.gen()).collect()).collect())
        .collect();
    let type_names = (0..num_types).map(|t| format!("t{}", t + 1)).collect();
    let types = (0..n).map(|_| rng.gen_range(0..num_types)).collect();
    let game = GeneralGame::new(
        vec![k; n],
        type_names,
        UtilityModel::Aggregative(AggregativeModel { own, pair, own_weight }),
        1.0,
        declared,
    )?;
    Ok(Instance { game, types })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{spot_check_largeness, Game};
    use crate::rng::derived_rng;

    #[test]
    fn query_functions_peak_at_their_centres() {
        assert!((query_f(1, 0.25) - 1.0).abs() < 1e-15);
        assert!((query_g(1, 0.75) - 1.0).abs() < 1e-15);
        assert!((query_f(2, 0.125) - 1.0).abs() < 1e-15);
        assert!((query_f(2, 0.625) - 1.0).abs() < 1e-15);
        assert!((query_g(2, 0.375) - 1.0).abs() < 1e-15);
        assert!((query_f(1, 0.75) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn data_players_are_paid_for_matching() {
        let inst = make_query_game(&[true, false, true], &[vec![0, 1, 2]]).unwrap();
        let g = &inst.game;
        assert_eq!(g.num_players(), 3 + 2);
        let mut profile = vec![1, 0, 1, 0, 0];
        assert_eq!(g.utility(&inst.types, &profile, 0), 1.0);
        profile[0] = 0;
        assert_eq!(g.utility(&inst.types, &profile, 0), 0.0);
        // answer 1/3 with bit player 1 on action 0
        let x = 1.0 / 3.0;
        assert!((g.utility(&inst.types, &profile, 3) - query_f(1, x)).abs() < 1e-15);
    }

    #[test]
    fn query_game_is_one_over_n_large() {
        let db: Vec<bool> = (0..8).map(|i| i % 3 == 0).collect();
        let inst = make_query_game(&db, &[vec![0, 1, 2, 3], vec![2, 5, 7]]).unwrap();
        let mut rng = derived_rng(3, 0);
        let worst = spot_check_largeness(&inst.game, &inst.types, 2000, &mut rng);
        assert!(worst <= 1.0 / 8.0 + 1e-12);
    }

    #[test]
    fn beach_mountain_payoffs() {
        let inst = make_beach_mountain(1, true).unwrap();
        let g = &inst.game;
        let s = [0, 1];
        let a = [0, 2];
        assert_eq!(g.utility(&s, &[BEACH, BEACH], 1), 1.5);
        assert_eq!(g.utility(&s, &[BEACH, MOUNTAIN], 1), 0.0);
        assert_eq!(g.utility(&a, &[BEACH, MOUNTAIN], 1), 1.0);
        assert_eq!(g.utility(&a, &[MOUNTAIN, BEACH], 1), 1.5);
        assert_eq!(g.utility(&s, &[MOUNTAIN, BEACH], 0), 0.0);
    }

    #[test]
    fn random_large_game_respects_declared_lambda() {
        let mut rng = derived_rng(5, 1);
        let inst = random_large_game(6, 3, 0.05, 2, &mut rng).unwrap();
        let worst = spot_check_largeness(&inst.game, &inst.types, 3000, &mut rng);
        assert!(worst <= inst.game.largeness() + 1e-12);
    }
}
