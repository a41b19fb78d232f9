//! Property suites over randomly generated games, streams and loss
//! sequences.

use jointdp::counters::{bm, PartialSumTable};
use jointdp::equilibria::check_pure_nash;
use jointdp::games::{
    expected_utilities_enumerate, expected_utilities_sampled, make_beach_mountain, make_query_game,
    random_congestion_game, random_large_game, Game, ENUMERATION_CAP,
};
use jointdp::noregret::{
    hedge_rate, regret, regret_for_map, scale_loss, Family, Learner,
};
use jointdp::pbr::{noiseless_params, run_pbr, InitPolicy, PbrConfig};
use jointdp::rng::derived_rng;
use proptest::prelude::*;
use rand::Rng;

fn random_profile<R: Rng>(rng: &mut R, counts: &[usize]) -> Vec<usize> {
    counts.iter().map(|&k| rng.gen_range(0..k)).collect()
}

fn random_simplex<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let z: f64 = v.iter().sum();
    v.iter().map(|x| x / z).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn potential_tracks_unilateral_cost_changes(seed in any::<u64>(), n in 2usize..12, m in 1usize..5) {
        let mut rng = derived_rng(seed, 0);
        let g = random_congestion_game(n, m, 2, 3, 0.3, &mut rng).unwrap();
        let types: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let counts: Vec<usize> = types.iter().map(|&t| g.actions(t).len()).collect();
        let mut profile = random_profile(&mut rng, &counts);
        let i = rng.gen_range(0..n);
        let before_cost = g.cost(&types, &profile, i).unwrap();
        let before_phi = g.potential(&g.facility_counts(&types, &profile).unwrap());
        profile[i] = rng.gen_range(0..counts[i]);
        let after_cost = g.cost(&types, &profile, i).unwrap();
        let after_phi = g.potential(&g.facility_counts(&types, &profile).unwrap());
        prop_assert!(((after_phi - before_phi) - (after_cost - before_cost)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn facility_loads_count_memberships(seed in any::<u64>(), n in 1usize..15, m in 1usize..6) {
        let mut rng = derived_rng(seed, 0);
        let g = random_congestion_game(n, m, 1, 4, 0.2, &mut rng).unwrap();
        let types = vec![0; n];
        let profile = random_profile(&mut rng, &vec![g.actions(0).len(); n]);
        let y = g.facility_counts(&types, &profile).unwrap();
        let total: usize = profile.iter().map(|&a| g.action(0, a).len()).sum();
        prop_assert_eq!(y.total(), total);
        prop_assert!(y.0.iter().all(|&c| c <= n));
    }

    #[test]
    fn random_large_games_respect_lambda(seed in any::<u64>(), n in 2usize..7, k in 2usize..4) {
        let mut rng = derived_rng(seed, 0);
        let lambda = 1.0 / n as f64;
        let inst = random_large_game(n, k, lambda, 2, &mut rng).unwrap();
        let g = &inst.game;
        let mut profile = random_profile(&mut rng, &vec![k; n]);
        let i = rng.gen_range(0..n);
        let before: Vec<f64> = (0..n).map(|l| g.utility(&inst.types, &profile, l)).collect();
        profile[i] = rng.gen_range(0..k);
        for l in (0..n).filter(|&l| l != i) {
            let u = g.utility(&inst.types, &profile, l);
            prop_assert!((u - before[l]).abs() <= g.largeness() + 1e-12);
            prop_assert!((0.0..=g.utility_bound()).contains(&u));
        }
    }

    #[test]
    fn query_players_move_at_most_one_over_n(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = derived_rng(seed, 0);
        let db: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let queries: Vec<Vec<usize>> = (0..2)
            .map(|_| (0..n).filter(|_| rng.gen::<bool>()).collect())
            .collect();
        let inst = make_query_game(&db, &queries).unwrap();
        let total = inst.types.len();
        let mut profile = random_profile(&mut rng, &vec![2; total]);
        let d = rng.gen_range(0..n);
        let before: Vec<f64> = (n..total).map(|l| inst.game.utility(&inst.types, &profile, l)).collect();
        profile[d] = 1 - profile[d];
        for (idx, l) in (n..total).enumerate() {
            let u = inst.game.utility(&inst.types, &profile, l);
            prop_assert!((u - before[idx]).abs() <= 1.0 / n as f64 + 1e-12);
        }
    }

    #[test]
    fn factorized_evaluators_equal_enumeration(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = derived_rng(seed, 0);
        let cong = random_congestion_game(n, 3, 1, 3, 0.3, &mut rng).unwrap();
        let large = random_large_game(n, 3, 0.2, 2, &mut rng).unwrap();
        let db: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let query = make_query_game(&db, &[(0..n).collect()]).unwrap();
        let beach = make_beach_mountain(n, true).unwrap();
        let games: Vec<(&dyn Game, Vec<usize>)> = vec![
            (&cong, vec![0; n]),
            (&large.game, large.types.clone()),
            (&query.game, query.types.clone()),
            (&beach.game, beach.types.clone()),
        ];
        for (g, types) in games {
            let mixed: Vec<Vec<f64>> = types
                .iter()
                .enumerate()
                .map(|(i, &t)| random_simplex(&mut rng, g.num_actions(i, t)))
                .collect();
            for i in 0..types.len() {
                let f = g.factorized_expected_utilities(&types, &mixed, i).expect("factorized form");
                let e = expected_utilities_enumerate(g, &types, &mixed, i, ENUMERATION_CAP).unwrap();
                for (a, b) in f.iter().zip(&e) {
                    prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
                }
            }
        }
    }

    #[test]
    fn noiseless_dynamics_are_exact_best_responses(seed in any::<u64>(), n in 3usize..12, m in 1usize..4) {
        let mut rng = derived_rng(seed, 0);
        let g = random_congestion_game(n, m, 2, 3, 0.4, &mut rng).unwrap();
        let types: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let alpha = 0.05;
        let params = noiseless_params(m, n, g.sensitivity().max(0.05), alpha).unwrap();
        let config = PbrConfig { init: InitPolicy::Random, record_trace: true };
        let out = run_pbr(&g, &types, &params, &config, &mut rng).unwrap();
        let profile = out.result.clone().expect("noiseless runs with a generous p do not fail");
        prop_assert!(check_pure_nash(&g, &types, &profile).unwrap().eta <= alpha + 1e-9);
        let mut cur = out.initial_profile.clone();
        for rec in out.trace.iter().filter(|r| r.moved) {
            let phi0 = g.potential(&g.facility_counts(&types, &cur).unwrap());
            cur[rec.mover] = rec.to;
            let phi1 = g.potential(&g.facility_counts(&types, &cur).unwrap());
            prop_assert!(phi0 - phi1 >= alpha - 1e-9);
        }
        prop_assert_eq!(cur, profile);
    }

    #[test]
    fn hedge_and_swap_learners_meet_their_bounds(seed in any::<u64>(), k in 2usize..6, t in 1usize..300) {
        let mut rng = derived_rng(seed, 0);
        let losses: Vec<Vec<f64>> = (0..t).map(|_| (0..k).map(|_| rng.gen()).collect()).collect();
        for family in [Family::Fixed, Family::Swap] {
            let mut learner = Learner::new(family, k, hedge_rate(k, t));
            let mut seq = Vec::new();
            for l in &losses {
                seq.push(learner.distribution().to_vec());
                learner.update(l).unwrap();
            }
            let base = (2.0 * (k as f64).ln() / t as f64).sqrt();
            let r = regret(&seq, &losses, family).unwrap();
            let bound = if family == Family::Fixed { base } else { k as f64 * base };
            prop_assert!(r <= bound + 1e-12, "{:?} regret {} > {}", family, r, bound);
        }
    }

    #[test]
    fn rescaling_divides_regret_by_three(seed in any::<u64>(), k in 2usize..6, t in 1usize..50) {
        let mut rng = derived_rng(seed, 0);
        let seq: Vec<Vec<f64>> = (0..t).map(|_| random_simplex(&mut rng, k)).collect();
        let l: Vec<Vec<f64>> = (0..t).map(|_| (0..k).map(|_| rng.gen()).collect()).collect();
        let ls: Vec<Vec<f64>> = l.iter().map(|r| r.iter().map(|&x| scale_loss(x)).collect()).collect();
        let f: Vec<usize> = (0..k).map(|_| rng.gen_range(0..k)).collect();
        let a = regret_for_map(&seq, &l, &f).unwrap();
        let b = regret_for_map(&seq, &ls, &f).unwrap();
        prop_assert!((a - 3.0 * b).abs() < 1e-9);
        for family in [Family::Fixed, Family::Swap] {
            let a = regret(&seq, &l, family).unwrap();
            let b = regret(&seq, &ls, family).unwrap();
            prop_assert!((a - 3.0 * b).abs() < 1e-9);
        }
    }

    #[test]
    fn bounded_noise_costs_at_most_twice_its_size(seed in any::<u64>(), k in 2usize..6, t in 1usize..50, big in any::<bool>()) {
        let zeta = if big { 0.05 } else { 0.01 };
        let mut rng = derived_rng(seed, 0);
        let seq: Vec<Vec<f64>> = (0..t).map(|_| random_simplex(&mut rng, k)).collect();
        let l: Vec<Vec<f64>> = (0..t).map(|_| (0..k).map(|_| rng.gen()).collect()).collect();
        let noisy: Vec<Vec<f64>> = l
            .iter()
            .map(|r| r.iter().map(|&x| x + if rng.gen() { zeta } else { -zeta }).collect())
            .collect();
        for family in [Family::Fixed, Family::Swap] {
            let truth = regret(&seq, &l, family).unwrap();
            let seen = regret(&seq, &noisy, family).unwrap();
            prop_assert!(truth <= seen + 2.0 * zeta + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn sampled_utilities_are_close(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = derived_rng(seed, 0);
        let inst = random_large_game(n, 3, 0.3, 1, &mut rng).unwrap();
        let mixed: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut rng, 3)).collect();
        let exact = expected_utilities_enumerate(&inst.game, &inst.types, &mixed, 0, ENUMERATION_CAP).unwrap();
        let est = expected_utilities_sampled(&inst.game, &inst.types, &mixed, 0, 200_000, &mut rng);
        for (a, b) in exact.iter().zip(&est) {
            prop_assert!((a - b).abs() < 0.01);
        }
    }
}

/// Every stream over {−1, 0, 1} of length at most 8, counted without noise,
/// gives exact prefix sums.
#[test]
fn noiseless_counter_is_exact_on_all_short_streams() {
    let mut rng = derived_rng(0, 0);
    for len in 1..=8usize {
        for code in 0..3usize.pow(len as u32) {
            let stream: Vec<i8> = (0..len).map(|p| (code / 3usize.pow(p as u32) % 3) as i8 - 1).collect();
            let counts = bm(&stream, f64::INFINITY, &mut rng).unwrap();
            let mut acc = 0i64;
            for (s, c) in stream.iter().zip(&counts) {
                acc += i64::from(*s);
                assert_eq!(*c, acc as f64, "stream {stream:?}");
            }
        }
    }
}

/// Each dyadic cell receives exactly one noise draw: the number of written
/// cells is `Σ_j ⌊len/2^j⌋`.
#[test]
fn every_cell_is_written_once() {
    let mut rng = derived_rng(1, 0);
    for len in [1usize, 7, 64, 1000] {
        let mut table = PartialSumTable::new(len, 1.0).unwrap();
        for _ in 0..len {
            table.push(1, &mut rng).unwrap();
        }
        let expected: u64 = (0..table.levels()).map(|j| (len >> j) as u64).sum();
        assert_eq!(table.cells_written(), expected);
    }
}
