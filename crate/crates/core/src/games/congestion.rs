use serde::{Deserialize, Serialize};

use super::Game;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facility {
    pub name: String,
    /// `loss[y]` is the loss when `y` players use the facility, `y = 0..=n`.
    pub loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeActions {
    pub name: String,
    /// Each action is a sorted, duplicate-free list of facility indices.
    pub actions: Vec<Vec<usize>>,
}

/// Per-facility player counts `y_e`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacilityCounts(pub Vec<usize>);

impl FacilityCounts {
    pub fn zeros(m: usize) -> Self {
        FacilityCounts(vec![0; m])
    }

    pub fn add_action(&mut self, action: &[usize]) {
        for &e in action {
            self.0[e] += 1;
        }
    }

    pub fn remove_action(&mut self, action: &[usize]) {
        for &e in action {
            self.0[e] -= 1;
        }
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CongestionGame {
    n: usize,
    facilities: Vec<Facility>,
    types: Vec<TypeActions>,
    type_names: Vec<String>,
    sigma: f64,
}

impl CongestionGame {
    pub fn new(n: usize, facilities: Vec<Facility>, types: Vec<TypeActions>) -> Result<Self> {
        if facilities.is_empty() {
            return Err(Error::validation("a congestion game needs at least one facility"));
        }
        if types.is_empty() {
            return Err(Error::validation("a congestion game needs at least one type"));
        }
        for f in &facilities {
            if f.loss.len() != n + 1 {
                return Err(Error::validation(format!(
                    "facility {:?} has a loss table of length {}, expected {}",
                    f.name,
                    f.loss.len(),
                    n + 1
                )));
            }
            if let Some(v) = f.loss.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::validation(format!(
                    "facility {:?} has loss {v} outside [0, 1]",
                    f.name
                )));
            }
        }
        let m = facilities.len();
        let mut types = types;
        for t in &mut types {
            if t.actions.is_empty() {
                return Err(Error::validation(format!("type {:?} has no actions", t.name)));
            }
            for a in &mut t.actions {
                a.sort_unstable();
                a.dedup();
                if a.is_empty() {
                    return Err(Error::validation(format!("type {:?} has an empty action", t.name)));
                }
                if let Some(&e) = a.iter().find(|&&e| e >= m) {
                    return Err(Error::validation(format!(
                        "type {:?} references facility {e} of {m}",
                        t.name
                    )));
                }
            }
        }
        let type_names = types.iter().map(|t| t.name.clone()).collect();
        let sigma = facilities
            .iter()
            .flat_map(|f| f.loss.windows(2).map(|w| (w[1] - w[0]).abs()))
            .fold(0.0, f64::max);
        Ok(CongestionGame { n, facilities, types, type_names, sigma })
    }

    /// Number of facilities `m`.
    pub fn m(&self) -> usize {
        self.facilities.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn facilities(&self) -> &[Facility] {
        &self.facilities
    }

    pub fn types(&self) -> &[TypeActions] {
        &self.types
    }

    pub fn actions(&self, ty: usize) -> &[Vec<usize>] {
        &self.types[ty].actions
    }

    pub fn action(&self, ty: usize, idx: usize) -> &[usize] {
        &self.types[ty].actions[idx]
    }

    pub fn facility_index(&self, name: &str) -> Option<usize> {
        self.facilities.iter().position(|f| f.name == name)
    }

    /// `ℓ_e(y)` at an integer count.
    pub fn loss(&self, e: usize, y: usize) -> f64 {
        self.facilities[e].loss[y]
    }

    /// `ℓ_e` at a real count: linear interpolation between table entries,
    /// with the count clamped to `[0, n]`. The extension keeps the table's
    /// Lipschitz constant.
    pub fn loss_at(&self, e: usize, y: f64) -> f64 {
        let table = &self.facilities[e].loss;
        let y = if y.is_nan() { 0.0 } else { y.clamp(0.0, self.n as f64) };
        let lo = y.floor() as usize;
        if lo >= self.n {
            return table[self.n];
        }
        let frac = y - lo as f64;
        table[lo] + frac * (table[lo + 1] - table[lo])
    }

    /// Largest one-step change of any loss table.
    pub fn sensitivity(&self) -> f64 {
        self.sigma
    }

    pub fn facility_counts(&self, types: &[usize], profile: &[usize]) -> Result<FacilityCounts> {
        super::validate_profile(self, types, profile)?;
        Ok(self.counts_unchecked(types, profile))
    }

    pub(crate) fn counts_unchecked(&self, types: &[usize], profile: &[usize]) -> FacilityCounts {
        let mut y = FacilityCounts::zeros(self.m());
        for (&t, &a) in types.iter().zip(profile) {
            y.add_action(self.action(t, a));
        }
        y
    }

    /// Cost `Σ_{e ∈ a_i} ℓ_e(y_e)` of `player` at `profile`.
    pub fn cost(&self, types: &[usize], profile: &[usize], player: usize) -> Result<f64> {
        if player >= types.len() {
            return Err(Error::validation(format!("no player {player}")));
        }
        let y = self.facility_counts(types, profile)?;
        Ok(self.action_cost(self.action(types[player], profile[player]), &y))
    }

    /// Cost of an action already counted in `y`.
    pub fn action_cost(&self, action: &[usize], y: &FacilityCounts) -> f64 {
        action.iter().map(|&e| self.loss(e, y.0[e])).sum()
    }

    /// Cost a player currently on `current` would pay after switching to
    /// `candidate`, given counts `y` that include `current`.
    pub fn deviation_cost(&self, current: &[usize], candidate: &[usize], y: &FacilityCounts) -> f64 {
        candidate
            .iter()
            .map(|&e| {
                let extra = usize::from(current.binary_search(&e).is_err());
                self.loss(e, y.0[e] + extra)
            })
            .sum()
    }

    /// Rosenthal potential `Σ_e Σ_{i=1}^{y_e} ℓ_e(i)`.
    pub fn potential(&self, y: &FacilityCounts) -> f64 {
        y.0.iter()
            .enumerate()
            .map(|(e, &ye)| self.facilities[e].loss[1..=ye].iter().sum::<f64>())
            .sum()
    }
}

impl Game for CongestionGame {
    fn num_players(&self) -> usize {
        self.n
    }

    fn type_names(&self) -> &[String] {
        &self.type_names
    }

    fn num_actions(&self, _player: usize, ty: usize) -> usize {
        self.types[ty].actions.len()
    }

    /// Utility view `Σ_{e ∈ a_i} (1 − ℓ_e(y_e))`, bounded by `m`.
    fn utility(&self, types: &[usize], profile: &[usize], player: usize) -> f64 {
        let y = self.counts_unchecked(types, profile);
        self.action(types[player], profile[player])
            .iter()
            .map(|&e| 1.0 - self.loss(e, y.0[e]))
            .sum()
    }

    fn payoff(&self, types: &[usize], profile: &[usize], player: usize) -> f64 {
        let y = self.counts_unchecked(types, profile);
        self.m() as f64 - self.action_cost(self.action(types[player], profile[player]), &y)
    }

    fn utility_bound(&self) -> f64 {
        self.m() as f64
    }

    fn largeness(&self) -> f64 {
        self.m() as f64 * self.sigma
    }

    fn factorized_expected_utilities(
        &self,
        types: &[usize],
        mixed: &[Vec<f64>],
        player: usize,
    ) -> Option<Vec<f64>> {
        let n = types.len();
        let m = self.m();
        // expected loss on each facility when the player joins it
        let mut joined = vec![0.0; m];
        for (e, slot) in joined.iter_mut().enumerate() {
            // distribution of the number of other players on e
            let mut dist = vec![0.0; n];
            dist[0] = 1.0;
            let mut len = 1;
            for l in (0..n).filter(|&l| l != player) {
                let p: f64 = self
                    .actions(types[l])
                    .iter()
                    .zip(&mixed[l])
                    .filter(|(a, _)| a.binary_search(&e).is_ok())
                    .map(|(_, w)| w)
                    .sum();
                if p == 0.0 {
                    continue;
                }
                for c in (0..len).rev() {
                    let v = dist[c];
                    dist[c + 1] += v * p;
                    dist[c] = v * (1.0 - p);
                }
                len += 1;
            }
            *slot = dist[..len]
                .iter()
                .enumerate()
                .map(|(c, &w)| w * self.loss(e, c + 1))
                .sum();
        }
        Some(
            self.actions(types[player])
                .iter()
                .map(|a| a.iter().map(|&e| 1.0 - joined[e]).sum())
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(n: usize) -> Vec<f64> {
        (0..=n).map(|y| y as f64 / 10.0).collect()
    }

    fn two_facility(n: usize) -> CongestionGame {
        CongestionGame::new(
            n,
            vec![
                Facility { name: "e1".into(), loss: linear(n) },
                Facility { name: "e2".into(), loss: linear(n) },
            ],
            vec![TypeActions { name: "t".into(), actions: vec![vec![0], vec![1], vec![0, 1]] }],
        )
        .unwrap()
    }

    #[test]
    fn cost_is_sum_over_chosen_facilities() {
        let g = two_facility(10);
        // counts (2, 1): players on {e1}, {e1}, {e2}
        let types = [0, 0, 0];
        assert!((g.cost(&types, &[0, 0, 1], 0).unwrap() - 0.2).abs() < 1e-15);
        // a player on both facilities with counts (2, 1)
        assert!((g.cost(&[0, 0], &[2, 0], 0).unwrap() - 0.3).abs() < 1e-15);
        // alone on e1 with zero loss
        let solo = CongestionGame::new(
            1,
            vec![Facility { name: "e1".into(), loss: vec![0.0, 0.0] }],
            vec![TypeActions { name: "t".into(), actions: vec![vec![0]] }],
        )
        .unwrap();
        assert_eq!(solo.cost(&[0], &[0], 0).unwrap(), 0.0);
    }

    #[test]
    fn counts_match_memberships() {
        let g = two_facility(10);
        assert_eq!(g.facility_counts(&[0, 0, 0], &[0, 0, 0]).unwrap().0, vec![3, 0]);
        assert_eq!(g.facility_counts(&[0, 0, 0], &[0, 1, 2]).unwrap().0, vec![2, 2]);
        assert_eq!(g.facility_counts(&[], &[]).unwrap().0, vec![0, 0]);
    }

    #[test]
    fn potential_examples() {
        let g = two_facility(10);
        assert!((g.potential(&FacilityCounts(vec![2, 1])) - 0.4).abs() < 1e-15);
        assert_eq!(g.potential(&FacilityCounts(vec![0, 0])), 0.0);
        let flat = CongestionGame::new(
            5,
            vec![Facility { name: "e".into(), loss: vec![1.0; 6] }],
            vec![TypeActions { name: "t".into(), actions: vec![vec![0]] }],
        )
        .unwrap();
        assert_eq!(flat.potential(&FacilityCounts(vec![5])), 5.0);
    }

    #[test]
    fn sensitivity_examples() {
        assert!((two_facility(10).sensitivity() - 0.1).abs() < 1e-15);
        let mk = |loss: Vec<f64>| {
            CongestionGame::new(
                loss.len() - 1,
                vec![Facility { name: "e".into(), loss }],
                vec![TypeActions { name: "t".into(), actions: vec![vec![0]] }],
            )
            .unwrap()
        };
        assert_eq!(mk(vec![0.3; 4]).sensitivity(), 0.0);
        assert!((mk(vec![0.0, 0.5, 0.6]).sensitivity() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let g = two_facility(3);
        assert!(matches!(g.cost(&[0, 0], &[0, 3], 0), Err(Error::Validation(_))));
        assert!(matches!(g.cost(&[0, 1], &[0, 0], 0), Err(Error::Validation(_))));
        let bad = CongestionGame::new(
            2,
            vec![Facility { name: "e".into(), loss: vec![0.0, 1.5, 0.0] }],
            vec![TypeActions { name: "t".into(), actions: vec![vec![0]] }],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn interpolated_loss_matches_table_at_integers() {
        let g = two_facility(10);
        for y in 0..=10 {
            assert_eq!(g.loss_at(0, y as f64), g.loss(0, y));
        }
        assert!((g.loss_at(0, 2.5) - 0.25).abs() < 1e-15);
        assert_eq!(g.loss_at(0, -3.0), 0.0);
        assert_eq!(g.loss_at(0, 40.0), 1.0);
    }

    #[test]
    fn factorized_utilities_match_enumeration() {
        let g = two_facility(3);
        let types = [0, 0, 0];
        let mixed = vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.1, 0.3], vec![0.1, 0.1, 0.8]];
        let fast = g.factorized_expected_utilities(&types, &mixed, 1).unwrap();
        let slow = super::super::expected_utilities_enumerate(&g, &types, &mixed, 1, 1000).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
