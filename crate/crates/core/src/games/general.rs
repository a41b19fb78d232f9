use super::Game;
use crate::error::{Error, Result};

/// How a [`GeneralGame`] computes utilities.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilityModel {
    /// Explicit tables: `tables[player][type][profile_index]`, with profiles
    /// indexed in mixed radix, player 0 most significant.
    Table { tables: Vec<Vec<Vec<f64>>> },
    Query(QueryModel),
    /// `n_ones` copies of player 1 followed by a single player 2.
    BeachMountain { n_ones: usize },
    Aggregative(AggregativeModel),
}

/// Query-release game: `n_data` data players followed by one player per
/// `(query, bit)` pair, query-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryModel {
    pub n_data: usize,
    pub queries: Vec<Vec<usize>>,
    pub bits: usize,
}

impl QueryModel {
    /// `(query, bit)` of a query type, with `bit` starting at 1.
    pub fn query_role(&self, ty: usize) -> Option<(usize, usize)> {
        ty.checked_sub(2).map(|r| (r / self.bits, r % self.bits + 1))
    }

    pub fn query_type(&self, query: usize, bit: usize) -> usize {
        2 + query * self.bits + (bit - 1)
    }

    /// Answer `q_j(a) = (1/n) Σ_{i ∈ S_j} a_i`.
    pub fn answer(&self, query: usize, profile: &[usize]) -> f64 {
        let s: usize = self.queries[query].iter().map(|&i| profile[i]).sum();
        s as f64 / self.n_data as f64
    }
}

/// Random large game with utility
/// `w·own[τ][a_i] + (1−w)/(n−1) · Σ_{l≠i} pair[τ][a_i][a_l]`.
/// A unilateral deviation moves another player's utility by at most
/// `(1−w)/(n−1)`, which is the declared `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregativeModel {
    pub own: Vec<Vec<f64>>,
    pub pair: Vec<Vec<Vec<f64>>>,
    pub own_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralGame {
    actions: Vec<usize>,
    type_names: Vec<String>,
    model: UtilityModel,
    bound: f64,
    lambda: f64,
}

impl GeneralGame {
    pub fn new(
        actions: Vec<usize>,
        type_names: Vec<String>,
        model: UtilityModel,
        bound: f64,
        lambda: f64,
    ) -> Result<Self> {
        if actions.is_empty() || actions.contains(&0) {
            return Err(Error::validation("every player needs at least one action"));
        }
        if type_names.is_empty() {
            return Err(Error::validation("a game needs at least one type"));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::validation(format!("utility bound {bound} must be positive")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::validation(format!("largeness {lambda} must be nonnegative")));
        }
        if let UtilityModel::Table { tables } = &model {
            let size = actions
                .iter()
                .try_fold(1usize, |acc, &k| acc.checked_mul(k))
                .ok_or_else(|| Error::CapExceeded("profile space overflows".into()))?;
            if tables.len() != actions.len() {
                return Err(Error::validation("one utility table per player is required"));
            }
            for per_type in tables {
                if per_type.len() != type_names.len() {
                    return Err(Error::validation("one utility table per type is required"));
                }
                for t in per_type {
                    if t.len() != size {
                        return Err(Error::validation(format!(
                            "utility table has {} entries, expected {size}",
                            t.len()
                        )));
                    }
                    if let Some(v) = t.iter().find(|v| !(0.0..=bound).contains(*v)) {
                        return Err(Error::validation(format!("utility {v} outside [0, {bound}]")));
                    }
                }
            }
        }
        Ok(GeneralGame { actions, type_names, model, bound, lambda })
    }

    pub fn model(&self) -> &UtilityModel {
        &self.model
    }

    pub fn actions_per_player(&self) -> &[usize] {
        &self.actions
    }

    fn profile_index(&self, profile: &[usize]) -> usize {
        profile.iter().zip(&self.actions).fold(0, |acc, (&a, &k)| acc * k + a)
    }
}

/// Distribution of a sum of independent Bernoulli variables.
fn bernoulli_sum(ps: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut dist = vec![1.0];
    for p in ps {
        dist.push(0.0);
        for c in (0..dist.len() - 1).rev() {
            let v = dist[c];
            dist[c + 1] += v * p;
            dist[c] = v * (1.0 - p);
        }
    }
    dist
}

impl Game for GeneralGame {
    fn num_players(&self) -> usize {
        self.actions.len()
    }

    fn type_names(&self) -> &[String] {
        &self.type_names
    }

    fn num_actions(&self, player: usize, _ty: usize) -> usize {
        self.actions[player]
    }

    fn utility(&self, types: &[usize], profile: &[usize], player: usize) -> f64 {
        let ty = types[player];
        let a = profile[player];
        match &self.model {
            UtilityModel::Table { tables } => tables[player][ty][self.profile_index(profile)],
            UtilityModel::Query(q) => match q.query_role(ty) {
                None => f64::from(u8::from(a == ty)),
                Some((j, h)) => super::query_bit_utility(h, a, q.answer(j, profile)),
            },
            UtilityModel::BeachMountain { n_ones } => {
                if player < *n_ones {
                    return 0.0;
                }
                let mountains = profile[..*n_ones].iter().filter(|&&b| b == super::MOUNTAIN).count();
                let majority =
                    if 2 * mountains > *n_ones { super::MOUNTAIN } else { super::BEACH };
                beach_mountain_payoff(ty, a, majority)
            }
            UtilityModel::Aggregative(m) => {
                let n = types.len();
                let social: f64 = if n > 1 {
                    (0..n).filter(|&l| l != player).map(|l| m.pair[ty][a][profile[l]]).sum::<f64>()
                        / (n - 1) as f64
                } else {
                    0.0
                };
                m.own_weight * m.own[ty][a] + (1.0 - m.own_weight) * social
            }
        }
    }

    fn utility_bound(&self) -> f64 {
        self.bound
    }

    fn largeness(&self) -> f64 {
        self.lambda
    }

    fn factorized_expected_utilities(
        &self,
        types: &[usize],
        mixed: &[Vec<f64>],
        player: usize,
    ) -> Option<Vec<f64>> {
        let ty = types[player];
        match &self.model {
            UtilityModel::Table { .. } => None,
            UtilityModel::Query(q) => Some(match q.query_role(ty) {
                None => (0..2).map(|a| f64::from(u8::from(a == ty))).collect(),
                Some((j, h)) => {
                    let dist = bernoulli_sum(q.queries[j].iter().map(|&i| mixed[i][1]));
                    (0..2)
                        .map(|a| {
                            dist.iter()
                                .enumerate()
                                .map(|(c, &w)| {
                                    w * super::query_bit_utility(h, a, c as f64 / q.n_data as f64)
                                })
                                .sum()
                        })
                        .collect()
                }
            }),
            UtilityModel::BeachMountain { n_ones } => {
                if player < *n_ones {
                    return Some(vec![0.0; 2]);
                }
                let dist = bernoulli_sum(mixed[..*n_ones].iter().map(|p| p[super::MOUNTAIN]));
                let p_mountain: f64 =
                    dist.iter().enumerate().filter(|(c, _)| 2 * c > *n_ones).map(|(_, w)| w).sum();
                Some(
                    (0..2)
                        .map(|a| {
                            p_mountain * beach_mountain_payoff(ty, a, super::MOUNTAIN)
                                + (1.0 - p_mountain) * beach_mountain_payoff(ty, a, super::BEACH)
                        })
                        .collect(),
                )
            }
            UtilityModel::Aggregative(m) => {
                let n = types.len();
                let k = self.actions[player];
                Some(
                    (0..k)
                        .map(|a| {
                            let social: f64 = if n > 1 {
                                (0..n)
                                    .filter(|&l| l != player)
                                    .map(|l| {
                                        mixed[l].iter().enumerate().map(|(b, &w)| w * m.pair[ty][a][b]).sum::<f64>()
                                    })
                                    .sum::<f64>()
                                    / (n - 1) as f64
                            } else {
                                0.0
                            };
                            m.own_weight * m.own[ty][a] + (1.0 - m.own_weight) * social
                        })
                        .collect(),
                )
            }
        }
    }
}

/// Payoff of player 2 with type index `ty` (0 = P1, 1 = S, 2 = A) playing
/// `a` against player-1 action `other`.
fn beach_mountain_payoff(ty: usize, a: usize, other: usize) -> f64 {
    let beach = if a == super::BEACH { 0.5 } else { 0.0 };
    let bonus = match ty {
        1 if a == other => 1.0,
        2 if a != other => 1.0,
        _ => 0.0,
    };
    beach + bonus
}
