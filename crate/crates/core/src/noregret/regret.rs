use rand::Rng;
use serde::Serialize;

use super::Family;
use crate::error::{Error, Result};
use crate::games::sample_index;

/// Distributions `π_1..π_T` played by one player.
pub type StrategySequence = Vec<Vec<f64>>;

/// Loss vectors `l_1..l_T`.
pub type LossMatrix = Vec<Vec<f64>>;

/// `Λ(π, l) = Σ_j π^j l^j`.
pub fn expected_loss(pi: &[f64], l: &[f64]) -> f64 {
    pi.iter().zip(l).map(|(p, x)| p * x).sum()
}

fn check_shapes(seq: &[Vec<f64>], losses: &[Vec<f64>]) -> Result<()> {
    if seq.len() != losses.len() {
        return Err(Error::validation(format!(
            "sequence has {} rounds but the loss matrix has {}",
            seq.len(),
            losses.len()
        )));
    }
    if seq.iter().zip(losses).any(|(p, l)| p.len() != l.len()) {
        return Err(Error::validation("distribution and loss vector lengths differ"));
    }
    if seq.is_empty() {
        return Err(Error::validation("empty sequence"));
    }
    Ok(())
}

/// Regret against the single map `f` (`f[j]` is the replacement for `j`).
pub fn regret_for_map(seq: &[Vec<f64>], losses: &[Vec<f64>], f: &[usize]) -> Result<f64> {
    check_shapes(seq, losses)?;
    let t = seq.len() as f64;
    let mut total = 0.0;
    for (pi, l) in seq.iter().zip(losses) {
        let base = expected_loss(pi, l);
        let moved: f64 = pi.iter().enumerate().map(|(j, p)| p * l[f[j]]).sum();
        total += base - moved;
    }
    Ok(total / t)
}

/// Regret of `seq` against `losses` for the whole family.
///
/// Swap regret decomposes by source action: the best map sends each `j` to
/// the target with the largest weighted gain, so no enumeration is needed.
pub fn regret(seq: &[Vec<f64>], losses: &[Vec<f64>], family: Family) -> Result<f64> {
    check_shapes(seq, losses)?;
    let k = seq[0].len();
    let t = seq.len() as f64;
    match family {
        Family::Fixed => {
            let base: f64 = seq.iter().zip(losses).map(|(p, l)| expected_loss(p, l)).sum();
            let best = (0..k)
                .map(|j| losses.iter().map(|l| l[j]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            Ok((base - best) / t)
        }
        Family::Swap => {
            let mut total = 0.0;
            for j in 0..k {
                let gain = (0..k)
                    .map(|j2| seq.iter().zip(losses).map(|(p, l)| p[j] * (l[j] - l[j2])).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                total += gain;
            }
            Ok(total / t)
        }
    }
}

/// Swap regret by enumerating all `k^k` maps. Test oracle for small `k`.
pub fn swap_regret_brute_force(seq: &[Vec<f64>], losses: &[Vec<f64>]) -> Result<f64> {
    check_shapes(seq, losses)?;
    let k = seq[0].len();
    let mut f = vec![0usize; k];
    let mut best = f64::NEG_INFINITY;
    loop {
        best = best.max(regret_for_map(seq, losses, &f)?);
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok(best);
            }
            f[pos] += 1;
            if f[pos] < k {
                break;
            }
            f[pos] = 0;
            pos += 1;
        }
    }
}

/// Time average of per-round product distributions. Sampling picks a round
/// `t` with probability `weights[t]` and then each player's action
/// independently from her round-`t` distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelatedDistribution {
    /// `rounds[t][i]` is player `i`'s distribution in round `t`.
    pub rounds: Vec<Vec<Vec<f64>>>,
    pub weights: Vec<f64>,
}

impl CorrelatedDistribution {
    /// Uniform mixture over rounds of `sequences[i][t]`.
    pub fn from_sequences(sequences: &[StrategySequence]) -> Result<Self> {
        let Some(first) = sequences.first() else {
            return Err(Error::validation("no players"));
        };
        let t = first.len();
        if t == 0 {
            return Err(Error::validation("sequences have no rounds"));
        }
        if sequences.iter().any(|s| s.len() != t) {
            return Err(Error::validation("sequences have different lengths"));
        }
        let rounds = (0..t).map(|r| sequences.iter().map(|s| s[r].clone()).collect()).collect();
        Ok(CorrelatedDistribution { rounds, weights: vec![1.0 / t as f64; t] })
    }

    /// A single pure profile.
    pub fn point(profile: &[usize], actions: &[usize]) -> Self {
        let round = profile
            .iter()
            .zip(actions)
            .map(|(&a, &k)| (0..k).map(|j| if j == a { 1.0 } else { 0.0 }).collect())
            .collect();
        CorrelatedDistribution { rounds: vec![round], weights: vec![1.0] }
    }

    /// Mixture `Σ w_r D_r` of several distributions over the same players.
    pub fn mixture(parts: &[(f64, CorrelatedDistribution)]) -> Result<Self> {
        let mut rounds = Vec::new();
        let mut weights = Vec::new();
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if !(total > 0.0) {
            return Err(Error::validation("mixture weights must have positive mass"));
        }
        for (w, d) in parts {
            for (r, dw) in d.rounds.iter().zip(&d.weights) {
                rounds.push(r.clone());
                weights.push(w * dw / total);
            }
        }
        Ok(CorrelatedDistribution { rounds, weights })
    }

    pub fn num_players(&self) -> usize {
        self.rounds.first().map_or(0, |r| r.len())
    }

    /// Marginal distribution of player `i`.
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let k = self.rounds[0][i].len();
        let mut out = vec![0.0; k];
        for (r, w) in self.rounds.iter().zip(&self.weights) {
            for (o, p) in out.iter_mut().zip(&r[i]) {
                *o += w * p;
            }
        }
        out
    }

    /// Exact probability of a pure profile.
    pub fn probability(&self, profile: &[usize]) -> f64 {
        self.rounds
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * r.iter().zip(profile).map(|(d, &a)| d[a]).product::<f64>())
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let t = sample_index(&self.weights, rng);
        self.rounds[t].iter().map(|d| sample_index(d, rng)).collect()
    }
}

/// Builds `Π_C` from per-player sequences of equal length.
pub fn correlated_distribution(sequences: &[StrategySequence]) -> Result<CorrelatedDistribution> {
    CorrelatedDistribution::from_sequences(sequences)
}
