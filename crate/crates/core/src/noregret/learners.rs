use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regret family a learner targets and a verifier measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Fixed,
    Swap,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Family::Fixed),
            "swap" => Ok(Family::Swap),
            other => Err(Error::validation(format!("unknown regret family {other:?}"))),
        }
    }
}

/// Hedge learning rate `√(2 ln k / T)`.
pub fn hedge_rate(k: usize, horizon: usize) -> f64 {
    if k <= 1 || horizon == 0 {
        return 0.0;
    }
    (2.0 * (k as f64).ln() / horizon as f64).sqrt()
}

/// One exponential-weights step: `π′_j ∝ π_j · exp(−rate · l_j)`.
pub fn hedge_update(pi: &[f64], losses: &[f64], rate: f64) -> Vec<f64> {
    let shift = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut out: Vec<f64> =
        pi.iter().zip(losses).map(|(&p, &l)| p * (-rate * (l - shift)).exp()).collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= z);
    out
}

/// Exponential weights kept in log space, so long runs never underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct Hedge {
    log_w: Vec<f64>,
    pi: Vec<f64>,
    rate: f64,
}

impl Hedge {
    pub fn new(k: usize, rate: f64) -> Self {
        Hedge { log_w: vec![0.0; k], pi: vec![1.0 / k as f64; k], rate }
    }

    pub fn distribution(&self) -> &[f64] {
        &self.pi
    }

    pub fn update(&mut self, losses: &[f64]) {
        for (w, &l) in self.log_w.iter_mut().zip(losses) {
            *w -= self.rate * l;
        }
        let top = self.log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for (p, &w) in self.pi.iter_mut().zip(&self.log_w) {
            *p = (w - top).exp();
            z += *p;
        }
        self.pi.iter_mut().for_each(|p| *p /= z);
    }
}

/// Swap-regret learner from `k` Hedge copies. Copy `j` sees the loss vector
/// scaled by the current weight on `j`; the played distribution is the
/// stationary distribution of the matrix whose row `j` is copy `j`'s
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapLearner {
    subs: Vec<Hedge>,
    pi: Vec<f64>,
}

impl SwapLearner {
    pub fn new(k: usize, rate: f64) -> Self {
        SwapLearner { subs: (0..k).map(|_| Hedge::new(k, rate)).collect(), pi: vec![1.0 / k as f64; k] }
    }

    pub fn distribution(&self) -> &[f64] {
        &self.pi
    }

    pub fn update(&mut self, losses: &[f64]) -> Result<()> {
        let k = self.pi.len();
        let mut scaled = vec![0.0; k];
        for (j, sub) in self.subs.iter_mut().enumerate() {
            for (s, &l) in scaled.iter_mut().zip(losses) {
                *s = self.pi[j] * l;
            }
            sub.update(&scaled);
        }
        let rows: Vec<Vec<f64>> = self.subs.iter().map(|s| s.distribution().to_vec()).collect();
        self.pi = stationary_distribution(&rows)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    Hedge(Hedge),
    Swap(SwapLearner),
}

impl Learner {
    pub fn new(family: Family, k: usize, rate: f64) -> Self {
        match family {
            Family::Fixed => Learner::Hedge(Hedge::new(k, rate)),
            Family::Swap => Learner::Swap(SwapLearner::new(k, rate)),
        }
    }

    pub fn distribution(&self) -> &[f64] {
        match self {
            Learner::Hedge(h) => h.distribution(),
            Learner::Swap(s) => s.distribution(),
        }
    }

    pub fn update(&mut self, losses: &[f64]) -> Result<()> {
        match self {
            Learner::Hedge(h) => {
                h.update(losses);
                Ok(())
            }
            Learner::Swap(s) => s.update(losses),
        }
    }
}

const POWER_TOL: f64 = 1e-12;
const POWER_CAP: usize = 10_000;

/// Stationary distribution `π = πQ` of a row-stochastic matrix.
///
/// Power iteration runs on the lazy chain `(Q + I)/2`, which has the same
/// stationary distributions and is aperiodic. If it has not converged after
/// the iteration cap, the linear system is solved directly.
pub fn stationary_distribution(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = q.len();
    if k == 0 || q.iter().any(|r| r.len() != k) {
        return Err(Error::Numeric("stationary distribution needs a square matrix".into()));
    }
    let mut pi = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    for _ in 0..POWER_CAP {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in q.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                next[j] += pi[i] * v;
            }
        }
        let residual: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        for (p, &v) in pi.iter_mut().zip(&next) {
            *p = 0.5 * (*p + v);
        }
        if residual < POWER_TOL {
            let z: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|p| *p /= z);
            return Ok(pi);
        }
    }
    stationary_direct(q)
}

/// Solves `π(Q − I) = 0, Σπ = 1` by Gaussian elimination with partial pivoting.
fn stationary_direct(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = q.len();
    // rows of the transposed system A x = rhs; the last equation is Σx = 1
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..k).map(|i| q[i][j] - if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut rhs = vec![0.0; k];
    a[k - 1] = vec![1.0; k];
    rhs[k - 1] = 1.0;
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("nonempty range");
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::Numeric("singular stationary system".into()));
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..k {
                        a[r][c] -= f * a[col][c];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
        }
    }
    let mut x: Vec<f64> = (0..k).map(|i| (rhs[i] / a[i][i]).max(0.0)).collect();
    let z: f64 = x.iter().sum();
    if !(z > 0.0) {
        return Err(Error::Numeric("stationary solve produced no mass".into()));
    }
    x.iter_mut().for_each(|v| *v /= z);
    Ok(x)
}
