//! Laplace noise and the binary mechanism for continual counting.
//!
//! A [`PartialSumTable`] holds noisy dyadic partial sums of a `{−1, 0, 1}`
//! stream. The cell at level `j`, column `c` covers stream positions
//! `(c−1)·2^j + 1 ..= c·2^j` and is written once, at time `c·2^j`. The count at
//! time `t` adds the cells selected by the binary digits of `t`. Setting
//! `ε′ = ∞` disables noise, in which case every count is exact.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Draws from `Lap(b)` by inverting the CDF. Requires `b > 0`.
pub fn laplace_sample<R: Rng + ?Sized>(rng: &mut R, b: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Parameter(format!("Laplace scale {b} must be positive and finite")));
    }
    Ok(laplace(rng, b))
}

pub(crate) fn laplace<R: Rng + ?Sized>(rng: &mut R, b: f64) -> f64 {
    // u uniform on (-1/2, 1/2); exclude the endpoint that maps to infinity
    let mut u: f64 = rng.gen::<f64>() - 0.5;
    while u == -0.5 {
        u = rng.gen::<f64>() - 0.5;
    }
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// CDF of `Lap(b)` at `x`.
pub fn laplace_cdf(x: f64, b: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / b).exp()
    } else {
        1.0 - 0.5 * (-x / b).exp()
    }
}

/// Number of table levels for a stream of length `len`: `⌊log₂ len⌋ + 1`.
pub fn table_levels(len: usize) -> usize {
    if len == 0 {
        0
    } else {
        (usize::BITS - len.leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialSumTable {
    len: usize,
    eps_prime: f64,
    stream: Vec<i8>,
    /// `noisy[j][c−1]`; level `j` has `len >> j` columns.
    noisy: Vec<Vec<f64>>,
    exact: Vec<Vec<i64>>,
    cells_written: u64,
}

impl PartialSumTable {
    /// Empty table for a stream of `len` bits with per-cell noise `Lap(1/ε′)`.
    /// Pass `f64::INFINITY` to disable noise.
    pub fn new(len: usize, eps_prime: f64) -> Result<Self> {
        if !(eps_prime > 0.0) {
            return Err(Error::Parameter(format!("ε′ = {eps_prime} must be positive")));
        }
        let levels = table_levels(len);
        Ok(PartialSumTable {
            len,
            eps_prime,
            stream: Vec::with_capacity(len),
            noisy: (0..levels).map(|j| vec![0.0; len >> j]).collect(),
            exact: (0..levels).map(|j| vec![0; len >> j]).collect(),
            cells_written: 0,
        })
    }

    pub fn stream_len(&self) -> usize {
        self.len
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }

    pub fn noise_enabled(&self) -> bool {
        self.eps_prime.is_finite()
    }

    pub fn levels(&self) -> usize {
        self.noisy.len()
    }

    /// Number of stream bits written so far.
    pub fn time(&self) -> usize {
        self.stream.len()
    }

    pub fn cells_written(&self) -> u64 {
        self.cells_written
    }

    /// Noisy cell at level `j`, column `c` (1-based).
    pub fn cell(&self, j: usize, c: usize) -> Option<f64> {
        self.noisy.get(j).and_then(|row| c.checked_sub(1).and_then(|i| row.get(i))).copied()
    }

    pub fn exact_cell(&self, j: usize, c: usize) -> Option<i64> {
        self.exact.get(j).and_then(|row| c.checked_sub(1).and_then(|i| row.get(i))).copied()
    }

    /// Appends `bit` at time `t = time() + 1` and writes the cells at levels
    /// `0..=i`, where `i` is the position of the lowest set bit of `t`.
    /// Returns the number of cells written.
    pub fn push<R: Rng + ?Sized>(&mut self, bit: i8, rng: &mut R) -> Result<usize> {
        if !(-1..=1).contains(&bit) {
            return Err(Error::validation(format!("stream bit {bit} not in {{-1, 0, 1}}")));
        }
        let t = self.stream.len() + 1;
        if t > self.len {
            return Err(Error::OutOfRange(format!("time {t} beyond stream length {}", self.len)));
        }
        self.stream.push(bit);
        let top = t.trailing_zeros() as usize;
        for j in 0..=top {
            let width = 1usize << j;
            let exact: i64 = self.stream[t - width..t].iter().map(|&b| i64::from(b)).sum();
            let noise = if self.noise_enabled() { laplace(rng, 1.0 / self.eps_prime) } else { 0.0 };
            let c = t >> j;
            self.exact[j][c - 1] = exact;
            self.noisy[j][c - 1] = exact as f64 + noise;
            self.cells_written += 1;
        }
        Ok(top + 1)
    }

    /// Noisy count of the first `t` stream bits.
    pub fn count(&self, t: usize) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.dyadic(t).map(|(j, c)| self.noisy[j][c - 1]).sum())
    }

    /// Exact prefix sum of the first `t` stream bits.
    pub fn exact_count(&self, t: usize) -> Result<i64> {
        self.check_time(t)?;
        Ok(self.stream[..t].iter().map(|&b| i64::from(b)).sum())
    }

    /// Noisy count at the current time.
    pub fn current(&self) -> f64 {
        self.count(self.time()).unwrap_or(0.0)
    }

    fn check_time(&self, t: usize) -> Result<()> {
        if t > self.stream.len() {
            return Err(Error::OutOfRange(format!(
                "count at time {t} requested after {} updates",
                self.stream.len()
            )));
        }
        Ok(())
    }

    /// Cells `(level, column)` summed for the count at time `t`.
    fn dyadic(&self, t: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..self.levels()).filter(move |&j| t >> j & 1 == 1).map(move |j| (j, t >> j))
    }

    /// Cells whose value depends on stream position `t`: at each level the
    /// column `⌈t / 2^j⌉`, if that column exists.
    pub fn cells_covering(&self, t: usize) -> Vec<(usize, usize)> {
        (0..self.levels())
            .map(|j| (j, t.div_ceil(1 << j)))
            .filter(|&(j, c)| c >= 1 && c <= self.len >> j)
            .collect()
    }
}

/// Batch binary mechanism: the noisy count after every bit of `stream`.
/// Draws noise in the same order as repeated [`PartialSumTable::push`].
pub fn bm<R: Rng + ?Sized>(stream: &[i8], eps_prime: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut table = PartialSumTable::new(stream.len(), eps_prime)?;
    let mut out = Vec::with_capacity(stream.len());
    for &b in stream {
        table.push(b, rng)?;
        out.push(table.current());
    }
    Ok(out)
}

/// High-probability error bound `√(8 ln T · ln(2/β′)) / ε′` on every count of
/// a length-`T` binary mechanism. Requires `β′ ∈ [2/T, 1]`.
pub fn error_bound(t: usize, beta_prime: f64, eps_prime: f64) -> Result<f64> {
    if t < 2 {
        return Err(Error::Parameter(format!("stream length {t} must be at least 2")));
    }
    let lower = 2.0 / t as f64;
    if !(beta_prime <= 1.0 && beta_prime >= lower * (1.0 - 1e-12)) {
        return Err(Error::Parameter(format!("β′ = {beta_prime} outside [{lower}, 1]")));
    }
    if !(eps_prime > 0.0) {
        return Err(Error::Parameter(format!("ε′ = {eps_prime} must be positive")));
    }
    Ok((8.0 * (t as f64).ln() * (2.0 / beta_prime).ln()).sqrt() / eps_prime)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derived_rng;

    fn noiseless(stream: &[i8]) -> PartialSumTable {
        let mut rng = derived_rng(0, 0);
        let mut t = PartialSumTable::new(stream.len(), f64::INFINITY).unwrap();
        for &b in stream {
            t.push(b, &mut rng).unwrap();
        }
        t
    }

    #[test]
    fn laplace_moments_and_tail() {
        let mut rng = derived_rng(11, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| laplace_sample(&mut rng, 1.0).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        let ys: Vec<f64> = (0..n).map(|_| laplace_sample(&mut rng, 2.0).unwrap()).collect();
        let m2 = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - m2).powi(2)).sum::<f64>() / n as f64;
        assert!((var - 8.0).abs() < 0.1, "variance {var}");
        let cut = 20f64.ln();
        let tail = xs.iter().filter(|x| x.abs() > cut).count() as f64 / n as f64;
        assert!((tail - 0.05).abs() < 0.01, "tail {tail}");
    }

    #[test]
    fn laplace_rejects_bad_scale() {
        let mut rng = derived_rng(0, 0);
        assert!(matches!(laplace_sample(&mut rng, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(laplace_sample(&mut rng, -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn push_writes_levels_up_to_lowest_set_bit() {
        let mut rng = derived_rng(0, 0);
        let mut t = PartialSumTable::new(8, 1.0).unwrap();
        let written: Vec<usize> = (0..5).map(|_| t.push(1, &mut rng).unwrap()).collect();
        assert_eq!(written, vec![1, 2, 1, 3, 1]);
        assert_eq!(t.cells_written(), 8);
    }

    #[test]
    fn noiseless_cells_are_exact_sums() {
        let t = noiseless(&[1, 1, 0, 1]);
        assert_eq!(t.cell(2, 1), Some(3.0));
        assert_eq!(t.cell(1, 2), Some(1.0));
        // never-written cells stay zero
        let u = noiseless(&[1, 1, 1]);
        assert_eq!(u.cell(1, 1), Some(2.0));
        assert_eq!(u.cell(0, 3), Some(1.0));
    }

    #[test]
    fn noiseless_counts() {
        let t = noiseless(&[1, 1, 0, 1, -1, 1]);
        assert_eq!(t.count(6).unwrap(), 3.0);
        assert_eq!(t.count(1).unwrap(), 1.0);
        let mut rng = derived_rng(0, 0);
        assert_eq!(
            bm(&[1, 1, 0, 1, -1, 1], f64::INFINITY, &mut rng).unwrap(),
            vec![1.0, 2.0, 2.0, 3.0, 2.0, 3.0]
        );
        assert_eq!(bm(&[0; 9], f64::INFINITY, &mut rng).unwrap(), vec![0.0; 9]);
    }

    #[test]
    fn counting_past_the_last_update_is_an_error() {
        let t = noiseless(&[1, 0]);
        assert!(matches!(t.count(3), Err(Error::OutOfRange(_))));
        let mut full = noiseless(&[1]);
        assert!(full.push(1, &mut derived_rng(0, 0)).is_err());
    }

    #[test]
    fn error_bound_examples() {
        let e = error_bound(1024, 0.05, 1.0).unwrap();
        let oracle = (8.0 * 6.931_471_805_599_453_f64 * 3.688_879_454_113_936).sqrt();
        assert!((e - oracle).abs() < 1e-9);
        assert!((e - 14.30).abs() < 0.01);
        assert!((error_bound(1024, 0.05, 2.0).unwrap() - e / 2.0).abs() < 1e-12);
        assert!(error_bound(1024, 2.0 / 1024.0, 1.0).is_ok());
        assert!(error_bound(1024, 1.0 / 1024.0, 1.0).is_err());
    }

    #[test]
    fn covering_cells_per_position() {
        let t = PartialSumTable::new(8, 1.0).unwrap();
        assert_eq!(t.cells_covering(5), vec![(0, 5), (1, 3), (2, 2), (3, 1)]);
        let u = PartialSumTable::new(6, 1.0).unwrap();
        // level 2 has a single column covering 1..=4
        assert_eq!(u.cells_covering(5), vec![(0, 5), (1, 3)]);
    }
}
