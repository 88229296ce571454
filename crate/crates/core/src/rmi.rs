//! Contingency tables, counting tables with fixed margins, and the reduced
//! mutual information between a community division and a block assignment.
//!
//! For a table `c_gh` with row sums `a_g`, column sums `b_h` and total `n`,
//!
//! ```text
//!   M = (1/n) log[ n! prod c_gh! / (prod a_g! prod b_h!) ] - (1/n) log Omega(a, b)
//! ```
//!
//! where `Omega(a, b)` is the number of non-negative integer tables with those
//! margins. `M` vanishes for a single block and for all-singleton blocks.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::blocks::BlockAssignment;
use crate::error::{Error, Result};
use crate::partition::{ln_factorial, Partition};
use crate::sampler::SampleEnsemble;

/// Default largest `n` for which tables are counted exactly.
pub const DEFAULT_EXACT_THRESHOLD: usize = 40;

/// Community-by-block count matrix with its margins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    /// Builds a table from a dense row-major matrix with no empty rows or columns.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidParameter("table must be a nonempty rectangle".into()));
        }
        let counts: Vec<u64> = rows.iter().flatten().copied().collect();
        let row_sums: Vec<u64> = rows.iter().map(|row| row.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..c).map(|j| rows.iter().map(|row| row[j]).sum()).collect();
        if row_sums.contains(&0) || col_sums.contains(&0) {
            return Err(Error::InvalidParameter("table has an empty row or column".into()));
        }
        let total = row_sums.iter().sum();
        Ok(Self {
            rows: r,
            cols: c,
            counts,
            row_sums,
            col_sums,
            total,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, g: usize, h: usize) -> u64 {
        self.counts[g * self.cols + h]
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.cols).map(<[u64]>::to_vec).collect()
    }

    /// The mutual-information part `log[n! prod c! / (prod a! prod b!)]`,
    /// before division by `n`.
    fn log_count_ratio(&self) -> f64 {
        // Grouped so that a single column cancels exactly.
        let cells: f64 = self.counts.iter().map(|&c| ln_factorial(c)).sum();
        let rows: f64 = self.row_sums.iter().map(|&a| ln_factorial(a)).sum();
        let cols: f64 = self.col_sums.iter().map(|&b| ln_factorial(b)).sum();
        (cells - rows) + (ln_factorial(self.total) - cols)
    }
}

/// Counts nodes by (community, block).
pub fn contingency(communities: &Partition, blocks: &BlockAssignment) -> Result<ContingencyTable> {
    contingency_from_labels(
        communities.labels(),
        communities.community_count(),
        blocks.labels(),
        blocks.block_count(),
    )
}

pub(crate) fn contingency_from_labels(g: &[u32], k: usize, h: &[u32], q: usize) -> Result<ContingencyTable> {
    if g.len() != h.len() {
        return Err(Error::SizeMismatch {
            expected: g.len(),
            found: h.len(),
        });
    }
    let mut counts = vec![0u64; k * q];
    let mut row_sums = vec![0u64; k];
    let mut col_sums = vec![0u64; q];
    for (&r, &c) in g.iter().zip(h) {
        counts[r as usize * q + c as usize] += 1;
        row_sums[r as usize] += 1;
        col_sums[c as usize] += 1;
    }
    Ok(ContingencyTable {
        rows: k,
        cols: q,
        counts,
        row_sums,
        col_sums,
        total: g.len() as u64,
    })
}

fn check_margins(a: &[u64], b: &[u64]) -> Result<u64> {
    let n: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if n != nb {
        return Err(Error::InvalidParameter(format!("margin totals differ: {n} vs {nb}")));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("empty margin".into()));
    }
    Ok(n)
}

/// Drops zero margins and orders the rest so that the shorter margin comes
/// second (it becomes the column set during enumeration).
fn normalized_margins(a: &[u64], b: &[u64]) -> (Vec<u64>, Vec<u64>) {
    let mut rows: Vec<u64> = a.iter().copied().filter(|&x| x > 0).collect();
    let mut cols: Vec<u64> = b.iter().copied().filter(|&x| x > 0).collect();
    if cols.len() > rows.len() {
        std::mem::swap(&mut rows, &mut cols);
    }
    rows.sort_unstable_by(|x, y| y.cmp(x));
    cols.sort_unstable_by(|x, y| y.cmp(x));
    (rows, cols)
}

/// Numeric type the enumerator accumulates in.
trait TableCount: Copy {
    const ZERO: Self;
    const ONE: Self;
    fn add(self, other: Self) -> Option<Self>;
}

impl TableCount for u128 {
    const ZERO: Self = 0;
    const ONE: Self = 1;
    fn add(self, other: Self) -> Option<Self> {
        self.checked_add(other)
    }
}

impl TableCount for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn add(self, other: Self) -> Option<Self> {
        Some(self + other)
    }
}

/// Depth-first enumeration, row by row, memoized on the multiset of residual
/// column sums.
struct Enumerator<'a, T> {
    rows: &'a [u64],
    memo: Vec<HashMap<Vec<u64>, T>>,
}

impl<T: TableCount> Enumerator<'_, T> {
    fn count(&mut self, row: usize, residual: &[u64]) -> Option<T> {
        if row == self.rows.len() {
            return Some(if residual.iter().all(|&x| x == 0) { T::ONE } else { T::ZERO });
        }
        if row + 1 == self.rows.len() {
            // The last row is forced to equal the residual column sums.
            let total: u64 = residual.iter().sum();
            return Some(if total == self.rows[row] { T::ONE } else { T::ZERO });
        }
        let mut key = residual.to_vec();
        key.sort_unstable();
        if let Some(&v) = self.memo[row].get(&key) {
            return Some(v);
        }
        let mut suffix = vec![0u64; key.len() + 1];
        for j in (0..key.len()).rev() {
            suffix[j] = suffix[j + 1] + key[j];
        }
        let mut current = key.clone();
        let mut acc = T::ZERO;
        self.fill(row, 0, self.rows[row], &mut current, &suffix, &mut acc)?;
        self.memo[row].insert(key, acc);
        Some(acc)
    }

    fn fill(
        &mut self,
        row: usize,
        col: usize,
        remaining: u64,
        current: &mut Vec<u64>,
        suffix: &[u64],
        acc: &mut T,
    ) -> Option<()> {
        if remaining == 0 {
            let sub = self.count(row + 1, current)?;
            *acc = acc.add(sub)?;
            return Some(());
        }
        if col == current.len() || suffix[col] < remaining {
            return Some(());
        }
        let cap = current[col].min(remaining);
        for take in 0..=cap {
            current[col] -= take;
            let res = self.fill(row, col + 1, remaining - take, current, suffix, acc);
            current[col] += take;
            res?;
        }
        Some(())
    }
}

fn enumerate<T: TableCount>(rows: &[u64], cols: &[u64]) -> Option<T> {
    let mut e = Enumerator {
        rows,
        memo: vec![HashMap::new(); rows.len()],
    };
    e.count(0, cols)
}

/// Exact number of tables with margins `a` and `b`, or `None` if it does not
/// fit in a `u128`.
pub fn count_tables(a: &[u64], b: &[u64]) -> Result<Option<u128>> {
    check_margins(a, b)?;
    let (rows, cols) = normalized_margins(a, b);
    Ok(enumerate::<u128>(&rows, &cols))
}

/// Log of the exact number of tables with margins `a` and `b`.
pub fn log_omega_exact(a: &[u64], b: &[u64], threshold: usize) -> Result<f64> {
    let n = check_margins(a, b)?;
    if n as usize > threshold {
        return Err(Error::ExactOmegaTooLarge {
            n: n as usize,
            threshold,
        });
    }
    let (rows, cols) = normalized_margins(a, b);
    if let Some(trivial) = trivial_log_omega(&rows, &cols, n) {
        return Ok(trivial);
    }
    match enumerate::<u128>(&rows, &cols) {
        Some(count) => Ok((count as f64).ln()),
        None => Ok(enumerate::<f64>(&rows, &cols).expect("f64 never overflows").ln()),
    }
}

/// Closed forms: one row or column gives a single table; all-ones margins
/// give a multinomial coefficient.
fn trivial_log_omega(a: &[u64], b: &[u64], n: u64) -> Option<f64> {
    if a.len() <= 1 || b.len() <= 1 {
        return Some(0.0);
    }
    if b.iter().all(|&x| x == 1) {
        return Some(ln_factorial(n) - a.iter().map(|&x| ln_factorial(x)).sum::<f64>());
    }
    if a.iter().all(|&x| x == 1) {
        return Some(ln_factorial(n) - b.iter().map(|&x| ln_factorial(x)).sum::<f64>());
    }
    None
}

fn ln_binomial_real(top: f64, bottom: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(top + 1.0) - ln_gamma(bottom + 1.0) - ln_gamma(top - bottom + 1.0)
}

fn ln_binomial(top: u64, bottom: u64) -> f64 {
    ln_factorial(top) - ln_factorial(bottom) - ln_factorial(top - bottom)
}

/// Closed-form approximations to `log Omega`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaEstimator {
    /// `sum_g log C(a_g+q-1, q-1) + sum_h log C(b_h+k-1, k-1) - log C(n+kq-1, kq-1)`.
    #[default]
    Good,
    /// Dirichlet-multinomial estimate with an effective column count fitted
    /// to the spread of the column sums.
    EffectiveColumns,
}

/// Approximate `log Omega(a, b)`; exact in the closed-form cases (a single
/// row or column, or all-ones margins).
pub fn log_omega_approx_with(a: &[u64], b: &[u64], estimator: OmegaEstimator) -> Result<f64> {
    let n = check_margins(a, b)?;
    let rows: Vec<u64> = a.iter().copied().filter(|&x| x > 0).collect();
    let cols: Vec<u64> = b.iter().copied().filter(|&x| x > 0).collect();
    if let Some(trivial) = trivial_log_omega(&rows, &cols, n) {
        return Ok(trivial);
    }
    let k = rows.len() as u64;
    let q = cols.len() as u64;
    Ok(match estimator {
        OmegaEstimator::Good => {
            let row_part: f64 = rows.iter().map(|&x| ln_binomial(x + q - 1, q - 1)).sum();
            let col_part: f64 = cols.iter().map(|&x| ln_binomial(x + k - 1, k - 1)).sum();
            row_part + col_part - ln_binomial(n + k * q - 1, k * q - 1)
        }
        OmegaEstimator::EffectiveColumns => {
            let nf = n as f64;
            let kf = k as f64;
            let sum_sq: f64 = cols.iter().map(|&x| (x * x) as f64).sum();
            let alpha = (nf * nf - nf + (nf * nf - sum_sq) / kf) / (sum_sq - nf);
            let row_part: f64 = rows
                .iter()
                .map(|&x| ln_binomial_real(x as f64 + alpha - 1.0, alpha - 1.0))
                .sum();
            let col_part: f64 = cols.iter().map(|&x| ln_binomial(x + k - 1, k - 1)).sum();
            row_part + col_part - ln_binomial_real(nf + kf * alpha - 1.0, kf * alpha - 1.0)
        }
    })
}

/// The default (Good) approximation of `log Omega`.
pub fn log_omega_approx(a: &[u64], b: &[u64]) -> Result<f64> {
    log_omega_approx_with(a, b, OmegaEstimator::Good)
}

/// How `log Omega` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaMode {
    /// Exact at or below the threshold, approximate above it.
    #[default]
    Auto,
    Exact,
    Approximate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OmegaConfig {
    pub mode: OmegaMode,
    pub estimator: OmegaEstimator,
    pub exact_threshold: usize,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self {
            mode: OmegaMode::Auto,
            estimator: OmegaEstimator::default(),
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
        }
    }
}

impl OmegaConfig {
    pub fn exact() -> Self {
        Self {
            mode: OmegaMode::Exact,
            ..Self::default()
        }
    }

    pub fn approximate(estimator: OmegaEstimator) -> Self {
        Self {
            mode: OmegaMode::Approximate,
            estimator,
            ..Self::default()
        }
    }

    /// Whether tables of total `n` are counted exactly.
    pub fn uses_exact(&self, n: u64) -> bool {
        match self.mode {
            OmegaMode::Exact => true,
            OmegaMode::Approximate => false,
            OmegaMode::Auto => n as usize <= self.exact_threshold,
        }
    }

    pub fn log_omega(&self, a: &[u64], b: &[u64]) -> Result<f64> {
        let n: u64 = a.iter().sum();
        if self.uses_exact(n) {
            let threshold = match self.mode {
                OmegaMode::Exact => self.exact_threshold.max(n as usize),
                _ => self.exact_threshold,
            };
            log_omega_exact(a, b, threshold)
        } else {
            log_omega_approx_with(a, b, self.estimator)
        }
    }
}

/// Reduced mutual information of one table, in nats per node.
pub fn reduced_mutual_information(table: &ContingencyTable, omega: &OmegaConfig) -> Result<f64> {
    let n = table.total() as f64;
    let log_omega = omega.log_omega(table.row_sums(), table.col_sums())?;
    Ok((table.log_count_ratio() - log_omega) / n)
}

/// Mean reduced mutual information between `blocks` and every record of the
/// ensemble (or `subsample` evenly spaced records).
pub fn mean_rmi(
    ensemble: &SampleEnsemble,
    blocks: &BlockAssignment,
    omega: &OmegaConfig,
    subsample: Option<usize>,
) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if blocks.node_count() != ensemble.node_count() {
        return Err(Error::SizeMismatch {
            expected: ensemble.node_count(),
            found: blocks.node_count(),
        });
    }
    let selected;
    let ensemble = match subsample {
        Some(cap) => {
            selected = ensemble.subsample(cap);
            &selected
        }
        None => ensemble,
    };
    let values: Vec<f64> = ensemble
        .records()
        .par_iter()
        .map(|r| reduced_mutual_information(&contingency(&r.partition, blocks)?, omega))
        .collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table(rows: &[&[u64]]) -> ContingencyTable {
        ContingencyTable::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn contingency_counts() {
        let g = Partition::new(vec![0, 0, 1]).unwrap();
        let h = BlockAssignment::new(vec![0, 1, 1]).unwrap();
        let t = contingency(&g, &h).unwrap();
        assert_eq!(t.to_rows(), vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(t.row_sums(), &[2, 1]);
        assert_eq!(t.col_sums(), &[1, 2]);

        let same = contingency(&g, &BlockAssignment::new(vec![0, 0, 1]).unwrap()).unwrap();
        assert_eq!(same.to_rows(), vec![vec![2, 0], vec![0, 1]]);

        let one = contingency(&Partition::single(3), &h).unwrap();
        assert_eq!(one.to_rows(), vec![vec![1, 2]]);

        assert!(contingency(&g, &BlockAssignment::new(vec![0, 1]).unwrap()).is_err());
    }

    #[test]
    fn exact_counts() {
        assert_eq!(count_tables(&[5], &[5]).unwrap(), Some(1));
        assert_eq!(count_tables(&[2, 1], &[2, 1]).unwrap(), Some(2));
        assert_eq!(count_tables(&[3, 3], &[3, 3]).unwrap(), Some(4));
        // multinomial: 6! / (1! 2! 3!)
        assert_eq!(count_tables(&[1; 6], &[1, 2, 3]).unwrap(), Some(60));
        assert_abs_diff_eq!(log_omega_exact(&[4], &[4], 40).unwrap(), 0.0);
        assert_abs_diff_eq!(log_omega_exact(&[2, 1], &[2, 1], 40).unwrap(), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn exact_over_threshold_is_an_error() {
        let a = [30, 20];
        let b = [25, 25];
        assert!(matches!(
            log_omega_exact(&a, &b, 40),
            Err(Error::ExactOmegaTooLarge { n: 50, .. })
        ));
    }

    #[test]
    fn mismatched_margins_rejected() {
        assert!(count_tables(&[2, 1], &[2]).is_err());
    }

    #[test]
    fn approx_matches_trivial_cases() {
        assert_eq!(log_omega_approx(&[7], &[7]).unwrap(), 0.0);
        assert_eq!(log_omega_approx(&[3, 4], &[7]).unwrap(), 0.0);
        let est = log_omega_approx(&[2, 1], &[2, 1]).unwrap();
        let exact = 2f64.ln();
        assert!(est > exact / 2.0 && est < exact * 2.0, "{est}");
    }

    #[test]
    fn rmi_two_equal_communities() {
        let t = table(&[&[3, 0], &[0, 3]]);
        let m = reduced_mutual_information(&t, &OmegaConfig::default()).unwrap();
        let lf = |x: u64| ln_factorial(x);
        let expected = (lf(6) + 2.0 * lf(3) - 4.0 * lf(3)) / 6.0 - 4f64.ln() / 6.0;
        assert_abs_diff_eq!(m, expected, epsilon = 1e-14);
    }

    #[test]
    fn rmi_limits_are_zero() {
        let single = table(&[&[3], &[2], &[4]]);
        assert_eq!(reduced_mutual_information(&single, &OmegaConfig::default()).unwrap(), 0.0);
        let singletons = table(&[&[1, 1, 0, 0, 0], &[0, 0, 1, 1, 1]]);
        let m = reduced_mutual_information(&singletons, &OmegaConfig::exact()).unwrap();
        assert!(m.abs() < 1e-12);
    }
}
