//! Exact rank of sparse rational matrices.
//!
//! Two backends share one elimination engine: integer elimination with
//! content normalization (exact over the rationals) and elimination over a
//! prime field. [`rank_certified`] chooses between them and records how the
//! rank was established.

mod elim;
mod primes;

use std::io::{self, BufRead, Write};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use primes::{is_prime, random_prime};

use elim::{sparse_rank, streaming_rank, ElimError, IntArith, ModArith};

/// Column count up to which tall matrices use the streaming mod p engine.
const NARROW_COLS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("entry ({row}, {col}) is outside a {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("duplicate entry at ({0}, {1})")]
    DuplicateEntry(usize, usize),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} divides a denominator")]
    PrimeDividesDenominator(u64),
    #[error("elimination exceeded the budget of {0} row operations")]
    StepBudget(u64),
    #[error("modular ranks did not agree after {0} primes")]
    PrimesExhausted(usize),
    #[error("malformed matrix dump: {0}")]
    Parse(String),
}

/// A sparse matrix with rational entries, stored row by row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    cols: usize,
    offsets: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<Rational64>,
}

impl SparseMatrix {
    pub fn new(cols: usize) -> Self {
        SparseMatrix {
            cols,
            offsets: vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a row given as `(col, value)` pairs with distinct columns.
    pub fn push_row(&mut self, mut entries: Vec<(u32, Rational64)>) -> Result<(), LinalgError> {
        let row = self.rows();
        entries.retain(|(_, v)| !v.is_zero());
        entries.sort_unstable_by_key(|(c, _)| *c);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(LinalgError::DuplicateEntry(row, w[0].0 as usize));
            }
        }
        if let Some(&(c, _)) = entries.last() {
            if c as usize >= self.cols {
                return Err(LinalgError::OutOfBounds {
                    row,
                    col: c as usize,
                    rows: row + 1,
                    cols: self.cols,
                });
            }
        }
        for (c, v) in entries {
            self.col_idx.push(c);
            self.values.push(v);
        }
        self.offsets.push(self.col_idx.len());
        Ok(())
    }

    pub fn from_triplets(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, Rational64)>,
    ) -> Result<Self, LinalgError> {
        let mut by_row: Vec<Vec<(u32, Rational64)>> = vec![Vec::new(); rows];
        for (r, c, v) in entries {
            if r >= rows || c >= cols {
                return Err(LinalgError::OutOfBounds {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
            by_row[r].push((c as u32, v));
        }
        let mut m = SparseMatrix::new(cols);
        for row in by_row {
            m.push_row(row)?;
        }
        Ok(m)
    }

    pub fn from_dense(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = SparseMatrix::new(cols);
        for row in rows {
            let entries = row
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0)
                .map(|(c, &v)| (c as u32, Rational64::from_integer(v)))
                .collect();
            m.push_row(entries).expect("dense rows are well formed");
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Extends the column count, leaving existing entries in place.
    pub fn widen(&mut self, cols: usize) {
        self.cols = self.cols.max(cols);
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (u32, Rational64)> + '_ {
        let span = self.offsets[r]..self.offsets[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Rational64)> + '_ {
        (0..self.rows()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c as usize, v)))
    }

    /// Block-diagonal sum: rows and columns of `other` follow those of `self`.
    pub fn block_diagonal(blocks: &[SparseMatrix]) -> SparseMatrix {
        let cols = blocks.iter().map(SparseMatrix::cols).sum();
        let mut out = SparseMatrix::new(cols);
        let mut shift = 0u32;
        for b in blocks {
            for r in 0..b.rows() {
                out.push_row(b.row(r).map(|(c, v)| (c + shift, v)).collect())
                    .expect("shifted rows stay in range");
            }
            shift += b.cols() as u32;
        }
        out
    }

    /// Writes the coordinate dump: a `rows cols nnz` header, then one
    /// `row col value` line per entry with 0-based indices.
    pub fn write_coordinate(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "{} {} {}", self.rows(), self.cols(), self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(out, "{r} {c} {v}")?;
        }
        Ok(())
    }

    pub fn read_coordinate(input: impl BufRead) -> Result<SparseMatrix, LinalgError> {
        let bad = |msg: &str| LinalgError::Parse(msg.to_string());
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .map_err(|e| LinalgError::Parse(e.to_string()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad header")))
            .collect::<Result<_, _>>()?;
        let [rows, cols, nnz] = dims[..] else {
            return Err(bad("header must be `rows cols nnz`"));
        };
        let mut entries = Vec::with_capacity(nnz);
        for line in lines {
            let line = line.map_err(|e| LinalgError::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [r, c, v] = parts[..] else {
                return Err(bad("entry lines are `row col value`"));
            };
            entries.push((
                r.parse().map_err(|_| bad("bad row index"))?,
                c.parse().map_err(|_| bad("bad column index"))?,
                v.parse::<Rational64>().map_err(|_| bad("bad value"))?,
            ));
        }
        if entries.len() != nnz {
            return Err(bad("entry count differs from header"));
        }
        SparseMatrix::from_triplets(rows, cols, entries)
    }
}

/// How a rank was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankMode {
    /// Exact elimination, or a modular rank that reached `min(rows, cols)`.
    Exact,
    /// Largest rank over several random primes, confirmed by agreement.
    ModularAgreed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankResult {
    pub value: usize,
    pub mode: RankMode,
    pub primes: Vec<u64>,
    pub steps: u64,
}

/// Limits and strategy for [`rank_certified`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPolicy {
    /// Matrices with at most this many rows are eliminated exactly.
    pub exact_threshold: usize,
    /// Primes tried up front in modular mode.
    pub prime_count: usize,
    /// Upper bound on primes drawn when ranks disagree.
    pub max_primes: usize,
    pub seed: u64,
    /// Cap on row operations per elimination.
    pub step_budget: Option<u64>,
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy {
            exact_threshold: 5_000,
            prime_count: 2,
            max_primes: 6,
            seed: 0x7574_636f_6469_6d31,
            step_budget: None,
        }
    }
}

impl RankPolicy {
    pub fn exact() -> Self {
        RankPolicy {
            exact_threshold: usize::MAX,
            ..Default::default()
        }
    }

    pub fn modular() -> Self {
        RankPolicy {
            exact_threshold: 0,
            ..Default::default()
        }
    }
}

fn map_elim(e: ElimError, budget: Option<u64>) -> LinalgError {
    match e {
        ElimError::Budget => LinalgError::StepBudget(budget.unwrap_or(0)),
        ElimError::Overflow => unreachable!("overflow is handled by the caller"),
    }
}

fn integer_rows<T>(
    m: &SparseMatrix,
    convert: impl Fn(&Rational64, i64) -> Option<T>,
) -> Option<Vec<Vec<(u32, T)>>> {
    (0..m.rows())
        .map(|r| {
            let lcm = m.row(r).try_fold(1i64, |acc, (_, v)| {
                let d = *v.denom();
                acc.checked_mul(d / acc.gcd(&d))
            })?;
            m.row(r)
                .map(|(c, v)| convert(&v, lcm).map(|x| (c, x)))
                .collect()
        })
        .collect()
}

/// Exact rank over the rationals.
pub fn rank_fraction_free(
    m: &SparseMatrix,
    step_budget: Option<u64>,
) -> Result<RankResult, LinalgError> {
    let small = integer_rows(m, |v, lcm| v.numer().checked_mul(lcm / v.denom()));
    let outcome = match small {
        Some(rows) => match sparse_rank(&IntArith::<i64>::new(), rows, m.cols(), step_budget) {
            Err(ElimError::Overflow) => None,
            other => Some(other),
        },
        None => None,
    };
    let outcome = match outcome {
        Some(o) => o,
        None => {
            let rows = big_rows(m);
            sparse_rank(&IntArith::<BigInt>::new(), rows, m.cols(), step_budget)
        }
    }
    .map_err(|e| map_elim(e, step_budget))?;
    Ok(RankResult {
        value: outcome.rank,
        mode: RankMode::Exact,
        primes: Vec::new(),
        steps: outcome.steps,
    })
}

fn big_rows(m: &SparseMatrix) -> Vec<Vec<(u32, BigInt)>> {
    (0..m.rows())
        .map(|r| {
            let lcm = m.row(r).fold(BigInt::from(1), |acc, (_, v)| {
                acc.lcm(&BigInt::from(*v.denom()))
            });
            m.row(r)
                .map(|(c, v)| {
                    (
                        c,
                        BigInt::from(*v.numer()) * (&lcm / BigInt::from(*v.denom())),
                    )
                })
                .collect()
        })
        .collect()
}

fn mod_rows(m: &SparseMatrix, p: u64) -> Result<Vec<Vec<(u32, u64)>>, LinalgError> {
    let reduce = |x: i64| x.rem_euclid(p as i64) as u64;
    (0..m.rows())
        .map(|r| {
            m.row(r)
                .map(|(c, v)| {
                    let den = reduce(*v.denom());
                    if den == 0 {
                        return Err(LinalgError::PrimeDividesDenominator(p));
                    }
                    let x = reduce(*v.numer()) * primes::inverse_mod(den, p) % p;
                    Ok((c, x))
                })
                .filter(|e| !matches!(e, Ok((_, 0))))
                .collect()
        })
        .collect()
}

fn rank_mod_p_counted(
    m: &SparseMatrix,
    p: u64,
    step_budget: Option<u64>,
) -> Result<(usize, u64), LinalgError> {
    if !is_prime(p) || p >= 1 << 32 {
        return Err(LinalgError::NotPrime(p));
    }
    let rows = mod_rows(m, p)?;
    let outcome = if m.cols() <= NARROW_COLS && m.rows() >= 4 * m.cols() {
        streaming_rank(rows, m.cols(), p, step_budget)
    } else {
        sparse_rank(&ModArith::new(p), rows, m.cols(), step_budget)
    }
    .map_err(|e| map_elim(e, step_budget))?;
    Ok((outcome.rank, outcome.steps))
}

/// Rank over the field with `p` elements (`p < 2^32`).
pub fn rank_mod_p(m: &SparseMatrix, p: u64) -> Result<usize, LinalgError> {
    rank_mod_p_counted(m, p, None).map(|(r, _)| r)
}

/// Rank under `policy`: exact below the row threshold, otherwise the largest
/// rank over random primes. A modular rank equal to `min(rows, cols)` is
/// already exact, since reduction mod p can only lower the rank.
pub fn rank_certified(m: &SparseMatrix, policy: &RankPolicy) -> Result<RankResult, LinalgError> {
    if m.rows() <= policy.exact_threshold {
        return rank_fraction_free(m, policy.step_budget);
    }
    let bound = m.rows().min(m.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let max_primes = policy.max_primes.max(policy.prime_count).max(1);
    let first: Vec<u64> = (0..policy.prime_count.max(1))
        .map(|_| random_prime(&mut rng))
        .collect();
    let mut results: Vec<(u64, usize, u64)> = first
        .par_iter()
        .map(|&p| rank_mod_p_counted(m, p, policy.step_budget).map(|(r, s)| (p, r, s)))
        .collect::<Result<_, _>>()?;
    let needed = policy.prime_count.clamp(1, 2);
    loop {
        let best = results.iter().map(|&(_, r, _)| r).max().unwrap_or(0);
        let steps = results.iter().map(|&(_, _, s)| s).sum();
        if best == bound {
            let p = results
                .iter()
                .find(|&&(_, r, _)| r == best)
                .map(|&(p, _, _)| p);
            return Ok(RankResult {
                value: best,
                mode: RankMode::Exact,
                primes: p.into_iter().collect(),
                steps,
            });
        }
        if results.iter().filter(|&&(_, r, _)| r == best).count() >= needed {
            return Ok(RankResult {
                value: best,
                mode: RankMode::ModularAgreed,
                primes: results.iter().map(|&(p, _, _)| p).collect(),
                steps,
            });
        }
        if results.len() >= max_primes {
            return Err(LinalgError::PrimesExhausted(results.len()));
        }
        let p = random_prime(&mut rng);
        let (r, s) = rank_mod_p_counted(m, p, policy.step_budget)?;
        results.push((p, r, s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(k: i64) -> Rational64 {
        Rational64::from_integer(k)
    }

    #[test]
    fn fraction_free_examples() {
        let id = SparseMatrix::from_dense(&[vec![1, 0], vec![0, 1]]);
        assert_eq!(rank_fraction_free(&id, None).unwrap().value, 2);
        let prop = SparseMatrix::from_dense(&[vec![1, 2], vec![2, 4]]);
        assert_eq!(rank_fraction_free(&prop, None).unwrap().value, 1);
        let zero = SparseMatrix::from_dense(&[vec![0, 0, 0], vec![0, 0, 0]]);
        let res = rank_fraction_free(&zero, None).unwrap();
        assert_eq!(res.value, 0);
        assert_eq!(res.mode, RankMode::Exact);
    }

    #[test]
    fn rational_entries() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            [
                (0, 0, Rational64::new(1, 2)),
                (0, 1, Rational64::new(1, 3)),
                (1, 0, Rational64::new(3, 2)),
                (1, 1, r(1)),
            ],
        )
        .unwrap();
        assert_eq!(rank_fraction_free(&m, None).unwrap().value, 1);
        assert_eq!(rank_mod_p(&m, 7).unwrap(), 1);
        assert_eq!(
            rank_mod_p(&m, 3),
            Err(LinalgError::PrimeDividesDenominator(3))
        );
    }

    #[test]
    fn modular_examples() {
        let p = 1_000_000_007u64;
        let m = SparseMatrix::from_dense(&[vec![p as i64, 0], vec![0, 1]]);
        assert_eq!(rank_mod_p(&m, p).unwrap(), 1);
        assert_eq!(rank_fraction_free(&m, None).unwrap().value, 2);
        let id3 = SparseMatrix::from_dense(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(rank_mod_p(&id3, 5).unwrap(), 3);
        assert_eq!(rank_mod_p(&SparseMatrix::new(4), 5).unwrap(), 0);
        assert_eq!(rank_mod_p(&id3, 6), Err(LinalgError::NotPrime(6)));
    }

    #[test]
    fn overflow_falls_back_to_big_integers() {
        // Entries near i64::MAX force the i64 engine to overflow.
        let big = i64::MAX / 3;
        let m = SparseMatrix::from_dense(&[
            vec![big, big - 1, 7],
            vec![big - 2, big, 5],
            vec![3, 1, big],
        ]);
        assert_eq!(rank_fraction_free(&m, None).unwrap().value, 3);
    }

    #[test]
    fn certified_full_rank_is_exact() {
        let rows: Vec<Vec<i64>> = (0..6)
            .map(|i| {
                (0..6)
                    .map(|j| {
                        if i == j {
                            2
                        } else if j == i + 1 {
                            1
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect();
        let m = SparseMatrix::from_dense(&rows);
        let res = rank_certified(&m, &RankPolicy::modular()).unwrap();
        assert_eq!(res.value, 6);
        assert_eq!(res.mode, RankMode::Exact);
        assert_eq!(res.primes.len(), 1);
        let under = rank_certified(&m, &RankPolicy::default()).unwrap();
        assert_eq!(under, rank_fraction_free(&m, None).unwrap());
    }

    #[test]
    fn certified_deficient_rank_is_agreed() {
        let m = SparseMatrix::from_dense(&[vec![1, 2, 3], vec![2, 4, 6], vec![0, 1, 1]]);
        let res = rank_certified(&m, &RankPolicy::modular()).unwrap();
        assert_eq!(res.value, 2);
        assert_eq!(res.mode, RankMode::ModularAgreed);
        assert!(res.primes.len() >= 2);
        assert!(res
            .primes
            .iter()
            .all(|&p| p > 1 << 30 && p < 1 << 31 && is_prime(p)));
    }

    #[test]
    fn step_budget_enforced() {
        let rows: Vec<Vec<i64>> = (0..5)
            .map(|i| (0..5).map(|j| (i * j + 1) as i64).collect())
            .collect();
        let m = SparseMatrix::from_dense(&rows);
        assert_eq!(
            rank_fraction_free(&m, Some(1)),
            Err(LinalgError::StepBudget(1))
        );
    }

    #[test]
    fn coordinate_dump_round_trip() {
        let m = SparseMatrix::from_triplets(
            3,
            4,
            [(0, 1, r(1)), (2, 3, Rational64::new(-2, 3)), (1, 0, r(-1))],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "3 4 3\n0 1 1\n1 0 -1\n2 3 -2/3\n");
        assert_eq!(SparseMatrix::read_coordinate(&buf[..]).unwrap(), m);
        assert!(SparseMatrix::read_coordinate(&b"2 2 1\n"[..]).is_err());
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            SparseMatrix::from_triplets(1, 1, [(0, 1, r(1))]),
            Err(LinalgError::OutOfBounds { .. })
        ));
        assert_eq!(
            SparseMatrix::from_triplets(1, 2, [(0, 1, r(1)), (0, 1, r(2))]),
            Err(LinalgError::DuplicateEntry(0, 1))
        );
    }

    #[test]
    fn block_diagonal_ranks_add() {
        let a = SparseMatrix::from_dense(&[vec![1, 1], vec![1, 1]]);
        let b = SparseMatrix::from_dense(&[vec![1, 0, 1], vec![0, 1, 0]]);
        let bd = SparseMatrix::block_diagonal(&[a, b]);
        assert_eq!(bd.rows(), 4);
        assert_eq!(bd.cols(), 5);
        assert_eq!(rank_fraction_free(&bd, None).unwrap().value, 3);
    }
}
