//! Naive reference computations, sharing no code with the library: dense
//! integer matrices, every unit tuple evaluated by plain multiplication, and
//! dense Gaussian elimination.

#![allow(dead_code, clippy::needless_range_loop)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

pub type Dense = Vec<Vec<i64>>;

/// A word over variables `0..m`, each factor `(variable, starred)`.
pub type Word = Vec<(usize, bool)>;

/// A polynomial as `(coefficient, word)` pairs.
pub type Poly = Vec<(i64, Word)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Star {
    Orthogonal,
    Symplectic,
}

#[derive(Clone, Debug)]
pub enum Grading {
    /// `Z_order` with the given superdiagonal degrees.
    Cyclic { order: u64, superdiagonal: Vec<u64> },
    /// Free group on the superdiagonal units.
    Fine,
}

impl Grading {
    /// A key that identifies the degree of `e_ij` (0-based indices).
    pub fn degree(&self, i: usize, j: usize) -> (u64, u64) {
        match self {
            Grading::Cyclic {
                order,
                superdiagonal,
            } => (superdiagonal[i..j].iter().sum::<u64>() % order, 0),
            Grading::Fine if i == j => (0, 0),
            Grading::Fine => (i as u64 + 1, j as u64 + 1),
        }
    }
}

pub fn zero(n: usize) -> Dense {
    vec![vec![0; n]; n]
}

pub fn unit(n: usize, i: usize, j: usize) -> Dense {
    let mut a = zero(n);
    a[i][j] = 1;
    a
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = zero(n);
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

/// Flip along the secondary diagonal, then conjugate by
/// `diag(1..1, -1..-1)` in the symplectic case.
pub fn star(a: &Dense, kind: Star) -> Dense {
    let n = a.len();
    let mut b = zero(n);
    for i in 0..n {
        for j in 0..n {
            b[i][j] = a[n - 1 - j][n - 1 - i];
            if kind == Star::Symplectic {
                let d = |k: usize| if k < n / 2 { 1 } else { -1 };
                b[i][j] *= d(i) * d(j);
            }
        }
    }
    b
}

pub fn units(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            out.push((i, j));
        }
    }
    out
}

/// All permutations of `0..m` by recursive insertion, each with every star
/// pattern when `starred`.
pub fn all_words(m: usize, starred: bool) -> Vec<Word> {
    fn perms(m: usize) -> Vec<Vec<usize>> {
        if m == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(m - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, m - 1);
                out.push(q);
            }
        }
        out
    }
    let mut out = Vec::new();
    for p in perms(m) {
        let patterns = if starred { 1usize << m } else { 1 };
        for mask in 0..patterns {
            out.push(
                p.iter()
                    .enumerate()
                    .map(|(k, &v)| (v, mask >> k & 1 == 1))
                    .collect(),
            );
        }
    }
    out
}

pub fn eval_word(word: &Word, values: &[Dense], kind: Option<Star>) -> Dense {
    let n = values[0].len();
    let mut acc = zero(n);
    for i in 0..n {
        acc[i][i] = 1;
    }
    for &(v, s) in word {
        let x = if s {
            star(&values[v], kind.expect("starred word needs an involution"))
        } else {
            values[v].clone()
        };
        acc = mul(&acc, &x);
    }
    acc
}

pub fn eval_poly(p: &Poly, values: &[Dense], kind: Option<Star>) -> Dense {
    let n = values[0].len();
    let mut acc = zero(n);
    for (c, w) in p {
        let x = eval_word(w, values, kind);
        for i in 0..n {
            for j in 0..n {
                acc[i][j] += c * x[i][j];
            }
        }
    }
    acc
}

/// Evaluation matrix of `rows` over all tuples drawn from `choices[k]` for
/// variable `k`, every matrix entry a column. Returned column by column with
/// zero columns dropped.
pub fn evaluation_columns(
    rows: &[Poly],
    n: usize,
    choices: &[Vec<(usize, usize)>],
    kind: Option<Star>,
) -> Vec<Vec<i64>> {
    let m = choices.len();
    let mut columns = Vec::new();
    let mut idx = vec![0usize; m];
    if choices.iter().any(Vec::is_empty) {
        return columns;
    }
    loop {
        let values: Vec<Dense> = (0..m)
            .map(|k| {
                let (i, j) = choices[k][idx[k]];
                unit(n, i, j)
            })
            .collect();
        let evals: Vec<Dense> = rows.iter().map(|p| eval_poly(p, &values, kind)).collect();
        for i in 0..n {
            for j in 0..n {
                let col: Vec<i64> = evals.iter().map(|e| e[i][j]).collect();
                if col.iter().any(|&x| x != 0) {
                    columns.push(col);
                }
            }
        }
        // odometer, first variable most significant
        let mut k = m;
        loop {
            if k == 0 {
                return columns;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub fn rank_mod_p(vectors: &[Vec<i64>], p: i64) -> usize {
    let mut a: Vec<Vec<i64>> = vectors
        .iter()
        .map(|v| v.iter().map(|x| x.rem_euclid(p)).collect())
        .collect();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(r) = (rank..a.len()).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, r);
        let inv = pow(a[rank][c], p - 2, p);
        for x in a[rank].iter_mut() {
            *x = *x * inv % p;
        }
        let pivot = a[rank].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r == rank || row[c] == 0 {
                continue;
            }
            let f = row[c];
            for (x, y) in row.iter_mut().zip(&pivot) {
                *x = (*x - f * y).rem_euclid(p);
            }
        }
        rank += 1;
    }
    rank
}

fn pow(mut b: i64, mut e: i64, p: i64) -> i64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Exact rank by Gaussian elimination over the rationals.
pub fn rank_rational(vectors: &[Vec<BigRational>]) -> usize {
    let mut a = vectors.to_vec();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(r) = (rank..a.len()).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, r);
        let pivot = a[rank].clone();
        for row in a.iter_mut().skip(rank + 1) {
            if row[c].is_zero() {
                continue;
            }
            let f = &row[c] / &pivot[c];
            for (x, y) in row.iter_mut().zip(&pivot) {
                *x -= &f * y;
            }
        }
        rank += 1;
    }
    rank
}

pub fn rational(k: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

/// Rank of the evaluation matrix over two fixed primes, which must agree.
pub fn rank_two_primes(columns: &[Vec<i64>]) -> usize {
    let mut distinct = columns.to_vec();
    distinct.sort();
    distinct.dedup();
    let a = rank_mod_p(&distinct, 2_147_483_629);
    let b = rank_mod_p(&distinct, 2_147_483_587);
    assert_eq!(a, b, "fixed primes disagree");
    a
}

/// `c_m` by brute force over every unit tuple.
pub fn codim(n: usize, m: usize, kind: Option<Star>, grading: Option<&Grading>) -> usize {
    let rows: Vec<Poly> = all_words(m, kind.is_some())
        .into_iter()
        .map(|w| vec![(1, w)])
        .collect();
    let all = units(n);
    match grading {
        None => rank_two_primes(&evaluation_columns(&rows, n, &vec![all; m], kind)),
        Some(g) => {
            let mut support: Vec<(u64, u64)> = all.iter().map(|&(i, j)| g.degree(i, j)).collect();
            support.sort();
            support.dedup();
            let mut total = 0;
            let mut idx = vec![0usize; m];
            loop {
                let choices: Vec<Vec<(usize, usize)>> = idx
                    .iter()
                    .map(|&d| {
                        all.iter()
                            .copied()
                            .filter(|&(i, j)| g.degree(i, j) == support[d])
                            .collect()
                    })
                    .collect();
                total += rank_two_primes(&evaluation_columns(&rows, n, &choices, kind));
                let mut k = m;
                loop {
                    if k == 0 {
                        return total;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < support.len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
    }
}

/// Rank of arbitrary multilinear polynomials in `m` variables on `UT_n`.
pub fn family_rank(rows: &[Poly], n: usize, m: usize, kind: Option<Star>) -> usize {
    rank_two_primes(&evaluation_columns(rows, n, &vec![units(n); m], kind))
}

/// Number of products `x_{i1}..x_{ir} c_1..c_k` over `m` variables with
/// `k` commutators, by listing them: choose the prefix set, then an ordered
/// sequence of disjoint blocks of size >= 2 covering the rest, then a head
/// for each block other than its minimum.
pub fn count_products(k: usize, m: usize) -> u64 {
    fn blocks(rest: u32, left: usize) -> u64 {
        if left == 0 {
            return u64::from(rest == 0);
        }
        let mut total = 0;
        // every nonempty subset of `rest`
        let mut sub = rest;
        while sub != 0 {
            let size = sub.count_ones() as u64;
            if size >= 2 {
                total += (size - 1) * blocks(rest & !sub, left - 1);
            }
            sub = (sub - 1) & rest;
        }
        total
    }
    let full: u32 = if m == 32 { u32::MAX } else { (1 << m) - 1 };
    let mut total = 0;
    let mut prefix = 0u32;
    loop {
        total += blocks(full & !prefix, k);
        if prefix == full {
            return total;
        }
        prefix = (prefix + 1) & full;
        if prefix == 0 {
            return total;
        }
    }
}

/// `2^(m-1)(m-2) + 2`.
pub fn ut2_closed_form(m: u32) -> i64 {
    (1i64 << (m - 1)) * (m as i64 - 2) + 2
}
