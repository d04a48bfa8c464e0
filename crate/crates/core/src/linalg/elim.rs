//! Sparse Gaussian elimination shared by the exact and modular backends.
//!
//! Pivot choice: the shortest remaining row (lowest index on ties), and in it
//! the column with the fewest remaining entries (lowest index on ties). This
//! is deterministic and keeps fill low on the evaluation matrices we see.

use std::collections::BTreeSet;
use std::marker::PhantomData;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub(super) enum ElimError {
    Overflow,
    Budget,
}

pub(super) struct ElimOutcome {
    pub rank: usize,
    pub steps: u64,
}

pub(super) type Row<S> = Vec<(u32, S)>;

/// Scalar arithmetic needed by the engine.
pub(super) trait Arith {
    type S: Clone;

    /// Called once on the chosen pivot row before it is used.
    fn prepare_pivot(&self, row: &mut Row<Self::S>, pivot_pos: usize);

    /// Clears `col` from `target` using `pivot`. Both rows contain `col`.
    fn eliminate(
        &self,
        target: &Row<Self::S>,
        pivot: &Row<Self::S>,
        target_pos: usize,
        pivot_pos: usize,
    ) -> Result<Row<Self::S>, ElimError>;
}

pub(super) struct ModArith {
    p: u64,
}

impl ModArith {
    pub fn new(p: u64) -> Self {
        ModArith { p }
    }
}

impl Arith for ModArith {
    type S = u64;

    fn prepare_pivot(&self, row: &mut Row<u64>, pivot_pos: usize) {
        let inv = super::primes::inverse_mod(row[pivot_pos].1, self.p);
        for (_, v) in row.iter_mut() {
            *v = *v * inv % self.p;
        }
    }

    fn eliminate(
        &self,
        target: &Row<u64>,
        pivot: &Row<u64>,
        target_pos: usize,
        _pivot_pos: usize,
    ) -> Result<Row<u64>, ElimError> {
        let p = self.p;
        // pivot entry is 1 after `prepare_pivot`
        let factor = p - target[target_pos].1;
        Ok(merge(target, pivot, |a, b| {
            let v = match (a, b) {
                (Some(a), Some(b)) => (a + factor * b) % p,
                (Some(a), None) => *a,
                (None, Some(b)) => factor * b % p,
                (None, None) => 0,
            };
            Some(v).filter(|v| *v != 0)
        }))
    }
}

/// Integers that support the few operations integer elimination needs.
pub(super) trait IntLike: Clone + Zero + One + Signed + Integer {
    fn checked_mul_(&self, other: &Self) -> Option<Self>;
    fn checked_sub_(&self, other: &Self) -> Option<Self>;
}

impl IntLike for i64 {
    fn checked_mul_(&self, other: &Self) -> Option<Self> {
        self.checked_mul(*other)
    }

    fn checked_sub_(&self, other: &Self) -> Option<Self> {
        self.checked_sub(*other)
    }
}

impl IntLike for BigInt {
    fn checked_mul_(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }

    fn checked_sub_(&self, other: &Self) -> Option<Self> {
        Some(self - other)
    }
}

/// Fraction-free integer elimination: `target <- a*target - b*pivot` with
/// `a/b` the reduced ratio of the two entries in the pivot column, followed
/// by division of the row by its content.
pub(super) struct IntArith<T> {
    _marker: PhantomData<T>,
}

impl<T> IntArith<T> {
    pub fn new() -> Self {
        IntArith {
            _marker: PhantomData,
        }
    }
}

impl<T: IntLike> Arith for IntArith<T> {
    type S = T;

    fn prepare_pivot(&self, _row: &mut Row<T>, _pivot_pos: usize) {}

    fn eliminate(
        &self,
        target: &Row<T>,
        pivot: &Row<T>,
        target_pos: usize,
        pivot_pos: usize,
    ) -> Result<Row<T>, ElimError> {
        let t = &target[target_pos].1;
        let pv = &pivot[pivot_pos].1;
        let g = t.gcd(pv);
        let a = pv.div_floor(&g);
        let b = t.div_floor(&g);
        let mut overflow = false;
        let mut row = merge(target, pivot, |x, y| {
            let lhs = match x {
                Some(x) => a.checked_mul_(x),
                None => Some(T::zero()),
            };
            let rhs = match y {
                Some(y) => b.checked_mul_(y),
                None => Some(T::zero()),
            };
            match (lhs, rhs) {
                (Some(l), Some(r)) => match l.checked_sub_(&r) {
                    Some(v) if v.is_zero() => None,
                    Some(v) => Some(v),
                    None => {
                        overflow = true;
                        None
                    }
                },
                _ => {
                    overflow = true;
                    None
                }
            }
        });
        if overflow {
            return Err(ElimError::Overflow);
        }
        let content = row.iter().fold(T::zero(), |acc, (_, v)| acc.gcd(v));
        if !content.is_zero() && !content.is_one() {
            for (_, v) in row.iter_mut() {
                *v = v.div_floor(&content);
            }
        }
        Ok(row)
    }
}

/// Merges two column-sorted rows entrywise.
fn merge<S, F>(a: &Row<S>, b: &Row<S>, mut f: F) -> Row<S>
where
    F: FnMut(Option<&S>, Option<&S>) -> Option<S>,
{
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let (col, value) = match (a.get(i), b.get(j)) {
            (Some((ca, va)), Some((cb, vb))) if ca == cb => {
                i += 1;
                j += 1;
                (*ca, f(Some(va), Some(vb)))
            }
            (Some((ca, va)), Some((cb, _))) if ca < cb => {
                i += 1;
                (*ca, f(Some(va), None))
            }
            (Some((ca, va)), None) => {
                i += 1;
                (*ca, f(Some(va), None))
            }
            (_, Some((cb, vb))) => {
                j += 1;
                (*cb, f(None, Some(vb)))
            }
            (None, None) => unreachable!(),
        };
        if let Some(v) = value {
            out.push((col, v));
        }
    }
    out
}

fn position<S>(row: &Row<S>, col: u32) -> Option<usize> {
    row.binary_search_by_key(&col, |(c, _)| *c).ok()
}

/// Rank of the matrix with the given rows (each sorted by column, no zeros).
pub(super) fn sparse_rank<A: Arith>(
    arith: &A,
    rows: Vec<Row<A::S>>,
    cols: usize,
    step_budget: Option<u64>,
) -> Result<ElimOutcome, ElimError> {
    let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); cols];
    let mut col_count: Vec<u32> = vec![0; cols];
    let mut queue: BTreeSet<(usize, u32)> = BTreeSet::new();
    for (r, row) in rows.iter().enumerate() {
        for &(c, _) in row {
            col_rows[c as usize].push(r as u32);
            col_count[c as usize] += 1;
        }
        queue.insert((row.len(), r as u32));
    }
    let mut rows: Vec<Option<Row<A::S>>> = rows.into_iter().map(Some).collect();
    let mut rank = 0usize;
    let mut steps = 0u64;

    while let Some((len, r)) = queue.pop_first() {
        let mut pivot = rows[r as usize].take().expect("queued rows are live");
        if len == 0 {
            continue;
        }
        let (pivot_pos, pivot_col) = pivot
            .iter()
            .enumerate()
            .min_by_key(|(_, (c, _))| (col_count[*c as usize], *c))
            .map(|(k, (c, _))| (k, *c))
            .expect("row is nonempty");
        arith.prepare_pivot(&mut pivot, pivot_pos);
        for &(c, _) in &pivot {
            col_count[c as usize] -= 1;
        }
        let targets = std::mem::take(&mut col_rows[pivot_col as usize]);
        for s in targets {
            let Some(old) = rows[s as usize].as_ref() else {
                continue;
            };
            let Some(target_pos) = position(old, pivot_col) else {
                continue;
            };
            if let Some(budget) = step_budget {
                if steps >= budget {
                    return Err(ElimError::Budget);
                }
            }
            steps += 1;
            let new = arith.eliminate(old, &pivot, target_pos, pivot_pos)?;
            let old = rows[s as usize].take().expect("checked above");
            queue.remove(&(old.len(), s));
            update_counts(&old, &new, s, &mut col_rows, &mut col_count);
            queue.insert((new.len(), s));
            rows[s as usize] = Some(new);
        }
        rank += 1;
    }
    Ok(ElimOutcome { rank, steps })
}

fn update_counts<S>(
    old: &Row<S>,
    new: &Row<S>,
    row: u32,
    col_rows: &mut [Vec<u32>],
    col_count: &mut [u32],
) {
    let (mut i, mut j) = (0, 0);
    while i < old.len() || j < new.len() {
        match (old.get(i), new.get(j)) {
            (Some((a, _)), Some((b, _))) if a == b => {
                i += 1;
                j += 1;
            }
            (Some((a, _)), Some((b, _))) if a < b => {
                col_count[*a as usize] -= 1;
                i += 1;
            }
            (Some((a, _)), None) => {
                col_count[*a as usize] -= 1;
                i += 1;
            }
            (_, Some((b, _))) => {
                col_count[*b as usize] += 1;
                col_rows[*b as usize].push(row);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
}

/// Rank mod `p` for tall, narrow matrices. Rows are reduced one at a time
/// against a basis kept in reduced row echelon form, so a row meets at most
/// one basis row per original entry and nothing but the basis is stored.
pub(super) fn streaming_rank(
    rows: Vec<Row<u64>>,
    cols: usize,
    p: u64,
    step_budget: Option<u64>,
) -> Result<ElimOutcome, ElimError> {
    let mut basis: Vec<Row<u64>> = Vec::new();
    let mut pivot_of: Vec<Option<u32>> = vec![None; cols];
    let mut buf = vec![0u64; cols];
    let mut seen = vec![false; cols];
    let mut touched: Vec<u32> = Vec::new();
    let mut steps = 0u64;
    for row in rows {
        if basis.len() == cols {
            break;
        }
        touched.clear();
        for &(c, v) in &row {
            buf[c as usize] = v;
            seen[c as usize] = true;
            touched.push(c);
        }
        for &(c, _) in &row {
            let Some(b) = pivot_of[c as usize] else {
                continue;
            };
            let coef = buf[c as usize];
            if coef == 0 {
                continue;
            }
            if let Some(budget) = step_budget {
                if steps >= budget {
                    return Err(ElimError::Budget);
                }
            }
            steps += 1;
            let factor = p - coef;
            for &(j, v) in &basis[b as usize] {
                let j = j as usize;
                buf[j] = (buf[j] + factor * v) % p;
                if !seen[j] {
                    seen[j] = true;
                    touched.push(j as u32);
                }
            }
        }
        touched.sort_unstable();
        let mut new: Row<u64> = Vec::new();
        for &c in &touched {
            let c = c as usize;
            if buf[c] != 0 {
                new.push((c as u32, buf[c]));
            }
            buf[c] = 0;
            seen[c] = false;
        }
        if new.is_empty() {
            continue;
        }
        let pivot_col = new[0].0;
        let inv = super::primes::inverse_mod(new[0].1, p);
        for (_, v) in new.iter_mut() {
            *v = *v * inv % p;
        }
        for other in basis.iter_mut() {
            let Ok(pos) = other.binary_search_by_key(&pivot_col, |(c, _)| *c) else {
                continue;
            };
            steps += 1;
            let factor = p - other[pos].1;
            *other = merge(other, &new, |a, b| {
                let v = match (a, b) {
                    (Some(a), Some(b)) => (a + factor * b) % p,
                    (Some(a), None) => *a,
                    (None, Some(b)) => factor * b % p,
                    (None, None) => 0,
                };
                Some(v).filter(|v| *v != 0)
            });
        }
        pivot_of[pivot_col as usize] = Some(basis.len() as u32);
        basis.push(new);
    }
    Ok(ElimOutcome {
        rank: basis.len(),
        steps,
    })
}
