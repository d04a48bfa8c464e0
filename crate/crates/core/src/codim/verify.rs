use num_bigint::BigUint;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    codim, evaluate_polynomial, evaluation_matrix, Budget, CodimError, CodimRequest,
    EvaluationTuple,
};
use crate::free_algebra::{
    count_qm, drensky_multilinear_family, free_flag_count, star_family, FamilyMember,
    SparsePolynomial,
};
use crate::linalg::{rank_certified, rank_fraction_free, RankMode, RankPolicy, SparseMatrix};
use crate::ut::{ElementaryGrading, InvolutionKind, UtMatrix};

/// Rank evidence for a family that should be independent modulo the
/// identities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependenceEvidence {
    pub n: usize,
    pub m: usize,
    pub involution: Option<InvolutionKind>,
    pub family_size: u64,
    /// Size the counting formula predicts.
    pub expected: u64,
    pub rank: u64,
    pub rank_mode: RankMode,
    pub columns: u64,
    pub vacuous: bool,
    pub passed: bool,
}

fn family_rank(
    family: &[FamilyMember],
    n: usize,
    kind: Option<InvolutionKind>,
    policy: &RankPolicy,
    budget: &Budget,
) -> Result<(u64, RankMode, u64), CodimError> {
    let rows: Vec<SparsePolynomial> = family.iter().map(|f| f.polynomial.clone()).collect();
    let em = evaluation_matrix(&rows, n, None, kind, budget)?;
    let rank = rank_certified(&em.matrix, policy)?;
    Ok((rank.value as u64, rank.mode, em.matrix.cols() as u64))
}

fn small(v: BigUint) -> Result<u64, CodimError> {
    v.to_u64()
        .ok_or_else(|| CodimError::Budget(format!("{v} does not fit in 64 bits")))
}

fn require_degree(n: usize, m: usize) -> Result<(), CodimError> {
    if n < 2 {
        return Err(CodimError::Invalid(format!(
            "n = {n} has no commutator family"
        )));
    }
    if m < 2 * (n - 1) {
        return Err(CodimError::Invalid(format!(
            "m = {m} is below 2(n-1) = {}",
            2 * (n - 1)
        )));
    }
    Ok(())
}

/// The product family with `n - 1` commutators has full rank on `UT_n`.
/// Below `m = 2(n-1)` the family is empty and the check passes vacuously.
pub fn verify_drensky_independence(
    n: usize,
    m: usize,
    policy: &RankPolicy,
    budget: &Budget,
) -> Result<IndependenceEvidence, CodimError> {
    let family = drensky_multilinear_family(n, m)?;
    let expected = small(count_qm(n, m)?)?;
    let vacuous = family.is_empty();
    let (rank, rank_mode, columns) = if vacuous {
        (0, RankMode::Exact, 0)
    } else {
        family_rank(&family, n, None, policy, budget)?
    };
    Ok(IndependenceEvidence {
        n,
        m,
        involution: None,
        family_size: family.len() as u64,
        expected,
        rank,
        rank_mode,
        columns,
        vacuous,
        passed: rank == expected && family.len() as u64 == expected,
    })
}

/// The starred family has rank `2^floor((n-1)/2) q_m` on `(UT_n, *)`.
pub fn verify_star_family(
    n: usize,
    m: usize,
    kind: InvolutionKind,
    policy: &RankPolicy,
    budget: &Budget,
) -> Result<IndependenceEvidence, CodimError> {
    require_degree(n, m)?;
    kind.admissible(n)
        .map_err(|e| CodimError::Invalid(e.to_string()))?;
    let family = star_family(n, m, kind)?;
    let expected = small(count_qm(n, m)? << free_flag_count(n))?;
    let (rank, rank_mode, columns) = family_rank(&family, n, Some(kind), policy, budget)?;
    Ok(IndependenceEvidence {
        n,
        m,
        involution: Some(kind),
        family_size: family.len() as u64,
        expected,
        rank,
        rank_mode,
        columns,
        vacuous: false,
        passed: rank == expected && family.len() as u64 == expected,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub n: usize,
    pub m: usize,
    pub involution: InvolutionKind,
    pub size: u64,
    pub rank: u64,
    pub full_rank: bool,
    /// Every member is a nonzero multiple of `e_{1n}` at its own witness.
    pub self_evaluations_on_corner: bool,
    pub diagonal_nonzero: bool,
    pub off_diagonal_nonzeros: u64,
    pub passed: bool,
}

/// The substitution that isolates `member`: prefix variables go to the
/// identity, the head of the `i`-th commutator to the preimage of
/// `e_{i,i+1}` under its star flag, the rest of that commutator to
/// `sum_{j>i} e_jj`.
pub fn witness_tuple(
    member: &FamilyMember,
    n: usize,
    m: usize,
    kind: InvolutionKind,
) -> Result<EvaluationTuple, CodimError> {
    let mut values = vec![UtMatrix::zero(n); m];
    for &v in &member.shape.prefix {
        values[v - 1] = UtMatrix::identity(n);
    }
    for (k, c) in member.shape.commutators.iter().enumerate() {
        let i = k + 1;
        let head = UtMatrix::unit(i, i + 1, n)?;
        values[c[0] - 1] = if member.shape.flags.get(k).copied().unwrap_or(false) {
            head.apply_star(kind)?
        } else {
            head
        };
        for &v in &c[1..] {
            values[v - 1] = UtMatrix::diagonal_tail(i + 1, n);
        }
    }
    Ok(EvaluationTuple::new(values))
}

/// Matrix with entry `(b, a)` the `e_{1n}` coefficient of member `b` at the
/// witness of member `a`, plus a report on its shape and rank.
pub fn witness_matrix(
    n: usize,
    m: usize,
    kind: InvolutionKind,
) -> Result<(SparseMatrix, WitnessReport), CodimError> {
    require_degree(n, m)?;
    kind.admissible(n)
        .map_err(|e| CodimError::Invalid(e.to_string()))?;
    let family = star_family(n, m, kind)?;
    let witnesses: Vec<EvaluationTuple> = family
        .iter()
        .map(|f| witness_tuple(f, n, m, kind))
        .collect::<Result<_, _>>()?;
    let dense: Vec<DenseTuple> = witnesses
        .iter()
        .map(|w| DenseTuple::new(w, kind))
        .collect::<Result<_, _>>()?;
    let rows: Vec<(Vec<(u32, Rational64)>, bool)> = family
        .par_iter()
        .enumerate()
        .map(|(b, member)| {
            let terms = integer_terms(&member.polynomial)?;
            let mut row = Vec::new();
            for (a, w) in dense.iter().enumerate() {
                let c = w.corner(&terms)?;
                if c != 0 {
                    row.push((a as u32, Rational64::from_integer(c)));
                }
            }
            // the full self-evaluation, by ordinary matrix arithmetic
            let own = evaluate_polynomial(&member.polynomial, &witnesses[b], Some(kind))?;
            let c = own.get(1, n);
            let on_corner = !c.is_zero() && own.sub(&corner(n, &c))?.is_zero();
            Ok((row, on_corner))
        })
        .collect::<Result<_, CodimError>>()?;

    let mut matrix = SparseMatrix::new(family.len());
    let mut on_corner = true;
    let mut diagonal_nonzero = true;
    let mut off_diagonal = 0u64;
    for (b, (row, corner_ok)) in rows.into_iter().enumerate() {
        on_corner &= corner_ok;
        diagonal_nonzero &= row.iter().any(|(a, _)| *a as usize == b);
        off_diagonal += row.iter().filter(|(a, _)| *a as usize != b).count() as u64;
        matrix.push_row(row)?;
    }
    let rank = rank_fraction_free(&matrix, None)?.value as u64;
    let size = family.len() as u64;
    let report = WitnessReport {
        n,
        m,
        involution: kind,
        size,
        rank,
        full_rank: rank == size,
        self_evaluations_on_corner: on_corner,
        diagonal_nonzero,
        off_diagonal_nonzeros: off_diagonal,
        passed: rank == size && on_corner,
    };
    Ok((matrix, report))
}

fn corner(n: usize, c: &BigRational) -> UtMatrix {
    let mut x = UtMatrix::zero(n);
    x.set(1, n, c.clone()).expect("corner is upper triangular");
    x
}

type IntTerm = (i64, Vec<(usize, bool)>);

fn integer_terms(p: &SparsePolynomial) -> Result<Vec<IntTerm>, CodimError> {
    p.terms()
        .map(|(mono, c)| {
            let c = c
                .is_integer()
                .then(|| c.numer().to_i64())
                .flatten()
                .ok_or_else(|| {
                    CodimError::Invalid(format!("coefficient {c} is not a small integer"))
                })?;
            let word = mono
                .factors()
                .iter()
                .map(|f| (f.var as usize - 1, f.star))
                .collect();
            Ok((c, word))
        })
        .collect()
}

/// A witness tuple as dense integer matrices, with the starred values
/// precomputed.
struct DenseTuple {
    n: usize,
    plain: Vec<Vec<i64>>,
    starred: Vec<Vec<i64>>,
}

impl DenseTuple {
    fn new(t: &EvaluationTuple, kind: InvolutionKind) -> Result<Self, CodimError> {
        let dense = |x: &UtMatrix| -> Result<Vec<i64>, CodimError> {
            let n = x.size();
            let mut out = vec![0; n * n];
            for (&(i, j), v) in x.entries() {
                out[(i - 1) * n + (j - 1)] = v
                    .is_integer()
                    .then(|| v.numer().to_i64())
                    .flatten()
                    .ok_or_else(|| {
                    CodimError::Invalid(format!("witness entry {v} is not a small integer"))
                })?;
            }
            Ok(out)
        };
        let n = t.values.first().map_or(0, UtMatrix::size);
        let plain = t.values.iter().map(dense).collect::<Result<_, _>>()?;
        let starred = t
            .values
            .iter()
            .map(|x| dense(&x.apply_star(kind)?))
            .collect::<Result<_, _>>()?;
        Ok(DenseTuple { n, plain, starred })
    }

    /// The `(1, n)` entry of the polynomial's value, as `e_1^T X_1 ... X_k e_n`.
    fn corner(&self, terms: &[IntTerm]) -> Result<i64, CodimError> {
        let n = self.n;
        let overflow = || CodimError::Invalid("witness evaluation overflows 64 bits".into());
        let mut total = 0i64;
        let mut v = vec![0i64; n];
        let mut next = vec![0i64; n];
        for (c, word) in terms {
            v.iter_mut().for_each(|x| *x = 0);
            v[0] = 1;
            for &(var, star) in word {
                let x = if star {
                    &self.starred[var]
                } else {
                    &self.plain[var]
                };
                for j in 0..n {
                    let mut acc = 0i64;
                    for i in 0..=j {
                        if v[i] != 0 && x[i * n + j] != 0 {
                            acc = v[i]
                                .checked_mul(x[i * n + j])
                                .and_then(|p| acc.checked_add(p))
                                .ok_or_else(overflow)?;
                        }
                    }
                    next[j] = acc;
                }
                std::mem::swap(&mut v, &mut next);
            }
            total = c
                .checked_mul(v[n - 1])
                .and_then(|p| total.checked_add(p))
                .ok_or_else(overflow)?;
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowerBoundEvidence {
    pub n: usize,
    pub m: usize,
    pub involution: InvolutionKind,
    pub codim: u64,
    pub bound: u64,
    pub passed: bool,
}

/// `c_m(UT_n, *) >= 2^floor((n-1)/2) q_m`.
pub fn lower_bound_check(
    n: usize,
    m: usize,
    kind: InvolutionKind,
    policy: &RankPolicy,
    budget: &Budget,
) -> Result<LowerBoundEvidence, CodimError> {
    require_degree(n, m)?;
    let bound = small(count_qm(n, m)? << free_flag_count(n))?;
    let value = codim(
        &CodimRequest::new(n, m)
            .with_involution(Some(kind))
            .with_policy(policy.clone())
            .with_budget(budget.clone()),
    )?
    .value;
    Ok(LowerBoundEvidence {
        n,
        m,
        involution: kind,
        codim: value,
        bound,
        passed: value >= bound,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrenceEvidence {
    pub n: usize,
    pub m: usize,
    pub codim: u64,
    pub q: u64,
    pub codim_smaller: u64,
    pub passed: bool,
}

/// `c_m(UT_n) = q_m + c_m(UT_{n-1})`.
pub fn recurrence_check(
    n: usize,
    m: usize,
    policy: &RankPolicy,
    budget: &Budget,
) -> Result<RecurrenceEvidence, CodimError> {
    if n < 2 {
        return Err(CodimError::Invalid("the recurrence needs n >= 2".into()));
    }
    let run = |k: usize| {
        codim(
            &CodimRequest::new(k, m)
                .with_policy(policy.clone())
                .with_budget(budget.clone()),
        )
        .map(|r| r.value)
    };
    let c = run(n)?;
    let smaller = run(n - 1)?;
    let q = small(count_qm(n, m)?)?;
    Ok(RecurrenceEvidence {
        n,
        m,
        codim: c,
        q,
        codim_smaller: smaller,
        passed: c == q + smaller,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichEvidence {
    pub n: usize,
    pub m: usize,
    pub involution: InvolutionKind,
    pub ungraded: u64,
    pub graded: u64,
    pub fine: u64,
    pub passed: bool,
}

/// `c_m(UT_n, *) <= c_m(UT_n, Gamma, *) <= c_m(UT_n, Delta, *)`.
pub fn sandwich_check(
    n: usize,
    m: usize,
    grading: &ElementaryGrading,
    kind: InvolutionKind,
    policy: &RankPolicy,
    budget: &Budget,
) -> Result<SandwichEvidence, CodimError> {
    let base = CodimRequest::new(n, m)
        .with_involution(Some(kind))
        .with_policy(policy.clone())
        .with_budget(budget.clone());
    let graded_req = base.clone().with_grading(Some(grading.clone()));
    graded_req.validate()?;
    let fine_req = base.clone().with_grading(Some(ElementaryGrading::fine(n)?));
    let ungraded = codim(&base)?.value;
    let graded = codim(&graded_req)?.value;
    let fine = codim(&fine_req)?.value;
    Ok(SandwichEvidence {
        n,
        m,
        involution: kind,
        ungraded,
        graded,
        fine,
        passed: ungraded <= graded && graded <= fine,
    })
}
