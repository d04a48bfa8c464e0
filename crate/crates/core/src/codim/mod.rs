//! Codimensions of `UT_n` as ranks of evaluation matrices.
//!
//! A multilinear polynomial is an identity iff it vanishes whenever each
//! variable is replaced by a matrix unit of its degree, so the codimension is
//! the rank of the matrix whose rows are monomials and whose columns are
//! pairs (unit tuple, entry position). Only tuples that chain into a nonzero
//! product contribute, and those are generated directly: a monomial in `m`
//! factors is nonzero exactly along weakly increasing index paths
//! `p_0 <= p_1 <= ... <= p_m`, factor `k` being `e_{p_{k-1} p_k}`.

mod asymptotic;
mod verify;

use std::collections::BTreeSet;
use std::time::Instant;

use num_rational::{BigRational, Rational64};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::free_algebra::{
    enumerate_monomials, monomial_count, AlgebraError, SparsePolynomial, StarMonomial,
};
use crate::groups::{GroupElement, GroupError};
use crate::linalg::{rank_certified, LinalgError, RankMode, RankPolicy, SparseMatrix};
use crate::ut::{
    homogeneous_involution_map, star_of_unit, unit_index, unit_positions, ElementaryGrading,
    GradingFile, InvolutionAnalysis, InvolutionKind, UtError, UtMatrix,
};

pub use asymptotic::{
    asymptotic_report, format_decimal, format_rational, AsymptoticRow, AsymptoticTable,
    AsymptoticTarget,
};
pub use verify::{
    lower_bound_check, recurrence_check, sandwich_check, verify_drensky_independence,
    verify_star_family, witness_matrix, IndependenceEvidence, LowerBoundEvidence,
    RecurrenceEvidence, SandwichEvidence, WitnessReport,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodimError {
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(LinalgError),
    #[error(transparent)]
    Ut(#[from] UtError),
    #[error(transparent)]
    Algebra(AlgebraError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

impl From<LinalgError> for CodimError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::StepBudget(_) => CodimError::Budget(e.to_string()),
            other => CodimError::Linalg(other),
        }
    }
}

impl From<AlgebraError> for CodimError {
    fn from(e: AlgebraError) -> Self {
        match e {
            AlgebraError::DegreeTooSmallM { .. } | AlgebraError::DegreeTooSmallN(_) => {
                CodimError::Invalid(e.to_string())
            }
            AlgebraError::Ut(UtError::SymplecticOddSize(_)) => CodimError::Invalid(e.to_string()),
            other => CodimError::Algebra(other),
        }
    }
}

/// Resource caps for evaluation matrices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Rows of a single evaluation matrix.
    pub max_rows: u64,
    /// Distinct columns of a single evaluation matrix.
    pub max_columns: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_rows: 1_000_000,
            max_columns: 10_000_000,
        }
    }
}

/// Values of `x1..xm` for a direct evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationTuple {
    pub values: Vec<UtMatrix>,
}

impl EvaluationTuple {
    pub fn new(values: Vec<UtMatrix>) -> Self {
        EvaluationTuple { values }
    }

    fn value(&self, var: u16) -> Result<&UtMatrix, CodimError> {
        self.values
            .get(var as usize - 1)
            .ok_or_else(|| CodimError::Invalid(format!("no value for x{var}")))
    }
}

/// Evaluates a monomial by multiplying out actual matrices.
pub fn evaluate_monomial(
    mono: &StarMonomial,
    tuple: &EvaluationTuple,
    kind: Option<InvolutionKind>,
) -> Result<UtMatrix, CodimError> {
    let n = tuple
        .values
        .first()
        .map(UtMatrix::size)
        .ok_or_else(|| CodimError::Invalid("empty evaluation tuple".into()))?;
    let mut acc = UtMatrix::identity(n);
    for f in mono.factors() {
        let x = tuple.value(f.var)?;
        let x = if f.star {
            let kind = kind.ok_or_else(|| {
                CodimError::Invalid("starred variable evaluated without an involution".into())
            })?;
            x.apply_star(kind)?
        } else {
            x.clone()
        };
        acc = acc.mul(&x)?;
    }
    Ok(acc)
}

pub fn evaluate_polynomial(
    p: &SparsePolynomial,
    tuple: &EvaluationTuple,
    kind: Option<InvolutionKind>,
) -> Result<UtMatrix, CodimError> {
    let n = tuple.values.first().map_or(0, UtMatrix::size);
    let mut acc = UtMatrix::zero(n);
    for (mono, c) in p.terms() {
        acc = acc.add(&evaluate_monomial(mono, tuple, kind)?.scale(c))?;
    }
    Ok(acc)
}

/// Column label: a tuple of matrix units (one per variable, numbered along
/// the odometer over unit lists with `x1` most significant) and an entry
/// position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnKey {
    pub tuple: u128,
    pub row: u8,
    pub col: u8,
}

/// Anything that can be a row of an evaluation matrix.
pub trait EvaluationRow: Sync {
    fn for_each_term(&self, f: &mut dyn FnMut(&StarMonomial, Rational64))
        -> Result<(), CodimError>;
}

impl EvaluationRow for StarMonomial {
    fn for_each_term(
        &self,
        f: &mut dyn FnMut(&StarMonomial, Rational64),
    ) -> Result<(), CodimError> {
        f(self, Rational64::from_integer(1));
        Ok(())
    }
}

impl EvaluationRow for SparsePolynomial {
    fn for_each_term(
        &self,
        f: &mut dyn FnMut(&StarMonomial, Rational64),
    ) -> Result<(), CodimError> {
        for (mono, c) in self.terms() {
            f(mono, small_rational(c)?);
        }
        Ok(())
    }
}

fn small_rational(c: &BigRational) -> Result<Rational64, CodimError> {
    match (c.numer().to_i64(), c.denom().to_i64()) {
        (Some(a), Some(b)) => Ok(Rational64::new(a, b)),
        _ => Err(CodimError::Invalid(format!("coefficient {c} is too large"))),
    }
}

/// Everything the unit-path evaluator needs to know about the target algebra.
struct UnitEvaluator<'a> {
    n: usize,
    m: usize,
    kind: Option<InvolutionKind>,
    grading: Option<&'a ElementaryGrading>,
    unit_count: u128,
}

impl<'a> UnitEvaluator<'a> {
    fn new(
        n: usize,
        m: usize,
        kind: Option<InvolutionKind>,
        grading: Option<&'a ElementaryGrading>,
        budget: &Budget,
    ) -> Result<Self, CodimError> {
        if n == 0 || n > 255 {
            return Err(CodimError::Invalid(format!("unsupported size n = {n}")));
        }
        if let Some(kind) = kind {
            kind.admissible(n)?;
        }
        if let Some(g) = grading {
            if g.size() != n {
                return Err(CodimError::Invalid(format!(
                    "grading is on UT_{} but n = {n}",
                    g.size()
                )));
            }
        }
        let unit_count = (n * (n + 1) / 2) as u128;
        if unit_count.checked_pow(m as u32).is_none() {
            return Err(CodimError::Budget(format!(
                "({unit_count})^{m} unit tuples cannot be indexed"
            )));
        }
        let _ = budget;
        Ok(UnitEvaluator {
            n,
            m,
            kind,
            grading,
            unit_count,
        })
    }

    /// Calls `emit(column, sign)` for every unit tuple on which `mono` is
    /// nonzero.
    fn images(
        &self,
        mono: &StarMonomial,
        emit: &mut dyn FnMut(ColumnKey, i64),
    ) -> Result<(), CodimError> {
        if !mono.is_multilinear_in(self.m) {
            return Err(CodimError::Invalid(format!(
                "row {mono} is not multilinear in x1..x{}",
                self.m
            )));
        }
        let factors = mono.factors();
        if factors.iter().any(|f| f.star) && self.kind.is_none() {
            return Err(CodimError::Invalid(
                "starred variables need an involution".into(),
            ));
        }
        // Allowed units per factor position under the grading.
        let allowed: Option<Vec<Vec<bool>>> = match (self.grading, mono.degrees()) {
            (None, _) => None,
            (Some(_), None) => {
                return Err(CodimError::Invalid(format!(
                    "graded evaluation of {mono} needs degree labels"
                )))
            }
            (Some(g), Some(labels)) => Some(
                labels
                    .iter()
                    .map(|label| {
                        (0..self.unit_count as usize)
                            .map(|u| g.degree_by_index(u) == label)
                            .collect()
                    })
                    .collect(),
            ),
        };
        let mut tuple = vec![0u8; self.m];
        for start in 1..=self.n {
            self.walk(
                factors,
                allowed.as_deref(),
                0,
                start,
                start,
                1,
                &mut tuple,
                emit,
            );
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        factors: &[crate::free_algebra::Factor],
        allowed: Option<&[Vec<bool>]>,
        k: usize,
        start: usize,
        here: usize,
        sign: i64,
        tuple: &mut [u8],
        emit: &mut dyn FnMut(ColumnKey, i64),
    ) {
        if k == factors.len() {
            let index = tuple
                .iter()
                .fold(0u128, |acc, &u| acc * self.unit_count + u as u128);
            emit(
                ColumnKey {
                    tuple: index,
                    row: start as u8,
                    col: here as u8,
                },
                sign,
            );
            return;
        }
        let f = factors[k];
        for next in here..=self.n {
            let (s, a, b) = if f.star {
                // the variable's value is the preimage of e_{here,next}
                star_of_unit(self.kind.expect("checked by caller"), self.n, here, next)
            } else {
                (1, here, next)
            };
            let u = unit_index(self.n, a, b);
            if let Some(allowed) = allowed {
                if !allowed[k][u] {
                    continue;
                }
            }
            tuple[f.var as usize - 1] = u as u8;
            self.walk(
                factors,
                allowed,
                k + 1,
                start,
                next,
                sign * s as i64,
                tuple,
                emit,
            );
        }
    }

    fn row_entries<R: EvaluationRow + ?Sized>(
        &self,
        row: &R,
    ) -> Result<Vec<(ColumnKey, Rational64)>, CodimError> {
        let mut entries: Vec<(ColumnKey, Rational64)> = Vec::new();
        let mut failure = None;
        row.for_each_term(&mut |mono, c| {
            if failure.is_some() {
                return;
            }
            if let Err(e) = self.images(mono, &mut |key, s| entries.push((key, c * s))) {
                failure = Some(e);
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        entries.sort_unstable_by_key(|(k, _)| *k);
        let mut merged: Vec<(ColumnKey, Rational64)> = Vec::with_capacity(entries.len());
        for (k, v) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == k => *acc += v,
                _ => merged.push((k, v)),
            }
        }
        merged.retain(|(_, v)| *v != Rational64::from_integer(0));
        Ok(merged)
    }
}

/// An evaluation matrix and the meaning of its columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationMatrix {
    pub matrix: SparseMatrix,
    pub columns: Vec<ColumnKey>,
}

const CHUNK: usize = 4096;

/// Builds the evaluation matrix of `rows` on `UT_n`. Columns are the unit
/// tuples (compatible with the row degrees when graded) and positions that
/// occur, in ascending [`ColumnKey`] order.
pub fn evaluation_matrix<R: EvaluationRow>(
    rows: &[R],
    n: usize,
    grading: Option<&ElementaryGrading>,
    kind: Option<InvolutionKind>,
    budget: &Budget,
) -> Result<EvaluationMatrix, CodimError> {
    let m = first_degree(rows)?;
    let eval = UnitEvaluator::new(n, m, kind, grading, budget)?;
    if rows.len() as u64 > budget.max_rows {
        return Err(CodimError::Budget(format!(
            "{} rows exceed the limit of {}",
            rows.len(),
            budget.max_rows
        )));
    }
    build_matrix(&eval, rows.chunks(CHUNK).map(|c| c.to_vec_ref()), budget)
}

// Lets `build_matrix` take borrowed or owned chunks uniformly.
trait ChunkRef<R> {
    fn to_vec_ref(&self) -> Vec<&R>;
}

impl<R> ChunkRef<R> for [R] {
    fn to_vec_ref(&self) -> Vec<&R> {
        self.iter().collect()
    }
}

fn first_degree<R: EvaluationRow>(rows: &[R]) -> Result<usize, CodimError> {
    let mut m = None;
    if let Some(r) = rows.first() {
        r.for_each_term(&mut |mono, _| {
            m.get_or_insert(mono.len());
        })?;
    }
    Ok(m.unwrap_or(0))
}

/// Two passes over the rows: collect the column set, then fill the matrix.
/// Rows are evaluated in parallel within each chunk; results are assembled in
/// row order, so the matrix does not depend on scheduling.
fn build_matrix<'r, R, I>(
    eval: &UnitEvaluator<'_>,
    chunks: I,
    budget: &Budget,
) -> Result<EvaluationMatrix, CodimError>
where
    R: EvaluationRow + 'r,
    I: Iterator<Item = Vec<&'r R>> + Clone,
{
    let mut columns: BTreeSet<ColumnKey> = BTreeSet::new();
    for chunk in chunks.clone() {
        let keys: Vec<Vec<ColumnKey>> = chunk
            .par_iter()
            .map(|r| Ok(eval.row_entries(*r)?.into_iter().map(|(k, _)| k).collect()))
            .collect::<Result<_, CodimError>>()?;
        columns.extend(keys.into_iter().flatten());
        if columns.len() > budget.max_columns {
            return Err(CodimError::Budget(format!(
                "more than {} distinct columns",
                budget.max_columns
            )));
        }
    }
    let columns: Vec<ColumnKey> = columns.into_iter().collect();
    let mut matrix = SparseMatrix::new(columns.len());
    for chunk in chunks {
        let rows: Vec<Vec<(u32, Rational64)>> = chunk
            .par_iter()
            .map(|r| {
                Ok(eval
                    .row_entries(*r)?
                    .into_iter()
                    .map(|(k, v)| {
                        let c = columns
                            .binary_search(&k)
                            .expect("column collected in pass one");
                        (c as u32, v)
                    })
                    .collect())
            })
            .collect::<Result<_, CodimError>>()?;
        for row in rows {
            matrix.push_row(row)?;
        }
    }
    Ok(EvaluationMatrix { matrix, columns })
}

/// A codimension to compute.
#[derive(Debug, Clone)]
pub struct CodimRequest {
    pub n: usize,
    pub m: usize,
    pub grading: Option<ElementaryGrading>,
    pub involution: Option<InvolutionKind>,
    pub policy: RankPolicy,
    pub budget: Budget,
}

impl CodimRequest {
    pub fn new(n: usize, m: usize) -> Self {
        CodimRequest {
            n,
            m,
            grading: None,
            involution: None,
            policy: RankPolicy::default(),
            budget: Budget::default(),
        }
    }

    pub fn with_involution(mut self, kind: Option<InvolutionKind>) -> Self {
        self.involution = kind;
        self
    }

    pub fn with_grading(mut self, grading: Option<ElementaryGrading>) -> Self {
        self.grading = grading;
        self
    }

    pub fn with_policy(mut self, policy: RankPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<(), CodimError> {
        if self.n == 0 {
            return Err(CodimError::Invalid("n must be at least 1".into()));
        }
        if let Some(kind) = self.involution {
            kind.admissible(self.n)
                .map_err(|e| CodimError::Invalid(e.to_string()))?;
        }
        if let Some(g) = &self.grading {
            if g.size() != self.n {
                return Err(CodimError::Invalid(format!(
                    "grading is on UT_{} but n = {}",
                    g.size(),
                    self.n
                )));
            }
            if let Some(kind) = self.involution {
                if let InvolutionAnalysis::NotHomogeneous(conflict) =
                    homogeneous_involution_map(g, kind)?
                {
                    return Err(CodimError::Invalid(format!(
                        "the {kind} involution is not homogeneous for this grading: {conflict}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn echo(&self) -> RequestEcho {
        RequestEcho {
            n: self.n,
            m: self.m,
            grading: self.grading.as_ref().map(ElementaryGrading::to_file),
            involution: self.involution,
            policy: self.policy.clone(),
            budget: self.budget.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestEcho {
    pub n: usize,
    pub m: usize,
    pub grading: Option<GradingFile>,
    pub involution: Option<InvolutionKind>,
    pub policy: RankPolicy,
    pub budget: Budget,
}

/// Rank of one degree-vector block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockValue {
    pub degrees: Vec<String>,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodimReport {
    pub request: RequestEcho,
    pub value: u64,
    /// Nonzero blocks of a graded computation, in odometer order.
    pub blocks: Vec<BlockValue>,
    pub rank_mode: RankMode,
    pub rows: u64,
    pub columns: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

/// `c_m` for the requested grading and involution.
pub fn codim(req: &CodimRequest) -> Result<CodimReport, CodimError> {
    req.validate()?;
    let started = Instant::now();
    let star = req.involution.is_some();
    let per_block = monomial_count(req.m, star)
        .filter(|&c| c <= req.budget.max_rows as u128)
        .ok_or_else(|| {
            CodimError::Budget(format!(
                "m = {} gives more than {} monomial rows",
                req.m, req.budget.max_rows
            ))
        })? as u64;

    let (value, blocks, mode, rows, columns) = match &req.grading {
        None => {
            let (rank, cols) = monomial_block_rank(req, None, None)?;
            (rank.value as u64, Vec::new(), rank.mode, per_block, cols)
        }
        Some(grading) => {
            let support = grading.support();
            let vectors = degree_vectors(support.len(), req.m);
            let results: Vec<(Vec<usize>, crate::linalg::RankResult, u64)> = vectors
                .par_iter()
                .map(|v| {
                    let labels: Vec<GroupElement> = v.iter().map(|&i| support[i].clone()).collect();
                    let (rank, cols) = monomial_block_rank(req, Some(grading), Some(labels))?;
                    Ok((v.clone(), rank, cols))
                })
                .collect::<Result<_, CodimError>>()?;
            let mut value = 0;
            let mut mode = RankMode::Exact;
            let mut columns = 0;
            let mut blocks = Vec::new();
            for (v, rank, cols) in results {
                value += rank.value as u64;
                columns += cols;
                if rank.mode == RankMode::ModularAgreed {
                    mode = RankMode::ModularAgreed;
                }
                if rank.value > 0 {
                    blocks.push(BlockValue {
                        degrees: v.iter().map(|&i| support[i].to_string()).collect(),
                        value: rank.value as u64,
                    });
                }
            }
            let rows = per_block * vectors.len() as u64;
            (value, blocks, mode, rows, columns)
        }
    };
    Ok(CodimReport {
        request: req.echo(),
        value,
        blocks,
        rank_mode: mode,
        rows,
        columns,
        elapsed_ms: Some(started.elapsed().as_millis() as u64),
    })
}

/// The matrix whose rank [`codim`] reports: the monomial evaluation matrix,
/// or for a grading the block-diagonal sum of the per-degree-vector blocks.
pub fn full_matrix(req: &CodimRequest) -> Result<SparseMatrix, CodimError> {
    req.validate()?;
    match &req.grading {
        None => Ok(monomial_matrix(req, None, None)?.matrix),
        Some(grading) => {
            let support = grading.support();
            let blocks = degree_vectors(support.len(), req.m)
                .par_iter()
                .map(|v| {
                    let labels = v.iter().map(|&i| support[i].clone()).collect();
                    Ok(monomial_matrix(req, Some(grading), Some(labels))?.matrix)
                })
                .collect::<Result<Vec<_>, CodimError>>()?;
            Ok(SparseMatrix::block_diagonal(&blocks))
        }
    }
}

/// All vectors in `{0..k-1}^m`, first coordinate most significant.
fn degree_vectors(k: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..k).map(move |i| {
                    let mut w = v.clone();
                    w.push(i);
                    w
                })
            })
            .collect();
    }
    out
}

/// Evaluation matrix of all monomials with one degree labelling (or none).
pub fn monomial_matrix(
    req: &CodimRequest,
    grading: Option<&ElementaryGrading>,
    labels: Option<Vec<GroupElement>>,
) -> Result<EvaluationMatrix, CodimError> {
    let eval = UnitEvaluator::new(req.n, req.m, req.involution, grading, &req.budget)?;
    let star = req.involution.is_some();
    let mut chunks: Vec<Vec<StarMonomial>> = Vec::new();
    let mut current = Vec::with_capacity(CHUNK);
    for mono in enumerate_monomials(req.m, star, labels.map(|l| vec![l])) {
        current.push(mono);
        if current.len() == CHUNK {
            chunks.push(std::mem::replace(&mut current, Vec::with_capacity(CHUNK)));
        }
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    let borrowed = chunks.iter().map(|c| c.iter().collect::<Vec<_>>());
    build_matrix(&eval, borrowed, &req.budget)
}

fn monomial_block_rank(
    req: &CodimRequest,
    grading: Option<&ElementaryGrading>,
    labels: Option<Vec<GroupElement>>,
) -> Result<(crate::linalg::RankResult, u64), CodimError> {
    let em = monomial_matrix(req, grading, labels)?;
    let cols = em.matrix.cols() as u64;
    if em.matrix.nnz() == 0 {
        return Ok((
            crate::linalg::RankResult {
                value: 0,
                mode: RankMode::Exact,
                primes: Vec::new(),
                steps: 0,
            },
            cols,
        ));
    }
    Ok((rank_certified(&em.matrix, &req.policy)?, cols))
}

/// Unit positions of `UT_n`, re-exported for callers assembling tuples.
pub fn units(n: usize) -> Vec<(usize, usize)> {
    unit_positions(n)
}
