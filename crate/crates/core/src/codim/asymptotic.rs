use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Pow, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{codim, Budget, CodimError, CodimRequest};
use crate::free_algebra::monomial_count;
use crate::linalg::RankPolicy;
use crate::ut::{ElementaryGrading, GradingFile, InvolutionKind};

/// The growth functions codimensions are compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AsymptoticTarget {
    pub n: usize,
}

impl AsymptoticTarget {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "n must be positive");
        AsymptoticTarget { n }
    }

    /// `2^floor((n-1)/2) / n^(n-1) * m^(n-1) * n^m`.
    pub fn star(&self, m: usize) -> BigRational {
        let n = BigInt::from(self.n);
        let two = BigInt::from(2);
        let numer = Pow::pow(&two, (self.n - 1) / 2)
            * Pow::pow(&BigInt::from(m), self.n - 1)
            * Pow::pow(&n, m);
        BigRational::new(numer, Pow::pow(&n, self.n - 1))
    }

    /// `m^(n-1) n^(m-n+1)`.
    pub fn ordinary(&self, m: usize) -> BigRational {
        let n = BigInt::from(self.n);
        BigRational::new(
            Pow::pow(&BigInt::from(m), self.n - 1) * Pow::pow(&n, m),
            Pow::pow(&n, self.n - 1),
        )
    }
}

/// `p/q` with `q > 0`, also for integers.
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal expansion rounded half away from zero to `precision` digits.
pub fn format_decimal(r: &BigRational, precision: usize) -> String {
    let scale = Pow::pow(&BigInt::from(10), precision);
    let scaled = r.abs() * BigRational::from_integer(scale.clone());
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let twice = rem * 2;
    let digits = if twice >= *scaled.denom() { q + 1 } else { q };
    let (int, frac) = digits.div_rem(&scale);
    let sign = if r.is_negative() && !digits.is_zero() {
        "-"
    } else {
        ""
    };
    if precision == 0 {
        format!("{sign}{int}")
    } else {
        format!(
            "{sign}{int}.{:0>width$}",
            frac.to_string(),
            width = precision
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub m: usize,
    pub codim: u64,
    /// Star target, `p/q`.
    pub target: String,
    /// Ordinary target, `p/q`.
    pub ordinary_target: String,
    /// `codim / target` in decimal.
    pub ratio: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsymptoticTable {
    pub n: usize,
    pub grading: Option<GradingFile>,
    pub involution: Option<InvolutionKind>,
    pub precision: usize,
    pub rows: Vec<AsymptoticRow>,
}

/// `c_m` next to the targets for `m = 1..=m_max`. Informational only.
pub fn asymptotic_report(
    n: usize,
    m_max: usize,
    grading: Option<&ElementaryGrading>,
    kind: Option<InvolutionKind>,
    precision: usize,
    policy: &RankPolicy,
    budget: &Budget,
) -> Result<AsymptoticTable, CodimError> {
    if n == 0 {
        return Err(CodimError::Invalid("n must be at least 1".into()));
    }
    let fits = monomial_count(m_max, kind.is_some()).is_some_and(|c| c <= budget.max_rows as u128);
    if !fits {
        return Err(CodimError::Budget(format!(
            "m = {m_max} gives more than {} monomial rows",
            budget.max_rows
        )));
    }
    let target = AsymptoticTarget::new(n);
    let mut rows = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let req = CodimRequest::new(n, m)
            .with_grading(grading.cloned())
            .with_involution(kind)
            .with_policy(policy.clone())
            .with_budget(budget.clone());
        let value = codim(&req)?.value;
        let t = target.star(m);
        let ratio = BigRational::from_integer(BigInt::from(value)) / &t;
        rows.push(AsymptoticRow {
            m,
            codim: value,
            target: format_rational(&t),
            ordinary_target: format_rational(&target.ordinary(m)),
            ratio: format_decimal(&ratio, precision),
        });
    }
    Ok(AsymptoticTable {
        n,
        grading: grading.map(ElementaryGrading::to_file),
        involution: kind,
        precision,
        rows,
    })
}
