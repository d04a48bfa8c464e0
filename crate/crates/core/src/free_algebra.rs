//! The multilinear part of the free graded algebra with involution: star
//! monomials, sparse polynomials, left-normed commutators, and the
//! commutator-product families that are independent modulo the identities
//! of `UT_n`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{Group, GroupElement, GroupError, GroupInvolutionMap};
use crate::ut::{InvolutionKind, UtError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("commutator needs at least two entries, got {0}")]
    ShortCommutator(usize),
    #[error("variable x{0} is repeated")]
    RepeatedVariable(usize),
    #[error("n must be at least 2, got {0}")]
    DegreeTooSmallN(usize),
    #[error("m = {m} is below 2(n-1) = {bound}")]
    DegreeTooSmallM { m: usize, bound: usize },
    #[error("degree labels and involution map must be given together")]
    DegreeMismatch,
    #[error("cannot multiply monomials with and without degree labels")]
    MixedDegrees,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Ut(#[from] UtError),
}

/// One factor `x_var` or `x_var^*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Factor {
    pub var: u16,
    pub star: bool,
}

impl Factor {
    pub fn plain(var: usize) -> Self {
        Factor {
            var: var as u16,
            star: false,
        }
    }

    pub fn starred(var: usize) -> Self {
        Factor {
            var: var as u16,
            star: true,
        }
    }
}

/// A word in distinct variables, each possibly starred, with optional
/// per-factor degree labels. A label is the degree of the variable itself;
/// a starred occurrence of a variable labelled `g` has degree `psi(g)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StarMonomial {
    factors: Vec<Factor>,
    degrees: Option<Vec<GroupElement>>,
}

impl StarMonomial {
    pub fn new(factors: Vec<Factor>) -> Result<Self, AlgebraError> {
        check_distinct(factors.iter().map(|f| f.var as usize))?;
        Ok(StarMonomial {
            factors,
            degrees: None,
        })
    }

    pub fn with_degrees(
        factors: Vec<Factor>,
        degrees: Vec<GroupElement>,
    ) -> Result<Self, AlgebraError> {
        if degrees.len() != factors.len() {
            return Err(AlgebraError::DegreeMismatch);
        }
        let mut mono = StarMonomial::new(factors)?;
        mono.degrees = Some(degrees);
        Ok(mono)
    }

    /// The empty word, i.e. the unit of the free algebra.
    pub fn one() -> Self {
        StarMonomial {
            factors: Vec::new(),
            degrees: None,
        }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn degrees(&self) -> Option<&[GroupElement]> {
        self.degrees.as_deref()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Degree label of variable `x_var`, if labels are present.
    pub fn degree_of_var(&self, var: usize) -> Option<&GroupElement> {
        let degrees = self.degrees.as_ref()?;
        self.factors
            .iter()
            .position(|f| f.var as usize == var)
            .map(|k| &degrees[k])
    }

    /// Labels indexed by variable, `x1` first.
    pub fn degree_vector(&self) -> Option<Vec<GroupElement>> {
        let degrees = self.degrees.as_ref()?;
        let mut pairs: Vec<(u16, &GroupElement)> =
            self.factors.iter().map(|f| f.var).zip(degrees).collect();
        pairs.sort_by_key(|(v, _)| *v);
        Some(pairs.into_iter().map(|(_, g)| g.clone()).collect())
    }

    /// True iff the variables are exactly `x1..xm`.
    pub fn is_multilinear_in(&self, m: usize) -> bool {
        let mut vars: Vec<usize> = self.factors.iter().map(|f| f.var as usize).collect();
        vars.sort_unstable();
        vars.into_iter().eq(1..=m)
    }

    pub fn concat(&self, other: &StarMonomial) -> Result<StarMonomial, AlgebraError> {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        let degrees = match (&self.degrees, &other.degrees) {
            (None, None) => None,
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ if self.is_empty() => other.degrees.clone(),
            _ if other.is_empty() => self.degrees.clone(),
            _ => return Err(AlgebraError::MixedDegrees),
        };
        check_distinct(factors.iter().map(|f| f.var as usize))?;
        Ok(StarMonomial { factors, degrees })
    }

    /// Reverse the word and toggle every star. Labels travel with their
    /// variables.
    pub fn star(&self) -> StarMonomial {
        StarMonomial {
            factors: self
                .factors
                .iter()
                .rev()
                .map(|f| Factor {
                    var: f.var,
                    star: !f.star,
                })
                .collect(),
            degrees: self
                .degrees
                .as_ref()
                .map(|d| d.iter().rev().cloned().collect()),
        }
    }

    /// The G-degree of the whole word: the product over factors of `g` for
    /// `x^(g)` and `psi(g)` for `(x^(g))^*`.
    pub fn total_degree(
        &self,
        group: &Group,
        psi: &GroupInvolutionMap,
    ) -> Result<GroupElement, AlgebraError> {
        let degrees = self.degrees.as_ref().ok_or(AlgebraError::DegreeMismatch)?;
        let mut acc = group.identity();
        for (f, g) in self.factors.iter().zip(degrees) {
            let d = if f.star { psi.apply(g)? } else { g.clone() };
            acc = group.mul(&acc, &d)?;
        }
        Ok(acc)
    }

    fn sort_key(
        &self,
    ) -> (
        impl Iterator<Item = u16> + '_,
        impl Iterator<Item = bool> + '_,
    ) {
        (
            self.factors.iter().map(|f| f.var),
            self.factors.iter().map(|f| f.star),
        )
    }
}

impl Ord for StarMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let (va, fa) = self.sort_key();
        let (vb, fb) = other.sort_key();
        va.cmp(vb)
            .then_with(|| fa.cmp(fb))
            .then_with(|| self.degree_vector().cmp(&other.degree_vector()))
    }
}

impl PartialOrd for StarMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for StarMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("1");
        }
        for (k, factor) in self.factors.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            write!(f, "x{}", factor.var)?;
            if factor.star {
                f.write_str("^*")?;
            }
        }
        Ok(())
    }
}

fn check_distinct(vars: impl Iterator<Item = usize>) -> Result<(), AlgebraError> {
    let mut seen = std::collections::BTreeSet::new();
    for v in vars {
        if !seen.insert(v) {
            return Err(AlgebraError::RepeatedVariable(v));
        }
    }
    Ok(())
}

/// A finite rational combination of star monomials. Zero coefficients are
/// never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparsePolynomial {
    terms: BTreeMap<StarMonomial, BigRational>,
}

impl SparsePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(mono: StarMonomial) -> Self {
        let mut p = Self::zero();
        p.add_term(mono, BigRational::one());
        p
    }

    pub fn add_term(&mut self, mono: StarMonomial, coef: BigRational) {
        if coef.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(coef);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += coef;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&StarMonomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mono: &StarMonomial) -> BigRational {
        self.terms
            .get(mono)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &SparsePolynomial) -> SparsePolynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> SparsePolynomial {
        let mut out = SparsePolynomial::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn sub(&self, other: &SparsePolynomial) -> SparsePolynomial {
        self.add(&other.scale(&-BigRational::one()))
    }

    /// Product in the free algebra (word concatenation, bilinearly).
    pub fn mul(&self, other: &SparsePolynomial) -> Result<SparsePolynomial, AlgebraError> {
        let mut out = SparsePolynomial::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.concat(b)?, ca * cb);
            }
        }
        Ok(out)
    }

    /// `[self, other] = self*other - other*self`.
    pub fn bracket(&self, other: &SparsePolynomial) -> Result<SparsePolynomial, AlgebraError> {
        Ok(self.mul(other)?.sub(&other.mul(self)?))
    }

    /// Common degree of the terms (number of factors), if there is one.
    pub fn degree(&self) -> Option<usize> {
        let mut lens = self.terms.keys().map(StarMonomial::len);
        let first = lens.next()?;
        lens.all(|l| l == first).then_some(first)
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermJson {
                    coef: c.to_string(),
                    factors: m.factors.clone(),
                })
                .collect(),
        }
    }
}

impl fmt::Display for SparsePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (mono, c)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if k == 0 {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let abs = c.abs();
            if !abs.is_one() {
                write!(f, "{abs}*")?;
            }
            write!(f, "{mono}")?;
        }
        Ok(())
    }
}

/// Stable JSON form of a polynomial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub coef: String,
    pub factors: Vec<Factor>,
}

/// Left-normed commutator `[[x_{j1}^d, x_{j2}], ..., x_{jt}]` where only the
/// head variable carries the flag.
pub fn expand_commutator(
    indices: &[usize],
    head_star: bool,
) -> Result<SparsePolynomial, AlgebraError> {
    if indices.len() < 2 {
        return Err(AlgebraError::ShortCommutator(indices.len()));
    }
    check_distinct(indices.iter().copied())?;
    let head = Factor {
        var: indices[0] as u16,
        star: head_star,
    };
    // Signed words, built without going through the polynomial map.
    let mut words: Vec<(Vec<Factor>, bool)> = vec![(vec![head], false)];
    for &j in &indices[1..] {
        let x = Factor::plain(j);
        let mut next = Vec::with_capacity(words.len() * 2);
        for (w, neg) in &words {
            let mut right = w.clone();
            right.push(x);
            next.push((right, *neg));
            let mut left = Vec::with_capacity(w.len() + 1);
            left.push(x);
            left.extend_from_slice(w);
            next.push((left, !*neg));
        }
        words = next;
    }
    let mut poly = SparsePolynomial::zero();
    for (w, neg) in words {
        let c = if neg {
            -BigRational::one()
        } else {
            BigRational::one()
        };
        poly.add_term(StarMonomial::new(w)?, c);
    }
    Ok(poly)
}

/// Indexing data of one member `x_{i1}...x_{ir} c_1 ... c_{n-1}` of the
/// commutator-product families.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CommutatorShape {
    /// Increasing prefix variables.
    pub prefix: Vec<usize>,
    /// Each entry `(j1, j2, ..., js)` with `s >= 2` and `j1 > j2 < j3 < ... < js`.
    pub commutators: Vec<Vec<usize>>,
    /// Star flag on the head of each commutator.
    pub flags: Vec<bool>,
}

impl CommutatorShape {
    pub fn degree(&self) -> usize {
        self.prefix.len() + self.commutators.iter().map(Vec::len).sum::<usize>()
    }

    pub fn to_polynomial(&self) -> Result<SparsePolynomial, AlgebraError> {
        let prefix = StarMonomial::new(self.prefix.iter().map(|&i| Factor::plain(i)).collect())?;
        let mut poly = SparsePolynomial::monomial(prefix);
        for (k, c) in self.commutators.iter().enumerate() {
            let flag = self.flags.get(k).copied().unwrap_or(false);
            poly = poly.mul(&expand_commutator(c, flag)?)?;
        }
        Ok(poly)
    }

    /// Whether every commutator has the head-descent/tail-ascent form.
    pub fn is_well_formed(&self) -> bool {
        self.prefix.windows(2).all(|w| w[0] < w[1])
            && self
                .commutators
                .iter()
                .all(|c| c.len() >= 2 && c[0] > c[1] && c[1..].windows(2).all(|w| w[0] < w[1]))
    }
}

impl fmt::Display for CommutatorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.prefix.iter().map(|i| format!("x{i}")).collect();
        for (k, c) in self.commutators.iter().enumerate() {
            let star = if self.flags.get(k).copied().unwrap_or(false) {
                "^*"
            } else {
                ""
            };
            let body = c
                .iter()
                .enumerate()
                .map(|(p, j)| {
                    if p == 0 {
                        format!("x{j}{star}")
                    } else {
                        format!("x{j}")
                    }
                })
                .join(",");
            parts.push(format!("[{body}]"));
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("*"))
        }
    }
}

/// A family member together with its expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyMember {
    pub shape: CommutatorShape,
    pub polynomial: SparsePolynomial,
}

/// Commutator shapes over `x1..xm` with exactly `commutators` commutators
/// and all flags unset, in ascending shape order.
pub fn commutator_shapes(commutators: usize, m: usize) -> Vec<CommutatorShape> {
    let mut out = Vec::new();
    let all: Vec<usize> = (1..=m).collect();
    for prefix_len in 0..=m {
        for prefix in all.iter().copied().combinations(prefix_len) {
            let rest: Vec<usize> = all
                .iter()
                .copied()
                .filter(|v| !prefix.contains(v))
                .collect();
            let mut chosen = Vec::with_capacity(commutators);
            fill_commutators(&rest, commutators, &mut chosen, &mut |cs| {
                out.push(CommutatorShape {
                    prefix: prefix.clone(),
                    commutators: cs.to_vec(),
                    flags: vec![false; commutators],
                })
            });
        }
    }
    out.sort();
    out
}

// Ordered partitions of `remaining` into `left` blocks of size >= 2, each
// turned into every admissible commutator sequence.
fn fill_commutators(
    remaining: &[usize],
    left: usize,
    chosen: &mut Vec<Vec<usize>>,
    emit: &mut impl FnMut(&[Vec<usize>]),
) {
    if left == 0 {
        if remaining.is_empty() {
            emit(chosen);
        }
        return;
    }
    if remaining.len() < 2 * left {
        return;
    }
    let max_size = remaining.len() - 2 * (left - 1);
    for size in 2..=max_size {
        for block in remaining.iter().copied().combinations(size) {
            let rest: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|v| !block.contains(v))
                .collect();
            // `block` is increasing; the head is any element but the minimum,
            // the tail is what remains, in increasing order.
            for h in 1..block.len() {
                let mut seq = Vec::with_capacity(size);
                seq.push(block[h]);
                seq.extend(
                    block
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != h)
                        .map(|(_, &v)| v),
                );
                chosen.push(seq);
                fill_commutators(&rest, left - 1, chosen, emit);
                chosen.pop();
            }
        }
    }
}

fn check_n(n: usize) -> Result<(), AlgebraError> {
    if n < 2 {
        Err(AlgebraError::DegreeTooSmallN(n))
    } else {
        Ok(())
    }
}

/// Multilinear products `x_{i1}...x_{ir} c_1...c_{n-1}` in `x1..xm`; empty
/// when `m < 2(n-1)`.
pub fn drensky_multilinear_family(n: usize, m: usize) -> Result<Vec<FamilyMember>, AlgebraError> {
    check_n(n)?;
    commutator_shapes(n - 1, m)
        .into_iter()
        .map(|shape| {
            let polynomial = shape.to_polynomial()?;
            Ok(FamilyMember { shape, polynomial })
        })
        .collect()
}

/// Number of star flags that may be set in a family member, `floor((n-1)/2)`.
pub fn free_flag_count(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

/// The Drensky shapes crossed with every flag vector whose set flags sit on
/// the first `floor((n-1)/2)` commutators.
pub fn star_family(
    n: usize,
    m: usize,
    kind: InvolutionKind,
) -> Result<Vec<FamilyMember>, AlgebraError> {
    check_n(n)?;
    kind.admissible(n)?;
    if m < 2 * (n - 1) {
        return Err(AlgebraError::DegreeTooSmallM {
            m,
            bound: 2 * (n - 1),
        });
    }
    let free = free_flag_count(n);
    let mut out = Vec::new();
    for base in commutator_shapes(n - 1, m) {
        for mask in 0u64..(1u64 << free) {
            let mut shape = base.clone();
            for (l, flag) in shape.flags.iter_mut().enumerate().take(free) {
                *flag = mask >> l & 1 == 1;
            }
            let polynomial = shape.to_polynomial()?;
            out.push(FamilyMember { shape, polynomial });
        }
    }
    out.sort_by(|a, b| a.shape.cmp(&b.shape));
    Ok(out)
}

/// Size of [`drensky_multilinear_family`], by counting rather than listing.
///
/// A commutator on a `s`-element set admits `s - 1` sequences, so with
/// `W(k, c)` the weighted number of ordered partitions of a `k`-set into `c`
/// blocks of size at least 2,
/// `W(k, c) = sum_s C(k, s) (s - 1) W(k - s, c - 1)` and
/// `q = sum_k C(m, k) W(k, n - 1)`.
pub fn count_qm(n: usize, m: usize) -> Result<BigUint, AlgebraError> {
    check_n(n)?;
    let blocks = n - 1;
    let binom = binomial_table(m);
    // w[c][k]
    let mut w = vec![vec![BigUint::zero(); m + 1]; blocks + 1];
    w[0][0] = BigUint::one();
    for c in 1..=blocks {
        for k in 2..=m {
            let mut acc = BigUint::zero();
            for s in 2..=k {
                if w[c - 1][k - s].is_zero() {
                    continue;
                }
                acc += &binom[k][s] * BigUint::from(s - 1) * &w[c - 1][k - s];
            }
            w[c][k] = acc;
        }
    }
    Ok((0..=m).map(|k| &binom[m][k] * &w[blocks][k]).sum())
}

fn binomial_table(m: usize) -> Vec<Vec<BigUint>> {
    let mut t = vec![vec![BigUint::zero(); m + 1]; m + 1];
    for a in 0..=m {
        t[a][0] = BigUint::one();
        for b in 1..=a {
            t[a][b] = &t[a - 1][b - 1] + &t[a - 1][b];
        }
    }
    t
}

/// Every monomial `x_{s(1)}^{d_1} ... x_{s(m)}^{d_m}`, permutations in
/// lexicographic order and star flags as a binary counter with the first
/// factor most significant. With degree assignments (indexed by variable),
/// the whole sequence repeats once per assignment.
pub fn enumerate_monomials(
    m: usize,
    star: bool,
    degree_assignments: Option<Vec<Vec<GroupElement>>>,
) -> impl Iterator<Item = StarMonomial> {
    let assignments: Vec<Option<Vec<GroupElement>>> = match degree_assignments {
        Some(list) => list.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let flag_count: u64 = if star { 1 << m } else { 1 };
    assignments.into_iter().flat_map(move |degrees| {
        (1..=m).permutations(m).flat_map(move |perm| {
            let degrees = degrees.clone();
            (0..flag_count).map(move |mask| {
                let factors: Vec<Factor> = perm
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| Factor {
                        var: v as u16,
                        star: mask >> (m - 1 - k) & 1 == 1,
                    })
                    .collect();
                let labels = degrees
                    .as_ref()
                    .map(|d| perm.iter().map(|&v| d[v - 1].clone()).collect());
                StarMonomial {
                    factors,
                    degrees: labels,
                }
            })
        })
    })
}

/// Number of monomials [`enumerate_monomials`] yields per degree assignment.
pub fn monomial_count(m: usize, star: bool) -> Option<u128> {
    let mut count: u128 = 1;
    for k in 2..=m as u128 {
        count = count.checked_mul(k)?;
    }
    if star {
        count = count.checked_mul(1u128.checked_shl(m as u32)?)?;
    }
    Some(count)
}

/// The involution of the free algebra: reverse each word and toggle every
/// star. Degree labels stay with their variables; `psi` must be supplied
/// exactly when labels are present and must be defined on every label.
pub fn star_of_polynomial(
    p: &SparsePolynomial,
    psi: Option<&GroupInvolutionMap>,
) -> Result<SparsePolynomial, AlgebraError> {
    let mut out = SparsePolynomial::zero();
    for (mono, c) in p.terms() {
        match (mono.degrees(), psi) {
            (None, None) => {}
            (Some(labels), Some(psi)) => {
                for g in labels {
                    psi.apply(g)?;
                }
            }
            (Some(_), None) if mono.is_empty() => {}
            _ => return Err(AlgebraError::DegreeMismatch),
        }
        out.add_term(mono.star(), c.clone());
    }
    Ok(out)
}
