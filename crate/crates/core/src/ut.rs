//! The algebra `UT_n` over the rationals: matrix units, the orthogonal and
//! symplectic involutions, elementary gradings and homogeneous involutions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{Group, GroupElement, GroupError, GroupHom, GroupInvolutionMap, GroupSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UtError {
    #[error("position ({0}, {1}) lies below the diagonal")]
    BelowDiagonal(usize, usize),
    #[error("position ({i}, {j}) is out of range for n = {n}")]
    OutOfRange { i: usize, j: usize, n: usize },
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("the symplectic involution needs even n, got n = {0}")]
    SymplecticOddSize(usize),
    #[error("invalid grading: {0}")]
    InvalidGrading(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Orthogonal or symplectic involution on `UT_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvolutionKind {
    Orthogonal,
    Symplectic,
}

impl InvolutionKind {
    pub fn admissible(self, n: usize) -> Result<(), UtError> {
        match self {
            InvolutionKind::Symplectic if n % 2 == 1 => Err(UtError::SymplecticOddSize(n)),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for InvolutionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvolutionKind::Orthogonal => "orthogonal",
            InvolutionKind::Symplectic => "symplectic",
        })
    }
}

impl FromStr for InvolutionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "orthogonal" => Ok(InvolutionKind::Orthogonal),
            "symplectic" => Ok(InvolutionKind::Symplectic),
            other => Err(format!("unknown involution {other:?}")),
        }
    }
}

/// Matrix-unit positions `(i, j)`, `1 <= i <= j <= n`, in row-major order.
pub fn unit_positions(n: usize) -> Vec<(usize, usize)> {
    (1..=n).flat_map(|i| (i..=n).map(move |j| (i, j))).collect()
}

/// Index of `(i, j)` in [`unit_positions`].
pub fn unit_index(n: usize, i: usize, j: usize) -> usize {
    // rows 1..i-1 contribute n, n-1, ..., n-i+2 positions
    (i - 1) * (2 * n + 2 - i) / 2 + (j - i)
}

/// Image of `e_{ij}` under an involution, as `(sign, i', j')` with
/// `e_{ij}^* = sign * e_{i'j'}`. The symplectic sign is `d_{i'} d_{j'}` where
/// `D = diag(d_1, ..., d_n)` is the conjugating matrix.
pub fn star_of_unit(kind: InvolutionKind, n: usize, i: usize, j: usize) -> (i8, usize, usize) {
    let (ri, rj) = (n + 1 - j, n + 1 - i);
    match kind {
        InvolutionKind::Orthogonal => (1, ri, rj),
        InvolutionKind::Symplectic => (symplectic_d(n, ri) * symplectic_d(n, rj), ri, rj),
    }
}

fn symplectic_d(n: usize, k: usize) -> i8 {
    if k <= n / 2 {
        1
    } else {
        -1
    }
}

/// An upper-triangular `n x n` matrix with exact rational entries. Only
/// nonzero entries are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), BigRational>,
}

impl UtMatrix {
    pub fn zero(n: usize) -> Self {
        UtMatrix {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = UtMatrix::zero(n);
        for k in 1..=n {
            m.entries.insert((k, k), BigRational::one());
        }
        m
    }

    /// The matrix unit `e_{ij}`.
    pub fn unit(i: usize, j: usize, n: usize) -> Result<Self, UtError> {
        let mut m = UtMatrix::zero(n);
        m.set(i, j, BigRational::one())?;
        Ok(m)
    }

    /// `e_{kk} + ... + e_{nn}`; zero when `k > n`.
    pub fn diagonal_tail(k: usize, n: usize) -> Self {
        let mut m = UtMatrix::zero(n);
        for d in k.max(1)..=n {
            m.entries.insert((d, d), BigRational::one());
        }
        m
    }

    pub fn diagonal(values: &[BigRational]) -> Self {
        let mut m = UtMatrix::zero(values.len());
        for (k, v) in values.iter().enumerate() {
            if !v.is_zero() {
                m.entries.insert((k + 1, k + 1), v.clone());
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> BigRational {
        self.entries
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, value: BigRational) -> Result<(), UtError> {
        if i > j {
            return Err(UtError::BelowDiagonal(i, j));
        }
        if i == 0 || j > self.n {
            return Err(UtError::OutOfRange { i, j, n: self.n });
        }
        if value.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), value);
        }
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &BigRational)> {
        self.entries.iter()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    fn same_size(&self, other: &UtMatrix) -> Result<(), UtError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(UtError::SizeMismatch(self.n, other.n))
        }
    }

    pub fn add(&self, other: &UtMatrix) -> Result<UtMatrix, UtError> {
        self.same_size(other)?;
        let mut out = self.clone();
        for (&pos, v) in &other.entries {
            let sum = out.get(pos.0, pos.1) + v;
            out.set(pos.0, pos.1, sum)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &UtMatrix) -> Result<UtMatrix, UtError> {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> UtMatrix {
        if c.is_zero() {
            return UtMatrix::zero(self.n);
        }
        UtMatrix {
            n: self.n,
            entries: self.entries.iter().map(|(&p, v)| (p, v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &UtMatrix) -> Result<UtMatrix, UtError> {
        self.same_size(other)?;
        let mut acc: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        for (&(i, k), a) in &self.entries {
            for (&(_, j), b) in other.entries.range((k, k)..=(k, self.n)) {
                *acc.entry((i, j)).or_insert_with(BigRational::zero) += a * b;
            }
        }
        acc.retain(|_, v| !v.is_zero());
        Ok(UtMatrix {
            n: self.n,
            entries: acc,
        })
    }

    /// Reflection along the secondary diagonal: `(i, j) -> (n-j+1, n-i+1)`.
    pub fn reflect(&self) -> UtMatrix {
        let n = self.n;
        UtMatrix {
            n,
            entries: self
                .entries
                .iter()
                .map(|(&(i, j), v)| ((n + 1 - j, n + 1 - i), v.clone()))
                .collect(),
        }
    }

    pub fn apply_star(&self, kind: InvolutionKind) -> Result<UtMatrix, UtError> {
        match kind {
            InvolutionKind::Orthogonal => Ok(self.reflect()),
            InvolutionKind::Symplectic => {
                kind.admissible(self.n)?;
                // D is its own inverse.
                let d = symplectic_conjugator(self.n);
                d.mul(&self.reflect())?.mul(&d)
            }
        }
    }

    /// `(i, j, value)` of the single nonzero entry, if there is exactly one.
    pub fn as_scaled_unit(&self) -> Option<(usize, usize, &BigRational)> {
        if self.entries.len() == 1 {
            self.entries.iter().next().map(|(&(i, j), v)| (i, j, v))
        } else {
            None
        }
    }
}

fn symplectic_conjugator(n: usize) -> UtMatrix {
    let values: Vec<BigRational> = (1..=n)
        .map(|k| BigRational::from_integer(symplectic_d(n, k).into()))
        .collect();
    UtMatrix::diagonal(&values)
}

impl fmt::Display for UtMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("0");
        }
        for (k, (&(i, j), v)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if v.is_one() {
                write!(f, "e{i},{j}")?;
            } else {
                write!(f, "({v})e{i},{j}")?;
            }
        }
        Ok(())
    }
}

/// An elementary grading of `UT_n`: `deg e_{ij} = h_i h_{i+1} ... h_{j-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementaryGrading {
    group: Group,
    n: usize,
    superdiagonal: Vec<GroupElement>,
    // degree of every unit, indexed by `unit_index`
    degrees: Vec<GroupElement>,
}

/// On-disk form of a grading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradingFile {
    pub group: GroupSpec,
    pub n: usize,
    pub superdiagonal: Vec<String>,
}

impl ElementaryGrading {
    pub fn new(group: Group, n: usize, superdiagonal: Vec<GroupElement>) -> Result<Self, UtError> {
        if n == 0 {
            return Err(UtError::InvalidGrading("n must be at least 1".into()));
        }
        if superdiagonal.len() != n - 1 {
            return Err(UtError::InvalidGrading(format!(
                "expected {} superdiagonal degrees, got {}",
                n - 1,
                superdiagonal.len()
            )));
        }
        for h in &superdiagonal {
            group.check(h)?;
        }
        let mut degrees = Vec::with_capacity(n * (n + 1) / 2);
        for i in 1..=n {
            let mut acc = group.identity();
            degrees.push(acc.clone());
            for h in &superdiagonal[i - 1..] {
                acc = group.mul(&acc, h)?;
                degrees.push(acc.clone());
            }
        }
        Ok(ElementaryGrading {
            group,
            n,
            superdiagonal,
            degrees,
        })
    }

    /// Every unit has the identity degree.
    pub fn trivial(group: Group, n: usize) -> Result<Self, UtError> {
        let e = group.identity();
        ElementaryGrading::new(group, n, vec![e; n.saturating_sub(1)])
    }

    /// The fine grading by the free group on `r1..r_{n-1}` with
    /// `deg e_{i,i+1} = r_i`.
    pub fn fine(n: usize) -> Result<Self, UtError> {
        let rank = n.saturating_sub(1) as u32;
        let superdiagonal = (1..=rank).map(GroupElement::generator).collect();
        ElementaryGrading::new(Group::free(rank), n, superdiagonal)
    }

    pub fn from_file(file: &GradingFile) -> Result<Self, UtError> {
        let group = Group::new(file.group.clone())?;
        let superdiagonal = file
            .superdiagonal
            .iter()
            .map(|s| group.parse_element(s))
            .collect::<Result<Vec<_>, _>>()?;
        ElementaryGrading::new(group, file.n, superdiagonal)
    }

    pub fn to_file(&self) -> GradingFile {
        GradingFile {
            group: self.group.spec().clone(),
            n: self.n,
            superdiagonal: self.superdiagonal.iter().map(|g| g.to_string()).collect(),
        }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn superdiagonal(&self) -> &[GroupElement] {
        &self.superdiagonal
    }

    pub fn degree(&self, i: usize, j: usize) -> Result<&GroupElement, UtError> {
        if i > j {
            return Err(UtError::BelowDiagonal(i, j));
        }
        if i == 0 || j > self.n {
            return Err(UtError::OutOfRange { i, j, n: self.n });
        }
        Ok(&self.degrees[unit_index(self.n, i, j)])
    }

    /// Degree of the unit at position `index` of [`unit_positions`].
    pub fn degree_by_index(&self, index: usize) -> &GroupElement {
        &self.degrees[index]
    }

    /// Distinct degrees of matrix units, in order of first appearance along
    /// [`unit_positions`].
    pub fn support(&self) -> Vec<GroupElement> {
        let mut seen = std::collections::BTreeSet::new();
        self.degrees
            .iter()
            .filter(|g| seen.insert((*g).clone()))
            .cloned()
            .collect()
    }

    pub fn is_trivial(&self) -> bool {
        let e = self.group.identity();
        self.superdiagonal.iter().all(|h| *h == e)
    }

    /// Positions of the units spanning the homogeneous component of degree `g`.
    pub fn component(&self, g: &GroupElement) -> Result<Vec<(usize, usize)>, UtError> {
        self.group.check(g)?;
        Ok(unit_positions(self.n)
            .into_iter()
            .zip(&self.degrees)
            .filter(|(_, d)| *d == g)
            .map(|(p, _)| p)
            .collect())
    }

    /// The grading obtained by pushing every degree through `hom`.
    pub fn induce(&self, hom: &GroupHom) -> Result<ElementaryGrading, UtError> {
        if hom.source() != &self.group {
            return Err(UtError::InvalidGrading(format!(
                "homomorphism source ({}) differs from the grading group ({})",
                hom.source(),
                self.group
            )));
        }
        let superdiagonal = self
            .superdiagonal
            .iter()
            .map(|h| hom.apply(h))
            .collect::<Result<Vec<_>, _>>()?;
        ElementaryGrading::new(hom.target().clone(), self.n, superdiagonal)
    }

    /// The homomorphism from the fine grading's free group onto this
    /// grading's group, `r_i -> h_i`.
    pub fn hom_from_fine(&self) -> Result<GroupHom, UtError> {
        let rank = self.n.saturating_sub(1) as u32;
        Ok(GroupHom::from_generator_images(
            Group::free(rank),
            self.group.clone(),
            self.superdiagonal.clone(),
        )?)
    }
}

/// Certificate that an involution is homogeneous for a grading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomInvolutionCert {
    pub grading: ElementaryGrading,
    pub kind: InvolutionKind,
    pub psi: GroupInvolutionMap,
}

/// Outcome of [`homogeneous_involution_map`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvolutionAnalysis {
    Homogeneous(HomInvolutionCert),
    NotHomogeneous(HomogeneityConflict),
}

/// Two units of the same degree whose images land in different components,
/// or a `psi` that fails the group-level involution check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "conflict", rename_all = "snake_case")]
pub enum HomogeneityConflict {
    SplitComponent {
        degree: String,
        first: (usize, usize),
        first_image_degree: String,
        second: (usize, usize),
        second_image_degree: String,
    },
    BadPsi {
        detail: String,
    },
}

impl fmt::Display for HomogeneityConflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HomogeneityConflict::SplitComponent {
                degree,
                first,
                first_image_degree,
                second,
                second_image_degree,
            } => write!(
                f,
                "e{},{} and e{},{} both have degree {degree} but their images have degrees {first_image_degree} and {second_image_degree}",
                first.0, first.1, second.0, second.1
            ),
            HomogeneityConflict::BadPsi { detail } => f.write_str(detail),
        }
    }
}

impl InvolutionAnalysis {
    pub fn cert(&self) -> Option<&HomInvolutionCert> {
        match self {
            InvolutionAnalysis::Homogeneous(c) => Some(c),
            InvolutionAnalysis::NotHomogeneous(_) => None,
        }
    }
}

/// Builds `psi(deg e) := deg(e^*)` unit by unit and checks that it is a
/// well-defined involutive anti-map on the support.
pub fn homogeneous_involution_map(
    grading: &ElementaryGrading,
    kind: InvolutionKind,
) -> Result<InvolutionAnalysis, UtError> {
    let n = grading.size();
    kind.admissible(n)?;
    let mut psi = GroupInvolutionMap::new();
    let mut witness: BTreeMap<GroupElement, (usize, usize)> = BTreeMap::new();
    for (i, j) in unit_positions(n) {
        let g = grading.degree(i, j)?.clone();
        let (_, si, sj) = star_of_unit(kind, n, i, j);
        let image = grading.degree(si, sj)?.clone();
        match psi.get(&g) {
            None => {
                psi.insert(g.clone(), image);
                witness.insert(g, (i, j));
            }
            Some(previous) if *previous != image => {
                return Ok(InvolutionAnalysis::NotHomogeneous(
                    HomogeneityConflict::SplitComponent {
                        degree: g.to_string(),
                        first: witness[&g],
                        first_image_degree: previous.to_string(),
                        second: (i, j),
                        second_image_degree: image.to_string(),
                    },
                ));
            }
            Some(_) => {}
        }
    }
    if let Some(v) = psi.check(grading.group(), &grading.support())? {
        return Ok(InvolutionAnalysis::NotHomogeneous(
            HomogeneityConflict::BadPsi {
                detail: v.to_string(),
            },
        ));
    }
    Ok(InvolutionAnalysis::Homogeneous(HomInvolutionCert {
        grading: grading.clone(),
        kind,
        psi,
    }))
}
