//! Grading groups: free groups on `r1..rk`, cyclic groups and groups given by
//! a multiplication table, together with homomorphisms between them and
//! partial group involutions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("element {element} does not belong to {group}")]
    ForeignElement { element: String, group: String },
    #[error("invalid group specification: {0}")]
    InvalidSpec(String),
    #[error("cannot parse group element {literal:?}: {reason}")]
    Parse { literal: String, reason: String },
    #[error("homomorphism has no image for generator r{0}")]
    UndefinedGenerator(u32),
    #[error("map is not a homomorphism: {0}")]
    NotHomomorphism(String),
    #[error("involution map is undefined at {0}")]
    UndefinedInvolution(String),
}

/// One letter of a free-group word: `r_generator` or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub generator: u32,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: u32, inverse: bool) -> Self {
        Letter { generator, inverse }
    }

    pub fn inverted(self) -> Self {
        Letter {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }
}

/// An element of a grading group. The owning [`Group`] gives it meaning.
///
/// Free words are always kept reduced, so structural equality is group
/// equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupElement {
    Free(Vec<Letter>),
    Cyclic(u64),
    Table(usize),
}

impl GroupElement {
    /// Builds a reduced free word from arbitrary letters.
    pub fn free_word(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut word: Vec<Letter> = Vec::new();
        for letter in letters {
            push_reduced(&mut word, letter);
        }
        GroupElement::Free(word)
    }

    pub fn generator(i: u32) -> Self {
        GroupElement::Free(vec![Letter::new(i, false)])
    }
}

fn push_reduced(word: &mut Vec<Letter>, letter: Letter) {
    if word.last() == Some(&letter.inverted()) {
        word.pop();
    } else {
        word.push(letter);
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Free(word) if word.is_empty() => f.write_str("1"),
            GroupElement::Free(word) => {
                for (k, letter) in word.iter().enumerate() {
                    if k > 0 {
                        f.write_str("*")?;
                    }
                    write!(f, "r{}", letter.generator)?;
                    if letter.inverse {
                        f.write_str("^-1")?;
                    }
                }
                Ok(())
            }
            GroupElement::Cyclic(r) => write!(f, "{r}"),
            GroupElement::Table(i) => write!(f, "{i}"),
        }
    }
}

/// Serialized description of a group, as found in grading files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupSpec {
    Free {
        rank: u32,
    },
    Cyclic {
        order: u64,
    },
    Table {
        size: usize,
        mul: Vec<Vec<usize>>,
        identity: usize,
    },
}

/// A validated group. Table groups carry their computed inverse table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    spec: GroupSpec,
    inverses: Vec<usize>,
}

impl Group {
    pub fn new(spec: GroupSpec) -> Result<Self, GroupError> {
        let inverses = match &spec {
            GroupSpec::Free { .. } => Vec::new(),
            GroupSpec::Cyclic { order } => {
                if *order == 0 {
                    return Err(GroupError::InvalidSpec(
                        "cyclic order must be positive".into(),
                    ));
                }
                Vec::new()
            }
            GroupSpec::Table {
                size,
                mul,
                identity,
            } => validate_table(*size, mul, *identity)?,
        };
        Ok(Group { spec, inverses })
    }

    pub fn free(rank: u32) -> Self {
        Group {
            spec: GroupSpec::Free { rank },
            inverses: Vec::new(),
        }
    }

    pub fn cyclic(order: u64) -> Result<Self, GroupError> {
        Group::new(GroupSpec::Cyclic { order })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn identity(&self) -> GroupElement {
        match &self.spec {
            GroupSpec::Free { .. } => GroupElement::Free(Vec::new()),
            GroupSpec::Cyclic { .. } => GroupElement::Cyclic(0),
            GroupSpec::Table { identity, .. } => GroupElement::Table(*identity),
        }
    }

    pub fn contains(&self, a: &GroupElement) -> bool {
        match (&self.spec, a) {
            (GroupSpec::Free { rank }, GroupElement::Free(word)) => {
                word.iter()
                    .all(|l| l.generator >= 1 && l.generator <= *rank)
                    && word.windows(2).all(|w| w[0] != w[1].inverted())
            }
            (GroupSpec::Cyclic { order }, GroupElement::Cyclic(r)) => r < order,
            (GroupSpec::Table { size, .. }, GroupElement::Table(i)) => i < size,
            _ => false,
        }
    }

    pub fn check(&self, a: &GroupElement) -> Result<(), GroupError> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(GroupError::ForeignElement {
                element: a.to_string(),
                group: self.to_string(),
            })
        }
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (&self.spec, a, b) {
            (GroupSpec::Free { .. }, GroupElement::Free(x), GroupElement::Free(y)) => {
                let mut word = x.clone();
                for &letter in y {
                    push_reduced(&mut word, letter);
                }
                GroupElement::Free(word)
            }
            (GroupSpec::Cyclic { order }, GroupElement::Cyclic(x), GroupElement::Cyclic(y)) => {
                GroupElement::Cyclic(((*x as u128 + *y as u128) % *order as u128) as u64)
            }
            (GroupSpec::Table { mul, .. }, GroupElement::Table(x), GroupElement::Table(y)) => {
                GroupElement::Table(mul[*x][*y])
            }
            _ => unreachable!("membership checked above"),
        })
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        Ok(match (&self.spec, a) {
            (GroupSpec::Free { .. }, GroupElement::Free(word)) => {
                GroupElement::Free(word.iter().rev().map(|l| l.inverted()).collect())
            }
            (GroupSpec::Cyclic { order }, GroupElement::Cyclic(r)) => {
                GroupElement::Cyclic((order - r) % order)
            }
            (GroupSpec::Table { .. }, GroupElement::Table(i)) => {
                GroupElement::Table(self.inverses[*i])
            }
            _ => unreachable!("membership checked above"),
        })
    }

    /// Product of a sequence; the empty product is the identity.
    pub fn product<'a>(
        &self,
        elements: impl IntoIterator<Item = &'a GroupElement>,
    ) -> Result<GroupElement, GroupError> {
        elements
            .into_iter()
            .try_fold(self.identity(), |acc, g| self.mul(&acc, g))
    }

    /// All elements, for finite groups.
    pub fn elements(&self) -> Option<Vec<GroupElement>> {
        match &self.spec {
            GroupSpec::Free { rank: 0 } => Some(vec![self.identity()]),
            GroupSpec::Free { .. } => None,
            GroupSpec::Cyclic { order } => Some((0..*order).map(GroupElement::Cyclic).collect()),
            GroupSpec::Table { size, .. } => Some((0..*size).map(GroupElement::Table).collect()),
        }
    }

    /// Parses an element literal. Free groups use `r1*r2^-1*r1` with `1` for
    /// the identity; cyclic and table groups use plain indices.
    pub fn parse_element(&self, literal: &str) -> Result<GroupElement, GroupError> {
        let err = |reason: &str| GroupError::Parse {
            literal: literal.to_string(),
            reason: reason.to_string(),
        };
        let text = literal.trim();
        let element = match &self.spec {
            GroupSpec::Free { .. } => {
                if text == "1" {
                    GroupElement::Free(Vec::new())
                } else {
                    let mut letters = Vec::new();
                    for token in text.split('*') {
                        let token = token.trim();
                        let (body, inverse) = match token.strip_suffix("^-1") {
                            Some(body) => (body, true),
                            None => (token, false),
                        };
                        let index = body
                            .strip_prefix('r')
                            .ok_or_else(|| err("generators are written r1, r2, ..."))?;
                        let generator: u32 =
                            index.parse().map_err(|_| err("bad generator index"))?;
                        letters.push(Letter::new(generator, inverse));
                    }
                    GroupElement::free_word(letters)
                }
            }
            GroupSpec::Cyclic { .. } => {
                GroupElement::Cyclic(text.parse().map_err(|_| err("expected a residue"))?)
            }
            GroupSpec::Table { .. } => {
                GroupElement::Table(text.parse().map_err(|_| err("expected a table index"))?)
            }
        };
        self.check(&element)?;
        Ok(element)
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.spec {
            GroupSpec::Free { rank } => write!(f, "free group of rank {rank}"),
            GroupSpec::Cyclic { order } => write!(f, "cyclic group of order {order}"),
            GroupSpec::Table { size, .. } => write!(f, "table group of order {size}"),
        }
    }
}

fn validate_table(
    size: usize,
    mul: &[Vec<usize>],
    identity: usize,
) -> Result<Vec<usize>, GroupError> {
    let invalid = |msg: String| Err(GroupError::InvalidSpec(msg));
    if size == 0 {
        return invalid("table group must be nonempty".into());
    }
    if mul.len() != size || mul.iter().any(|row| row.len() != size) {
        return invalid(format!("multiplication table must be {size}x{size}"));
    }
    if mul.iter().flatten().any(|&x| x >= size) {
        return invalid("table entry out of range".into());
    }
    if identity >= size {
        return invalid("identity index out of range".into());
    }
    for (a, row) in mul.iter().enumerate() {
        if mul[identity][a] != a || row[identity] != a {
            return invalid(format!("{identity} is not a two-sided identity at {a}"));
        }
    }
    for a in 0..size {
        for b in 0..size {
            for c in 0..size {
                if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                    return invalid(format!("not associative at ({a}, {b}, {c})"));
                }
            }
        }
    }
    let mut inverses = Vec::with_capacity(size);
    for (a, row) in mul.iter().enumerate() {
        match (0..size).find(|&b| row[b] == identity) {
            Some(b) if mul[b][a] == identity => inverses.push(b),
            _ => return invalid(format!("element {a} has no inverse")),
        }
    }
    Ok(inverses)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum HomImages {
    /// Images of `r1, r2, ...`; a free source may leave trailing generators
    /// unassigned.
    Generators(Vec<GroupElement>),
    /// Image of every element of a finite source, by index.
    Elements(Vec<GroupElement>),
}

/// A group homomorphism `source -> target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupHom {
    source: Group,
    target: Group,
    images: HomImages,
}

impl GroupHom {
    /// A homomorphism out of a free group is any assignment of generator
    /// images.
    pub fn from_generator_images(
        source: Group,
        target: Group,
        images: Vec<GroupElement>,
    ) -> Result<Self, GroupError> {
        let GroupSpec::Free { rank } = source.spec else {
            return Err(GroupError::InvalidSpec(
                "generator images require a free source group".into(),
            ));
        };
        if images.len() > rank as usize {
            return Err(GroupError::InvalidSpec(format!(
                "{} images given for a free group of rank {rank}",
                images.len()
            )));
        }
        for g in &images {
            target.check(g)?;
        }
        Ok(GroupHom {
            source,
            target,
            images: HomImages::Generators(images),
        })
    }

    /// A homomorphism out of a finite group, given on every element and
    /// checked exhaustively for multiplicativity.
    pub fn from_element_map(
        source: Group,
        target: Group,
        map: Vec<GroupElement>,
    ) -> Result<Self, GroupError> {
        let elements = source.elements().ok_or_else(|| {
            GroupError::InvalidSpec("element maps require a finite source group".into())
        })?;
        if map.len() != elements.len() {
            return Err(GroupError::InvalidSpec(format!(
                "element map has {} entries, source has {} elements",
                map.len(),
                elements.len()
            )));
        }
        for g in &map {
            target.check(g)?;
        }
        let hom = GroupHom {
            source,
            target,
            images: HomImages::Elements(map),
        };
        for a in &elements {
            for b in &elements {
                let lhs = hom.apply(&hom.source.mul(a, b)?)?;
                let rhs = hom.target.mul(&hom.apply(a)?, &hom.apply(b)?)?;
                if lhs != rhs {
                    return Err(GroupError::NotHomomorphism(format!(
                        "image of {a}*{b} is {lhs}, product of images is {rhs}"
                    )));
                }
            }
        }
        Ok(hom)
    }

    pub fn source(&self) -> &Group {
        &self.source
    }

    pub fn target(&self) -> &Group {
        &self.target
    }

    pub fn apply(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.source.check(a)?;
        match (&self.images, a) {
            (HomImages::Generators(images), GroupElement::Free(word)) => {
                let mut acc = self.target.identity();
                for letter in word {
                    let image = images
                        .get(letter.generator as usize - 1)
                        .ok_or(GroupError::UndefinedGenerator(letter.generator))?;
                    let factor = if letter.inverse {
                        self.target.inverse(image)?
                    } else {
                        image.clone()
                    };
                    acc = self.target.mul(&acc, &factor)?;
                }
                Ok(acc)
            }
            (HomImages::Elements(map), GroupElement::Cyclic(r)) => Ok(map[*r as usize].clone()),
            (HomImages::Elements(map), GroupElement::Table(i)) => Ok(map[*i].clone()),
            _ => unreachable!("source membership checked above"),
        }
    }
}

/// A map `psi` on a finite subset of a group, meant to be the group-level
/// shadow of a homogeneous involution.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupInvolutionMap {
    map: BTreeMap<GroupElement, GroupElement>,
}

/// Why a candidate `psi` fails to be an involutive anti-map on its support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum InvolutionViolation {
    /// `psi(psi(g)) != g`.
    NotInvolutive {
        element: GroupElement,
        image: GroupElement,
        image_of_image: GroupElement,
    },
    /// `psi(gh) != psi(h) psi(g)` with `g`, `h` and `gh` in the support.
    NotAntiMultiplicative {
        left: GroupElement,
        right: GroupElement,
    },
}

impl fmt::Display for InvolutionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvolutionViolation::NotInvolutive {
                element,
                image,
                image_of_image,
            } => write!(
                f,
                "psi({element}) = {image} but psi({image}) = {image_of_image}"
            ),
            InvolutionViolation::NotAntiMultiplicative { left, right } => write!(
                f,
                "psi({left}*{right}) differs from psi({right})*psi({left})"
            ),
        }
    }
}

impl GroupInvolutionMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity_on(support: &[GroupElement]) -> Self {
        support.iter().map(|g| (g.clone(), g.clone())).collect()
    }

    pub fn insert(&mut self, g: GroupElement, image: GroupElement) -> Option<GroupElement> {
        self.map.insert(g, image)
    }

    pub fn get(&self, g: &GroupElement) -> Option<&GroupElement> {
        self.map.get(g)
    }

    pub fn apply(&self, g: &GroupElement) -> Result<GroupElement, GroupError> {
        self.map
            .get(g)
            .cloned()
            .ok_or_else(|| GroupError::UndefinedInvolution(g.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, &GroupElement)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Checks `psi o psi = id` on `support` and `psi(gh) = psi(h)psi(g)`
    /// whenever `g`, `h`, `gh` all lie in `support`. Returns the first
    /// violation found, scanning `support` in the given order.
    pub fn check(
        &self,
        group: &Group,
        support: &[GroupElement],
    ) -> Result<Option<InvolutionViolation>, GroupError> {
        for g in support {
            group.check(g)?;
            self.apply(g)?;
        }
        let members: BTreeSet<&GroupElement> = support.iter().collect();
        for g in support {
            let image = self.apply(g)?;
            if members.contains(&image) {
                let back = self.apply(&image)?;
                if &back != g {
                    return Ok(Some(InvolutionViolation::NotInvolutive {
                        element: g.clone(),
                        image,
                        image_of_image: back,
                    }));
                }
            }
        }
        for g in support {
            for h in support {
                let gh = group.mul(g, h)?;
                if !members.contains(&gh) {
                    continue;
                }
                let lhs = self.apply(&gh)?;
                let rhs = group.mul(&self.apply(h)?, &self.apply(g)?)?;
                if lhs != rhs {
                    return Ok(Some(InvolutionViolation::NotAntiMultiplicative {
                        left: g.clone(),
                        right: h.clone(),
                    }));
                }
            }
        }
        Ok(None)
    }
}

impl FromIterator<(GroupElement, GroupElement)> for GroupInvolutionMap {
    fn from_iter<T: IntoIterator<Item = (GroupElement, GroupElement)>>(iter: T) -> Self {
        GroupInvolutionMap {
            map: iter.into_iter().collect(),
        }
    }
}
