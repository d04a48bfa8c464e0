//! Randomized invariant suites. Each runs a deterministic proptest runner
//! for the given number of cases and reports the first counterexample.

#![allow(dead_code, clippy::needless_range_loop)]

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use crate::common::{self, Dense, Star};
use utcodim::codim::{
    codim, evaluate_monomial, evaluate_polynomial, full_matrix, CodimRequest, EvaluationTuple,
};
use utcodim::free_algebra::{
    expand_commutator, monomial_count, star_of_polynomial, Factor, SparsePolynomial, StarMonomial,
};
use utcodim::groups::{Group, GroupElement, GroupSpec};
use utcodim::linalg::{rank_certified, rank_fraction_free, rank_mod_p, RankPolicy, SparseMatrix};
use utcodim::ut::{
    homogeneous_involution_map, star_of_unit, unit_positions, ElementaryGrading,
    HomogeneityConflict, InvolutionAnalysis, InvolutionKind, UtMatrix,
};

pub type Outcome = Result<(), String>;

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Outcome
where
    S::Value: std::fmt::Debug,
{
    runner(cases)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn fail(msg: impl std::fmt::Display) -> TestCaseError {
    TestCaseError::fail(msg.to_string())
}

fn int(k: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

fn to_ut(a: &Dense) -> UtMatrix {
    let n = a.len();
    let mut m = UtMatrix::zero(n);
    for i in 0..n {
        for j in i..n {
            m.set(i + 1, j + 1, int(a[i][j])).unwrap();
        }
    }
    m
}

fn from_ut(m: &UtMatrix) -> Dense {
    let n = m.size();
    let mut a = common::zero(n);
    for (&(i, j), v) in m.entries() {
        assert!(v.is_integer());
        a[i - 1][j - 1] = v.to_integer().to_i64().unwrap();
    }
    a
}

fn oracle_kind(kind: InvolutionKind) -> Star {
    match kind {
        InvolutionKind::Orthogonal => Star::Orthogonal,
        InvolutionKind::Symplectic => Star::Symplectic,
    }
}

/// An involution admissible on `UT_n`.
fn kind_for(n: usize) -> BoxedStrategy<InvolutionKind> {
    if n.is_multiple_of(2) {
        prop_oneof![
            Just(InvolutionKind::Orthogonal),
            Just(InvolutionKind::Symplectic)
        ]
        .boxed()
    } else {
        Just(InvolutionKind::Orthogonal).boxed()
    }
}

fn ut_dense(n: usize, bound: i64) -> impl Strategy<Value = Dense> {
    proptest::collection::vec(-bound..=bound, n * (n + 1) / 2).prop_map(move |v| {
        let mut a = common::zero(n);
        let mut it = v.into_iter();
        for i in 0..n {
            for j in i..n {
                a[i][j] = it.next().unwrap();
            }
        }
        a
    })
}

/// Multiplication table of S_3 on permutations of {0,1,2}, identity first.
fn s3() -> Group {
    let perms: Vec<[usize; 3]> = vec![
        [0, 1, 2],
        [1, 0, 2],
        [0, 2, 1],
        [2, 1, 0],
        [1, 2, 0],
        [2, 0, 1],
    ];
    let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
    let mul = perms
        .iter()
        .map(|a| {
            perms
                .iter()
                .map(|b| index([a[b[0]], a[b[1]], a[b[2]]]))
                .collect()
        })
        .collect();
    Group::new(GroupSpec::Table {
        size: 6,
        mul,
        identity: 0,
    })
    .unwrap()
}

#[derive(Debug, Clone)]
enum GradingChoice {
    Cyclic(u64, Vec<u64>),
    S3(Vec<usize>),
    Fine,
}

impl GradingChoice {
    fn build(&self, n: usize) -> ElementaryGrading {
        match self {
            GradingChoice::Cyclic(order, d) => ElementaryGrading::new(
                Group::cyclic(*order).unwrap(),
                n,
                d.iter().map(|&x| GroupElement::Cyclic(x % order)).collect(),
            )
            .unwrap(),
            GradingChoice::S3(d) => {
                ElementaryGrading::new(s3(), n, d.iter().map(|&x| GroupElement::Table(x)).collect())
                    .unwrap()
            }
            GradingChoice::Fine => ElementaryGrading::fine(n).unwrap(),
        }
    }
}

fn grading_choice(n: usize) -> impl Strategy<Value = GradingChoice> {
    let len = n.saturating_sub(1);
    prop_oneof![
        (1u64..=5, proptest::collection::vec(0u64..5, len))
            .prop_map(|(o, d)| GradingChoice::Cyclic(o, d)),
        proptest::collection::vec(0usize..6, len).prop_map(GradingChoice::S3),
        Just(GradingChoice::Fine),
    ]
}

/// `(a*)* = a`, `(ab)* = b* a*`, additivity, and agreement with the dense
/// flip-and-sign oracle and with the unit table.
pub fn involution_axioms(cases: u32) -> Outcome {
    let strategy = (1usize..=6).prop_flat_map(|n| (kind_for(n), ut_dense(n, 4), ut_dense(n, 4)));
    run(cases, strategy, |(kind, a, b)| {
        let n = a.len();
        let (ua, ub) = (to_ut(&a), to_ut(&b));
        let sa = ua.apply_star(kind).unwrap();
        let sb = ub.apply_star(kind).unwrap();
        prop_assert_eq!(sa.apply_star(kind).unwrap(), ua.clone());
        prop_assert_eq!(
            ua.mul(&ub).unwrap().apply_star(kind).unwrap(),
            sb.mul(&sa).unwrap()
        );
        prop_assert_eq!(
            ua.add(&ub).unwrap().apply_star(kind).unwrap(),
            sa.add(&sb).unwrap()
        );
        prop_assert_eq!(from_ut(&sa), common::star(&a, oracle_kind(kind)));
        for (i, j) in unit_positions(n) {
            let (sign, si, sj) = star_of_unit(kind, n, i, j);
            let image = UtMatrix::unit(i, j, n).unwrap().apply_star(kind).unwrap();
            prop_assert_eq!(
                image,
                UtMatrix::unit(si, sj, n).unwrap().scale(&int(sign as i64))
            );
        }
        Ok(())
    })
}

/// `deg(e_ij) deg(e_jk) = deg(e_ik)`, components partition the units, and
/// the fine grading induces every elementary grading.
pub fn grading_multiplicativity(cases: u32) -> Outcome {
    let strategy = (1usize..=6).prop_flat_map(|n| (Just(n), grading_choice(n)));
    run(cases, strategy, |(n, choice)| {
        let g = choice.build(n);
        let group = g.group().clone();
        for i in 1..=n {
            prop_assert_eq!(g.degree(i, i).unwrap(), &group.identity());
            for j in i..=n {
                for k in j..=n {
                    let prod = group
                        .mul(g.degree(i, j).unwrap(), g.degree(j, k).unwrap())
                        .unwrap();
                    prop_assert_eq!(&prod, g.degree(i, k).unwrap());
                }
            }
        }
        let mut seen = 0;
        for h in g.support() {
            let comp = g.component(&h).unwrap();
            prop_assert!(!comp.is_empty());
            for &(i, j) in &comp {
                prop_assert_eq!(g.degree(i, j).unwrap(), &h);
            }
            seen += comp.len();
        }
        prop_assert_eq!(seen, n * (n + 1) / 2);
        let fine = ElementaryGrading::fine(n).unwrap();
        let induced = fine.induce(&g.hom_from_fine().unwrap()).unwrap();
        prop_assert_eq!(induced, g);
        Ok(())
    })
}

/// A certificate maps each unit's degree to the degree of its image, and is
/// an involutive anti-map on the support; a reported conflict is genuine.
pub fn psi_certificates(cases: u32) -> Outcome {
    let strategy =
        (1usize..=6).prop_flat_map(|n| (Just(n), grading_choice(n), kind_for(n), any::<bool>()));
    run(cases, strategy, |(n, choice, kind, symmetric)| {
        let mut choice = choice;
        // mirrored superdiagonals are always compatible with the flip
        if symmetric {
            match &mut choice {
                GradingChoice::Cyclic(_, d) => {
                    let len = d.len();
                    for k in 0..len / 2 {
                        d[len - 1 - k] = d[k];
                    }
                }
                GradingChoice::S3(d) => {
                    let len = d.len();
                    for k in 0..len / 2 {
                        d[len - 1 - k] = d[k];
                    }
                }
                GradingChoice::Fine => {}
            }
        }
        let g = choice.build(n);
        let star_degree = |i, j| {
            let (_, si, sj) = star_of_unit(kind, n, i, j);
            g.degree(si, sj).unwrap().clone()
        };
        match homogeneous_involution_map(&g, kind).unwrap() {
            InvolutionAnalysis::Homogeneous(cert) => {
                for (i, j) in unit_positions(n) {
                    prop_assert_eq!(
                        cert.psi.apply(g.degree(i, j).unwrap()).unwrap(),
                        star_degree(i, j)
                    );
                }
                let support = g.support();
                let group = g.group();
                for a in &support {
                    let pa = cert.psi.apply(a).unwrap();
                    prop_assert_eq!(&cert.psi.apply(&pa).unwrap(), a);
                    for b in &support {
                        let ab = group.mul(a, b).unwrap();
                        if support.contains(&ab) {
                            let rhs = group.mul(&cert.psi.apply(b).unwrap(), &pa).unwrap();
                            prop_assert_eq!(cert.psi.apply(&ab).unwrap(), rhs);
                        }
                    }
                }
            }
            InvolutionAnalysis::NotHomogeneous(conflict) => {
                prop_assert!(
                    !(symmetric && matches!(choice, GradingChoice::Cyclic(..))),
                    "{}",
                    conflict
                );
                let units = unit_positions(n);
                let split = units.iter().any(|&(i, j)| {
                    units.iter().any(|&(k, l)| {
                        g.degree(i, j).unwrap() == g.degree(k, l).unwrap()
                            && star_degree(i, j) != star_degree(k, l)
                    })
                });
                match conflict {
                    HomogeneityConflict::SplitComponent { .. } => prop_assert!(split),
                    HomogeneityConflict::BadPsi { .. } => {
                        prop_assert!(!split);
                        // the unit-derived map must break psi^2 = id or
                        // anti-multiplicativity somewhere on the support
                        let psi = |h: &GroupElement| {
                            let &(i, j) = units
                                .iter()
                                .find(|&&(i, j)| g.degree(i, j).unwrap() == h)
                                .unwrap();
                            star_degree(i, j)
                        };
                        let support = g.support();
                        let group = g.group();
                        let broken = support.iter().any(|a| {
                            psi(&psi(a)) != *a
                                || support.iter().any(|b| {
                                    let ab = group.mul(a, b).unwrap();
                                    support.contains(&ab)
                                        && psi(&ab) != group.mul(&psi(b), &psi(a)).unwrap()
                                })
                        });
                        prop_assert!(broken);
                    }
                }
            }
        }
        Ok(())
    })
}

fn dense_bracket(a: &Dense, b: &Dense) -> Dense {
    let (ab, ba) = (common::mul(a, b), common::mul(b, a));
    ab.iter()
        .zip(&ba)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
        .collect()
}

/// Left-normed commutators expand into `2^(t-1)` words with coefficients
/// `+-1` summing to zero, and evaluate like nested brackets.
pub fn commutator_expansion(cases: u32) -> Outcome {
    let strategy = (2usize..=7)
        .prop_flat_map(|t| {
            (
                Just((1..=t).collect::<Vec<_>>()).prop_shuffle(),
                any::<bool>(),
                1usize..=4,
            )
        })
        .prop_flat_map(|(idx, head_star, n)| {
            let t = idx.len();
            (
                Just(idx),
                Just(head_star),
                proptest::collection::vec(ut_dense(n, 3), t),
            )
        });
    run(cases, strategy, |(indices, head_star, values)| {
        let t = indices.len();
        let p = expand_commutator(&indices, head_star).unwrap();
        prop_assert_eq!(p.len(), 1 << (t - 1));
        let mut sum = BigRational::zero();
        for (mono, c) in p.terms() {
            prop_assert!(c.abs().is_one());
            prop_assert_eq!(mono.len(), t);
            sum += c;
        }
        prop_assert!(sum.is_zero());
        let x = |v: usize| values[v - 1].clone();
        let mut acc = if head_star {
            common::star(&x(indices[0]), Star::Orthogonal)
        } else {
            x(indices[0])
        };
        for &v in &indices[1..] {
            acc = dense_bracket(&acc, &x(v));
        }
        let tuple = EvaluationTuple::new(values.iter().map(to_ut).collect());
        let got = evaluate_polynomial(&p, &tuple, Some(InvolutionKind::Orthogonal)).unwrap();
        prop_assert_eq!(from_ut(&got), acc);
        Ok(())
    })
}

fn random_polynomial(m: usize) -> impl Strategy<Value = SparsePolynomial> {
    let word = (
        Just((1..=m).collect::<Vec<_>>()).prop_shuffle(),
        any::<u8>(),
    );
    proptest::collection::vec((word, -3i64..=3), 0..6).prop_map(move |terms| {
        let mut p = SparsePolynomial::zero();
        for ((perm, mask), c) in terms {
            let factors = perm
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    if mask >> k & 1 == 1 {
                        Factor::starred(v)
                    } else {
                        Factor::plain(v)
                    }
                })
                .collect();
            p.add_term(StarMonomial::new(factors).unwrap(), int(c));
        }
        p
    })
}

/// The free-algebra involution squares to the identity and is compatible
/// with evaluation: `p*(a) = p(a)*`.
pub fn star_of_polynomial_involutive(cases: u32) -> Outcome {
    let strategy = (1usize..=4, 1usize..=4).prop_flat_map(|(m, n)| {
        (
            random_polynomial(m),
            kind_for(n),
            proptest::collection::vec(ut_dense(n, 3), m),
        )
    });
    run(cases, strategy, |(p, kind, values)| {
        let s = star_of_polynomial(&p, None).unwrap();
        prop_assert_eq!(star_of_polynomial(&s, None).unwrap(), p.clone());
        let tuple = EvaluationTuple::new(values.iter().map(to_ut).collect());
        let lhs = evaluate_polynomial(&s, &tuple, Some(kind)).unwrap();
        let rhs = evaluate_polynomial(&p, &tuple, Some(kind))
            .unwrap()
            .apply_star(kind)
            .unwrap();
        prop_assert_eq!(lhs, rhs);
        Ok(())
    })
}

fn matrix_case() -> impl Strategy<Value = Vec<Vec<i64>>> {
    // products of random factors give controlled rank deficiency; tall
    // shapes exercise the streaming path
    let shape = prop_oneof![
        (1usize..=10, 1usize..=10, 1usize..=6),
        (1usize..=5, 0usize..=12, 1usize..=5).prop_map(|(c, extra, k)| (4 * c + extra, c, k)),
    ];
    shape.prop_flat_map(|(r, c, k)| {
        (
            proptest::collection::vec(proptest::collection::vec(-3i64..=3, k), r),
            proptest::collection::vec(proptest::collection::vec(-3i64..=3, c), k),
            any::<bool>(),
        )
            .prop_map(move |(b, cm, product)| {
                if product {
                    b.iter()
                        .map(|row| {
                            (0..c)
                                .map(|j| (0..k).map(|t| row[t] * cm[t][j]).sum())
                                .collect()
                        })
                        .collect()
                } else {
                    b.iter()
                        .map(|row| (0..c).map(|j| row[j % k] * (j as i64 % 3 - 1)).collect())
                        .collect()
                }
            })
    })
}

/// Fraction-free, modular, certified and the dense rational oracle agree.
pub fn rank_backends_agree(cases: u32) -> Outcome {
    run(cases, matrix_case(), |rows| {
        let m = SparseMatrix::from_dense(&rows);
        let oracle = common::rank_rational(
            &rows
                .iter()
                .map(|r| r.iter().map(|&x| int(x)).collect())
                .collect::<Vec<_>>(),
        );
        prop_assert_eq!(rank_fraction_free(&m, None).unwrap().value, oracle);
        prop_assert_eq!(rank_mod_p(&m, 2_147_483_647).unwrap(), oracle);
        prop_assert_eq!(
            rank_certified(&m, &RankPolicy::modular()).unwrap().value,
            oracle
        );
        prop_assert_eq!(common::rank_mod_p(&rows, 2_147_483_629), oracle);
        // a rational rescaling of rows leaves the rank alone
        let scaled = SparseMatrix::from_triplets(
            m.rows(),
            m.cols(),
            m.triplets()
                .map(|(r, c, v)| (r, c, v / Rational64::from_integer(r as i64 + 2))),
        )
        .unwrap();
        prop_assert_eq!(rank_fraction_free(&scaled, None).unwrap().value, oracle);
        Ok(())
    })
}

fn request(
    n: usize,
    m: usize,
    kind: Option<InvolutionKind>,
    grading: Option<ElementaryGrading>,
) -> CodimRequest {
    CodimRequest::new(n, m)
        .with_involution(kind)
        .with_grading(grading)
}

fn cyclic(order: u64, n: usize, d: &[u64]) -> ElementaryGrading {
    ElementaryGrading::new(
        Group::cyclic(order).unwrap(),
        n,
        d.iter().map(|&x| GroupElement::Cyclic(x % order)).collect(),
    )
    .unwrap()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Codimension invariants on random small cases: brute-force agreement,
/// monotonicity in the involution and the grading, invariance under group
/// automorphisms, and consistency of the block decomposition.
pub fn codim_invariants(cases: u32) -> Outcome {
    let strategy = (1usize..=3, 1usize..=3).prop_flat_map(|(n, m)| {
        (
            Just(n),
            Just(m),
            kind_for(n),
            2u64..=5,
            proptest::collection::vec(0u64..5, n - 1),
            1u64..5,
        )
    });
    run(cases, strategy, |(n, m, kind, order, d, unit)| {
        let g = cyclic(order, n, &d);
        let plain = codim(&request(n, m, None, None)).unwrap().value;
        let starred = codim(&request(n, m, Some(kind), None)).unwrap();
        let graded = codim(&request(n, m, None, Some(g.clone()))).unwrap().value;
        let both = codim(&request(n, m, Some(kind), Some(g.clone())));
        prop_assert!(plain <= starred.value);
        prop_assert!(plain <= graded);
        prop_assert!(plain as u128 <= monomial_count(m, false).unwrap());
        prop_assert!(starred.value as u128 <= monomial_count(m, true).unwrap());
        prop_assert_eq!(
            starred.value as usize,
            common::codim(n, m, Some(oracle_kind(kind)), None)
        );
        let oracle_grading = common::Grading::Cyclic {
            order,
            superdiagonal: d.iter().map(|x| x % order).collect(),
        };
        prop_assert_eq!(
            graded as usize,
            common::codim(n, m, None, Some(&oracle_grading))
        );

        if gcd(unit, order) == 1 {
            let moved: Vec<u64> = d.iter().map(|x| x * unit).collect();
            let relabelled = codim(&request(n, m, None, Some(cyclic(order, n, &moved))))
                .unwrap()
                .value;
            prop_assert_eq!(relabelled, graded);
        }

        let analysis = homogeneous_involution_map(&g, kind).unwrap();
        match (&analysis, both) {
            (InvolutionAnalysis::Homogeneous(_), Ok(report)) => {
                prop_assert!(report.value >= starred.value);
                prop_assert_eq!(
                    report.value as usize,
                    common::codim(n, m, Some(oracle_kind(kind)), Some(&oracle_grading))
                );
                let sum: u64 = report.blocks.iter().map(|b| b.value).sum();
                prop_assert_eq!(sum, report.value);
                let req = request(n, m, Some(kind), Some(g.clone()));
                let full = full_matrix(&req).unwrap();
                prop_assert_eq!(
                    rank_fraction_free(&full, None).unwrap().value as u64,
                    report.value
                );
            }
            (InvolutionAnalysis::NotHomogeneous(_), Err(_)) => {}
            (a, b) => return Err(fail(format!("homogeneity {a:?} but codim gave {b:?}"))),
        }
        Ok(())
    })
}

/// A monomial evaluated on matrix units is zero or a signed unit, the sign
/// negative only under the symplectic involution, and equal to the dense
/// product.
pub fn unit_tuple_evaluations(cases: u32) -> Outcome {
    let strategy = (1usize..=5, 1usize..=5).prop_flat_map(|(n, m)| {
        let units = common::units(n);
        (
            Just(n),
            Just((1..=m).collect::<Vec<_>>()).prop_shuffle(),
            any::<u8>(),
            kind_for(n),
            proptest::collection::vec(proptest::sample::select(units), m),
        )
    });
    run(cases, strategy, |(n, perm, mask, kind, tuple)| {
        let factors: Vec<Factor> = perm
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if mask >> k & 1 == 1 {
                    Factor::starred(v)
                } else {
                    Factor::plain(v)
                }
            })
            .collect();
        let mono = StarMonomial::new(factors).unwrap();
        let dense: Vec<Dense> = tuple.iter().map(|&(i, j)| common::unit(n, i, j)).collect();
        let values = EvaluationTuple::new(
            tuple
                .iter()
                .map(|&(i, j)| UtMatrix::unit(i + 1, j + 1, n).unwrap())
                .collect(),
        );
        let got = evaluate_monomial(&mono, &values, Some(kind)).unwrap();
        let word: common::Word = perm
            .iter()
            .enumerate()
            .map(|(k, &v)| (v - 1, mask >> k & 1 == 1))
            .collect();
        prop_assert_eq!(
            from_ut(&got),
            common::eval_word(&word, &dense, Some(oracle_kind(kind)))
        );
        if !got.is_zero() {
            let (_, _, c) = got
                .as_scaled_unit()
                .ok_or_else(|| fail("not a scaled unit"))?;
            prop_assert!(c.abs().is_one());
            if c.is_negative() {
                prop_assert_eq!(kind, InvolutionKind::Symplectic);
            }
        }
        Ok(())
    })
}
