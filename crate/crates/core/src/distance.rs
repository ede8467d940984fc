//! Normalized projected distances between incomplete evaluations and the
//! total-distance objectives of the consensus problems.
//!
//! Both distances only look at the objects the two evaluations share. With
//! fewer than two shared objects there is no pair to compare and the
//! distance is 0.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::model::{sign, EvaluationSet, IncompleteRanking, IncompleteRating, ObjectId, Ranking, ScoreScale};
use crate::numeric::{int, Rational};

/// Distance value in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitDistance(Rational);

impl UnitDistance {
    pub fn new(value: Rational) -> Option<Self> {
        (value >= Rational::zero() && value <= int(1)).then_some(Self(value))
    }

    pub fn value(&self) -> Rational {
        self.0
    }
}

fn common<'a, V: Copy>(a: &'a BTreeMap<ObjectId, V>, b: &'a BTreeMap<ObjectId, V>) -> Vec<(V, V)> {
    a.iter()
        .filter_map(|(object, va)| b.get(object).map(|vb| (*va, *vb)))
        .collect()
}

/// Normalized projected Cook-Kress distance between two incomplete ratings.
pub fn npck(a1: &IncompleteRating, a2: &IncompleteRating, scale: &ScoreScale) -> UnitDistance {
    npck_scores(a1.scores(), a2.scores(), scale)
}

pub(crate) fn npck_scores(
    a1: &BTreeMap<ObjectId, Rational>,
    a2: &BTreeMap<ObjectId, Rational>,
    scale: &ScoreScale,
) -> UnitDistance {
    let shared = common(a1, a2);
    let m = shared.len() as i128;
    if m < 2 {
        return UnitDistance(Rational::zero());
    }
    let mut total = Rational::zero();
    for (p1, q1) in &shared {
        for (p2, q2) in &shared {
            total += ((p1 - p2) - (q1 - q2)).abs();
        }
    }
    let normalizer = int(4) * scale.range() * int((m + 1) / 2) * int(m / 2);
    UnitDistance::new(total / normalizer).expect("scores outside the scale")
}

/// Normalized projected Kemeny-Snell distance between two incomplete rankings.
pub fn npks(b1: &IncompleteRanking, b2: &IncompleteRanking) -> UnitDistance {
    npks_ranks(b1.ranks(), b2.ranks())
}

pub(crate) fn npks_ranks(b1: &BTreeMap<ObjectId, u32>, b2: &BTreeMap<ObjectId, u32>) -> UnitDistance {
    let shared = common(b1, b2);
    let m = shared.len() as i128;
    if m < 2 {
        return UnitDistance(Rational::zero());
    }
    // sum of |sign - sign| over ordered pairs, halved at the end
    let mut total = 0i128;
    for (r1, s1) in &shared {
        for (r2, s2) in &shared {
            let first = sign(*r1 as i64 - *r2 as i64).value();
            let second = sign(*s1 as i64 - *s2 as i64).value();
            total += (first - second).abs() as i128;
        }
    }
    UnitDistance(Rational::new(total, 2 * (m * m - m)))
}

fn complete_scores(set: &EvaluationSet, x: &[Rational]) -> BTreeMap<ObjectId, Rational> {
    assert_eq!(x.len(), set.len(), "score vector must cover the ground set");
    set.objects().iter().cloned().zip(x.iter().copied()).collect()
}

/// Sum of NPCK distances from every judge's rating to the complete rating `x`.
pub fn total_rating_distance(set: &EvaluationSet, x: &[Rational]) -> Rational {
    let complete = complete_scores(set, x);
    set.ratings()
        .map(|a| npck_scores(a.scores(), &complete, set.scale()).value())
        .sum()
}

/// Sum of NPKS distances from every judge's ranking to the complete ranking.
pub fn total_ranking_distance(set: &EvaluationSet, ranking: &Ranking) -> Rational {
    assert_eq!(ranking.len(), set.len(), "ranking must cover the ground set");
    let complete: BTreeMap<ObjectId, u32> =
        set.objects().iter().cloned().zip(ranking.ranks().iter().copied()).collect();
    set.rankings().map(|b| npks_ranks(b.ranks(), &complete).value()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JudgeEvaluation, JudgeId};
    use crate::numeric::rational;
    use proptest::prelude::*;

    fn rating(pairs: &[(u32, i128)]) -> IncompleteRating {
        rating_of("r", pairs)
    }

    fn rating_of(judge: &str, pairs: &[(u32, i128)]) -> IncompleteRating {
        IncompleteRating::new(
            JudgeId::from(judge),
            pairs.iter().map(|&(o, s)| (ObjectId::from(o), int(s))).collect(),
        )
        .unwrap()
    }

    fn ranking(pairs: &[(u32, u32)]) -> IncompleteRanking {
        ranking_of("b", pairs)
    }

    fn ranking_of(judge: &str, pairs: &[(u32, u32)]) -> IncompleteRanking {
        IncompleteRanking::new(JudgeId::from(judge), pairs.iter().map(|&(o, r)| (ObjectId::from(o), r)).collect()).unwrap()
    }

    fn scale10() -> ScoreScale {
        ScoreScale::integer(0, 10).unwrap()
    }

    #[test]
    fn npck_examples() {
        let s = scale10();
        assert_eq!(npck(&rating(&[(1, 8), (2, 4)]), &rating(&[(1, 5), (2, 5)]), &s).value(), rational(1, 5));
        let a = rating(&[(1, 3), (2, 9), (4, 1)]);
        assert_eq!(npck(&a, &a, &s).value(), int(0));
        assert_eq!(npck(&rating(&[(1, 10), (2, 0)]), &rating(&[(1, 0), (2, 10)]), &s).value(), int(1));
        // one shared object
        assert_eq!(npck(&rating(&[(1, 10), (2, 0)]), &rating(&[(1, 0), (3, 10)]), &s).value(), int(0));
    }

    #[test]
    fn npks_examples() {
        assert_eq!(npks(&ranking(&[(1, 1), (2, 2)]), &ranking(&[(1, 2), (2, 1)])).value(), int(1));
        assert_eq!(npks(&ranking(&[(1, 1), (2, 1)]), &ranking(&[(1, 1), (2, 2)])).value(), rational(1, 2));
        let b = ranking(&[(1, 3), (2, 1), (3, 2)]);
        assert_eq!(npks(&b, &b).value(), int(0));
        assert_eq!(npks(&b, &ranking(&[(9, 1)])).value(), int(0));
    }

    fn one_judge_set(rating: Option<IncompleteRating>, ranking: Option<IncompleteRanking>, objects: u32) -> EvaluationSet {
        let judge = JudgeEvaluation::new(
            rating.as_ref().map(|r| r.judge().clone()).or_else(|| ranking.as_ref().map(|r| r.judge().clone())).unwrap(),
            rating,
            ranking,
        );
        EvaluationSet::new((1..=objects).map(ObjectId::from).collect(), vec![judge], scale10()).unwrap()
    }

    #[test]
    fn total_rating_distance_examples() {
        let set = one_judge_set(Some(rating(&[(1, 8), (2, 4)])), None, 3);
        assert_eq!(total_rating_distance(&set, &[int(9), int(5), int(0)]), int(0));
        assert_eq!(total_rating_distance(&set, &[int(5), int(5), int(5)]), rational(1, 5));

        let a = JudgeEvaluation::new("a".into(), Some(rating_of("a", &[(1, 8), (2, 4)])), None);
        let b = JudgeEvaluation::new("b".into(), Some(rating_of("b", &[(1, 8), (2, 4)])), None);
        let set = EvaluationSet::new(vec![1.into(), 2.into(), 3.into()], vec![a, b], scale10()).unwrap();
        assert_eq!(total_rating_distance(&set, &[int(5), int(5), int(5)]), rational(2, 5));
    }

    #[test]
    fn total_ranking_distance_examples() {
        let set = one_judge_set(None, Some(ranking(&[(1, 1), (2, 2)])), 3);
        assert_eq!(total_ranking_distance(&set, &Ranking::new(vec![1, 2, 3])), int(0));
        assert_eq!(total_ranking_distance(&set, &Ranking::new(vec![2, 1, 3])), int(1));

        let a = JudgeEvaluation::new("a".into(), None, Some(ranking_of("a", &[(1, 1), (2, 2)])));
        let b = JudgeEvaluation::new("b".into(), None, Some(ranking_of("b", &[(1, 2), (2, 1)])));
        let set = EvaluationSet::new(vec![1.into(), 2.into()], vec![a, b], scale10()).unwrap();
        assert_eq!(total_ranking_distance(&set, &Ranking::new(vec![1, 2])), int(1));
        assert_eq!(total_ranking_distance(&set, &Ranking::new(vec![2, 1])), int(1));
    }

    #[test]
    fn two_object_closed_form() {
        // for two shared objects the double sum holds each gap difference twice
        let s = scale10();
        for (a, b, c, d) in [(8, 4, 5, 5), (1, 9, 3, 2), (0, 10, 10, 0), (6, 6, 2, 7)] {
            let expected = Rational::new(2 * ((a - b) - (c - d)).abs(), 4 * 10);
            assert_eq!(npck(&rating(&[(1, a), (2, b)]), &rating(&[(1, c), (2, d)]), &s).value(), expected);
        }
    }

    /// Exhaustive search: the largest NPCK over all pairs of complete ratings
    /// on a small grid is exactly 1.
    #[test]
    fn npck_normalizer_attains_one() {
        for range in 1..=4i128 {
            let s = ScoreScale::integer(0, range).unwrap();
            for m in 2..=3u32 {
                let vectors: Vec<Vec<i128>> = (0..(range + 1).pow(m))
                    .map(|mut code| {
                        (0..m)
                            .map(|_| {
                                let digit = code % (range + 1);
                                code /= range + 1;
                                digit
                            })
                            .collect()
                    })
                    .collect();
                let mut best = Rational::zero();
                for u in &vectors {
                    for v in &vectors {
                        let ru = rating(&u.iter().enumerate().map(|(i, &s)| (i as u32, s)).collect::<Vec<_>>());
                        let rv = rating(&v.iter().enumerate().map(|(i, &s)| (i as u32, s)).collect::<Vec<_>>());
                        best = best.max(npck(&ru, &rv, &s).value());
                    }
                }
                assert_eq!(best, int(1), "range {range}, m {m}");
            }
        }
    }

    fn arb_scores() -> impl Strategy<Value = BTreeMap<u32, i128>> {
        proptest::collection::btree_map(0u32..7, 0i128..=10, 0..7)
    }

    fn arb_ranks() -> impl Strategy<Value = BTreeMap<u32, u32>> {
        proptest::collection::btree_map(0u32..7, 1u32..6, 0..7)
    }

    fn to_rating(m: &BTreeMap<u32, i128>) -> BTreeMap<ObjectId, Rational> {
        m.iter().map(|(&o, &s)| (ObjectId::from(o), int(s))).collect()
    }

    fn to_ranking(m: &BTreeMap<u32, u32>) -> BTreeMap<ObjectId, u32> {
        m.iter().map(|(&o, &r)| (ObjectId::from(o), r)).collect()
    }

    proptest! {
        #[test]
        fn npck_symmetric_bounded_shift_invariant(a in arb_scores(), b in arb_scores(), shift in -3i128..=3) {
            let s = scale10();
            let (ra, rb) = (to_rating(&a), to_rating(&b));
            let d = npck_scores(&ra, &rb, &s);
            prop_assert_eq!(d, npck_scores(&rb, &ra, &s));
            prop_assert!(d.value() >= int(0) && d.value() <= int(1));
            let shifted: BTreeMap<ObjectId, Rational> = ra.iter().map(|(o, v)| (o.clone(), v + int(shift))).collect();
            if shifted.values().all(|v| s.contains(v)) {
                prop_assert_eq!(npck_scores(&shifted, &rb, &s), d);
            }
        }

        #[test]
        fn npks_symmetric_bounded_order_invariant(a in arb_ranks(), b in arb_ranks(), stretch in 1u32..4, offset in 0u32..5) {
            let (ra, rb) = (to_ranking(&a), to_ranking(&b));
            let d = npks_ranks(&ra, &rb);
            prop_assert_eq!(d, npks_ranks(&rb, &ra));
            prop_assert!(d.value() >= int(0) && d.value() <= int(1));
            let relabeled: BTreeMap<ObjectId, u32> = ra.iter().map(|(o, r)| (o.clone(), r * r * stretch + offset)).collect();
            prop_assert_eq!(npks_ranks(&relabeled, &rb), d);
        }
    }
}
