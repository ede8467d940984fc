//! Assembly of the convex objectives: rating separation terms, convexified
//! ranking terms, and their weighted combination, all expressed as
//! piecewise-linear functions of pairwise grid differences.

mod pwl;

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{sign, EvaluationSet, JudgeId, ScoreScale, Sign};
use crate::numeric::{int, parse_rational, rational, Rational};

pub use pwl::PiecewiseLinearFn;
pub(crate) use pwl::IntegerPwl;

/// Convex majorant of the rank-reversal kernel `½|sign(z) - s|`, where `s`
/// is the sign `z` ought to have. `z` is measured in separation units.
pub fn h_penalty(desired: Sign, z: Rational) -> Rational {
    let half = rational(1, 2);
    match desired {
        Sign::Positive => ((int(1) - z) * half).max(Rational::zero()),
        Sign::Zero => z.abs() * half,
        Sign::Negative => ((z + int(1)) * half).max(Rational::zero()),
    }
}

/// [`h_penalty`] as a function of grid differences, with `separation` grid
/// steps making up one separation unit.
pub fn h_penalty_fn(desired: Sign, separation: u32) -> PiecewiseLinearFn {
    let sep = separation as i64;
    let step = rational(1, 2 * separation as i128);
    let half = rational(1, 2);
    match desired {
        Sign::Positive => PiecewiseLinearFn::new(vec![sep], vec![-step, Rational::zero()], half),
        Sign::Zero => PiecewiseLinearFn::new(vec![0], vec![-step, step], Rational::zero()),
        Sign::Negative => PiecewiseLinearFn::new(vec![-sep], vec![Rational::zero(), step], half),
    }
}

/// How many grading units two objects must differ by to count as strictly
/// separated in score space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StrictSeparation(u32);

impl StrictSeparation {
    pub fn new(units: u32) -> Result<Self> {
        if units == 0 {
            return Err(Error::InvalidScale("strict separation must be at least one grading unit".into()));
        }
        Ok(Self(units))
    }

    /// One full score point, or one grading unit when a point is not a whole
    /// number of units.
    pub fn default_for(scale: &ScoreScale) -> Self {
        Self(scale.units_per_point().unwrap_or(1).max(1))
    }

    pub fn units(&self) -> u32 {
        self.0
    }
}

/// Space the ranking terms are expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankingTarget {
    /// Aggregate scores, higher is better.
    Scores(StrictSeparation),
    /// Aggregate rank values on `[1, n]`, lower is better.
    Ranks,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Weights {
    pub rating: Rational,
    pub ranking: Rational,
}

impl Weights {
    pub fn new(rating: Rational, ranking: Rational) -> Result<Self> {
        if rating < Rational::zero() || ranking < Rational::zero() || (rating.is_zero() && ranking.is_zero()) {
            return Err(Error::InvalidWeights);
        }
        Ok(Self { rating, ranking })
    }

    /// Parses `"w_rating,w_ranking"`.
    pub fn parse(text: &str) -> Result<Self> {
        let (a, b) = text.split_once(',').ok_or(Error::InvalidWeights)?;
        let a = parse_rational(a).ok_or(Error::InvalidWeights)?;
        let b = parse_rational(b).ok_or(Error::InvalidWeights)?;
        Self::new(a, b)
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self { rating: int(1), ranking: int(1) }
    }
}

/// Penalty on the grid difference `x[first] - x[second]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairTerm {
    pub first: usize,
    pub second: usize,
    pub penalty: PiecewiseLinearFn,
}

/// One judge's share of an objective, kept per ordered pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JudgeTerms {
    pub judge: JudgeId,
    pub terms: Vec<PairTerm>,
}

impl JudgeTerms {
    pub fn evaluate(&self, x: &[i64]) -> Rational {
        self.terms
            .iter()
            .map(|t| t.penalty.eval(x[t.first] - x[t.second]))
            .sum()
    }
}

/// Sum of convex functions of pairwise differences and of single
/// coordinates, over the grid of `scale`.
///
/// Pair terms are stored once per unordered pair, keyed `(i, j)` with
/// `i < j`, as a function of `x[i] - x[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairPenaltyMap {
    objects: usize,
    scale: ScoreScale,
    pair_terms: BTreeMap<(usize, usize), PiecewiseLinearFn>,
    object_terms: BTreeMap<usize, PiecewiseLinearFn>,
}

impl PairPenaltyMap {
    pub fn new(objects: usize, scale: ScoreScale) -> Self {
        Self {
            objects,
            scale,
            pair_terms: BTreeMap::new(),
            object_terms: BTreeMap::new(),
        }
    }

    pub fn objects(&self) -> usize {
        self.objects
    }

    pub fn scale(&self) -> &ScoreScale {
        &self.scale
    }

    pub fn pair_terms(&self) -> &BTreeMap<(usize, usize), PiecewiseLinearFn> {
        &self.pair_terms
    }

    pub fn object_terms(&self) -> &BTreeMap<usize, PiecewiseLinearFn> {
        &self.object_terms
    }

    pub fn is_empty(&self) -> bool {
        self.pair_terms.is_empty() && self.object_terms.is_empty()
    }

    /// Whether the objective only depends on pairwise differences.
    pub fn is_pure_separation(&self) -> bool {
        self.object_terms.is_empty()
    }

    pub fn add_pair_term(&mut self, first: usize, second: usize, penalty: &PiecewiseLinearFn) {
        assert!(first != second, "pair term on a single object");
        assert!(first < self.objects && second < self.objects, "object index out of range");
        let (key, f) = if first < second {
            ((first, second), penalty.clone())
        } else {
            ((second, first), penalty.mirror())
        };
        let slot = self.pair_terms.entry(key).or_insert_with(PiecewiseLinearFn::zero);
        *slot = slot.add(&f);
    }

    pub fn add_object_term(&mut self, object: usize, penalty: &PiecewiseLinearFn) {
        assert!(object < self.objects, "object index out of range");
        let slot = self.object_terms.entry(object).or_insert_with(PiecewiseLinearFn::zero);
        *slot = slot.add(penalty);
    }

    /// Penalty on `x[first] - x[second]`, whichever way it is stored.
    pub fn pair_term(&self, first: usize, second: usize) -> PiecewiseLinearFn {
        if first < second {
            self.pair_terms.get(&(first, second)).cloned().unwrap_or_else(PiecewiseLinearFn::zero)
        } else {
            self.pair_terms
                .get(&(second, first))
                .map(PiecewiseLinearFn::mirror)
                .unwrap_or_else(PiecewiseLinearFn::zero)
        }
    }

    /// Objective at the grid vector `x`.
    pub fn evaluate(&self, x: &[i64]) -> Rational {
        assert_eq!(x.len(), self.objects);
        let pairs: Rational = self.pair_terms.iter().map(|(&(i, j), f)| f.eval(x[i] - x[j])).sum();
        let singles: Rational = self.object_terms.iter().map(|(&i, f)| f.eval(x[i])).sum();
        pairs + singles
    }

    pub fn is_convex(&self) -> bool {
        self.pair_terms.values().chain(self.object_terms.values()).all(PiecewiseLinearFn::is_convex)
    }

    pub fn functions(&self) -> impl Iterator<Item = &PiecewiseLinearFn> {
        self.pair_terms.values().chain(self.object_terms.values())
    }

    pub fn add_judge_terms(&mut self, judge: &JudgeTerms) {
        for term in &judge.terms {
            self.add_pair_term(term.first, term.second, &term.penalty);
        }
    }

    fn from_judges(objects: usize, scale: ScoreScale, judges: &[JudgeTerms]) -> Self {
        let mut map = Self::new(objects, scale);
        for judge in judges {
            map.add_judge_terms(judge);
        }
        map
    }
}

/// Grid the ranking-space problem is solved on: rank values `1..=n`.
pub fn rank_scale(objects: usize) -> ScoreScale {
    ScoreScale::integer(1, objects.max(2) as i128).expect("n >= 2")
}

/// Per-judge rating separation terms `C_k |z_ij - p_ij|` for every ordered
/// pair in the judge's support, in grid units.
pub fn rating_terms(set: &EvaluationSet) -> Vec<JudgeTerms> {
    let scale = set.scale();
    set.judges()
        .iter()
        .filter_map(|judge| {
            let rating = judge.rating.as_ref()?;
            let m = rating.len() as i128;
            if m < 2 {
                return None;
            }
            let normalizer = int(4) * scale.range() * int((m + 1) / 2) * int(m / 2);
            // one grid step is `unit` score points
            let weight = scale.unit() / normalizer;
            let scored: Vec<(usize, i64)> = rating
                .scores()
                .iter()
                .map(|(object, score)| {
                    let i = set.index_of(object).expect("rated object outside the ground set");
                    (i, scale.to_grid(score).expect("score off the grid"))
                })
                .collect();
            let mut terms = Vec::new();
            for &(i, gi) in &scored {
                for &(j, gj) in &scored {
                    if i != j {
                        terms.push(PairTerm {
                            first: i,
                            second: j,
                            penalty: PiecewiseLinearFn::abs_deviation(gi - gj).scale(weight),
                        });
                    }
                }
            }
            Some(JudgeTerms { judge: judge.judge.clone(), terms })
        })
        .collect()
}

/// Per-judge convexified ranking terms `D_k h_ij(z_ij)`.
///
/// In score space a better (smaller) rank should come with a larger score, so
/// the desired sign of `x_i - x_j` is `sign(b_j - b_i)`; in rank space it is
/// `sign(b_i - b_j)`.
pub fn ranking_terms(set: &EvaluationSet, target: RankingTarget) -> Vec<JudgeTerms> {
    let separation = match target {
        RankingTarget::Scores(sep) => sep.units(),
        RankingTarget::Ranks => 1,
    };
    set.judges()
        .iter()
        .filter_map(|judge| {
            let ranking = judge.ranking.as_ref()?;
            let m = ranking.len() as i128;
            if m < 2 {
                return None;
            }
            let weight = Rational::new(1, m * m - m);
            let ranked: Vec<(usize, i64)> = ranking
                .ranks()
                .iter()
                .map(|(object, &rank)| (set.index_of(object).expect("ranked object outside the ground set"), rank as i64))
                .collect();
            let mut terms = Vec::new();
            for &(i, bi) in &ranked {
                for &(j, bj) in &ranked {
                    if i == j {
                        continue;
                    }
                    let desired = match target {
                        RankingTarget::Scores(_) => sign(bj - bi),
                        RankingTarget::Ranks => sign(bi - bj),
                    };
                    terms.push(PairTerm {
                        first: i,
                        second: j,
                        penalty: h_penalty_fn(desired, separation).scale(weight),
                    });
                }
            }
            Some(JudgeTerms { judge: judge.judge.clone(), terms })
        })
        .collect()
}

/// Weighted rating and score-space ranking terms, merged per judge.
pub fn cat_terms(set: &EvaluationSet, weights: Weights, separation: StrictSeparation) -> Vec<JudgeTerms> {
    let mut merged: BTreeMap<JudgeId, Vec<PairTerm>> = BTreeMap::new();
    let mut push = |judges: Vec<JudgeTerms>, weight: Rational| {
        if weight.is_zero() {
            return;
        }
        for judge in judges {
            let terms = merged.entry(judge.judge).or_default();
            terms.extend(judge.terms.into_iter().map(|t| PairTerm {
                penalty: t.penalty.scale(weight),
                ..t
            }));
        }
    };
    push(rating_terms(set), weights.rating);
    push(ranking_terms(set, RankingTarget::Scores(separation)), weights.ranking);
    merged.into_iter().map(|(judge, terms)| JudgeTerms { judge, terms }).collect()
}

pub fn build_rating_terms(set: &EvaluationSet) -> PairPenaltyMap {
    PairPenaltyMap::from_judges(set.len(), set.scale().clone(), &rating_terms(set))
}

pub fn build_ranking_terms(set: &EvaluationSet, target: RankingTarget) -> PairPenaltyMap {
    let scale = match target {
        RankingTarget::Scores(_) => set.scale().clone(),
        RankingTarget::Ranks => rank_scale(set.len()),
    };
    PairPenaltyMap::from_judges(set.len(), scale, &ranking_terms(set, target))
}

pub fn build_cat(set: &EvaluationSet, weights: Weights, separation: StrictSeparation) -> PairPenaltyMap {
    PairPenaltyMap::from_judges(set.len(), set.scale().clone(), &cat_terms(set, weights, separation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::total_rating_distance;
    use crate::model::{IncompleteRanking, IncompleteRating, JudgeEvaluation, ObjectId};
    use proptest::prelude::*;

    fn judge(id: &str, scores: &[(u32, i128)], ranks: &[(u32, u32)]) -> JudgeEvaluation {
        let rating = (!scores.is_empty()).then(|| {
            IncompleteRating::new(id.into(), scores.iter().map(|&(o, s)| (ObjectId::from(o), int(s))).collect()).unwrap()
        });
        let ranking = (!ranks.is_empty())
            .then(|| IncompleteRanking::new(id.into(), ranks.iter().map(|&(o, r)| (ObjectId::from(o), r)).collect()).unwrap());
        JudgeEvaluation::new(id.into(), rating, ranking)
    }

    fn set(n: u32, judges: Vec<JudgeEvaluation>) -> EvaluationSet {
        EvaluationSet::new((1..=n).map(ObjectId::from).collect(), judges, ScoreScale::integer(0, 10).unwrap()).unwrap()
    }

    #[test]
    fn h_penalty_examples() {
        assert_eq!(h_penalty(Sign::Positive, int(1)), int(0));
        assert_eq!(h_penalty(Sign::Positive, int(0)), rational(1, 2));
        assert_eq!(h_penalty(Sign::Positive, int(-2)), rational(3, 2));
        assert_eq!(h_penalty(Sign::Zero, int(0)), int(0));
        assert_eq!(h_penalty(Sign::Negative, int(-1)), int(0));
        assert_eq!(h_penalty(Sign::Negative, int(1)), int(1));
    }

    #[test]
    fn h_function_matches_formula_on_scaled_grid() {
        for s in [Sign::Negative, Sign::Zero, Sign::Positive] {
            for sep in 1..=3u32 {
                let f = h_penalty_fn(s, sep);
                assert!(f.is_convex());
                for z in -12..=12 {
                    assert_eq!(f.eval(z), h_penalty(s, rational(z as i128, sep as i128)), "{s:?} sep {sep} z {z}");
                }
            }
        }
    }

    #[test]
    fn rating_terms_example() {
        let e = set(2, vec![judge("k", &[(1, 8), (2, 4)], &[])]);
        let terms = &rating_terms(&e)[0].terms;
        assert_eq!(terms.len(), 2);
        let forward = terms.iter().find(|t| t.first == 0).unwrap();
        let backward = terms.iter().find(|t| t.first == 1).unwrap();
        for z in -10..=10 {
            assert_eq!(forward.penalty.eval(z), rational((z as i128 - 4).abs(), 40));
            assert_eq!(backward.penalty.eval(z), rational((z as i128 + 4).abs(), 40));
        }
        let map = build_rating_terms(&e);
        assert_eq!(map.pair_term(0, 1).eval(0), rational(1, 5));
    }

    #[test]
    fn half_unit_grid_keeps_score_units() {
        let scale = ScoreScale::new(int(0), int(10), rational(1, 2)).unwrap();
        let e = EvaluationSet::new(vec![1.into(), 2.into()], vec![judge("k", &[(1, 8), (2, 4)], &[])], scale).unwrap();
        let map = build_rating_terms(&e);
        // grid difference 8 is a score difference of 4
        assert_eq!(map.pair_term(0, 1).eval(8), int(0));
        assert_eq!(map.pair_term(0, 1).eval(0), rational(1, 5));
    }

    #[test]
    fn singleton_and_empty_supports_contribute_nothing() {
        let e = set(3, vec![judge("a", &[(1, 3)], &[(2, 1)])]);
        assert!(build_rating_terms(&e).is_empty());
        assert!(build_ranking_terms(&e, RankingTarget::Ranks).is_empty());
    }

    #[test]
    fn identical_judges_double_the_slopes() {
        let one = build_rating_terms(&set(2, vec![judge("a", &[(1, 8), (2, 4)], &[])]));
        let two = build_rating_terms(&set(2, vec![judge("a", &[(1, 8), (2, 4)], &[]), judge("b", &[(1, 8), (2, 4)], &[])]));
        assert_eq!(two.pair_term(0, 1), one.pair_term(0, 1).scale(int(2)));
    }

    #[test]
    fn ranking_terms_example() {
        let e = set(2, vec![judge("a", &[], &[(1, 1), (2, 2)])]);
        let sep = StrictSeparation::new(1).unwrap();
        let terms = &ranking_terms(&e, RankingTarget::Scores(sep))[0].terms;
        let forward = terms.iter().find(|t| t.first == 0).unwrap();
        let backward = terms.iter().find(|t| t.first == 1).unwrap();
        for z in -4..=4 {
            let half = rational(1, 2);
            assert_eq!(forward.penalty.eval(z), half * h_penalty(Sign::Positive, int(z as i128)));
            assert_eq!(backward.penalty.eval(z), half * h_penalty(Sign::Negative, int(z as i128)));
        }
        // rank space flips the orientation
        let ranks = &ranking_terms(&e, RankingTarget::Ranks)[0].terms;
        let forward = ranks.iter().find(|t| t.first == 0).unwrap();
        assert_eq!(forward.penalty.eval(-1), int(0));
        assert_eq!(forward.penalty.eval(1), int(1) / int(2));
    }

    #[test]
    fn tied_ranks_use_the_tie_branch() {
        let e = set(3, vec![judge("a", &[], &[(1, 2), (2, 2), (3, 2)])]);
        let map = build_ranking_terms(&e, RankingTarget::Ranks);
        for ((i, j), f) in map.pair_terms() {
            assert!(i < j);
            for z in -3..=3 {
                // two ordered terms of weight 1/6 each
                assert_eq!(f.eval(z), rational(2, 6) * int(z.abs() as i128) / int(2));
            }
        }
        assert_eq!(map.pair_terms().len(), 3);
    }

    #[test]
    fn cat_reductions() {
        let e = set(
            3,
            vec![judge("a", &[(1, 8), (2, 4), (3, 5)], &[(1, 1), (2, 3), (3, 2)]), judge("b", &[(1, 2), (3, 7)], &[(2, 1), (3, 2)])],
        );
        let sep = StrictSeparation::default_for(e.scale());
        let scores = RankingTarget::Scores(sep);
        assert_eq!(build_cat(&e, Weights::new(int(1), int(0)).unwrap(), sep), build_rating_terms(&e));
        assert_eq!(build_cat(&e, Weights::new(int(0), int(1)).unwrap(), sep), build_ranking_terms(&e, scores));
        assert!(Weights::new(int(0), int(0)).is_err());
        assert!(Weights::new(int(-1), int(1)).is_err());
        assert_eq!(Weights::parse("1,0.5").unwrap(), Weights::new(int(1), rational(1, 2)).unwrap());

        // every rating evaluates a single object
        let singletons = set(3, vec![judge("a", &[(1, 8)], &[(1, 1), (2, 3), (3, 2)]), judge("b", &[(1, 2)], &[(2, 1), (3, 2)])]);
        assert_eq!(build_cat(&singletons, Weights::default(), sep), build_ranking_terms(&singletons, scores));
    }

    #[test]
    fn dominance_over_reversal_kernel() {
        for s in [Sign::Negative, Sign::Zero, Sign::Positive] {
            for z in -8i128..=8 {
                let kernel = rational((sign(z).value() - s.value()).abs() as i128, 2);
                let h = h_penalty(s, int(z));
                assert!(h >= kernel);
                if z.abs() <= 1 {
                    assert_eq!(h, kernel);
                }
            }
        }
    }

    fn arb_set() -> impl Strategy<Value = EvaluationSet> {
        let judge_strategy = (
            proptest::collection::btree_map(1u32..=5, 0i128..=10, 0..=5),
            proptest::collection::btree_map(1u32..=5, 1u32..=5, 0..=5),
        );
        proptest::collection::vec(judge_strategy, 1..4).prop_map(|judges| {
            let judges = judges
                .into_iter()
                .enumerate()
                .map(|(k, (s, r))| {
                    let s: Vec<(u32, i128)> = s.into_iter().collect();
                    let r: Vec<(u32, u32)> = r.into_iter().collect();
                    judge(&k.to_string(), &s, &r)
                })
                .collect();
            set(5, judges)
        })
    }

    proptest! {
        #[test]
        fn assembled_maps_are_convex(e in arb_set(), sep in 1u32..3, z in -12i64..12) {
            let weights = Weights::default();
            let sep = StrictSeparation::new(sep).unwrap();
            for map in [build_rating_terms(&e), build_ranking_terms(&e, RankingTarget::Ranks), build_cat(&e, weights, sep)] {
                prop_assert!(map.is_convex());
                for f in map.functions() {
                    prop_assert!(f.eval(z - 1) - int(2) * f.eval(z) + f.eval(z + 1) >= int(0));
                }
                for i in 0..5 {
                    for j in 0..5 {
                        if i != j {
                            prop_assert_eq!(map.pair_term(i, j).eval(z), map.pair_term(j, i).eval(-z));
                        }
                    }
                }
            }
        }

        #[test]
        fn rating_map_reproduces_total_distance(e in arb_set(), x in proptest::collection::vec(0i64..=10, 5)) {
            let scores: Vec<Rational> = x.iter().map(|&g| e.scale().from_grid(g)).collect();
            prop_assert_eq!(build_rating_terms(&e).evaluate(&x), total_rating_distance(&e, &scores));
        }
    }
}
