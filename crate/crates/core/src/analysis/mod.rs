//! Diagnostics on aggregated evaluations: which judges and objects carry the
//! separation penalty, judge-normalized scores, and where the consensus
//! rating and consensus ranking disagree.

mod dot;
pub mod report;

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{EvaluationSet, JudgeId, ObjectId, Ranking};
use crate::numeric::{int, Rational};
use crate::solver::ConsensusResult;

pub use dot::conflict_graph_dot;
pub use report::{aggregate_all, Aggregates, AnalysisReport};

/// Separation-penalty contributions at a given complete score vector.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContributionReport {
    pub per_judge: BTreeMap<JudgeId, Rational>,
    pub per_object: BTreeMap<ObjectId, Rational>,
}

fn descending<K: Ord + Clone>(map: &BTreeMap<K, Rational>) -> Vec<(K, Rational)> {
    let mut entries: Vec<(K, Rational)> = map.iter().map(|(k, v)| (k.clone(), *v)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries
}

impl ContributionReport {
    pub fn judges_descending(&self) -> Vec<(JudgeId, Rational)> {
        descending(&self.per_judge)
    }

    pub fn objects_descending(&self) -> Vec<(ObjectId, Rational)> {
        descending(&self.per_object)
    }

    pub fn total(&self) -> Rational {
        self.per_judge.values().copied().sum()
    }
}

/// Contribution of every judge and every object to the rating separation
/// penalty at `x` (scores on the set's scale, indexed like the ground set).
///
/// A judge contributes `C_k |(x_i - x_j) - (a_i - a_j)|` summed over all
/// ordered pairs of objects they rated. An object `i` collects the same
/// summands over pairs starting at `i`, so both views sum to the same total.
pub fn separation_contributions(set: &EvaluationSet, x: &[Rational]) -> ContributionReport {
    assert_eq!(x.len(), set.len(), "score vector must cover the ground set");
    let mut report = ContributionReport {
        per_judge: set.judges().iter().map(|j| (j.judge.clone(), Rational::zero())).collect(),
        per_object: set.objects().iter().map(|o| (o.clone(), Rational::zero())).collect(),
    };
    let range = set.scale().range();
    for judge in set.judges() {
        let Some(rating) = &judge.rating else { continue };
        let m = rating.len() as i128;
        if m < 2 {
            continue;
        }
        let weight = int(1) / (int(4) * range * int((m + 1) / 2) * int(m / 2));
        let rated: Vec<(&ObjectId, Rational, Rational)> = rating
            .scores()
            .iter()
            .map(|(o, a)| (o, *a, x[set.index_of(o).expect("rated object outside the ground set")]))
            .collect();
        for (i, a_i, x_i) in &rated {
            let mut from_i = Rational::zero();
            for (_, a_j, x_j) in &rated {
                from_i += ((x_i - x_j) - (a_i - a_j)).abs() * weight;
            }
            *report.per_object.get_mut(*i).expect("object in ground set") += from_i;
            *report.per_judge.get_mut(&judge.judge).expect("judge present") += from_i;
        }
    }
    report
}

pub fn judge_contributions(set: &EvaluationSet, x: &[Rational]) -> Vec<(JudgeId, Rational)> {
    separation_contributions(set, x).judges_descending()
}

pub fn object_contributions(set: &EvaluationSet, x: &[Rational]) -> Vec<(ObjectId, Rational)> {
    separation_contributions(set, x).objects_descending()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjustedScore {
    pub object: ObjectId,
    pub judge: JudgeId,
    pub score: Rational,
    pub judge_mean: Rational,
    pub adjusted: Rational,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdjustedScores {
    /// Ordered by object, then judge.
    pub rows: Vec<AdjustedScore>,
    pub object_means: BTreeMap<ObjectId, Rational>,
}

impl AdjustedScores {
    pub fn get(&self, object: &ObjectId, judge: &JudgeId) -> Option<&AdjustedScore> {
        self.rows.iter().find(|r| &r.object == object && &r.judge == judge)
    }
}

/// Each score divided by the mean score its judge gave.
pub fn adjusted_scores(set: &EvaluationSet) -> Result<AdjustedScores> {
    let mut rows = Vec::new();
    for judge in set.judges() {
        let Some(rating) = &judge.rating else { continue };
        let mean: Rational = rating.scores().values().copied().sum::<Rational>() / int(rating.len() as i128);
        if mean.is_zero() {
            return Err(Error::ZeroMean(judge.judge.to_string()));
        }
        for (object, &score) in rating.scores() {
            rows.push(AdjustedScore {
                object: object.clone(),
                judge: judge.judge.clone(),
                score,
                judge_mean: mean,
                adjusted: score / mean,
            });
        }
    }
    rows.sort_by(|a, b| a.object.cmp(&b.object).then_with(|| a.judge.cmp(&b.judge)));
    let mut sums: BTreeMap<ObjectId, (Rational, i128)> = BTreeMap::new();
    for row in &rows {
        let entry = sums.entry(row.object.clone()).or_insert((Rational::zero(), 0));
        entry.0 += row.adjusted;
        entry.1 += 1;
    }
    let object_means = sums.into_iter().map(|(o, (sum, count))| (o, sum / int(count))).collect();
    Ok(AdjustedScores { rows, object_means })
}

/// Relation between the first and second object of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    FirstPreferred,
    SecondPreferred,
    Tied,
    Incomparable,
}

/// Agreement between a rating and a ranking over the same objects, one
/// label per unordered pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialOrder {
    objects: Vec<ObjectId>,
    relation: BTreeMap<(usize, usize), Relation>,
}

impl PartialOrder {
    pub fn objects(&self) -> &[ObjectId] {
        &self.objects
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&(usize, usize), &Relation)> {
        self.relation.iter()
    }

    /// Label of `(a, b)` from `a`'s point of view.
    pub fn relation(&self, a: usize, b: usize) -> Option<Relation> {
        if a < b {
            self.relation.get(&(a, b)).copied()
        } else {
            self.relation.get(&(b, a)).map(|r| match r {
                Relation::FirstPreferred => Relation::SecondPreferred,
                Relation::SecondPreferred => Relation::FirstPreferred,
                other => *other,
            })
        }
    }

    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.relation(a, b) == Some(Relation::FirstPreferred)
    }

    pub fn incomparable_pairs(&self) -> Vec<(usize, usize)> {
        self.relation
            .iter()
            .filter(|(_, r)| **r == Relation::Incomparable)
            .map(|(&pair, _)| pair)
            .collect()
    }
}

/// Combines scores (higher is better) and a ranking (lower is better).
///
/// `a` is preferred to `b` when it is strictly better on one and at least as
/// good on the other, tied when equal on both, and incomparable otherwise.
pub fn partial_order_from(objects: &[ObjectId], scores: &[Rational], ranking: &Ranking) -> PartialOrder {
    assert_eq!(objects.len(), scores.len());
    assert_eq!(objects.len(), ranking.len());
    let ranks = ranking.ranks();
    let mut relation = BTreeMap::new();
    for a in 0..objects.len() {
        for b in a + 1..objects.len() {
            let score = scores[a].cmp(&scores[b]);
            // reversed: a smaller rank is better
            let rank = ranks[b].cmp(&ranks[a]);
            use std::cmp::Ordering::*;
            let label = match (score, rank) {
                (Equal, Equal) => Relation::Tied,
                (Greater, Greater | Equal) | (Equal, Greater) => Relation::FirstPreferred,
                (Less, Less | Equal) | (Equal, Less) => Relation::SecondPreferred,
                _ => Relation::Incomparable,
            };
            relation.insert((a, b), label);
        }
    }
    PartialOrder { objects: objects.to_vec(), relation }
}

/// Incomparable pairs oriented from the higher to the lower score, highest
/// source first.
pub(crate) fn conflict_edges(order: &PartialOrder, scores: &[Rational]) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = order
        .incomparable_pairs()
        .into_iter()
        .map(|(a, b)| if scores[a] > scores[b] { (a, b) } else { (b, a) })
        .collect();
    edges.sort_by(|x, y| scores[y.0].cmp(&scores[x.0]).then(x.cmp(y)));
    edges
}

/// Partial order of the consensus rating `xc` against the ranking of `xo`.
pub fn partial_order(set: &EvaluationSet, xc: &ConsensusResult, xo: &ConsensusResult) -> PartialOrder {
    partial_order_from(set.objects(), &xc.scores, &xo.implied_ranking)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rank_from_scores, IncompleteRating, JudgeEvaluation, ScoreScale};
    use crate::numeric::rational;
    use proptest::prelude::*;

    fn rating_set(n: u32, judges: &[(&str, &[(u32, i128)])]) -> EvaluationSet {
        let judges = judges
            .iter()
            .map(|(id, scores)| {
                let rating =
                    IncompleteRating::new((*id).into(), scores.iter().map(|&(o, s)| (ObjectId::from(o), int(s))).collect()).unwrap();
                JudgeEvaluation::new((*id).into(), Some(rating), None)
            })
            .collect();
        EvaluationSet::new((1..=n).map(ObjectId::from).collect(), judges, ScoreScale::integer(0, 10).unwrap()).unwrap()
    }

    #[test]
    fn contribution_examples() {
        let e = rating_set(2, &[("k", &[(1, 8), (2, 4)])]);
        let report = separation_contributions(&e, &[int(5), int(5)]);
        assert_eq!(report.per_judge[&JudgeId::from("k")], rational(1, 5));
        // each object carries the ordered pairs starting at it
        assert_eq!(report.per_object[&ObjectId::from(1)], rational(1, 10));
        assert_eq!(report.per_object[&ObjectId::from(2)], rational(1, 10));

        let matching = separation_contributions(&e, &[int(9), int(5)]);
        assert_eq!(matching.total(), int(0));
    }

    #[test]
    fn outlier_object_tops_the_list() {
        // judges agree on 1 and 2 but disagree wildly about 3
        let e = rating_set(
            3,
            &[("a", &[(1, 6), (2, 4), (3, 9)]), ("b", &[(1, 7), (2, 5), (3, 1)]), ("c", &[(1, 5), (2, 3)])],
        );
        let x = crate::solver::consensus_rating(&e).unwrap().scores;
        let objects = object_contributions(&e, &x);
        assert_eq!(objects[0].0, ObjectId::from(3));
    }

    #[test]
    fn adjusted_score_examples() {
        let e = rating_set(3, &[("flat", &[(1, 6), (2, 6), (3, 6)]), ("z", &[(1, 0), (2, 0)])]);
        assert!(matches!(adjusted_scores(&e), Err(Error::ZeroMean(_))));
        let e = rating_set(3, &[("flat", &[(1, 6), (2, 6), (3, 6)])]);
        let table = adjusted_scores(&e).unwrap();
        assert!(table.rows.iter().all(|r| r.adjusted == int(1)));
        assert_eq!(table.object_means.len(), 3);
    }

    fn objects(n: u32) -> Vec<ObjectId> {
        (1..=n).map(ObjectId::from).collect()
    }

    #[test]
    fn partial_order_cases() {
        let po = partial_order_from(&objects(2), &[int(5), int(4)], &Ranking::new(vec![1, 2]));
        assert!(po.prefers(0, 1));
        assert_eq!(po.relation(1, 0), Some(Relation::SecondPreferred));

        let po = partial_order_from(&objects(2), &[int(5), int(5)], &Ranking::new(vec![2, 2]));
        assert_eq!(po.relation(0, 1), Some(Relation::Tied));

        // higher score, worse rank
        let po = partial_order_from(&objects(2), &[int(5), int(4)], &Ranking::new(vec![2, 1]));
        assert_eq!(po.relation(0, 1), Some(Relation::Incomparable));
        assert_eq!(po.incomparable_pairs(), vec![(0, 1)]);

        // equal score, better rank
        let po = partial_order_from(&objects(2), &[int(5), int(5)], &Ranking::new(vec![2, 1]));
        assert!(po.prefers(1, 0));
    }

    proptest! {
        #[test]
        fn one_label_per_pair(scores in proptest::collection::vec(0i128..5, 2..7), ranks in proptest::collection::vec(1u32..5, 7)) {
            let n = scores.len();
            let scores: Vec<Rational> = scores.into_iter().map(int).collect();
            let ranking = Ranking::new(ranks[..n].to_vec());
            let po = partial_order_from(&objects(n as u32), &scores, &ranking);
            prop_assert_eq!(po.pairs().count(), n * (n - 1) / 2);
            for a in 0..n {
                for b in 0..n {
                    if a == b { continue; }
                    let forward = po.relation(a, b).unwrap();
                    let backward = po.relation(b, a).unwrap();
                    let both_preferred = forward == Relation::FirstPreferred && backward == Relation::FirstPreferred;
                    prop_assert!(!both_preferred);
                    if forward == Relation::Tied || forward == Relation::Incomparable {
                        prop_assert_eq!(forward, backward);
                    }
                }
            }
            let consistent = partial_order_from(&objects(n as u32), &scores, &rank_from_scores(&scores));
            prop_assert!(consistent.incomparable_pairs().is_empty());
        }
    }
}
