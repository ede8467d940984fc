//! Serializable report of everything `analyze` computes. Field order is the
//! output key order.

use serde::Serialize;

use crate::error::Result;
use crate::model::{EvaluationSet, JudgeId, ObjectId};
use crate::numeric::{rounded, Rational};
use crate::penalty::{StrictSeparation, Weights};
use crate::solver::{cat_solve, consensus_ranking_convex, consensus_rating, ConsensusResult};

use super::{adjusted_scores, conflict_edges, partial_order, separation_contributions, AdjustedScores, PartialOrder, Relation};

/// The three aggregates of one evaluation set.
#[derive(Clone, Debug)]
pub struct Aggregates {
    pub rating: ConsensusResult,
    pub ranking: ConsensusResult,
    pub combined: ConsensusResult,
}

pub fn aggregate_all(set: &EvaluationSet, weights: Weights, separation: StrictSeparation) -> Result<Aggregates> {
    Ok(Aggregates {
        rating: consensus_rating(set)?,
        ranking: consensus_ranking_convex(set)?,
        combined: cat_solve(set, weights, separation)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub consensus: ConsensusSection,
    pub contributions: ContributionSection,
    pub adjusted_scores: AdjustedSection,
    pub partial_order: OrderSummary,
    pub conflicts: Vec<Conflict>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsensusSection {
    pub objects: Vec<ObjectId>,
    #[serde(serialize_with = "rounded::vec")]
    pub rating: Vec<Rational>,
    pub ranking: Vec<u32>,
    #[serde(serialize_with = "rounded::vec")]
    pub combined_rating: Vec<Rational>,
    pub combined_ranking: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JudgeEntry {
    pub judge: JudgeId,
    #[serde(serialize_with = "rounded::serialize")]
    pub contribution: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct ObjectEntry {
    pub object: ObjectId,
    #[serde(serialize_with = "rounded::serialize")]
    pub contribution: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContributionSection {
    /// Which aggregate the separation contributions are measured against.
    pub evaluated_at: &'static str,
    #[serde(serialize_with = "rounded::serialize")]
    pub total: Rational,
    pub judges: Vec<JudgeEntry>,
    pub objects: Vec<ObjectEntry>,
    pub combined_decomposition: CombinedDecomposition,
}

/// Split of the full combined objective, ranking terms included. This goes
/// beyond the rating-only contributions above and is reported separately.
#[derive(Clone, Debug, Serialize)]
pub struct CombinedDecomposition {
    pub note: &'static str,
    #[serde(serialize_with = "rounded::serialize")]
    pub objective: Rational,
    pub judges: Vec<JudgeEntry>,
    pub objects: Vec<ObjectEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdjustedRow {
    pub object: ObjectId,
    pub judge: JudgeId,
    #[serde(serialize_with = "rounded::serialize")]
    pub score: Rational,
    #[serde(serialize_with = "rounded::serialize")]
    pub judge_mean: Rational,
    #[serde(serialize_with = "rounded::serialize")]
    pub adjusted: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct ObjectMean {
    pub object: ObjectId,
    #[serde(serialize_with = "rounded::serialize")]
    pub mean: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdjustedSection {
    pub rows: Vec<AdjustedRow>,
    pub object_means: Vec<ObjectMean>,
}

impl From<&AdjustedScores> for AdjustedSection {
    fn from(table: &AdjustedScores) -> Self {
        Self {
            rows: table
                .rows
                .iter()
                .map(|r| AdjustedRow {
                    object: r.object.clone(),
                    judge: r.judge.clone(),
                    score: r.score,
                    judge_mean: r.judge_mean,
                    adjusted: r.adjusted,
                })
                .collect(),
            object_means: table
                .object_means
                .iter()
                .map(|(object, &mean)| ObjectMean { object: object.clone(), mean })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OrderSummary {
    pub preferred: usize,
    pub tied: usize,
    pub incomparable: usize,
}

/// An incomparable pair, oriented like the conflict graph edge.
#[derive(Clone, Debug, Serialize)]
pub struct Conflict {
    pub from: ObjectId,
    pub to: ObjectId,
    #[serde(serialize_with = "rounded::serialize")]
    pub from_score: Rational,
    #[serde(serialize_with = "rounded::serialize")]
    pub to_score: Rational,
    pub from_rank: u32,
    pub to_rank: u32,
}

pub fn conflicts(order: &PartialOrder, scores: &[Rational], ranks: &[u32]) -> Vec<Conflict> {
    let objects = order.objects();
    conflict_edges(order, scores)
        .into_iter()
        .map(|(a, b)| Conflict {
            from: objects[a].clone(),
            to: objects[b].clone(),
            from_score: scores[a],
            to_score: scores[b],
            from_rank: ranks[a],
            to_rank: ranks[b],
        })
        .collect()
}

pub fn summarize(order: &PartialOrder) -> OrderSummary {
    let mut summary = OrderSummary::default();
    for (_, relation) in order.pairs() {
        match relation {
            Relation::FirstPreferred | Relation::SecondPreferred => summary.preferred += 1,
            Relation::Tied => summary.tied += 1,
            Relation::Incomparable => summary.incomparable += 1,
        }
    }
    summary
}

impl AnalysisReport {
    pub fn build(set: &EvaluationSet, aggregates: &Aggregates) -> Result<Self> {
        let Aggregates { rating, ranking, combined } = aggregates;
        let contributions = separation_contributions(set, &combined.scores);
        let order = partial_order(set, rating, ranking);
        let table = adjusted_scores(set)?;

        let judge_entries = |pairs: Vec<(JudgeId, Rational)>| {
            pairs.into_iter().map(|(judge, contribution)| JudgeEntry { judge, contribution }).collect()
        };
        let object_entries = |pairs: Vec<(ObjectId, Rational)>| {
            pairs.into_iter().map(|(object, contribution)| ObjectEntry { object, contribution }).collect()
        };

        let mut combined_judges: Vec<(JudgeId, Rational)> =
            combined.decomposition.per_judge.iter().map(|(j, v)| (j.clone(), *v)).collect();
        combined_judges.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut combined_objects: Vec<(ObjectId, Rational)> =
            set.objects().iter().cloned().zip(combined.decomposition.per_object.iter().copied()).collect();
        combined_objects.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        Ok(Self {
            consensus: ConsensusSection {
                objects: set.objects().to_vec(),
                rating: rating.scores.clone(),
                ranking: ranking.implied_ranking.ranks().to_vec(),
                combined_rating: combined.scores.clone(),
                combined_ranking: combined.implied_ranking.ranks().to_vec(),
            },
            contributions: ContributionSection {
                evaluated_at: "combined_rating",
                total: contributions.total(),
                judges: judge_entries(contributions.judges_descending()),
                objects: object_entries(contributions.objects_descending()),
                combined_decomposition: CombinedDecomposition {
                    note: "full combined objective including ranking terms; a pair term on x_i - x_j is charged to object i",
                    objective: combined.objective,
                    judges: judge_entries(combined_judges),
                    objects: object_entries(combined_objects),
                },
            },
            adjusted_scores: AdjustedSection::from(&table),
            partial_order: summarize(&order),
            conflicts: conflicts(&order, &rating.scores, ranking.implied_ranking.ranks()),
        })
    }
}
