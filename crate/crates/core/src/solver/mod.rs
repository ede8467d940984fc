//! Exact minimization of a [`PairPenaltyMap`] over its bounded grid.
//!
//! The objective `sum f_ij(x_i - x_j) + sum g_i(x_i)` with convex `f`, `g` is
//! L♮-convex on the integer box, so a point is a global minimizer as soon
//! as no move `x ± 1_S` improves it. [`minimize`] runs steepest descent over
//! those moves; each best move is a minimum cut, because for a fixed
//! direction the change in objective is a submodular function of the
//! indicator vector `1_S` with only unary and pairwise parts.

mod mincut;
mod oracle;

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::distance::total_rating_distance;
use crate::error::{Error, Result};
use crate::model::{format_exact, rank_from_scores, EvaluationSet, JudgeId, Ranking};
use crate::numeric::{exact, int, Rational};
use crate::penalty::{
    build_cat, build_ranking_terms, build_rating_terms, cat_terms, ranking_terms, rating_terms, IntegerPwl,
    JudgeTerms, PairPenaltyMap, RankingTarget, StrictSeparation, Weights,
};

use mincut::FlowNetwork;
pub use oracle::{brute_force_oracle, exact_npks_consensus_tiny, exact_npks_distance, weak_orders, MAX_EXACT_OBJECTS, ORACLE_LIMIT};

/// Where an optimal objective value comes from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    /// Each judge's penalty at the optimum. Empty for maps not built from
    /// evaluations.
    #[serde(serialize_with = "serialize_judges")]
    pub per_judge: BTreeMap<JudgeId, Rational>,
    /// Penalty attributed to each object, indexed like the ground set. An
    /// ordered-pair term on `x_i - x_j` is charged to `i`, so the entries
    /// sum to the objective.
    #[serde(serialize_with = "exact::vec")]
    pub per_object: Vec<Rational>,
}

fn serialize_judges<S: serde::Serializer>(
    judges: &BTreeMap<JudgeId, Rational>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = serializer.serialize_map(Some(judges.len()))?;
    for (judge, value) in judges {
        map.serialize_entry(judge.as_str(), &format_exact(value))?;
    }
    map.end()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConsensusResult {
    /// Optimal values on the map's scale, indexed like the ground set.
    #[serde(serialize_with = "exact::vec")]
    pub scores: Vec<Rational>,
    pub implied_ranking: Ranking,
    #[serde(serialize_with = "exact::serialize")]
    pub objective: Rational,
    pub decomposition: Decomposition,
    #[serde(skip)]
    grid: Vec<i64>,
}

impl ConsensusResult {
    /// Grid indices of [`ConsensusResult::scores`].
    pub fn grid_point(&self) -> &[i64] {
        &self.grid
    }
}

struct IntegerObjective {
    factor: i128,
    pairs: Vec<(usize, usize, IntegerPwl)>,
    singles: Vec<Option<IntegerPwl>>,
    upper: i64,
}

impl IntegerObjective {
    fn new(map: &PairPenaltyMap) -> Self {
        let factor = map
            .functions()
            .fold(1i128, |acc, f| num_integer::lcm(acc, f.denominator()));
        let pairs = map
            .pair_terms()
            .iter()
            .map(|(&(i, j), f)| (i, j, f.to_integer(factor)))
            .collect();
        let mut singles = vec![None; map.objects()];
        for (&i, f) in map.object_terms() {
            singles[i] = Some(f.to_integer(factor));
        }
        Self { factor, pairs, singles, upper: map.scale().steps() }
    }

    fn eval(&self, x: &[i64]) -> i128 {
        let pairs: i128 = self.pairs.iter().map(|(i, j, f)| f.eval(x[*i] - x[*j])).sum();
        let singles: i128 = self
            .singles
            .iter()
            .zip(x)
            .filter_map(|(f, &xi)| f.as_ref().map(|f| f.eval(xi)))
            .sum();
        pairs + singles
    }

    /// Best value of `x + direction * 1_S` over all subsets `S`, with the
    /// minimizing subset.
    fn best_move(&self, x: &[i64], direction: i64) -> (i128, Vec<bool>) {
        let n = x.len();
        let (source, sink) = (n, n + 1);
        let mut constant = 0i128;
        let mut unary = vec![0i128; n];
        let mut edges: Vec<(usize, usize, i128)> = Vec::new();

        for (i, j, f) in &self.pairs {
            let z = x[*i] - x[*j];
            let stay = f.eval(z);
            let only_j = f.eval(z - direction);
            let only_i = f.eval(z + direction);
            constant += stay;
            unary[*i] += only_i - stay;
            unary[*j] += stay - only_i;
            let coupling = only_j + only_i - 2 * stay;
            debug_assert!(coupling >= 0, "pair term is not convex");
            edges.push((*i, *j, coupling));
        }
        let mut blocked = vec![false; n];
        for i in 0..n {
            let moved = x[i] + direction;
            if moved < 0 || moved > self.upper {
                blocked[i] = true;
                continue;
            }
            if let Some(g) = &self.singles[i] {
                let now = g.eval(x[i]);
                constant += now;
                unary[i] += g.eval(moved) - now;
            }
        }
        for (i, g) in self.singles.iter().enumerate() {
            if blocked[i] {
                if let Some(g) = g {
                    constant += g.eval(x[i]);
                }
            }
        }

        // node on the sink side <=> it moves
        let mut network = FlowNetwork::new(n + 2);
        let mut finite = 0i128;
        for (i, &c) in unary.iter().enumerate() {
            if blocked[i] {
                continue;
            }
            if c > 0 {
                network.add_edge(source, i, c);
                finite += c;
            } else if c < 0 {
                constant += c;
                network.add_edge(i, sink, -c);
                finite -= c;
            }
        }
        for &(i, j, w) in &edges {
            network.add_edge(i, j, w);
            finite += w;
        }
        let infinite = finite + 1;
        for (i, &b) in blocked.iter().enumerate() {
            if b {
                network.add_edge(source, i, infinite);
            }
        }
        let cut = network.max_flow(source, sink);
        debug_assert!(cut < infinite);
        let reachable = network.source_side(source);
        let moving: Vec<bool> = (0..n).map(|i| !reachable[i]).collect();
        (constant + cut, moving)
    }
}

fn to_result(map: &PairPenaltyMap, grid: Vec<i64>, objective: Rational) -> Result<ConsensusResult> {
    let evaluated = map.evaluate(&grid);
    if evaluated != objective {
        return Err(Error::SelfCheck {
            reported: format_exact(&objective),
            evaluated: format_exact(&evaluated),
        });
    }
    let scale = map.scale();
    let scores: Vec<Rational> = grid.iter().map(|&g| scale.from_grid(g)).collect();
    let mut per_object = vec![Rational::zero(); map.objects()];
    let half = Rational::new(1, 2);
    for (&(i, j), f) in map.pair_terms() {
        let value = f.eval(grid[i] - grid[j]);
        per_object[i] += value * half;
        per_object[j] += value * half;
    }
    for (&i, g) in map.object_terms() {
        per_object[i] += g.eval(grid[i]);
    }
    Ok(ConsensusResult {
        implied_ranking: rank_from_scores(&scores),
        scores,
        objective,
        decomposition: Decomposition { per_judge: BTreeMap::new(), per_object },
        grid,
    })
}

/// Global minimizer of `map` over its grid.
///
/// Starts from the all-lower-bound point and repeatedly applies the best
/// `±1_S` move until none improves, so identical input gives identical
/// output. The decomposition splits each pair term evenly between its two
/// objects.
pub fn minimize(map: &PairPenaltyMap) -> Result<ConsensusResult> {
    let n = map.objects();
    let objective = IntegerObjective::new(map);
    let mut x = vec![0i64; n];
    let mut value = objective.eval(&x);
    if n > 0 && !map.is_empty() {
        loop {
            let (up, up_set) = objective.best_move(&x, 1);
            let (down, down_set) = objective.best_move(&x, -1);
            let (best, set, direction) = if up <= down { (up, up_set, 1) } else { (down, down_set, -1) };
            if best >= value {
                break;
            }
            for (xi, moves) in x.iter_mut().zip(&set) {
                if *moves {
                    *xi += direction;
                }
            }
            debug_assert_eq!(objective.eval(&x), best);
            value = best;
        }
    }
    to_result(map, x, Rational::new(value, objective.factor))
}

fn decompose(result: &mut ConsensusResult, judges: &[JudgeTerms]) {
    let mut per_object = vec![Rational::zero(); result.grid.len()];
    let mut per_judge = BTreeMap::new();
    for judge in judges {
        let mut total = Rational::zero();
        for term in &judge.terms {
            let value = term.penalty.eval(result.grid[term.first] - result.grid[term.second]);
            per_object[term.first] += value;
            total += value;
        }
        *per_judge.entry(judge.judge.clone()).or_insert_with(Rational::zero) += total;
    }
    result.decomposition = Decomposition { per_judge, per_object };
}

/// Among the equally good shifts of a pure-separation optimum, the one whose
/// mean score is closest to the mean of all given scores.
fn anchor_to_judges(map: &PairPenaltyMap, set: &EvaluationSet, result: ConsensusResult) -> Result<ConsensusResult> {
    if !map.is_pure_separation() || result.grid.is_empty() {
        return Ok(result);
    }
    let scale = set.scale();
    let given: Vec<i64> = set
        .ratings()
        .flat_map(|r| r.scores().values())
        .filter_map(|s| scale.to_grid(s))
        .collect();
    if given.is_empty() {
        return Ok(result);
    }
    let target = Rational::new(given.iter().map(|&g| g as i128).sum(), given.len() as i128);
    let n = result.grid.len() as i128;
    let mean = Rational::new(result.grid.iter().map(|&g| g as i128).sum(), n);
    let lowest = *result.grid.iter().min().expect("non-empty");
    let highest = *result.grid.iter().max().expect("non-empty");
    let best_shift = (-lowest..=scale.steps() - highest)
        .min_by_key(|&t| ((mean + int(t as i128) - target).abs(), t.abs(), t))
        .unwrap_or(0);
    if best_shift == 0 {
        return Ok(result);
    }
    let grid: Vec<i64> = result.grid.iter().map(|g| g + best_shift).collect();
    let mut shifted = to_result(map, grid, result.objective)?;
    shifted.decomposition = result.decomposition;
    Ok(shifted)
}

/// Complete rating closest to the judges' ratings in total NPCK distance.
pub fn consensus_rating(set: &EvaluationSet) -> Result<ConsensusResult> {
    let map = build_rating_terms(set);
    let result = minimize(&map)?;
    let mut result = anchor_to_judges(&map, set, result)?;
    decompose(&mut result, &rating_terms(set));
    let distance = total_rating_distance(set, &result.scores);
    if distance != result.objective {
        return Err(Error::SelfCheck {
            reported: format_exact(&result.objective),
            evaluated: format_exact(&distance),
        });
    }
    Ok(result)
}

/// Minimizer of the convexified ranking objective over rank values `1..=n`.
///
/// `scores` holds the rank values (lower is better); `implied_ranking` is
/// their competition ranking.
pub fn consensus_ranking_convex(set: &EvaluationSet) -> Result<ConsensusResult> {
    let map = build_ranking_terms(set, RankingTarget::Ranks);
    let mut result = minimize(&map)?;
    let negated: Vec<Rational> = result.scores.iter().map(|s| -s).collect();
    result.implied_ranking = rank_from_scores(&negated);
    decompose(&mut result, &ranking_terms(set, RankingTarget::Ranks));
    Ok(result)
}

/// Combined rating-ranking aggregate: optimal scores and their implied ranking.
pub fn cat_solve(set: &EvaluationSet, weights: Weights, separation: StrictSeparation) -> Result<ConsensusResult> {
    let map = build_cat(set, weights, separation);
    let result = minimize(&map)?;
    let mut result = anchor_to_judges(&map, set, result)?;
    decompose(&mut result, &cat_terms(set, weights, separation));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{IncompleteRanking, IncompleteRating, JudgeEvaluation, ObjectId, ScoreScale};
    use crate::penalty::PiecewiseLinearFn;

    fn judge(id: &str, scores: &[(u32, i128)], ranks: &[(u32, u32)]) -> JudgeEvaluation {
        let rating = (!scores.is_empty()).then(|| {
            IncompleteRating::new(id.into(), scores.iter().map(|&(o, s)| (ObjectId::from(o), int(s))).collect()).unwrap()
        });
        let ranking = (!ranks.is_empty())
            .then(|| IncompleteRanking::new(id.into(), ranks.iter().map(|&(o, r)| (ObjectId::from(o), r)).collect()).unwrap());
        JudgeEvaluation::new(id.into(), rating, ranking)
    }

    fn set(n: u32, scale: ScoreScale, judges: Vec<JudgeEvaluation>) -> EvaluationSet {
        EvaluationSet::new((1..=n).map(ObjectId::from).collect(), judges, scale).unwrap()
    }

    fn single_pair_map(upper: i128) -> PairPenaltyMap {
        let mut map = PairPenaltyMap::new(2, ScoreScale::integer(0, upper).unwrap());
        map.add_pair_term(0, 1, &PiecewiseLinearFn::abs_deviation(2));
        map
    }

    #[test]
    fn single_pair_examples() {
        let wide = minimize(&single_pair_map(4)).unwrap();
        assert_eq!(wide.objective, int(0));
        assert_eq!(wide.scores[0] - wide.scores[1], int(2));

        let narrow = minimize(&single_pair_map(1)).unwrap();
        assert_eq!(narrow.objective, int(1));
        assert_eq!(narrow.scores, vec![int(1), int(0)]);
    }

    #[test]
    fn empty_map_returns_lower_bound() {
        let map = PairPenaltyMap::new(3, ScoreScale::integer(2, 5).unwrap());
        let result = minimize(&map).unwrap();
        assert_eq!(result.objective, int(0));
        assert_eq!(result.scores, vec![int(2); 3]);
    }

    #[test]
    fn object_terms_pull_towards_targets() {
        let mut map = PairPenaltyMap::new(3, ScoreScale::integer(0, 6).unwrap());
        map.add_object_term(0, &PiecewiseLinearFn::abs_deviation(5));
        map.add_object_term(2, &PiecewiseLinearFn::abs_deviation(1).scale(int(3)));
        map.add_pair_term(0, 1, &PiecewiseLinearFn::abs_deviation(1));
        map.add_pair_term(1, 2, &PiecewiseLinearFn::abs_deviation(-4));
        let result = minimize(&map).unwrap();
        assert_eq!(result.objective, brute_force_oracle(&map).unwrap().objective);
    }

    #[test]
    fn consensus_rating_examples() {
        let scale = ScoreScale::integer(0, 10).unwrap();
        let one = set(3, scale.clone(), vec![judge("a", &[(1, 8), (2, 4), (3, 6)], &[])]);
        let result = consensus_rating(&one).unwrap();
        assert_eq!(result.objective, int(0));
        assert_eq!(result.scores[0] - result.scores[1], int(4));
        // anchored to the judge's own scores
        assert_eq!(result.scores, vec![int(8), int(4), int(6)]);

        let shifted = set(
            3,
            scale.clone(),
            vec![judge("a", &[(1, 8), (2, 4), (3, 6)], &[]), judge("b", &[(1, 5), (2, 1), (3, 3)], &[])],
        );
        assert_eq!(consensus_rating(&shifted).unwrap().objective, int(0));

        // opposed gaps of +-2, C = 1/40: each judge holds both ordered pairs,
        // so any z in [-2, 2] costs C * 2 * (|z - 2| + |z + 2|) = 8/40
        let opposed = set(2, scale, vec![judge("a", &[(1, 6), (2, 4)], &[]), judge("b", &[(1, 4), (2, 6)], &[])]);
        let result = consensus_rating(&opposed).unwrap();
        assert_eq!(result.objective, Rational::new(8, 40));
        assert_eq!(result.objective, brute_force_oracle(&build_rating_terms(&opposed)).unwrap().objective);
        let judges: Rational = result.decomposition.per_judge.values().copied().sum();
        assert_eq!(judges, result.objective);
        let objects: Rational = result.decomposition.per_object.iter().copied().sum();
        assert_eq!(objects, result.objective);
    }

    #[test]
    fn consensus_ranking_examples() {
        let scale = ScoreScale::integer(0, 4).unwrap();
        let strict = set(3, scale.clone(), vec![judge("a", &[], &[(1, 2), (2, 3), (3, 1)])]);
        let result = consensus_ranking_convex(&strict).unwrap();
        assert_eq!(result.objective, int(0));
        assert_eq!(result.implied_ranking.ranks(), &[2, 3, 1]);

        let opposed = set(2, scale.clone(), vec![judge("a", &[], &[(1, 1), (2, 2)]), judge("b", &[], &[(1, 2), (2, 1)])]);
        let result = consensus_ranking_convex(&opposed).unwrap();
        // each judge: 1/2 * (h = 1/2 on both ordered pairs) at a tie, or 0 and 1
        assert_eq!(result.objective, int(1));
        let map = build_ranking_terms(&opposed, RankingTarget::Ranks);
        for x in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert_eq!(map.evaluate(&x), int(1));
        }

        let chain = set(
            4,
            scale,
            vec![judge("a", &[], &[(1, 1), (2, 2), (3, 3)]), judge("b", &[], &[(2, 1), (3, 2), (4, 3)])],
        );
        let result = consensus_ranking_convex(&chain).unwrap();
        assert_eq!(result.objective, int(0));
        assert_eq!(result.implied_ranking.ranks(), &[1, 2, 3, 4]);
    }

    #[test]
    fn cat_examples() {
        let scale = ScoreScale::integer(0, 6).unwrap();
        let sep = StrictSeparation::default_for(&scale);
        let e = set(
            3,
            scale.clone(),
            vec![judge("a", &[(1, 5), (2, 1)], &[(1, 1), (3, 2)]), judge("b", &[(2, 2), (3, 6)], &[(3, 1), (2, 2)])],
        );
        let rating_only = cat_solve(&e, Weights::new(int(1), int(0)).unwrap(), sep).unwrap();
        assert_eq!(rating_only, consensus_rating(&e).unwrap());

        let consistent = set(
            3,
            scale,
            vec![judge("a", &[(1, 5), (2, 3)], &[(1, 1), (2, 2)]), judge("b", &[(2, 2), (3, 1)], &[(2, 1), (3, 2)])],
        );
        let result = cat_solve(&consistent, Weights::default(), sep).unwrap();
        assert_eq!(result.objective, int(0));
        assert_eq!(result.implied_ranking.ranks(), &[1, 2, 3]);
    }

    #[test]
    fn deterministic_bytes() {
        let scale = ScoreScale::new(int(1), int(10), Rational::new(1, 2)).unwrap();
        let e = set(
            4,
            scale.clone(),
            vec![
                judge("a", &[(1, 5), (2, 7), (3, 2)], &[(2, 1), (1, 2), (3, 3)]),
                judge("b", &[(2, 4), (3, 6), (4, 9)], &[(4, 1), (3, 2), (2, 3)]),
            ],
        );
        let sep = StrictSeparation::default_for(&scale);
        let first = serde_json::to_string(&cat_solve(&e, Weights::default(), sep).unwrap()).unwrap();
        let second = serde_json::to_string(&cat_solve(&e, Weights::default(), sep).unwrap()).unwrap();
        assert_eq!(first, second);
    }
}
