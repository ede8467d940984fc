//! Domain types for judges' evaluations and the elementary functions every
//! other module builds on.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{format_decimal, int, parse_rational, Rational};

macro_rules! natural_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl Ord for $name {
            fn cmp(&self, other: &Self) -> Ordering {
                natural_cmp(&self.0, &other.0)
            }
        }

        impl PartialOrd for $name {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(id: &str) -> Self {
                Self::new(id)
            }
        }

        impl From<u32> for $name {
            fn from(id: u32) -> Self {
                Self::new(id.to_string())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.0)
            }
        }
    };
}

natural_id!(
    /// Opaque judge identifier, ordered numerically when it parses as an integer.
    JudgeId
);
natural_id!(
    /// Opaque object identifier, ordered numerically when it parses as an integer.
    ObjectId
);

/// Numeric ids sort by value and before non-numeric ids.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// Bounded score interval `[lower, upper]` with a grading unit.
///
/// Scores are mapped onto the integer grid `0..=steps()` by
/// `(score - lower) / unit`; the grid is what the solver works on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoreScale {
    lower: Rational,
    upper: Rational,
    unit: Rational,
}

impl ScoreScale {
    pub fn new(lower: Rational, upper: Rational, unit: Rational) -> Result<Self> {
        if lower >= upper {
            return Err(Error::InvalidScale(format!(
                "lower bound {} must be below upper bound {}",
                format_exact(&lower),
                format_exact(&upper)
            )));
        }
        if unit <= Rational::zero() {
            return Err(Error::InvalidScale("grading unit must be positive".into()));
        }
        if !((upper - lower) / unit).is_integer() {
            return Err(Error::InvalidScale(format!(
                "range {} is not a multiple of the grading unit {}",
                format_exact(&(upper - lower)),
                format_exact(&unit)
            )));
        }
        Ok(Self { lower, upper, unit })
    }

    /// Integer scale `[lower, upper]` with unit 1.
    pub fn integer(lower: i128, upper: i128) -> Result<Self> {
        Self::new(int(lower), int(upper), int(1))
    }

    /// Parses `"l,u,unit"`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').collect();
        let bad = || Error::InvalidScale(format!("expected `lower,upper,unit`, got `{text}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let values: Option<Vec<Rational>> = parts.iter().map(|p| parse_rational(p)).collect();
        let values = values.ok_or_else(bad)?;
        Self::new(values[0], values[1], values[2])
    }

    pub fn lower(&self) -> Rational {
        self.lower
    }

    pub fn upper(&self) -> Rational {
        self.upper
    }

    pub fn unit(&self) -> Rational {
        self.unit
    }

    /// Range `R = upper - lower`.
    pub fn range(&self) -> Rational {
        self.upper - self.lower
    }

    /// Number of grid steps between the bounds.
    pub fn steps(&self) -> i64 {
        (self.range() / self.unit).to_integer() as i64
    }

    pub fn contains(&self, score: &Rational) -> bool {
        *score >= self.lower && *score <= self.upper
    }

    pub fn on_grid(&self, score: &Rational) -> bool {
        ((score - self.lower) / self.unit).is_integer()
    }

    /// Grid index of an in-range, on-grid score.
    pub fn to_grid(&self, score: &Rational) -> Option<i64> {
        if !self.contains(score) || !self.on_grid(score) {
            return None;
        }
        Some(((score - self.lower) / self.unit).to_integer() as i64)
    }

    /// Grid difference corresponding to a score difference; exact when the
    /// difference is a multiple of the unit.
    pub fn gap_to_grid(&self, gap: &Rational) -> Option<i64> {
        let steps = gap / self.unit;
        steps.is_integer().then(|| steps.to_integer() as i64)
    }

    pub fn from_grid(&self, index: i64) -> Rational {
        self.lower + self.unit * int(index as i128)
    }

    /// Number of grading units that make up one full score point, when that
    /// is a whole number.
    pub fn units_per_point(&self) -> Option<u32> {
        let per = int(1) / self.unit;
        per.is_integer().then(|| per.to_integer() as u32)
    }

    fn check(&self, judge: &JudgeId, object: &ObjectId, score: &Rational) -> Result<()> {
        let reason = if !self.contains(score) {
            "out of range"
        } else if !self.on_grid(score) {
            "off the grading grid"
        } else {
            return Ok(());
        };
        Err(Error::InvalidScore {
            judge: judge.to_string(),
            object: object.to_string(),
            score: format_exact(score),
            reason,
        })
    }
}

impl Default for ScoreScale {
    /// `[1, 10]` with a grading unit of one half.
    fn default() -> Self {
        Self {
            lower: int(1),
            upper: int(10),
            unit: Rational::new(1, 2),
        }
    }
}

/// One judge's scores over the subset of objects they rated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncompleteRating {
    judge: JudgeId,
    scores: BTreeMap<ObjectId, Rational>,
}

impl IncompleteRating {
    pub fn new(judge: JudgeId, scores: BTreeMap<ObjectId, Rational>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidEvaluations(format!(
                "rating of judge {judge} is empty"
            )));
        }
        Ok(Self { judge, scores })
    }

    /// Checks every score against `scale`.
    pub fn on_scale(judge: JudgeId, scores: BTreeMap<ObjectId, Rational>, scale: &ScoreScale) -> Result<Self> {
        for (object, score) in &scores {
            scale.check(&judge, object, score)?;
        }
        Self::new(judge, scores)
    }

    pub fn judge(&self) -> &JudgeId {
        &self.judge
    }

    pub fn scores(&self) -> &BTreeMap<ObjectId, Rational> {
        &self.scores
    }

    pub fn score(&self, object: &ObjectId) -> Option<Rational> {
        self.scores.get(object).copied()
    }

    pub fn support(&self) -> impl Iterator<Item = &ObjectId> {
        self.scores.keys()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Adds `shift` to every score.
    pub fn shifted(&self, shift: Rational) -> Self {
        Self {
            judge: self.judge.clone(),
            scores: self.scores.iter().map(|(o, s)| (o.clone(), s + shift)).collect(),
        }
    }
}

/// One judge's ordinal positions (1 = best, ties allowed) over a subset of
/// objects. Only the order relation between ranks is meaningful.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncompleteRanking {
    judge: JudgeId,
    ranks: BTreeMap<ObjectId, u32>,
}

impl IncompleteRanking {
    pub fn new(judge: JudgeId, ranks: BTreeMap<ObjectId, u32>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::InvalidEvaluations(format!(
                "ranking of judge {judge} is empty"
            )));
        }
        if let Some((object, _)) = ranks.iter().find(|(_, &r)| r == 0) {
            return Err(Error::InvalidEvaluations(format!(
                "judge {judge} gives object {object} a non-positive rank"
            )));
        }
        Ok(Self { judge, ranks })
    }

    pub fn judge(&self) -> &JudgeId {
        &self.judge
    }

    pub fn ranks(&self) -> &BTreeMap<ObjectId, u32> {
        &self.ranks
    }

    pub fn rank(&self, object: &ObjectId) -> Option<u32> {
        self.ranks.get(object).copied()
    }

    pub fn support(&self) -> impl Iterator<Item = &ObjectId> {
        self.ranks.keys()
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

/// Everything one judge said: a rating, a ranking, or both.
///
/// The two supports may differ; they are never reconciled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JudgeEvaluation {
    pub judge: JudgeId,
    pub rating: Option<IncompleteRating>,
    pub ranking: Option<IncompleteRanking>,
}

impl JudgeEvaluation {
    pub fn new(judge: JudgeId, rating: Option<IncompleteRating>, ranking: Option<IncompleteRanking>) -> Self {
        Self { judge, rating, ranking }
    }

    pub fn rating_support_len(&self) -> usize {
        self.rating.as_ref().map_or(0, IncompleteRating::len)
    }

    pub fn ranking_support_len(&self) -> usize {
        self.ranking.as_ref().map_or(0, IncompleteRanking::len)
    }
}

/// All judges' evaluations over a ground set of objects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluationSet {
    objects: Vec<ObjectId>,
    judges: Vec<JudgeEvaluation>,
    scale: ScoreScale,
}

impl EvaluationSet {
    /// Builds and validates; any error-level finding is rejected.
    pub fn new(objects: Vec<ObjectId>, judges: Vec<JudgeEvaluation>, scale: ScoreScale) -> Result<Self> {
        let set = Self::from_parts(objects, judges, scale);
        let report = validate(&set);
        if !report.is_valid() {
            let errors: Vec<String> = report.errors().map(|f| f.message.clone()).collect();
            return Err(Error::InvalidEvaluations(errors.join("; ")));
        }
        Ok(set)
    }

    /// Assembles without validation; objects are sorted and deduplicated.
    pub fn from_parts(mut objects: Vec<ObjectId>, judges: Vec<JudgeEvaluation>, scale: ScoreScale) -> Self {
        objects.sort();
        objects.dedup();
        Self { objects, judges, scale }
    }

    pub fn objects(&self) -> &[ObjectId] {
        &self.objects
    }

    pub fn judges(&self) -> &[JudgeEvaluation] {
        &self.judges
    }

    pub fn scale(&self) -> &ScoreScale {
        &self.scale
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn index_of(&self, object: &ObjectId) -> Option<usize> {
        self.objects.binary_search(object).ok()
    }

    pub fn ratings(&self) -> impl Iterator<Item = &IncompleteRating> {
        self.judges.iter().filter_map(|j| j.rating.as_ref())
    }

    pub fn rankings(&self) -> impl Iterator<Item = &IncompleteRanking> {
        self.judges.iter().filter_map(|j| j.ranking.as_ref())
    }

    /// The same evaluations on another scale.
    pub fn with_scale(&self, scale: ScoreScale) -> Result<Self> {
        Self::new(self.objects.clone(), self.judges.clone(), scale)
    }
}

/// Pairwise score differences implied by one rating.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GapMatrix {
    gaps: BTreeMap<(ObjectId, ObjectId), Rational>,
}

impl GapMatrix {
    pub fn get(&self, i: &ObjectId, j: &ObjectId) -> Option<Rational> {
        self.gaps.get(&(i.clone(), j.clone())).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(ObjectId, ObjectId), &Rational)> {
        self.gaps.iter()
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }
}

/// Complete ranking in the competition ("1224") scheme: the rank of an
/// object is one plus the number of objects strictly preferred to it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Ranking(Vec<u32>);

impl Ranking {
    /// Accepts any positive rank vector; callers wanting the canonical
    /// competition form use [`Ranking::normalized`].
    pub fn new(ranks: Vec<u32>) -> Self {
        Self(ranks)
    }

    pub fn ranks(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Canonical competition form of the same weak order.
    pub fn normalized(&self) -> Self {
        let negated: Vec<i64> = self.0.iter().map(|&r| -(r as i64)).collect();
        rank_from_scores(&negated)
    }

    /// As an incomplete ranking over `objects` (same order as the ranks).
    pub fn to_incomplete(&self, judge: JudgeId, objects: &[ObjectId]) -> Result<IncompleteRanking> {
        IncompleteRanking::new(judge, objects.iter().cloned().zip(self.0.iter().copied()).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

pub fn sign<T: Signed>(x: T) -> Sign {
    if x.is_negative() {
        Sign::Negative
    } else if x.is_positive() {
        Sign::Positive
    } else {
        Sign::Zero
    }
}

/// Ranking implied by a complete score vector: higher scores get better
/// (numerically smaller) ranks and ties share a rank.
pub fn rank_from_scores<T: PartialOrd>(scores: &[T]) -> Ranking {
    let mut order: Vec<&T> = scores.iter().collect();
    // descending
    order.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    Ranking(
        scores
            .iter()
            .map(|s| 1 + order.partition_point(|other| *other > s) as u32)
            .collect(),
    )
}

pub fn separation_gaps(rating: &IncompleteRating) -> GapMatrix {
    let mut gaps = BTreeMap::new();
    for (i, a_i) in rating.scores() {
        for (j, a_j) in rating.scores() {
            if i != j {
                gaps.insert((i.clone(), j.clone()), a_i - a_j);
            }
        }
    }
    GapMatrix { gaps }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    fn error(&mut self, message: String) {
        self.findings.push(Finding { severity: Severity::Error, message });
    }

    fn warning(&mut self, message: String) {
        self.findings.push(Finding { severity: Severity::Warning, message });
    }
}

pub fn validate(set: &EvaluationSet) -> ValidationReport {
    let mut report = ValidationReport::default();
    if set.objects.len() < 2 {
        report.error(format!(
            "ground set has {} object(s); at least 2 are required",
            set.objects.len()
        ));
    }
    let known: BTreeSet<&ObjectId> = set.objects.iter().collect();
    let mut seen = BTreeSet::new();
    for judge in &set.judges {
        let id = &judge.judge;
        if !seen.insert(id) {
            report.error(format!("duplicate judge {id}"));
        }
        if let Some(rating) = &judge.rating {
            if rating.judge() != id {
                report.error(format!("rating of judge {} filed under judge {id}", rating.judge()));
            }
            for (object, score) in rating.scores() {
                if !known.contains(object) {
                    report.error(format!("judge {id} rates unknown object {object}"));
                }
                if let Err(e) = set.scale.check(id, object, score) {
                    report.error(e.to_string());
                }
            }
        }
        if let Some(ranking) = &judge.ranking {
            if ranking.judge() != id {
                report.error(format!("ranking of judge {} filed under judge {id}", ranking.judge()));
            }
            for (object, &rank) in ranking.ranks() {
                if !known.contains(object) {
                    report.error(format!("judge {id} ranks unknown object {object}"));
                }
                if rank == 0 {
                    report.error(format!("judge {id} gives object {object} a non-positive rank"));
                }
            }
        }
        if judge.rating_support_len() < 2 && judge.ranking_support_len() < 2 {
            report.warning(format!(
                "judge {id} evaluates fewer than two objects in both rating and ranking; no pairwise information"
            ));
        }
    }
    report
}

/// Renders a rational exactly: a terminating decimal when possible,
/// otherwise `numer/denom`.
pub fn format_exact(value: &Rational) -> String {
    let rendered = format_decimal(value, 18);
    match parse_rational(&rendered) {
        Some(back) if back == *value => rendered,
        _ => format!("{}/{}", value.numer(), value.denom()),
    }
}

const HEADER: [&str; 4] = ["judge", "object", "score", "rank"];

/// Reads `judge,object,score,rank` CSV. Either the score or the rank may be
/// blank, not both. Lines starting with `#` are ignored.
pub fn parse_evaluations(text: &str, scale: &ScoreScale) -> Result<EvaluationSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header = reader.headers()?.clone();
    let header_line = header.position().map_or(1, |p| p.line());
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Parse {
            line: header_line.max(1),
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }

    let mut objects = BTreeSet::new();
    let mut scores: BTreeMap<JudgeId, BTreeMap<ObjectId, Rational>> = BTreeMap::new();
    let mut ranks: BTreeMap<JudgeId, BTreeMap<ObjectId, u32>> = BTreeMap::new();
    let mut judges = BTreeSet::new();
    let mut seen = BTreeSet::new();

    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| Error::Parse { line, message };
        if record.len() != 4 {
            return Err(fail(format!("expected 4 fields, found {}", record.len())));
        }
        let judge = JudgeId::new(&record[0]);
        let object = ObjectId::new(&record[1]);
        if judge.as_str().is_empty() || object.as_str().is_empty() {
            return Err(fail("judge and object ids must be non-empty".into()));
        }
        if !seen.insert((judge.clone(), object.clone())) {
            return Err(fail(format!("duplicate row for judge {judge} and object {object}")));
        }
        let (score_field, rank_field) = (&record[2], &record[3]);
        if score_field.is_empty() && rank_field.is_empty() {
            return Err(fail("score and rank are both blank".into()));
        }
        if !score_field.is_empty() {
            let score = parse_rational(score_field)
                .ok_or_else(|| fail(format!("malformed score `{score_field}`")))?;
            scale
                .check(&judge, &object, &score)
                .map_err(|e| fail(e.to_string()))?;
            scores.entry(judge.clone()).or_default().insert(object.clone(), score);
        }
        if !rank_field.is_empty() {
            let rank: i64 = rank_field
                .parse()
                .map_err(|_| fail(format!("malformed rank `{rank_field}`")))?;
            if rank <= 0 || rank > u32::MAX as i64 {
                return Err(fail(format!("rank {rank} is not a positive integer")));
            }
            ranks.entry(judge.clone()).or_default().insert(object.clone(), rank as u32);
        }
        objects.insert(object);
        judges.insert(judge);
    }

    let judges = judges
        .into_iter()
        .map(|id| {
            let rating = scores.remove(&id).map(|s| IncompleteRating::new(id.clone(), s)).transpose()?;
            let ranking = ranks.remove(&id).map(|r| IncompleteRanking::new(id.clone(), r)).transpose()?;
            Ok(JudgeEvaluation::new(id, rating, ranking))
        })
        .collect::<Result<Vec<_>>>()?;

    EvaluationSet::new(objects.into_iter().collect(), judges, scale.clone())
}

/// Inverse of [`parse_evaluations`]: one row per (judge, object) in id order.
pub fn write_evaluations(set: &EvaluationSet) -> String {
    let mut out = String::from("judge,object,score,rank\n");
    let mut judges: Vec<&JudgeEvaluation> = set.judges.iter().collect();
    judges.sort_by(|a, b| a.judge.cmp(&b.judge));
    for judge in judges {
        let mut objects: BTreeSet<&ObjectId> = BTreeSet::new();
        if let Some(r) = &judge.rating {
            objects.extend(r.support());
        }
        if let Some(r) = &judge.ranking {
            objects.extend(r.support());
        }
        for object in objects {
            let score = judge
                .rating
                .as_ref()
                .and_then(|r| r.score(object))
                .map(|s| format_exact(&s))
                .unwrap_or_default();
            let rank = judge
                .ranking
                .as_ref()
                .and_then(|r| r.rank(object))
                .map(|r| r.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", judge.judge, object, score, rank));
        }
    }
    out
}
