//! Command-line front end.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{aggregate_all, conflict_graph_dot, partial_order, Aggregates, AnalysisReport};
use crate::distance::{npck, npks, total_rating_distance, total_ranking_distance};
use crate::error::Error;
use crate::model::{parse_evaluations, rank_from_scores, validate, EvaluationSet, JudgeId, ObjectId, ScoreScale, Severity};
use crate::numeric::{exact, format_decimal, rounded, Rational};
use crate::penalty::{StrictSeparation, Weights};

#[derive(Debug, Parser)]
#[command(name = "catagg", version, about = "Aggregate incomplete ratings and rankings from several judges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an evaluation file and report problems
    Validate(Options),
    /// Pairwise NPCK and NPKS distances between judges
    Distances(Options),
    /// Consensus rating, consensus ranking and the combined pair
    Aggregate(Options),
    /// Contributions, adjusted scores and rating/ranking conflicts
    Analyze(Options),
}

#[derive(Debug, Args)]
struct Options {
    /// Evaluation CSV with header judge,object,score,rank
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Score scale as lower,upper,unit
    #[arg(long, value_name = "L,U,UNIT", default_value = "1,10,0.5", value_parser = parse_scale)]
    scale: ScoreScale,
    /// Rating and ranking weights of the combined aggregate
    #[arg(long, value_name = "WR,WK", default_value = "1,1", value_parser = parse_weights)]
    weights: Weights,
    /// Strict separation in grading units [default: one score point]
    #[arg(long, value_name = "UNITS", value_parser = parse_separation)]
    strict_sep: Option<StrictSeparation>,
    /// Write outputs to files in this directory instead of stdout
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Output formats, comma separated
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json")]
    format: Vec<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum Format {
    Json,
    Csv,
    Dot,
}

fn parse_scale(text: &str) -> Result<ScoreScale, String> {
    ScoreScale::parse(text).map_err(|e| e.to_string())
}

fn parse_weights(text: &str) -> Result<Weights, String> {
    Weights::parse(text).map_err(|e| e.to_string())
}

fn parse_separation(text: &str) -> Result<StrictSeparation, String> {
    let units: u32 = text.trim().parse().map_err(|_| format!("expected a positive integer, got {text:?}"))?;
    StrictSeparation::new(units).map_err(|e| e.to_string())
}

/// One rendered output: file name used with `--out-dir`, and its content.
struct Output {
    name: String,
    body: String,
}

enum Failure {
    Usage(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code: 0 on success, 1 on invalid input, 2 on usage errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                2
            } else {
                let _ = write!(stdout, "{rendered}");
                0
            };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(Failure::Usage(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            2
        }
        Err(Failure::Input(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            1
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let (name, options) = match &command {
        Command::Validate(o) => ("validate", o),
        Command::Distances(o) => ("distances", o),
        Command::Aggregate(o) => ("aggregate", o),
        Command::Analyze(o) => ("analyze", o),
    };
    let mut formats = options.format.clone();
    formats.sort();
    formats.dedup();
    if formats.contains(&Format::Dot) && name != "analyze" {
        return Err(Failure::Usage(format!("{name} has no dot output")));
    }

    let text = std::fs::read_to_string(&options.input)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", options.input.display())))?;

    let (code, outputs) = match command {
        Command::Validate(_) => validate_command(&text, options, &formats),
        Command::Distances(_) => distances_command(&load(&text, options)?, &formats)?,
        Command::Aggregate(_) => aggregate_command(&load(&text, options)?, options, &formats)?,
        Command::Analyze(_) => analyze_command(&load(&text, options)?, options, &formats)?,
    };
    emit(name, &outputs, options.out_dir.as_deref(), stdout, stderr)?;
    Ok(code)
}

fn load(text: &str, options: &Options) -> Result<EvaluationSet, Failure> {
    let set = parse_evaluations(text, &options.scale)?;
    let report = validate(&set);
    if !report.is_valid() {
        let messages: Vec<&str> = report.errors().map(|f| f.message.as_str()).collect();
        return Err(Failure::Input(messages.join("; ")));
    }
    Ok(set)
}

fn emit(
    name: &str,
    outputs: &[Output],
    out_dir: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Input(e.to_string());
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io)?;
            for output in outputs {
                let path = dir.join(format!("{name}{}", output.name));
                std::fs::write(&path, &output.body).map_err(io)?;
                let _ = writeln!(stderr, "wrote {}", path.display());
            }
        }
        None => {
            for (i, output) in outputs.iter().enumerate() {
                if i > 0 {
                    stdout.write_all(b"\n").map_err(io)?;
                }
                stdout.write_all(output.body.as_bytes()).map_err(io)?;
            }
        }
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    Ok(text)
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, Failure> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_error = |e: csv::Error| Failure::from(Error::from(e));
    writer.write_record(header).map_err(csv_error)?;
    for row in rows {
        writer.write_record(&row).map_err(csv_error)?;
    }
    let bytes = writer.into_inner().map_err(|e| Failure::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn decimal(value: &Rational) -> String {
    format_decimal(value, 4)
}

#[derive(Serialize)]
struct ValidationOutput<'a> {
    valid: bool,
    objects: usize,
    judges: usize,
    findings: Vec<FindingOutput<'a>>,
}

#[derive(Serialize)]
struct FindingOutput<'a> {
    severity: Severity,
    message: &'a str,
}

fn validate_command(text: &str, options: &Options, formats: &[Format]) -> (i32, Vec<Output>) {
    let (objects, judges, findings) = match parse_evaluations(text, &options.scale) {
        Ok(set) => (set.len(), set.judges().len(), validate(&set).findings),
        Err(e) => (0, 0, vec![crate::model::Finding { severity: Severity::Error, message: e.to_string() }]),
    };
    let valid = findings.iter().all(|f| f.severity != Severity::Error);
    let mut outputs = Vec::new();
    for format in formats {
        let body = match format {
            Format::Json => json(&ValidationOutput {
                valid,
                objects,
                judges,
                findings: findings.iter().map(|f| FindingOutput { severity: f.severity, message: &f.message }).collect(),
            }),
            Format::Csv => csv_table(
                &["severity", "message"],
                findings.iter().map(|f| {
                    let severity = if f.severity == Severity::Error { "error" } else { "warning" };
                    vec![severity.to_string(), f.message.clone()]
                }),
            ),
            Format::Dot => unreachable!("rejected before dispatch"),
        };
        // rendering a handful of strings cannot fail
        if let Ok(body) = body {
            outputs.push(Output { name: extension(*format).to_string(), body });
        }
    }
    (if valid { 0 } else { 1 }, outputs)
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Json => ".json",
        Format::Csv => ".csv",
        Format::Dot => ".dot",
    }
}

#[derive(Serialize)]
struct DistanceOutput {
    judges: Vec<JudgeId>,
    /// `null` where either judge gave no rating.
    npck: Vec<Vec<Option<f64>>>,
    /// `null` where either judge gave no ranking.
    npks: Vec<Vec<Option<f64>>>,
}

/// Judge-by-judge matrix; `None` where either judge lacks that kind of evaluation.
type Matrix = Vec<Vec<Option<Rational>>>;

fn distance_matrices(set: &EvaluationSet) -> (Matrix, Matrix) {
    let judges = set.judges();
    let npck_matrix = judges
        .iter()
        .map(|a| {
            judges
                .iter()
                .map(|b| match (&a.rating, &b.rating) {
                    (Some(x), Some(y)) => Some(npck(x, y, set.scale()).value()),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let npks_matrix = judges
        .iter()
        .map(|a| {
            judges
                .iter()
                .map(|b| match (&a.ranking, &b.ranking) {
                    (Some(x), Some(y)) => Some(npks(x, y).value()),
                    _ => None,
                })
                .collect()
        })
        .collect();
    (npck_matrix, npks_matrix)
}

fn distances_command(set: &EvaluationSet, formats: &[Format]) -> Result<(i32, Vec<Output>), Failure> {
    let (npck_matrix, npks_matrix) = distance_matrices(set);
    let presented = |m: &Matrix| -> Vec<Vec<Option<f64>>> {
        m.iter()
            .map(|row| row.iter().map(|v| v.as_ref().map(crate::numeric::presentation)).collect())
            .collect()
    };
    let judges: Vec<JudgeId> = set.judges().iter().map(|j| j.judge.clone()).collect();
    let mut outputs = Vec::new();
    for &format in formats {
        let body = match format {
            Format::Json => json(&DistanceOutput {
                judges: judges.clone(),
                npck: presented(&npck_matrix),
                npks: presented(&npks_matrix),
            })?,
            _ => {
                let cell = |v: &Option<Rational>| v.as_ref().map(decimal).unwrap_or_default();
                let mut rows = Vec::new();
                for (a, judge_a) in judges.iter().enumerate() {
                    for (b, judge_b) in judges.iter().enumerate() {
                        rows.push(vec![
                            judge_a.to_string(),
                            judge_b.to_string(),
                            cell(&npck_matrix[a][b]),
                            cell(&npks_matrix[a][b]),
                        ]);
                    }
                }
                csv_table(&["judge_a", "judge_b", "npck", "npks"], rows)?
            }
        };
        outputs.push(Output { name: extension(format).to_string(), body });
    }
    Ok((0, outputs))
}

/// Total distances of one emitted column to the judges' evaluations.
#[derive(Serialize)]
struct ColumnSummary {
    column: &'static str,
    #[serde(serialize_with = "exact::serialize")]
    objective: Rational,
    #[serde(serialize_with = "rounded::option")]
    total_rating_distance: Option<Rational>,
    #[serde(serialize_with = "rounded::serialize")]
    total_ranking_distance: Rational,
}

#[derive(Serialize)]
struct AggregateRow {
    object: ObjectId,
    #[serde(serialize_with = "rounded::serialize")]
    x_c: Rational,
    x_o: u32,
    #[serde(serialize_with = "rounded::serialize")]
    x_dc: Rational,
    x_do: u32,
}

#[derive(Serialize)]
struct AggregateOutput<'a> {
    #[serde(serialize_with = "rounded::serialize")]
    rating_weight: Rational,
    #[serde(serialize_with = "rounded::serialize")]
    ranking_weight: Rational,
    /// Strict separation in score points.
    #[serde(serialize_with = "rounded::serialize")]
    strict_separation: Rational,
    rows: &'a [AggregateRow],
    summary: &'a [ColumnSummary],
}

fn separation(set: &EvaluationSet, options: &Options) -> StrictSeparation {
    options.strict_sep.unwrap_or_else(|| StrictSeparation::default_for(set.scale()))
}

fn solve(set: &EvaluationSet, options: &Options) -> Result<Aggregates, Failure> {
    Ok(aggregate_all(set, options.weights, separation(set, options))?)
}

fn aggregate_command(set: &EvaluationSet, options: &Options, formats: &[Format]) -> Result<(i32, Vec<Output>), Failure> {
    let Aggregates { rating, ranking, combined } = solve(set, options)?;
    let summary = [
        ColumnSummary {
            column: "x_c",
            objective: rating.objective,
            total_rating_distance: Some(total_rating_distance(set, &rating.scores)),
            total_ranking_distance: total_ranking_distance(set, &rank_from_scores(&rating.scores)),
        },
        ColumnSummary {
            column: "x_o",
            objective: ranking.objective,
            total_rating_distance: None,
            total_ranking_distance: total_ranking_distance(set, &ranking.implied_ranking),
        },
        ColumnSummary {
            column: "x_dc",
            objective: combined.objective,
            total_rating_distance: Some(total_rating_distance(set, &combined.scores)),
            total_ranking_distance: total_ranking_distance(set, &combined.implied_ranking),
        },
        ColumnSummary {
            column: "x_do",
            objective: combined.objective,
            total_rating_distance: None,
            total_ranking_distance: total_ranking_distance(set, &combined.implied_ranking),
        },
    ];
    let rows: Vec<AggregateRow> = set
        .objects()
        .iter()
        .enumerate()
        .map(|(i, object)| AggregateRow {
            object: object.clone(),
            x_c: rating.scores[i],
            x_o: ranking.implied_ranking.ranks()[i],
            x_dc: combined.scores[i],
            x_do: combined.implied_ranking.ranks()[i],
        })
        .collect();

    let mut outputs = Vec::new();
    for &format in formats {
        let body = match format {
            Format::Json => json(&AggregateOutput {
                rating_weight: options.weights.rating,
                ranking_weight: options.weights.ranking,
                strict_separation: set.scale().unit() * Rational::from_integer(separation(set, options).units() as i128),
                rows: &rows,
                summary: &summary,
            })?,
            _ => {
                let mut body = csv_table(
                    &["object", "x_c", "x_o", "x_dc", "x_do"],
                    rows.iter().map(|r| {
                        vec![r.object.to_string(), decimal(&r.x_c), r.x_o.to_string(), decimal(&r.x_dc), r.x_do.to_string()]
                    }),
                )?;
                for column in &summary {
                    let rating = column.total_rating_distance.as_ref().map(decimal).unwrap_or_else(|| "-".into());
                    let _ = writeln!(
                        body,
                        "# {}: objective {}, total rating distance {}, total ranking distance {}",
                        column.column,
                        decimal(&column.objective),
                        rating,
                        decimal(&column.total_ranking_distance)
                    );
                }
                body
            }
        };
        outputs.push(Output { name: extension(format).to_string(), body });
    }
    Ok((0, outputs))
}

fn analyze_command(set: &EvaluationSet, options: &Options, formats: &[Format]) -> Result<(i32, Vec<Output>), Failure> {
    let aggregates = solve(set, options)?;
    let report = AnalysisReport::build(set, &aggregates)?;
    let mut outputs = Vec::new();
    for &format in formats {
        match format {
            Format::Json => outputs.push(Output { name: ".json".into(), body: json(&report)? }),
            Format::Csv => {
                let contributions = csv_table(
                    &["kind", "id", "contribution"],
                    report
                        .contributions
                        .judges
                        .iter()
                        .map(|e| vec!["judge".into(), e.judge.to_string(), decimal(&e.contribution)])
                        .chain(
                            report
                                .contributions
                                .objects
                                .iter()
                                .map(|e| vec!["object".into(), e.object.to_string(), decimal(&e.contribution)]),
                        ),
                )?;
                outputs.push(Output { name: "_contributions.csv".into(), body: contributions });
                let adjusted = csv_table(
                    &["object", "judge", "score", "judge_mean", "adjusted"],
                    report.adjusted_scores.rows.iter().map(|r| {
                        vec![
                            r.object.to_string(),
                            r.judge.to_string(),
                            decimal(&r.score),
                            decimal(&r.judge_mean),
                            decimal(&r.adjusted),
                        ]
                    }),
                )?;
                outputs.push(Output { name: "_adjusted.csv".into(), body: adjusted });
            }
            Format::Dot => {
                let order = partial_order(set, &aggregates.rating, &aggregates.ranking);
                outputs.push(Output { name: ".dot".into(), body: conflict_graph_dot(&order, &aggregates.rating.scores) });
            }
        }
    }
    Ok((0, outputs))
}
