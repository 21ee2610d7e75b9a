//! Instance, archive, solution and report files.
//!
//! Instances are TOML, one weight row per line:
//!
//! ```toml
//! format_version = 1
//! n = 4
//! m = 2
//! w_max = 10
//! # optional, defaults to floor(n/m) and ceil(n/m)
//! min_students = [2, 2]
//! max_students = [2, 2]
//! # optional, one-based topic numbers; defaults to a single group
//! groups = [[1], [2]]
//! weights = [
//!   [10, 0],
//!   [10, 0],
//!   [0, 10],
//!   [0, 10],
//! ]
//!
//! [labels]  # optional
//! students = ["Ada", "Ben", "Cleo", "Dan"]
//! topics = ["Scheduling", "Routing"]
//! staff = ["Lecturer A", "Lecturer B"]
//! ```
//!
//! Spreadsheet exports can be read with [`import_matrix`]: one student per
//! line, weights separated by whitespace, commas, semicolons or tabs, an
//! optional leading student name per row, an optional header line of topic
//! names and `#` comments.
//!
//! Archives, solutions, reports and oracle results are JSON. Topic numbers
//! are one-based and imbalance values are exact `numerator/denominator`
//! strings. Every file carries `format_version`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::model::{outcome, Assignment, Instance, Labels, ModelError, Outcome};
use crate::oracle::OracleResult;
use crate::search::{AlternativeCount, Archive, Mode, RunReport};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("instance file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("unsupported format_version {found} (this build reads {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("{context}: {source}")]
    Model { context: String, source: ModelError },
}

impl FormatError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        FormatError::Field { field: field.into(), message: message.into() }
    }

    /// The underlying instance validation error, if that is what failed.
    pub fn model_error(&self) -> Option<&ModelError> {
        match self {
            FormatError::Model { source, .. } => Some(source),
            _ => None,
        }
    }
}

fn read(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), FormatError> {
    fs::write(path, text).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

fn check_version(found: u32) -> Result<(), FormatError> {
    if found == FORMAT_VERSION {
        Ok(())
    } else {
        Err(FormatError::Version { found })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Rescale weight rows that do not sum to `w_max`.
    pub normalize: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    format_version: u32,
    n: usize,
    m: usize,
    w_max: u32,
    min_students: Option<Vec<u32>>,
    max_students: Option<Vec<u32>>,
    groups: Option<Vec<Vec<usize>>>,
    weights: Vec<Vec<u32>>,
    #[serde(default)]
    labels: LabelsFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelsFile {
    #[serde(default)]
    students: Vec<String>,
    #[serde(default)]
    topics: Vec<String>,
    #[serde(default)]
    staff: Vec<String>,
}

pub fn parse_instance(text: &str, opts: LoadOptions) -> Result<Instance, FormatError> {
    let file: InstanceFile = toml::from_str(text)?;
    check_version(file.format_version)?;
    if file.weights.len() != file.n {
        return Err(FormatError::field("n", format!("n = {} but `weights` has {} rows", file.n, file.weights.len())));
    }
    if let Some((i, row)) = file.weights.iter().enumerate().find(|(_, r)| r.len() != file.m) {
        return Err(FormatError::field(
            format!("weights[{i}]"),
            format!("row of student {} has {} entries, m = {}", i + 1, row.len(), file.m),
        ));
    }
    let mut builder = Instance::builder(file.weights, file.w_max).normalize(opts.normalize);
    match (file.min_students, file.max_students) {
        (Some(a), Some(b)) => builder = builder.capacities(a, b),
        (None, None) => {}
        _ => {
            return Err(FormatError::field(
                "min_students/max_students",
                "give both capacity vectors or neither",
            ))
        }
    }
    if let Some(groups) = file.groups {
        let zero_based = groups
            .into_iter()
            .enumerate()
            .map(|(k, g)| {
                g.into_iter()
                    .map(|j| {
                        j.checked_sub(1).ok_or_else(|| {
                            FormatError::field(format!("groups[{k}]"), "topic numbers start at 1")
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        builder = builder.groups(zero_based);
    }
    let labels = Labels { students: file.labels.students, topics: file.labels.topics, staff: file.labels.staff };
    builder.labels(labels).build().map_err(|source| FormatError::Model {
        context: model_context(&source),
        source,
    })
}

fn model_context(err: &ModelError) -> String {
    match err {
        ModelError::RowSum { student, .. } | ModelError::RaggedRow { student, .. } => {
            format!("field `weights[{student}]`")
        }
        ModelError::CapacityLength { .. } | ModelError::CapacityOrder { .. } | ModelError::InfeasibleTotals { .. } => {
            "field `min_students/max_students`".into()
        }
        ModelError::EmptyGroup { .. }
        | ModelError::GroupTopicOutOfRange { .. }
        | ModelError::TopicInSeveralGroups { .. }
        | ModelError::TopicWithoutGroup { .. }
        | ModelError::GroupWithoutCapacity { .. } => "field `groups`".into(),
        ModelError::LabelCount { .. } => "table `labels`".into(),
        _ => "instance".into(),
    }
}

fn toml_str(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn int_list<T: ToString>(xs: &[T]) -> String {
    let items: Vec<String> = xs.iter().map(ToString::to_string).collect();
    format!("[{}]", items.join(", "))
}

/// Canonical text of an instance. Capacities are written only when they
/// differ from the defaults.
pub fn instance_to_string(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str(&format!("format_version = {FORMAT_VERSION}\n"));
    out.push_str(&format!("n = {}\nm = {}\nw_max = {}\n", inst.n(), inst.m(), inst.w_max()));
    if !inst.has_default_capacities() {
        out.push_str(&format!("min_students = {}\n", int_list(inst.min_students())));
        out.push_str(&format!("max_students = {}\n", int_list(inst.max_students())));
    }
    let groups: Vec<String> = inst
        .groups()
        .iter()
        .map(|g| int_list(&g.iter().map(|j| j + 1).collect::<Vec<_>>()))
        .collect();
    out.push_str(&format!("groups = [{}]\n", groups.join(", ")));
    out.push_str("weights = [\n");
    for i in 0..inst.n() {
        out.push_str(&format!("  {},\n", int_list(inst.row(i))));
    }
    out.push_str("]\n");
    let labels = inst.labels();
    if !(labels.students.is_empty() && labels.topics.is_empty() && labels.staff.is_empty()) {
        out.push_str("\n[labels]\n");
        for (key, list) in [("students", &labels.students), ("topics", &labels.topics), ("staff", &labels.staff)] {
            if !list.is_empty() {
                let quoted: Vec<String> = list.iter().map(|s| toml_str(s)).collect();
                out.push_str(&format!("{key} = [{}]\n", quoted.join(", ")));
            }
        }
    }
    out
}

pub fn load_instance(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Instance, FormatError> {
    parse_instance(&read(path.as_ref())?, opts)
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write(path.as_ref(), &instance_to_string(inst))
}

/// Settings for reading a bare weight matrix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatrixOptions {
    /// Required row sum; inferred from the first row when absent.
    pub w_max: Option<u32>,
    pub normalize: bool,
    /// Zero-based staff groups; a single group when absent.
    pub groups: Option<Vec<Vec<usize>>>,
}

/// Reads a rectangular weight matrix with default capacities.
pub fn import_matrix(text: &str, opts: &MatrixOptions) -> Result<Instance, FormatError> {
    let mut topics: Vec<String> = Vec::new();
    let mut students: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<u32>> = Vec::new();
    let mut first_row_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        let numeric: Vec<Option<u32>> = tokens.iter().map(|t| t.parse().ok()).collect();
        if rows.is_empty() && topics.is_empty() && numeric.iter().skip(1).all(Option::is_none) && tokens.len() > 1 {
            topics = tokens.iter().map(|t| t.to_string()).collect();
            continue;
        }
        let (label, values) = match numeric[0] {
            Some(_) => (None, &tokens[..]),
            None => (Some(tokens[0]), &tokens[1..]),
        };
        let row = values
            .iter()
            .map(|t| {
                t.parse::<u32>().map_err(|_| FormatError::Line {
                    line: line_no,
                    message: format!("`{t}` is not a nonnegative integer weight"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(FormatError::Line {
                    line: line_no,
                    message: format!("{} weights, expected {} as on line {first_row_line}", row.len(), first.len()),
                });
            }
        } else {
            first_row_line = line_no;
        }
        students.push(label.map_or_else(|| format!("s{}", rows.len() + 1), str::to_string));
        rows.push(row);
    }
    let m = rows.first().map_or(0, Vec::len);
    if topics.len() == m + 1 {
        topics.remove(0);
    }
    if !topics.is_empty() && topics.len() != m {
        return Err(FormatError::Line { line: 1, message: format!("{} topic names for {m} columns", topics.len()) });
    }
    let w_max = opts
        .w_max
        .unwrap_or_else(|| rows.first().map_or(0, |r| r.iter().sum()));
    let mut builder = Instance::builder(rows, w_max)
        .normalize(opts.normalize)
        .labels(Labels { students, topics, staff: Vec::new() });
    if let Some(groups) = &opts.groups {
        builder = builder.groups(groups.clone());
    }
    builder.build().map_err(|source| FormatError::Model { context: "matrix".into(), source })
}

/// A JSON array written on one line inside pretty output.
fn compact_row(topics: &[usize]) -> Box<RawValue> {
    RawValue::from_string(serde_json::to_string(topics).expect("integer list")).expect("valid json")
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceHeader {
    n: usize,
    m: usize,
    w_max: u32,
}

#[derive(Debug, Serialize)]
struct ArchiveOut {
    format_version: u32,
    mode: Mode,
    cap: usize,
    instance: InstanceHeader,
    total: usize,
    points: Vec<PointOut>,
}

#[derive(Debug, Serialize)]
struct PointOut {
    #[serde(flatten)]
    outcome: Outcome,
    count: usize,
    cap_hit: bool,
    solutions: Vec<Box<RawValue>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArchiveIn {
    format_version: u32,
    mode: Mode,
    cap: usize,
    instance: InstanceHeader,
    #[allow(dead_code)]
    total: usize,
    points: Vec<PointIn>,
}

#[derive(Debug, Deserialize)]
struct PointIn {
    #[serde(flatten)]
    outcome: Outcome,
    count: usize,
    cap_hit: bool,
    solutions: Vec<Vec<usize>>,
}

/// Archive as JSON: outcome points (or outcome groups of the best
/// solutions) with their one-based solutions.
pub fn archive_to_string(archive: &Archive, inst: &Instance) -> String {
    let points = archive
        .count_alternatives()
        .into_iter()
        .map(|AlternativeCount { outcome, count, cap_hit }| PointOut {
            outcome,
            count,
            cap_hit,
            solutions: archive
                .alternatives()
                .filter(|(o, _)| *o == outcome)
                .map(|(_, a)| compact_row(&a.one_based()))
                .collect(),
        })
        .collect();
    let out = ArchiveOut {
        format_version: FORMAT_VERSION,
        mode: archive.mode(),
        cap: archive.cap(),
        instance: InstanceHeader { n: inst.n(), m: inst.m(), w_max: inst.w_max() },
        total: archive.len(),
        points,
    };
    let mut text = serde_json::to_string_pretty(&out).expect("archive serializes");
    text.push('\n');
    text
}

/// Reads an archive written for `inst`. Every solution is revalidated and
/// must reproduce the outcome recorded next to it.
pub fn parse_archive(text: &str, inst: &Instance) -> Result<Archive, FormatError> {
    let file: ArchiveIn = serde_json::from_str(text)?;
    check_version(file.format_version)?;
    if (file.instance.n, file.instance.m, file.instance.w_max) != (inst.n(), inst.m(), inst.w_max()) {
        return Err(FormatError::field(
            "instance",
            format!(
                "archive was written for n = {}, m = {}, w_max = {}",
                file.instance.n, file.instance.m, file.instance.w_max
            ),
        ));
    }
    let mut solutions = Vec::new();
    let mut flags = Vec::new();
    for (p, point) in file.points.iter().enumerate() {
        if point.count != point.solutions.len() {
            return Err(FormatError::field(
                format!("points[{p}].count"),
                format!("count {} but {} solutions listed", point.count, point.solutions.len()),
            ));
        }
        for (q, row) in point.solutions.iter().enumerate() {
            let field = format!("points[{p}].solutions[{q}]");
            let topic_of = one_based_to_zero(row, &field)?;
            let asg = Assignment::new(inst, topic_of.clone())
                .map_err(|source| FormatError::Model { context: field.clone(), source })?;
            let actual = outcome(inst, &asg).map_err(|source| FormatError::Model { context: field.clone(), source })?;
            if actual != point.outcome {
                return Err(FormatError::field(field, format!("solution has outcome {actual}, listed under {}", point.outcome)));
            }
            solutions.push(topic_of);
        }
        flags.push((point.outcome, point.cap_hit));
    }
    let mut archive = Archive::restore(inst, file.mode, file.cap, solutions)
        .map_err(|source| FormatError::Model { context: "archive".into(), source })?;
    archive.set_cap_flags(&flags);
    Ok(archive)
}

fn one_based_to_zero(row: &[usize], field: &str) -> Result<Vec<usize>, FormatError> {
    row.iter()
        .map(|&j| j.checked_sub(1).ok_or_else(|| FormatError::field(field, "topic numbers start at 1")))
        .collect()
}

pub fn save_archive(archive: &Archive, inst: &Instance, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write(path.as_ref(), &archive_to_string(archive, inst))
}

pub fn load_archive(path: impl AsRef<Path>, inst: &Instance) -> Result<Archive, FormatError> {
    parse_archive(&read(path.as_ref())?, inst)
}

/// One line of an exported final assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentRow {
    pub student: usize,
    pub name: String,
    pub topic: usize,
    pub topic_name: String,
    pub lecturer: String,
}

/// A chosen assignment as handed to students and staff.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub outcome: Outcome,
    /// Student names replaced by their numbers.
    pub anonymized: bool,
    pub topic_of: Vec<usize>,
    pub rows: Vec<AssignmentRow>,
}

pub fn solution_file(inst: &Instance, asg: &Assignment, anonymize: bool) -> Result<SolutionFile, ModelError> {
    let out = outcome(inst, asg)?;
    let rows = (0..inst.n())
        .map(|i| {
            let j = asg.topic(i);
            AssignmentRow {
                student: i + 1,
                name: if anonymize { format!("#{}", i + 1) } else { inst.student_label(i).into_owned() },
                topic: j + 1,
                topic_name: inst.topic_label(j).into_owned(),
                lecturer: inst.staff_label(inst.group_of(j)).into_owned(),
            }
        })
        .collect();
    Ok(SolutionFile {
        format_version: FORMAT_VERSION,
        outcome: out,
        anonymized: anonymize,
        topic_of: asg.one_based(),
        rows,
    })
}

pub fn solution_to_string(inst: &Instance, asg: &Assignment, anonymize: bool) -> Result<String, ModelError> {
    let file = solution_file(inst, asg, anonymize)?;
    let mut text = serde_json::to_string_pretty(&file).expect("solution serializes");
    text.push('\n');
    Ok(text)
}

/// Reads an exported assignment back, checking it against the instance.
pub fn parse_solution(text: &str, inst: &Instance) -> Result<Assignment, FormatError> {
    let file: SolutionFile = serde_json::from_str(text)?;
    check_version(file.format_version)?;
    let topic_of = one_based_to_zero(&file.topic_of, "topic_of")?;
    let asg = Assignment::new(inst, topic_of)
        .map_err(|source| FormatError::Model { context: "topic_of".into(), source })?;
    let actual = outcome(inst, &asg).map_err(|source| FormatError::Model { context: "topic_of".into(), source })?;
    if actual != file.outcome {
        return Err(FormatError::field("utility", format!("file states {}, assignment gives {actual}", file.outcome)));
    }
    if let Some(row) = file.rows.iter().find(|r| file.topic_of.get(r.student.wrapping_sub(1)) != Some(&r.topic)) {
        return Err(FormatError::field("rows", format!("row of student {} disagrees with topic_of", row.student)));
    }
    Ok(asg)
}

pub fn save_solution(inst: &Instance, asg: &Assignment, anonymize: bool, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let text = solution_to_string(inst, asg, anonymize)
        .map_err(|source| FormatError::Model { context: "solution".into(), source })?;
    write(path.as_ref(), &text)
}

pub fn load_solution(path: impl AsRef<Path>, inst: &Instance) -> Result<Assignment, FormatError> {
    parse_solution(&read(path.as_ref())?, inst)
}

pub fn report_to_string(report: &RunReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

pub fn parse_report(text: &str) -> Result<RunReport, FormatError> {
    let report: RunReport = serde_json::from_str(text)?;
    check_version(report.format_version)?;
    Ok(report)
}

pub fn save_report(report: &RunReport, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write(path.as_ref(), &report_to_string(report))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<RunReport, FormatError> {
    parse_report(&read(path.as_ref())?)
}

pub fn oracle_to_string(result: &OracleResult) -> String {
    let mut text = serde_json::to_string_pretty(result).expect("oracle result serializes");
    text.push('\n');
    text
}

/// Plot-ready columns: utility, exact imbalance, decimal imbalance,
/// alternatives, cap flag.
pub fn frontier_table(points: &[AlternativeCount]) -> String {
    let mut out = String::from("utility\timbalance\timbalance_decimal\talternatives\tcap_hit\n");
    for p in points {
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\t{}\n",
            p.outcome.utility,
            p.outcome.imbalance_text(),
            p.outcome.imbalance_f64(),
            p.count,
            p.cap_hit
        ));
    }
    out
}
