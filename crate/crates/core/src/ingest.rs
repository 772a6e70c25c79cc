//! Response tables, percentile agreement and the per-task agreement multigraph.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default percentile-difference threshold for two answers to agree.
pub const DEFAULT_DELTA: f64 = 0.2;
/// Tasks with fewer raters than this are screened out.
pub const DEFAULT_MIN_RATERS: usize = 4;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    Valence,
    Arousal,
    Dominance,
    Likeness,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Valence,
        Dimension::Arousal,
        Dimension::Dominance,
        Dimension::Likeness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Valence => "valence",
            Dimension::Arousal => "arousal",
            Dimension::Dominance => "dominance",
            Dimension::Likeness => "likeness",
        }
    }

    /// Inclusive rating range.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Dimension::Likeness => (1.0, 7.0),
            _ => (1.0, 9.0),
        }
    }

    /// Scale midpoint used as the neutral score.
    pub fn neutral(self) -> f64 {
        let (lo, hi) = self.bounds();
        0.5 * (lo + hi)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Invalid(format!("unknown dimension `{s}`")))
    }
}

/// One subject's answer for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub subject: String,
    pub task: String,
    pub scores: [Option<f64>; 4],
    pub view_seconds: Option<f64>,
    pub label_seconds: Option<f64>,
}

impl Response {
    pub fn new(subject: impl Into<String>, task: impl Into<String>) -> Self {
        Response {
            subject: subject.into(),
            task: task.into(),
            scores: [None; 4],
            view_seconds: None,
            label_seconds: None,
        }
    }

    pub fn with_score(mut self, dim: Dimension, value: f64) -> Self {
        self.scores[dim.index()] = Some(value);
        self
    }

    pub fn with_timing(mut self, view: Option<f64>, label: Option<f64>) -> Self {
        self.view_seconds = view;
        self.label_seconds = label;
        self
    }

    pub fn score(&self, dim: Dimension) -> Option<f64> {
        self.scores[dim.index()]
    }
}

/// Validated collection of responses: at most one row per (subject, task),
/// every rating inside its dimension's range.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResponseTable {
    rows: Vec<Response>,
}

impl ResponseTable {
    /// Validates `rows`. Errors report 1-based row positions.
    pub fn new(rows: Vec<Response>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            validate_row(r, i + 1)?;
            if !seen.insert((r.subject.as_str(), r.task.as_str())) {
                return Err(Error::DuplicateRow {
                    row: i + 1,
                    subject: r.subject.clone(),
                    task: r.task.clone(),
                });
            }
        }
        Ok(ResponseTable { rows })
    }

    pub fn rows(&self) -> &[Response] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn into_rows(self) -> Vec<Response> {
        self.rows
    }

    /// `(subject, task, rating)` for rows that carry `dim`.
    pub fn ratings(&self, dim: Dimension) -> impl Iterator<Item = (&str, &str, f64)> {
        self.rows.iter().filter_map(move |r| {
            r.score(dim)
                .map(|v| (r.subject.as_str(), r.task.as_str(), v))
        })
    }
}

fn validate_row(r: &Response, row: usize) -> Result<()> {
    if r.subject.is_empty() || r.task.is_empty() {
        return Err(Error::row(row, "empty subject or task id"));
    }
    for dim in Dimension::ALL {
        if let Some(v) = r.score(dim) {
            let (lo, hi) = dim.bounds();
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::row(row, format!("{dim} = {v} outside [{lo}, {hi}]")));
            }
        }
    }
    for (name, v) in [
        ("view_seconds", r.view_seconds),
        ("label_seconds", r.label_seconds),
    ] {
        if let Some(v) = v {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::row(row, format!("{name} = {v} must be nonnegative")));
            }
        }
    }
    Ok(())
}

/// Header names for each logical column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub subject: String,
    pub task: String,
    pub dimensions: [String; 4],
    pub view_seconds: String,
    pub label_seconds: String,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            subject: "subject_id".into(),
            task: "task_id".into(),
            dimensions: Dimension::ALL.map(|d| d.name().to_string()),
            view_seconds: "view_seconds".into(),
            label_seconds: "label_seconds".into(),
        }
    }
}

pub fn load_responses(path: impl AsRef<Path>, schema: &Schema) -> Result<ResponseTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_responses(file, schema)
}

/// Parses comma-separated responses with a header row. Row numbers in errors
/// are file line numbers (the header is line 1).
pub fn read_responses<R: Read>(reader: R, schema: &Schema) -> Result<ResponseTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| col(name).ok_or_else(|| Error::MissingColumn(name.to_string()));
    let subject_col = require(&schema.subject)?;
    let task_col = require(&schema.task)?;
    let mut dim_cols = [0usize; 4];
    for (slot, name) in dim_cols.iter_mut().zip(&schema.dimensions) {
        *slot = require(name)?;
    }
    let view_col = col(&schema.view_seconds);
    let label_col = col(&schema.label_seconds);

    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(rows.len() + 2, |p| p.line() as usize);
        let field = |c: usize| rec.get(c).unwrap_or("");
        let number = |c: usize, name: &str| -> Result<Option<f64>> {
            let s = field(c);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| Error::row(line, format!("{name}: cannot parse `{s}` as a number")))
        };
        let mut resp = Response::new(field(subject_col), field(task_col));
        for (dim, &c) in Dimension::ALL.iter().zip(&dim_cols) {
            resp.scores[dim.index()] = number(c, dim.name())?;
        }
        resp.view_seconds = match view_col {
            Some(c) => number(c, &schema.view_seconds)?,
            None => None,
        };
        resp.label_seconds = match label_col {
            Some(c) => number(c, &schema.label_seconds)?,
            None => None,
        };
        rows.push(resp);
        lines.push(line);
    }
    ResponseTable::new(rows).map_err(|e| match e {
        Error::Row { row, msg } => Error::Row {
            row: lines[row - 1],
            msg,
        },
        Error::DuplicateRow { row, subject, task } => Error::DuplicateRow {
            row: lines[row - 1],
            subject,
            task,
        },
        other => other,
    })
}

/// Writes a table in the same layout `read_responses` accepts.
pub fn write_responses<W: Write>(table: &ResponseTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let schema = Schema::default();
    let mut header = vec![schema.subject.as_str(), schema.task.as_str()];
    header.extend(schema.dimensions.iter().map(String::as_str));
    header.push(&schema.view_seconds);
    header.push(&schema.label_seconds);
    w.write_record(&header)?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &table.rows {
        let mut rec = vec![r.subject.clone(), r.task.clone()];
        rec.extend(r.scores.iter().map(|&s| fmt(s)));
        rec.push(fmt(r.view_seconds));
        rec.push(fmt(r.label_seconds));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

/// Empirical cumulative distribution of a rating pool over a discrete scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PercentileTable {
    support: Vec<f64>,
    cdf: Vec<f64>,
}

impl PercentileTable {
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    fn position(&self, value: f64) -> Result<usize> {
        let i = self.support.partition_point(|&s| s < value - EPS);
        match self.support.get(i) {
            Some(&s) if (s - value).abs() <= EPS => Ok(i),
            _ => Err(Error::OffScale(value)),
        }
    }

    /// `P[value]`: fraction of the pool at or below `value`.
    pub fn at(&self, value: f64) -> Result<f64> {
        Ok(self.cdf[self.position(value)?])
    }

    /// `P[value + 1]`: the cdf at the next scale value, 1 past the top.
    pub fn at_successor(&self, value: f64) -> Result<f64> {
        let i = self.position(value)?;
        Ok(self.cdf.get(i + 1).copied().unwrap_or(1.0))
    }
}

/// Builds the inclusive cdf (`fraction of pool <= v`) of `values` over `scale`.
pub fn percentile_table(values: &[f64], scale: &[f64]) -> Result<PercentileTable> {
    if values.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut support: Vec<f64> = scale.to_vec();
    support.sort_by(f64::total_cmp);
    support.dedup_by(|a, b| (*a - *b).abs() <= EPS);
    if support.is_empty() {
        return Err(Error::Invalid("empty rating scale".into()));
    }
    let mut counts = vec![0usize; support.len()];
    let probe = PercentileTable {
        support,
        cdf: Vec::new(),
    };
    for &v in values {
        counts[probe.position(v)?] += 1;
    }
    let total = values.len() as f64;
    let mut running = 0usize;
    let cdf = counts
        .iter()
        .map(|&c| {
            running += c;
            running as f64 / total
        })
        .collect();
    Ok(PercentileTable {
        support: probe.support,
        cdf,
    })
}

/// Percentile agreement between two answers:
/// `|P[a]-P[b]|/2 + |P[a+1]-P[b+1]|/2 <= delta`.
pub fn agree(a: f64, b: f64, table: &PercentileTable, delta: f64) -> Result<bool> {
    Ok(percentile_gap(a, b, table)? <= delta + 1e-12)
}

/// The left-hand side of the agreement rule.
pub fn percentile_gap(a: f64, b: f64, table: &PercentileTable) -> Result<f64> {
    let here = (table.at(a)? - table.at(b)?).abs();
    let next = (table.at_successor(a)? - table.at_successor(b)?).abs();
    Ok(0.5 * here + 0.5 * next)
}

/// Ratings are binned to one decimal place.
pub fn bin_rating(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Discrete scale for a dimension: the integer points of its range when every
/// observed value is integral, otherwise the distinct observed 0.1 bins.
pub fn rating_scale(dim: Dimension, observed: &[f64]) -> Vec<f64> {
    if observed.iter().all(|v| v.fract() == 0.0) {
        let (lo, hi) = dim.bounds();
        (lo as i64..=hi as i64).map(|v| v as f64).collect()
    } else {
        let mut bins: Vec<f64> = observed.iter().map(|&v| bin_rating(v)).collect();
        bins.sort_by(f64::total_cmp);
        bins.dedup();
        bins
    }
}

/// One task's raters and their ordered-pair agreement indicators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub id: String,
    /// Subject indices, ascending.
    members: Vec<usize>,
    /// Row-major `len x len`; the diagonal is unused and kept `false`.
    indicators: Vec<bool>,
}

impl Task {
    /// `indicator(i, j)` is `I_{members[i], members[j]}`. Members must be strictly ascending.
    pub fn new(
        id: impl Into<String>,
        members: Vec<usize>,
        mut indicator: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let id = id.into();
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(format!(
                "task `{id}`: members must be strictly ascending"
            )));
        }
        let n = members.len();
        let mut indicators = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    indicators[i * n + j] = indicator(i, j);
                }
            }
        }
        Ok(Task {
            id,
            members,
            indicators,
        })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Position of a subject within this task.
    pub fn position(&self, subject: usize) -> Option<usize> {
        self.members.binary_search(&subject).ok()
    }

    /// `I_{i,j}` by member position.
    #[inline]
    pub fn indicator(&self, i: usize, j: usize) -> bool {
        self.indicators[i * self.members.len() + j]
    }

    /// Indicators over ordered pairs `i != j`, row-major.
    pub fn flattened(&self) -> impl Iterator<Item = bool> + '_ {
        let n = self.members.len();
        (0..n).flat_map(move |i| {
            (0..n)
                .filter(move |&j| j != i)
                .map(move |j| self.indicator(i, j))
        })
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..i).all(|j| self.indicator(i, j) == self.indicator(j, i)))
    }
}

/// Per-task directed agreement graphs over a shared subject index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementMultigraph {
    subject_ids: Vec<String>,
    tasks: Vec<Task>,
    /// For each subject, `(task index, position in task)` ascending by task.
    subject_tasks: Vec<Vec<(usize, usize)>>,
    dropped_tasks: usize,
}

impl AgreementMultigraph {
    pub fn new(subject_ids: Vec<String>, tasks: Vec<Task>) -> Result<Self> {
        let m = subject_ids.len();
        let mut subject_tasks = vec![Vec::new(); m];
        for (k, task) in tasks.iter().enumerate() {
            for (pos, &s) in task.members.iter().enumerate() {
                if s >= m {
                    return Err(Error::Invalid(format!(
                        "task `{}` references subject {s} of {m}",
                        task.id
                    )));
                }
                subject_tasks[s].push((k, pos));
            }
        }
        Ok(AgreementMultigraph {
            subject_ids,
            tasks,
            subject_tasks,
            dropped_tasks: 0,
        })
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    /// `Δ_i` as `(task index, position in task)` pairs.
    pub fn subject_tasks(&self, subject: usize) -> &[(usize, usize)] {
        &self.subject_tasks[subject]
    }

    pub fn subject_index(&self, id: &str) -> Option<usize> {
        self.subject_ids.iter().position(|s| s == id)
    }

    /// Number of subjects.
    pub fn m(&self) -> usize {
        self.subject_ids.len()
    }

    /// Number of tasks.
    pub fn n(&self) -> usize {
        self.tasks.len()
    }

    /// Number of ordered pairs carrying an indicator.
    pub fn edge_count(&self) -> usize {
        self.tasks.iter().map(|t| t.len() * (t.len() - 1)).sum()
    }

    pub fn agreeing_edges(&self) -> usize {
        self.tasks
            .iter()
            .map(|t| t.flattened().filter(|&b| b).count())
            .sum()
    }

    /// Tasks removed by rater-count screening while building.
    pub fn dropped_tasks(&self) -> usize {
        self.dropped_tasks
    }

    pub(crate) fn set_dropped_tasks(&mut self, n: usize) {
        self.dropped_tasks = n;
    }
}

/// Builds the agreement multigraph of one dimension. The percentile pool is
/// every rating of `dim` in the table; tasks with fewer than `min_raters`
/// responses are then dropped.
pub fn build_multigraph(
    table: &ResponseTable,
    dim: Dimension,
    delta: f64,
    min_raters: usize,
) -> Result<AgreementMultigraph> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Invalid(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let pool: Vec<f64> = table.ratings(dim).map(|(_, _, v)| v).collect();
    if pool.is_empty() {
        return Err(Error::NoTasks(min_raters));
    }
    let scale = rating_scale(dim, &pool);
    let binned: Vec<f64> = pool.iter().map(|&v| bin_rating(v)).collect();
    let percentiles = percentile_table(&binned, &scale)?;

    let mut by_task: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    for (s, t, v) in table.ratings(dim) {
        by_task.entry(t).or_default().push((s, bin_rating(v)));
    }
    let total_tasks = by_task.len();
    by_task.retain(|_, raters| raters.len() >= min_raters.max(2));
    if by_task.is_empty() {
        return Err(Error::NoTasks(min_raters));
    }
    let subjects: BTreeSet<&str> = by_task.values().flatten().map(|&(s, _)| s).collect();
    let subject_ids: Vec<String> = subjects.iter().map(|s| s.to_string()).collect();
    let index = |s: &str| {
        subject_ids
            .binary_search_by(|x| x.as_str().cmp(s))
            .expect("known subject")
    };

    let mut tasks = Vec::with_capacity(by_task.len());
    for (task_id, mut raters) in by_task {
        raters.sort_by(|a, b| a.0.cmp(b.0));
        let members = raters.iter().map(|&(s, _)| index(s)).collect();
        let mut err = None;
        let task = Task::new(task_id, members, |i, j| {
            agree(raters[i].1, raters[j].1, &percentiles, delta).unwrap_or_else(|e| {
                err.get_or_insert(e);
                false
            })
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        tasks.push(task);
    }
    let mut graph = AgreementMultigraph::new(subject_ids, tasks)?;
    graph.set_dropped_tasks(total_tasks - graph.n());
    Ok(graph)
}

fn population_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// Mean within-task variance over tasks with at least two ratings, divided by
/// the variance of all ratings pooled. Both use population variance.
pub fn variance_ratio(table: &ResponseTable, dim: Dimension) -> Result<f64> {
    let mut by_task: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut pooled = Vec::new();
    for (_, t, v) in table.ratings(dim) {
        by_task.entry(t).or_default().push(v);
        pooled.push(v);
    }
    let within: Vec<f64> = by_task
        .values()
        .filter(|r| r.len() >= 2)
        .map(|r| population_variance(r))
        .collect();
    if within.is_empty() {
        return Err(Error::Degenerate("no task has two or more ratings".into()));
    }
    let cross = population_variance(&pooled);
    if cross <= 0.0 {
        return Err(Error::Degenerate("all ratings are identical".into()));
    }
    Ok(within.iter().sum::<f64>() / within.len() as f64 / cross)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scale9() -> Vec<f64> {
        (1..=9).map(f64::from).collect()
    }

    fn table(rows: &[(&str, &str, f64)]) -> ResponseTable {
        ResponseTable::new(
            rows.iter()
                .map(|&(s, t, v)| Response::new(s, t).with_score(Dimension::Valence, v))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn reads_well_formed_csv() {
        let csv =
            "subject_id,task_id,valence,arousal,dominance,likeness,view_seconds,label_seconds\n\
                   s1,t1,5,3,4,2,1.5,2\n\
                   s2,t1,6,,4,7,,\n\
                   s1,t2,9,1,1,1,3,4\n";
        let t = read_responses(csv.as_bytes(), &Schema::default()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.rows()[1].score(Dimension::Arousal), None);
        assert_eq!(t.rows()[1].score(Dimension::Likeness), Some(7.0));
        assert_eq!(t.rows()[0].view_seconds, Some(1.5));
    }

    #[test]
    fn timing_columns_are_optional() {
        let csv = "subject_id,task_id,valence,arousal,dominance,likeness\ns1,t1,5,3,4,2\n";
        let t = read_responses(csv.as_bytes(), &Schema::default()).unwrap();
        assert_eq!(t.rows()[0].view_seconds, None);
    }

    #[test]
    fn rejects_out_of_range_rating_with_row() {
        let csv = "subject_id,task_id,valence,arousal,dominance,likeness\ns1,t1,5,3,4,2\ns2,t1,12,3,4,2\n";
        match read_responses(csv.as_bytes(), &Schema::default()) {
            Err(Error::Row { row, msg }) => {
                assert_eq!(row, 3);
                assert!(msg.contains("valence"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let csv = "subject_id,task_id,valence,arousal,dominance,likeness\ns1,t1,5,3,4,8\n";
        assert!(matches!(
            read_responses(csv.as_bytes(), &Schema::default()),
            Err(Error::Row { row: 2, .. })
        ));
    }

    #[test]
    fn rejects_duplicates_missing_columns_and_garbage() {
        let csv =
            "subject_id,task_id,valence,arousal,dominance,likeness\ns1,t1,5,3,4,2\ns1,t1,6,3,4,2\n";
        assert!(matches!(
            read_responses(csv.as_bytes(), &Schema::default()),
            Err(Error::DuplicateRow { row: 3, .. })
        ));
        let csv = "subject_id,task_id,valence,arousal,dominance\ns1,t1,5,3,4\n";
        assert!(matches!(
            read_responses(csv.as_bytes(), &Schema::default()),
            Err(Error::MissingColumn(c)) if c == "likeness"
        ));
        let csv = "subject_id,task_id,valence,arousal,dominance,likeness\ns1,t1,five,3,4,2\n";
        assert!(matches!(
            read_responses(csv.as_bytes(), &Schema::default()),
            Err(Error::Row { row: 2, .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let t = ResponseTable::new(vec![
            Response::new("a", "x")
                .with_score(Dimension::Valence, 2.5)
                .with_timing(Some(1.0), None),
            Response::new("b", "x").with_score(Dimension::Likeness, 7.0),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_responses(&t, &mut buf).unwrap();
        assert_eq!(
            read_responses(buf.as_slice(), &Schema::default()).unwrap(),
            t
        );
    }

    #[test]
    fn percentile_examples() {
        let t = percentile_table(&[5.0; 4], &scale9()).unwrap();
        assert_eq!(t.at(5.0).unwrap(), 1.0);
        assert_eq!(t.at(4.0).unwrap(), 0.0);

        let t = percentile_table(&[1., 1., 2., 2., 3., 3., 4., 4.], &scale9()).unwrap();
        assert_eq!(t.at(2.0).unwrap(), 0.5);

        let t = percentile_table(&scale9(), &scale9()).unwrap();
        for k in 1..=9 {
            assert!((t.at(k as f64).unwrap() - k as f64 / 9.0).abs() < 1e-15);
        }
        assert_eq!(t.at_successor(9.0).unwrap(), 1.0);
        assert!(matches!(
            percentile_table(&[], &scale9()),
            Err(Error::EmptyPool)
        ));
        assert!(matches!(
            percentile_table(&[10.0], &scale9()),
            Err(Error::OffScale(_))
        ));
    }

    #[test]
    fn agreement_examples() {
        let t = percentile_table(&[1., 2., 2., 5., 9.], &scale9()).unwrap();
        for a in scale9() {
            assert!(agree(a, a, &t, 1e-9).unwrap());
        }
        let mut pool = vec![1.0; 10];
        pool.extend([9.0; 10]);
        let t = percentile_table(&pool, &scale9()).unwrap();
        assert!((percentile_gap(1.0, 9.0, &t).unwrap() - 0.5).abs() < 1e-15);
        assert!(!agree(1.0, 9.0, &t, DEFAULT_DELTA).unwrap());
        assert!(agree(1.0, 9.0, &t, 0.5).unwrap());
        assert!(agree(1.0, 10.0, &t, 0.2).is_err());
    }

    #[test]
    fn agreement_is_symmetric_on_full_grid() {
        let pool = [1., 1., 2., 3., 3., 3., 4., 5., 5., 6., 7., 7., 8., 9.];
        let t = percentile_table(&pool, &scale9()).unwrap();
        for &d in &[0.05, 0.1, 0.2, 0.35] {
            for a in scale9() {
                for b in scale9() {
                    assert_eq!(agree(a, b, &t, d).unwrap(), agree(b, a, &t, d).unwrap());
                }
            }
        }
    }

    #[test]
    fn multigraph_identical_pair_and_screening() {
        let t = table(&[("a", "t1", 5.0), ("b", "t1", 5.0)]);
        let g = build_multigraph(&t, Dimension::Valence, 0.2, 2).unwrap();
        assert_eq!(g.n(), 1);
        let task = &g.tasks()[0];
        assert!(task.indicator(0, 1) && task.indicator(1, 0));

        let t = table(&[
            ("a", "t1", 5.0),
            ("b", "t1", 5.0),
            ("c", "t1", 6.0),
            ("a", "t2", 5.0),
            ("b", "t2", 2.0),
            ("c", "t2", 6.0),
            ("d", "t2", 7.0),
        ]);
        let g = build_multigraph(&t, Dimension::Valence, 0.2, 4).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.tasks()[0].id, "t2");
        assert_eq!(g.dropped_tasks(), 1);
        assert_eq!(g.m(), 4);
        assert!(matches!(
            build_multigraph(&t, Dimension::Valence, 0.2, 5),
            Err(Error::NoTasks(5))
        ));
        assert!(matches!(
            build_multigraph(&t, Dimension::Arousal, 0.2, 2),
            Err(Error::NoTasks(_))
        ));
    }

    #[test]
    fn multigraph_matches_pairwise_agree() {
        let rows = [
            ("s1", 1.0),
            ("s2", 3.0),
            ("s3", 4.0),
            ("s4", 4.0),
            ("s5", 8.0),
        ];
        let mut all: Vec<(&str, &str, f64)> = rows.iter().map(|&(s, v)| (s, "k", v)).collect();
        all.extend([
            ("s1", "other", 2.0),
            ("s2", "other", 9.0),
            ("s6", "other", 5.0),
        ]);
        let t = table(&all);
        let g = build_multigraph(&t, Dimension::Valence, 0.2, 4).unwrap();
        let pool: Vec<f64> = all.iter().map(|r| r.2).collect();
        let pct = percentile_table(&pool, &scale9()).unwrap();
        let task = &g.tasks()[0];
        assert_eq!(task.len(), 5);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(
                        task.indicator(i, j),
                        agree(rows[i].1, rows[j].1, &pct, 0.2).unwrap()
                    );
                }
            }
        }
        assert_eq!(g.edge_count(), 20);
        assert!(task.is_symmetric());
    }

    #[test]
    fn continuous_ratings_use_observed_bins() {
        let scale = rating_scale(Dimension::Valence, &[2.34, 5.0, 2.31]);
        assert_eq!(scale, vec![2.3, 5.0]);
        assert_eq!(rating_scale(Dimension::Likeness, &[3.0, 4.0]).len(), 7);
    }

    #[test]
    fn variance_ratio_examples() {
        let t = table(&[
            ("a", "t1", 1.0),
            ("b", "t1", 3.0),
            ("a", "t2", 5.0),
            ("b", "t2", 7.0),
        ]);
        assert!((variance_ratio(&t, Dimension::Valence).unwrap() - 0.2).abs() < 1e-15);
        let t = table(&[
            ("a", "t1", 2.0),
            ("b", "t1", 2.0),
            ("a", "t2", 6.0),
            ("b", "t2", 6.0),
        ]);
        assert_eq!(variance_ratio(&t, Dimension::Valence).unwrap(), 0.0);
        let t = table(&[("a", "t1", 4.0), ("b", "t1", 4.0), ("a", "t2", 4.0)]);
        assert!(matches!(
            variance_ratio(&t, Dimension::Valence),
            Err(Error::Degenerate(_))
        ));
    }

    proptest! {
        #[test]
        fn agreement_is_monotone_in_delta(
            pool in prop::collection::vec(1u8..=9, 1..60),
            a in 1u8..=9, b in 1u8..=9,
            d1 in 0.01f64..0.99, d2 in 0.01f64..0.99,
        ) {
            let pool: Vec<f64> = pool.into_iter().map(f64::from).collect();
            let t = percentile_table(&pool, &scale9()).unwrap();
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            if agree(a as f64, b as f64, &t, lo).unwrap() {
                prop_assert!(agree(a as f64, b as f64, &t, hi).unwrap());
            }
        }

        #[test]
        fn cdf_is_invariant_under_pool_duplication(pool in prop::collection::vec(1u8..=9, 1..60)) {
            let pool: Vec<f64> = pool.into_iter().map(f64::from).collect();
            let twice: Vec<f64> = pool.iter().chain(pool.iter()).copied().collect();
            let a = percentile_table(&pool, &scale9()).unwrap();
            let b = percentile_table(&twice, &scale9()).unwrap();
            for (x, y) in a.cdf().iter().zip(b.cdf()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!(a.cdf().windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*a.cdf().last().unwrap(), 1.0);
        }

        #[test]
        fn shifting_every_rating_keeps_agreement(
            pool in prop::collection::vec(1u8..=9, 1..60),
            a in 1u8..=9, b in 1u8..=9, shift in -20i32..20,
        ) {
            let pool: Vec<f64> = pool.into_iter().map(f64::from).collect();
            let s = shift as f64;
            let shifted_pool: Vec<f64> = pool.iter().map(|v| v + s).collect();
            let shifted_scale: Vec<f64> = scale9().iter().map(|v| v + s).collect();
            let t = percentile_table(&pool, &scale9()).unwrap();
            let u = percentile_table(&shifted_pool, &shifted_scale).unwrap();
            prop_assert_eq!(
                agree(a as f64, b as f64, &t, 0.2).unwrap(),
                agree(a as f64 + s, b as f64 + s, &u, 0.2).unwrap()
            );
        }

        #[test]
        fn every_task_has_all_ordered_pairs(
            ratings in prop::collection::vec((0usize..12, 0usize..6, 1u8..=9), 1..80)
        ) {
            let mut seen = HashSet::new();
            let rows: Vec<Response> = ratings
                .into_iter()
                .filter(|&(s, t, _)| seen.insert((s, t)))
                .map(|(s, t, v)| Response::new(format!("s{s:02}"), format!("t{t}")).with_score(Dimension::Valence, v as f64))
                .collect();
            let table = ResponseTable::new(rows).unwrap();
            if let Ok(g) = build_multigraph(&table, Dimension::Valence, 0.2, 2) {
                for task in g.tasks() {
                    prop_assert_eq!(task.flattened().count(), task.len() * (task.len() - 1));
                    prop_assert!(task.is_symmetric());
                    prop_assert!(task.len() >= 2);
                }
            }
        }
    }
}
