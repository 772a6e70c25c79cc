//! Plain-text formats for multigraphs, fit reports, configuration and report
//! tables.
//!
//! Tables are tab-separated with a header row. Lines starting with `#` carry
//! `key=value` metadata or comments and are skipped by table readers. Numbers
//! are written in the shortest form that parses back to the same value, so
//! write-then-read is lossless.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use crate::baselines::DurationRanking;
use crate::error::{Error, Result};
use crate::glba::{
    FitConfig, FitReport, GammaSetting, ModelParams, PriorGradMode, Priors, PsiIndexSet,
};
use crate::ingest::{AgreementMultigraph, Task};
use crate::num::Real;
use crate::scoring::{beta_variance, ImageReport, PrCurve, SubjectReport};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: Real>(field: &str, line: usize) -> Result<T> {
    field
        .trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|_| parse_err(line, format!("`{field}` is not a number")))
}

fn parse_opt<T: Real>(field: &str, line: usize) -> Result<Option<T>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_num(field, line).map(Some)
    }
}

fn parse_usize(field: &str, line: usize) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("`{field}` is not a count")))
}

fn parse_bool(field: &str, line: usize) -> Result<bool> {
    match field.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(parse_err(line, format!("`{other}` is not true/false"))),
    }
}

fn opt_str<T: Real>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains(['\t', '\n', ',', '#']) || id.trim() != id {
        return Err(Error::Invalid(format!(
            "id `{id}` cannot be written to a text table"
        )));
    }
    Ok(())
}

/// A header-checked tab-separated table with `#` metadata lines.
struct Table<'a> {
    meta: BTreeMap<&'a str, &'a str>,
    /// `(1-based line number, fields)`
    rows: Vec<(usize, Vec<&'a str>)>,
}

fn parse_table<'a>(text: &'a str, header: &[&str]) -> Result<Table<'a>> {
    let mut meta = BTreeMap::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(rest) = raw.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.trim(), v.trim());
            }
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if !seen_header {
            if fields != header {
                return Err(parse_err(
                    line,
                    format!("expected header `{}`", header.join("\t")),
                ));
            }
            seen_header = true;
            continue;
        }
        if fields.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        rows.push((line, fields));
    }
    if !seen_header {
        return Err(parse_err(0, "missing header row"));
    }
    Ok(Table { meta, rows })
}

fn meta_value<'a>(t: &Table<'a>, key: &str) -> Result<&'a str> {
    t.meta
        .get(key)
        .copied()
        .ok_or_else(|| parse_err(0, format!("missing `# {key}=` line")))
}

const GRAPH_HEADER: [&str; 3] = ["task_id", "subjects", "indicators"];

/// One row per task: id, comma-separated subjects, then the ordered-pair
/// indicators (`i != j`, row-major) as a string of `0`/`1`.
pub fn format_multigraph(graph: &AgreementMultigraph) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "# dropped_tasks={}", graph.dropped_tasks()).expect("string write");
    writeln!(out, "{}", GRAPH_HEADER.join("\t")).expect("string write");
    for task in graph.tasks() {
        check_id(&task.id)?;
        let subjects: Vec<&str> = task
            .members()
            .iter()
            .map(|&s| graph.subject_ids()[s].as_str())
            .collect();
        for s in &subjects {
            check_id(s)?;
        }
        let bits: String = task
            .flattened()
            .map(|b| if b { '1' } else { '0' })
            .collect();
        writeln!(out, "{}\t{}\t{}", task.id, subjects.join(","), bits).expect("string write");
    }
    Ok(out)
}

/// Inverse of [`format_multigraph`]. Subjects are indexed in ascending id order.
pub fn parse_multigraph(text: &str) -> Result<AgreementMultigraph> {
    let table = parse_table(text, &GRAPH_HEADER)?;
    let mut ids = BTreeSet::new();
    for (_, f) in &table.rows {
        ids.extend(f[1].split(','));
    }
    let subject_ids: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
    let index = |s: &str| {
        subject_ids
            .binary_search_by(|x| x.as_str().cmp(s))
            .expect("collected id")
    };
    let mut tasks = Vec::with_capacity(table.rows.len());
    for (line, f) in &table.rows {
        let members: Vec<usize> = f[1].split(',').map(index).collect();
        let n = members.len();
        if n < 2 {
            return Err(parse_err(*line, "a task needs at least two raters"));
        }
        let bits: Vec<bool> = f[2]
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(parse_err(*line, format!("indicator `{c}` is not 0 or 1"))),
            })
            .collect::<Result<_>>()?;
        if bits.len() != n * (n - 1) {
            return Err(parse_err(
                *line,
                format!("expected {} indicators, found {}", n * (n - 1), bits.len()),
            ));
        }
        let task = Task::new(f[0], members, |i, j| {
            bits[i * (n - 1) + if j < i { j } else { j - 1 }]
        })
        .map_err(|e| parse_err(*line, e.to_string()))?;
        tasks.push(task);
    }
    let mut graph = AgreementMultigraph::new(subject_ids, tasks)?;
    if let Some(d) = table.meta.get("dropped_tasks") {
        graph.set_dropped_tasks(parse_usize(d, 0)?);
    }
    Ok(graph)
}

const FIT_HEADER: [&str; 4] = ["subject_id", "tau", "alpha", "beta"];

/// Metadata lines followed by one `(subject_id, tau, alpha, beta)` row per subject.
pub fn format_fit_report<T: Real>(report: &FitReport<T>) -> Result<String> {
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "# gamma={}", report.params.gamma).expect("string write");
    writeln!(w, "# tau0={}", report.priors.tau0).expect("string write");
    writeln!(w, "# s0={}", report.priors.s0).expect("string write");
    writeln!(w, "# iterations={}", report.iterations).expect("string write");
    writeln!(w, "# converged={}", report.converged).expect("string write");
    writeln!(w, "# rounds={}", report.round_starts.len()).expect("string write");
    writeln!(w, "# gamma_degenerate={}", report.gamma_degenerate).expect("string write");
    let fallback: Vec<&str> = report
        .fallback_subjects
        .iter()
        .map(|&i| report.subject_ids[i].as_str())
        .collect();
    writeln!(w, "# fallback={}", fallback.join(",")).expect("string write");
    writeln!(w, "{}", FIT_HEADER.join("\t")).expect("string write");
    for (i, id) in report.subject_ids.iter().enumerate() {
        check_id(id)?;
        let p = &report.params;
        writeln!(w, "{id}\t{}\t{}\t{}", p.tau[i], p.alpha[i], p.beta[i]).expect("string write");
    }
    Ok(out)
}

/// Inverse of [`format_fit_report`]. The objective trace is not stored, so
/// the returned report has an empty trace.
pub fn parse_fit_report<T: Real>(text: &str) -> Result<FitReport<T>> {
    let table = parse_table(text, &FIT_HEADER)?;
    let mut subject_ids = Vec::with_capacity(table.rows.len());
    let mut params = ModelParams {
        tau: Vec::new(),
        alpha: Vec::new(),
        beta: Vec::new(),
        gamma: parse_num(meta_value(&table, "gamma")?, 0)?,
    };
    for (line, f) in &table.rows {
        subject_ids.push(f[0].to_string());
        params.tau.push(parse_num(f[1], *line)?);
        params.alpha.push(parse_num(f[2], *line)?);
        params.beta.push(parse_num(f[3], *line)?);
    }
    params.validate()?;
    let fallback = meta_value(&table, "fallback")?;
    let fallback_subjects = fallback
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            subject_ids
                .iter()
                .position(|x| x == s)
                .ok_or_else(|| parse_err(0, format!("fallback subject `{s}` has no row")))
        })
        .collect::<Result<_>>()?;
    let rounds = parse_usize(meta_value(&table, "rounds")?, 0)?;
    Ok(FitReport {
        subject_ids,
        params,
        priors: Priors::new(
            parse_num(meta_value(&table, "tau0")?, 0)?,
            parse_num(meta_value(&table, "s0")?, 0)?,
        )?,
        iterations: parse_usize(meta_value(&table, "iterations")?, 0)?,
        converged: parse_bool(meta_value(&table, "converged")?, 0)?,
        loglik_trace: Vec::new(),
        round_starts: vec![0; rounds],
        fallback_subjects,
        gamma_degenerate: parse_bool(meta_value(&table, "gamma_degenerate")?, 0)?,
    })
}

/// `(iteration, round, objective)` rows of a fit's monitored objective.
pub fn format_trace<T: Real>(report: &FitReport<T>) -> String {
    let mut out = String::from("iteration\tround\tobjective\n");
    let mut it = 0;
    for (round, seg) in report.rounds().enumerate() {
        for v in seg {
            it += 1;
            writeln!(out, "{it}\t{round}\t{v}").expect("string write");
        }
    }
    out
}

/// `key = value` lines; `#` starts a comment. Keys must be unique.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        let key = k.trim().to_string();
        if out
            .insert(key.clone(), (line, v.trim().to_string()))
            .is_some()
        {
            return Err(parse_err(line, format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

/// Parses `lo:hi:count`.
pub fn parse_gamma_grid<T: Real>(spec: &str) -> Result<Vec<T>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Invalid(format!("gamma grid `{spec}` is not lo:hi:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || hi < lo {
        return Err(bad());
    }
    Ok(crate::glba::gamma_grid(T::lit(lo), T::lit(hi), count))
}

impl FromStr for PriorGradMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gamma_map" => Ok(PriorGradMode::GammaMap),
            "literal" => Ok(PriorGradMode::Literal),
            other => Err(Error::Invalid(format!("unknown prior_grad_mode `{other}`"))),
        }
    }
}

impl FromStr for PsiIndexSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exclude_self" => Ok(PsiIndexSet::ExcludeSelf),
            "include_self" => Ok(PsiIndexSet::IncludeSelf),
            other => Err(Error::Invalid(format!("unknown psi_index `{other}`"))),
        }
    }
}

fn mode_name(m: PriorGradMode) -> &'static str {
    match m {
        PriorGradMode::GammaMap => "gamma_map",
        PriorGradMode::Literal => "literal",
    }
}

fn psi_name(p: PsiIndexSet) -> &'static str {
    match p {
        PsiIndexSet::ExcludeSelf => "exclude_self",
        PsiIndexSet::IncludeSelf => "include_self",
    }
}

/// Names of the keys [`apply_fit_config`] understands.
pub const FIT_CONFIG_KEYS: [&str; 10] = [
    "gamma",
    "gamma_grid",
    "update_gamma",
    "tol",
    "max_iter",
    "eb_tol",
    "eb_max_rounds",
    "prior_grad_mode",
    "psi_index",
    "seed",
];

/// Applies the fit-configuration keys present in `pairs` to `config`, removing
/// them from the map. Unrelated keys are left in place for the caller.
pub fn apply_fit_config<T: Real>(
    config: &mut FitConfig<T>,
    pairs: &mut BTreeMap<String, (usize, String)>,
) -> Result<()> {
    let wrap = |line: usize| move |e: Error| parse_err(line, e.to_string());
    if pairs.contains_key("gamma") && pairs.contains_key("gamma_grid") {
        return Err(Error::Invalid(
            "set either gamma or gamma_grid, not both".into(),
        ));
    }
    for key in FIT_CONFIG_KEYS {
        let Some((line, v)) = pairs.remove(key) else {
            continue;
        };
        match key {
            "gamma" => config.gamma = GammaSetting::Fixed(parse_num(&v, line)?),
            "gamma_grid" => {
                config.gamma = GammaSetting::Grid(parse_gamma_grid(&v).map_err(wrap(line))?)
            }
            "update_gamma" => config.update_gamma = parse_bool(&v, line)?,
            "tol" => config.tol = parse_num(&v, line)?,
            "max_iter" => config.max_iter = parse_usize(&v, line)?,
            "eb_tol" => config.eb_tol = parse_num(&v, line)?,
            "eb_max_rounds" => config.eb_max_rounds = parse_usize(&v, line)?,
            "prior_grad_mode" => config.prior_grad_mode = v.parse().map_err(wrap(line))?,
            "psi_index" => config.psi_index = v.parse().map_err(wrap(line))?,
            "seed" => {
                config.seed = v
                    .parse()
                    .map_err(|_| parse_err(line, format!("`{v}` is not a seed")))?
            }
            _ => unreachable!(),
        }
    }
    config.validate()
}

/// Parses a configuration file holding only fit keys.
pub fn parse_fit_config<T: Real>(text: &str) -> Result<FitConfig<T>> {
    let mut pairs = parse_key_values(text)?;
    let mut config = FitConfig::default();
    apply_fit_config(&mut config, &mut pairs)?;
    if let Some((key, (line, _))) = pairs.into_iter().next() {
        return Err(parse_err(line, format!("unknown key `{key}`")));
    }
    Ok(config)
}

/// Every field of `config` as `key = value` lines. An evenly spaced grid is
/// written as `gamma_grid = lo:hi:count`; any other grid only as a comment.
pub fn format_fit_config<T: Real>(config: &FitConfig<T>) -> String {
    let mut out = String::new();
    match &config.gamma {
        GammaSetting::Fixed(g) => writeln!(out, "gamma = {g}"),
        GammaSetting::Grid(g) => {
            let (lo, hi) = (g[0], g[g.len() - 1]);
            if crate::glba::gamma_grid(lo, hi, g.len()) == *g {
                writeln!(out, "gamma_grid = {lo}:{hi}:{}", g.len())
            } else {
                let vals: Vec<String> = g.iter().map(|v| v.to_string()).collect();
                writeln!(out, "# gamma_values = {}", vals.join(","))
            }
        }
    }
    .expect("string write");
    writeln!(out, "update_gamma = {}", config.update_gamma).expect("string write");
    writeln!(out, "tol = {}", config.tol).expect("string write");
    writeln!(out, "max_iter = {}", config.max_iter).expect("string write");
    writeln!(out, "eb_tol = {}", config.eb_tol).expect("string write");
    writeln!(out, "eb_max_rounds = {}", config.eb_max_rounds).expect("string write");
    writeln!(
        out,
        "prior_grad_mode = {}",
        mode_name(config.prior_grad_mode)
    )
    .expect("string write");
    writeln!(out, "psi_index = {}", psi_name(config.psi_index)).expect("string write");
    writeln!(out, "seed = {}", config.seed).expect("string write");
    out
}

const SUBJECT_HEADER: [&str; 7] = [
    "method",
    "rank",
    "subject_id",
    "score",
    "alpha",
    "beta",
    "beta_variance",
];

/// One row of a subject ranking table. `score` is `tau_mean` for the model,
/// the confusion-diagonal mean for Dawid-Skene and mean seconds for the
/// duration baseline; the regularity columns are blank for baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRow {
    pub method: String,
    pub rank: usize,
    pub subject_id: String,
    pub score: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub beta_variance: Option<f64>,
}

impl SubjectRow {
    pub fn from_report<T: Real>(method: &str, r: &SubjectReport<T>) -> Self {
        SubjectRow {
            method: method.to_string(),
            rank: r.rank,
            subject_id: r.subject_id.clone(),
            score: r.tau_mean.as_f64(),
            alpha: Some(r.alpha.as_f64()),
            beta: Some(r.beta.as_f64()),
            beta_variance: Some(r.beta_variance.as_f64()),
        }
    }

    /// Rows of an ascending `(id, score)` ranking.
    pub fn from_scores(method: &str, ranked: &[(String, f64)]) -> Vec<Self> {
        ranked
            .iter()
            .enumerate()
            .map(|(i, (id, score))| SubjectRow {
                method: method.to_string(),
                rank: i + 1,
                subject_id: id.clone(),
                score: *score,
                alpha: None,
                beta: None,
                beta_variance: None,
            })
            .collect()
    }

    /// The model report this row encodes, when the regularity columns are set.
    /// The per-`gamma` breakdown is not stored and comes back empty.
    pub fn to_report(&self) -> Option<SubjectReport<f64>> {
        let (alpha, beta) = (self.alpha?, self.beta?);
        Some(SubjectReport {
            subject_id: self.subject_id.clone(),
            tau_mean: self.score,
            tau_by_gamma: Vec::new(),
            alpha,
            beta,
            beta_variance: self
                .beta_variance
                .unwrap_or_else(|| beta_variance(alpha, beta)),
            rank: self.rank,
        })
    }
}

pub fn format_subject_table(rows: &[SubjectRow]) -> Result<String> {
    let mut out = SUBJECT_HEADER.join("\t") + "\n";
    for r in rows {
        check_id(&r.subject_id)?;
        check_id(&r.method)?;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.method,
            r.rank,
            r.subject_id,
            r.score,
            opt_str(r.alpha),
            opt_str(r.beta),
            opt_str(r.beta_variance)
        )
        .expect("string write");
    }
    Ok(out)
}

pub fn parse_subject_table(text: &str) -> Result<Vec<SubjectRow>> {
    parse_table(text, &SUBJECT_HEADER)?
        .rows
        .iter()
        .map(|(line, f)| {
            Ok(SubjectRow {
                method: f[0].to_string(),
                rank: parse_usize(f[1], *line)?,
                subject_id: f[2].to_string(),
                score: parse_num(f[3], *line)?,
                alpha: parse_opt(f[4], *line)?,
                beta: parse_opt(f[5], *line)?,
                beta_variance: parse_opt(f[6], *line)?,
            })
        })
        .collect()
}

/// Duration ranking in the subject-table layout; excluded subjects are listed
/// in a trailing comment.
pub fn format_duration_ranking(ranking: &DurationRanking) -> Result<String> {
    let mut out = format_subject_table(&SubjectRow::from_scores("duration", &ranking.ranked))?;
    writeln!(out, "# excluded={}", ranking.excluded.join(",")).expect("string write");
    Ok(out)
}

const IMAGE_HEADER: [&str; 7] = [
    "task_id",
    "direction",
    "adjusted_score",
    "confidence",
    "weighted_mean",
    "raw_mean",
    "estimated_score",
];

pub fn format_image_table<T: Real>(reports: &[ImageReport<T>]) -> Result<String> {
    let mut out = IMAGE_HEADER.join("\t") + "\n";
    for r in reports {
        check_id(&r.task_id)?;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.task_id,
            r.direction,
            r.adjusted_score,
            r.confidence,
            opt_str(r.weighted_mean),
            r.raw_mean,
            opt_str(r.estimated_score)
        )
        .expect("string write");
    }
    Ok(out)
}

pub fn parse_image_table<T: Real>(text: &str) -> Result<Vec<ImageReport<T>>> {
    parse_table(text, &IMAGE_HEADER)?
        .rows
        .iter()
        .map(|(line, f)| {
            Ok(ImageReport {
                task_id: f[0].to_string(),
                direction: f[1]
                    .parse()
                    .map_err(|e: Error| parse_err(*line, e.to_string()))?,
                adjusted_score: parse_num(f[2], *line)?,
                confidence: parse_num(f[3], *line)?,
                weighted_mean: parse_opt(f[4], *line)?,
                raw_mean: parse_num(f[5], *line)?,
                estimated_score: parse_opt(f[6], *line)?,
            })
        })
        .collect()
}

/// `(k, precision, recall)` rows preceded by `# top_<K>=<precision>` lines.
pub fn format_pr_curve(curve: &PrCurve) -> String {
    let mut out = String::new();
    for (k, p) in &curve.top_k {
        writeln!(out, "# top_{k}={p}").expect("string write");
    }
    out.push_str("k\tprecision\trecall\n");
    for p in &curve.points {
        writeln!(out, "{}\t{}\t{}", p.k, p.precision, p.recall).expect("string write");
    }
    out
}

pub fn format_overhead<T: Real>(curve: &[(T, usize)]) -> String {
    let mut out = String::from("threshold\tlabels_removed\n");
    for (t, n) in curve {
        writeln!(out, "{t}\t{n}").expect("string write");
    }
    out
}

/// One subject id per line; blank lines and `#` comments are skipped.
pub fn parse_id_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Ground-truth parameters in the fit-report row layout, tagged `truth`.
pub fn format_truth<T: Real>(subject_ids: &[String], truth: &ModelParams<T>) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "# source=truth").expect("string write");
    writeln!(out, "# gamma={}", truth.gamma).expect("string write");
    writeln!(out, "{}", FIT_HEADER.join("\t")).expect("string write");
    for (i, id) in subject_ids.iter().enumerate() {
        check_id(id)?;
        writeln!(
            out,
            "{id}\t{}\t{}\t{}",
            truth.tau[i], truth.alpha[i], truth.beta[i]
        )
        .expect("string write");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{Direction, PrPoint};

    fn toy_graph() -> AgreementMultigraph {
        let t1 = Task::new("t1", vec![0, 1, 2], |i, j| (i + j) % 2 == 1).unwrap();
        let t2 = Task::new("t2", vec![1, 3], |i, _| i == 0).unwrap();
        let mut g = AgreementMultigraph::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![t1, t2],
        )
        .unwrap();
        g.set_dropped_tasks(2);
        g
    }

    #[test]
    fn multigraph_round_trip() {
        let g = toy_graph();
        let text = format_multigraph(&g).unwrap();
        assert!(text.contains("t2\tb,d\t10\n"), "{text}");
        assert_eq!(parse_multigraph(&text).unwrap(), g);
    }

    #[test]
    fn multigraph_errors_carry_lines() {
        let bad = "task_id\tsubjects\tindicators\nt1\ta,b\t1\n";
        match parse_multigraph(bad) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse_multigraph("task\tsubjects\n").is_err());
        assert!(parse_multigraph("task_id\tsubjects\tindicators\nt1\tb,a\t10\n").is_err());
    }

    fn fit_report() -> FitReport<f64> {
        FitReport {
            subject_ids: vec!["a".into(), "b".into()],
            params: ModelParams {
                tau: vec![0.1, 0.987_654_321_012_345_6],
                alpha: vec![1.0 / 3.0, 7.25],
                beta: vec![2.0, 1e-6],
                gamma: 0.38,
            },
            priors: Priors { tau0: 0.6, s0: 3.5 },
            iterations: 42,
            converged: true,
            loglik_trace: vec![-3.0, -2.0],
            round_starts: vec![0, 1],
            fallback_subjects: vec![1],
            gamma_degenerate: false,
        }
    }

    #[test]
    fn fit_report_round_trip_is_lossless() {
        let r = fit_report();
        let text = format_fit_report(&r).unwrap();
        let back: FitReport<f64> = parse_fit_report(&text).unwrap();
        assert_eq!(back.params, r.params);
        assert_eq!(back.priors, r.priors);
        assert_eq!(back.iterations, 42);
        assert!(back.converged);
        assert_eq!(back.fallback_subjects, vec![1]);
        assert_eq!(back.round_starts.len(), 2);
        assert_eq!(format_fit_report(&back).unwrap(), text);
    }

    #[test]
    fn trace_rows_follow_rounds() {
        assert_eq!(
            format_trace(&fit_report()),
            "iteration\tround\tobjective\n1\t0\t-3\n2\t1\t-2\n"
        );
    }

    #[test]
    fn config_round_trip_and_errors() {
        let text = "gamma = 0.4\nupdate_gamma = true # learn it\ntol = 1e-8\nmax_iter = 10\n\
                    eb_tol = 0.001\neb_max_rounds = 3\nprior_grad_mode = literal\npsi_index = include_self\nseed = 9\n";
        let c: FitConfig<f64> = parse_fit_config(text).unwrap();
        assert_eq!(c.gamma, GammaSetting::Fixed(0.4));
        assert!(c.update_gamma);
        assert_eq!(c.max_iter, 10);
        assert_eq!(c.prior_grad_mode, PriorGradMode::Literal);
        assert_eq!(c.psi_index, PsiIndexSet::IncludeSelf);
        assert_eq!(c.seed, 9);
        let again: FitConfig<f64> = parse_fit_config(&format_fit_config(&c)).unwrap();
        assert_eq!(again, c);

        let grid: FitConfig<f64> = parse_fit_config("gamma_grid = 0.3:0.48:10").unwrap();
        assert_eq!(grid.gamma.values().len(), 10);
        assert_eq!(
            parse_fit_config::<f64>(&format_fit_config(&grid)).unwrap(),
            grid
        );
        assert!(matches!(
            parse_fit_config::<f64>("tol = 1\nbogus = 2"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_fit_config::<f64>("tol = abc").is_err());
        assert!(parse_fit_config::<f64>("tol = 1\ntol = 2").is_err());
        assert!(parse_fit_config::<f64>("gamma = 0.7").is_err());
        assert!(parse_fit_config::<f64>("gamma = 0.3\ngamma_grid = 0.3:0.4:2").is_err());
    }

    #[test]
    fn subject_and_image_tables_round_trip() {
        let rows = vec![
            SubjectRow {
                method: "glba".into(),
                rank: 1,
                subject_id: "a".into(),
                score: 0.125,
                alpha: Some(2.0),
                beta: Some(3.0),
                beta_variance: Some(beta_variance(2.0, 3.0)),
            },
            SubjectRow::from_scores("dawid-skene", &[("b".into(), 0.5)]).remove(0),
        ];
        let back = parse_subject_table(&format_subject_table(&rows).unwrap()).unwrap();
        assert_eq!(back, rows);
        assert!(back[1].to_report().is_none());
        assert_eq!(back[0].to_report().unwrap().alpha, 2.0);

        let images = vec![ImageReport {
            task_id: "img".into(),
            direction: Direction::Low,
            adjusted_score: 0.0,
            confidence: 0.0,
            weighted_mean: None,
            raw_mean: 4.5,
            estimated_score: None,
        }];
        let text = format_image_table(&images).unwrap();
        assert_eq!(parse_image_table::<f64>(&text).unwrap(), images);
    }

    #[test]
    fn pr_and_overhead_layouts() {
        let curve = PrCurve {
            points: vec![PrPoint {
                k: 1,
                precision: 1.0,
                recall: 0.5,
            }],
            top_k: vec![(1, 1.0)],
        };
        assert_eq!(
            format_pr_curve(&curve),
            "# top_1=1\nk\tprecision\trecall\n1\t1\t0.5\n"
        );
        assert_eq!(
            format_overhead(&[(0.05f64, 3)]),
            "threshold\tlabels_removed\n0.05\t3\n"
        );
        let ids = parse_id_list("a\n# note\n\n b \n");
        assert_eq!(ids.into_iter().collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn ids_with_separators_are_refused() {
        let mut r = fit_report();
        r.subject_ids[0] = "bad\tid".into();
        assert!(format_fit_report(&r).is_err());
    }
}
