//! Comparison methods: Dawid-Skene EM over three-way labels and ranking by
//! mean response time.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{Dimension, ResponseTable};
use crate::num::Real;

/// Additive smoothing on confusion-row counts.
pub const CONFUSION_SMOOTHING: f64 = 0.01;
/// Margin around the neutral score used when thresholding ratings.
pub const DEFAULT_MARGIN: f64 = 0.5;

const K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Low = 0,
    Neutral = 1,
    High = 2,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Low, Category::Neutral, Category::High];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Low => "low",
            Category::Neutral => "neutral",
            Category::High => "high",
        })
    }
}

/// High above `neutral + margin`, low below `neutral - margin`, neutral otherwise.
pub fn categorize(score: f64, neutral: f64, margin: f64) -> Category {
    if score > neutral + margin {
        Category::High
    } else if score < neutral - margin {
        Category::Low
    } else {
        Category::Neutral
    }
}

/// Categorical labels indexed by subject and task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalTable {
    subject_ids: Vec<String>,
    task_ids: Vec<String>,
    /// `(subject index, task index, category)`, sorted by task then subject.
    labels: Vec<(usize, usize, Category)>,
}

impl CategoricalTable {
    pub fn new(rows: impl IntoIterator<Item = (String, String, Category)>) -> Result<Self> {
        let rows: Vec<_> = rows.into_iter().collect();
        let mut subject_ids: Vec<String> = rows.iter().map(|r| r.0.clone()).collect();
        let mut task_ids: Vec<String> = rows.iter().map(|r| r.1.clone()).collect();
        subject_ids.sort();
        subject_ids.dedup();
        task_ids.sort();
        task_ids.dedup();
        let find = |ids: &[String], x: &str| {
            ids.binary_search_by(|s| s.as_str().cmp(x))
                .expect("collected id")
        };
        let mut labels: Vec<_> = rows
            .iter()
            .map(|(s, t, c)| (find(&subject_ids, s), find(&task_ids, t), *c))
            .collect();
        labels.sort_by_key(|&(s, t, _)| (t, s));
        if let Some(w) = labels
            .windows(2)
            .find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1)
        {
            return Err(Error::Invalid(format!(
                "subject `{}` labels task `{}` twice",
                subject_ids[w[0].0], task_ids[w[0].1]
            )));
        }
        Ok(CategoricalTable {
            subject_ids,
            task_ids,
            labels,
        })
    }

    /// Thresholds every rating of `dim` around the dimension's neutral score.
    pub fn from_responses(table: &ResponseTable, dim: Dimension, margin: f64) -> Result<Self> {
        Self::new(table.ratings(dim).map(|(s, t, v)| {
            (
                s.to_string(),
                t.to_string(),
                categorize(v, dim.neutral(), margin),
            )
        }))
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn task_ids(&self) -> &[String] {
        &self.task_ids
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `(subject_id, task_id, category)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (&str, &str, Category)> {
        self.labels
            .iter()
            .map(|&(s, t, c)| (self.subject_ids[s].as_str(), self.task_ids[t].as_str(), c))
    }
}

type Matrix<T> = [[T; K]; K];

#[derive(Debug, Clone, PartialEq)]
pub struct DawidSkeneModel<T> {
    pub subject_ids: Vec<String>,
    pub task_ids: Vec<String>,
    pub class_prior: [T; K],
    /// Per subject, row `c` is the label distribution given true class `c`.
    pub confusion: Vec<Matrix<T>>,
    pub task_posterior: Vec<[T; K]>,
    pub iterations: usize,
    pub converged: bool,
    /// Observed-data log posterior (log-likelihood plus the log density of the
    /// smoothing prior on confusion rows) after every iteration.
    pub loglik_trace: Vec<T>,
}

impl<T: Real> DawidSkeneModel<T> {
    /// Mean of the confusion diagonal per subject; low values suggest spamming.
    pub fn diagonal_means(&self) -> Vec<T> {
        self.confusion
            .iter()
            .map(|m| (0..K).map(|c| m[c][c]).sum::<T>() / T::from_count(K))
            .collect()
    }

    /// Subjects with their diagonal mean, ascending, ties broken by id.
    pub fn spammer_ranking(&self) -> Vec<(String, T)> {
        let mut out: Vec<(String, T)> = self
            .subject_ids
            .iter()
            .cloned()
            .zip(self.diagonal_means())
            .collect();
        out.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .expect("finite")
                .then_with(|| a.0.cmp(&b.0))
        });
        out
    }
}

/// Per-task label lists as `(subject index, category index)`.
fn by_task(table: &CategoricalTable) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new(); table.task_ids.len()];
    for &(s, t, c) in &table.labels {
        out[t].push((s, c.index()));
    }
    out
}

fn majority_vote<T: Real>(labels: &[(usize, usize)]) -> [T; K] {
    let mut votes = [0usize; K];
    for &(_, c) in labels {
        votes[c] += 1;
    }
    let top = *votes.iter().max().expect("three classes");
    let winners = votes.iter().filter(|&&v| v == top).count();
    let mut post = [T::zero(); K];
    for c in 0..K {
        if votes[c] == top {
            post[c] = T::one() / T::from_count(winners);
        }
    }
    post
}

/// Class prior and smoothed confusion rows from task posteriors.
fn m_step<T: Real>(
    tasks: &[Vec<(usize, usize)>],
    subject_labels: &[Vec<(usize, usize)>],
    posterior: &[[T; K]],
) -> ([T; K], Vec<Matrix<T>>) {
    let mut prior = [T::zero(); K];
    for p in posterior {
        for c in 0..K {
            prior[c] = prior[c] + p[c];
        }
    }
    let n = T::from_count(tasks.len());
    for v in prior.iter_mut() {
        *v = *v / n;
    }
    let smooth = T::lit(CONFUSION_SMOOTHING);
    let confusion = subject_labels
        .par_iter()
        .map(|labels| {
            let mut m = [[smooth; K]; K];
            for &(task, l) in labels {
                for (c, row) in m.iter_mut().enumerate() {
                    row[l] = row[l] + posterior[task][c];
                }
            }
            for row in m.iter_mut() {
                let total: T = row.iter().copied().sum();
                for v in row.iter_mut() {
                    *v = *v / total;
                }
            }
            m
        })
        .collect();
    (prior, confusion)
}

/// Task posteriors and each task's log marginal likelihood.
fn e_step<T: Real>(
    tasks: &[Vec<(usize, usize)>],
    prior: &[T; K],
    confusion: &[Matrix<T>],
) -> Vec<([T; K], T)> {
    tasks
        .par_iter()
        .map(|labels| {
            let mut log = [T::zero(); K];
            for c in 0..K {
                log[c] = prior[c].ln()
                    + labels
                        .iter()
                        .map(|&(s, l)| confusion[s][c][l].ln())
                        .sum::<T>();
            }
            let top = log.iter().copied().fold(T::neg_infinity(), T::max);
            let mut post = [T::zero(); K];
            let mut total = T::zero();
            for c in 0..K {
                post[c] = (log[c] - top).exp();
                total = total + post[c];
            }
            for v in post.iter_mut() {
                *v = *v / total;
            }
            (post, top + total.ln())
        })
        .collect()
}

/// Dawid-Skene EM started from majority-vote posteriors. Stops once no task
/// posterior moves by more than `tol`.
pub fn dawid_skene_fit<T: Real>(
    table: &CategoricalTable,
    max_iter: usize,
    tol: T,
) -> Result<DawidSkeneModel<T>> {
    if table.is_empty() {
        return Err(Error::Invalid("empty categorical table".into()));
    }
    if max_iter == 0 {
        return Err(Error::Invalid("max_iter must be at least 1".into()));
    }
    let tasks = by_task(table);
    let mut subject_labels = vec![Vec::new(); table.subject_ids.len()];
    for &(s, t, c) in &table.labels {
        subject_labels[s].push((t, c.index()));
    }
    let mut posterior: Vec<[T; K]> = tasks.iter().map(|l| majority_vote(l)).collect();
    let smooth = T::lit(CONFUSION_SMOOTHING);
    let mut trace = Vec::new();
    let mut converged = false;
    let (mut prior, mut confusion) = m_step(&tasks, &subject_labels, &posterior);
    for _ in 0..max_iter {
        let step = e_step(&tasks, &prior, &confusion);
        let loglik: T = step.iter().map(|s| s.1).sum();
        let log_prior: T = confusion
            .iter()
            .flat_map(|m| m.iter().flatten())
            .map(|&v| smooth * v.ln())
            .sum();
        trace.push(loglik + log_prior);
        let change = posterior
            .iter()
            .zip(&step)
            .flat_map(|(old, new)| (0..K).map(move |c| (old[c] - new.0[c]).abs()))
            .fold(T::zero(), T::max);
        posterior = step.into_iter().map(|s| s.0).collect();
        if change < tol {
            converged = true;
            break;
        }
        (prior, confusion) = m_step(&tasks, &subject_labels, &posterior);
    }
    Ok(DawidSkeneModel {
        subject_ids: table.subject_ids.clone(),
        task_ids: table.task_ids.clone(),
        class_prior: prior,
        confusion,
        task_posterior: posterior,
        iterations: trace.len(),
        converged,
        loglik_trace: trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DurationRanking {
    /// `(subject_id, mean seconds per response)`, fastest first.
    pub ranked: Vec<(String, f64)>,
    /// Subjects with no timing on any response, by id.
    pub excluded: Vec<String>,
}

/// Ranks subjects by mean `view_seconds + label_seconds`. A row contributes
/// when at least one of the two fields is present; a missing field counts as 0.
pub fn duration_rank(table: &ResponseTable) -> DurationRanking {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in table.rows() {
        let entry = sums.entry(r.subject.as_str()).or_insert((0.0, 0));
        if r.view_seconds.is_some() || r.label_seconds.is_some() {
            entry.0 += r.view_seconds.unwrap_or(0.0) + r.label_seconds.unwrap_or(0.0);
            entry.1 += 1;
        }
    }
    let mut ranked = Vec::new();
    let mut excluded = Vec::new();
    for (s, (total, n)) in sums {
        if n == 0 {
            excluded.push(s.to_string());
        } else {
            ranked.push((s.to_string(), total / n as f64));
        }
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    DurationRanking { ranked, excluded }
}
