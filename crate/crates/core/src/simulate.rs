//! Synthetic data: agreement multigraphs drawn from the generative model,
//! rating tables with planted unreliable raters, and injection of
//! population-mimicking spammers into an existing table.

use std::collections::{BTreeSet, HashSet};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};

use crate::error::{Error, Result};
use crate::glba::ModelParams;
use crate::ingest::{AgreementMultigraph, Dimension, Response, ResponseTable, Task};
use crate::rng::{stream, Purpose};

/// Zero-padded id so lexical and numeric order agree.
pub fn padded_id(prefix: &str, i: usize, count: usize) -> String {
    let width = count.max(2).saturating_sub(1).to_string().len();
    format!("{prefix}{i:0width$}")
}

/// `count` indices spread evenly over `0..m`: `i * m / count`.
pub fn spread_indices(m: usize, count: usize) -> Vec<usize> {
    (0..count.min(m)).map(|i| i * m / count.min(m)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeSpec {
    pub m: usize,
    pub n: usize,
    /// Inclusive range; each task's rater count is uniform on it.
    pub raters_per_task: (usize, usize),
    pub truth: ModelParams<f64>,
    pub seed: u64,
}

impl GenerativeSpec {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.raters_per_task;
        if lo < 2 || lo > hi {
            return Err(Error::Invalid(format!(
                "raters per task {lo}..={hi} must satisfy 2 <= lo <= hi"
            )));
        }
        if hi > self.m {
            return Err(Error::Invalid(format!(
                "{hi} raters per task exceeds {} subjects",
                self.m
            )));
        }
        if self.truth.len() != self.m {
            return Err(Error::Invalid("truth does not cover every subject".into()));
        }
        if self.n == 0 {
            return Err(Error::Invalid("no tasks requested".into()));
        }
        // alpha, beta only need to be positive here; the fit's floor does not apply to truth.
        if !(self.truth.gamma > 0.0 && self.truth.gamma < 1.0) {
            return Err(Error::Invalid("gamma must lie in (0, 1)".into()));
        }
        for i in 0..self.m {
            let (t, a, b) = (self.truth.tau[i], self.truth.alpha[i], self.truth.beta[i]);
            if !(0.0..=1.0).contains(&t) || !(a > 0.0) || !(b > 0.0) {
                return Err(Error::Invalid(format!(
                    "subject {i}: invalid truth ({t}, {a}, {b})"
                )));
            }
        }
        Ok(())
    }
}

/// Draws a multigraph from the generative process. Task `k` uses its own
/// random stream, so the result depends only on the spec and seed.
pub fn sample_multigraph(spec: &GenerativeSpec) -> Result<(AgreementMultigraph, ModelParams<f64>)> {
    spec.validate()?;
    let truth = &spec.truth;
    let betas: Vec<Beta<f64>> = (0..spec.m)
        .map(|i| {
            Beta::new(truth.alpha[i], truth.beta[i]).map_err(|e| Error::Invalid(e.to_string()))
        })
        .collect::<Result<_>>()?;
    let (lo, hi) = spec.raters_per_task;
    let tasks = (0..spec.n)
        .map(|k| {
            let mut rng = stream(spec.seed, Purpose::Task, k as u64);
            let size = rng.gen_range(lo..=hi);
            let mut members = index::sample(&mut rng, spec.m, size).into_vec();
            members.sort_unstable();
            let gate: Vec<bool> = members
                .iter()
                .map(|&j| rng.gen_bool(truth.tau[j]))
                .collect();
            let regularity: Vec<f64> = members.iter().map(|&i| betas[i].sample(&mut rng)).collect();
            let mut draws = vec![false; size * size];
            for i in 0..size {
                for j in 0..size {
                    if i != j {
                        let p = if gate[j] { regularity[i] } else { truth.gamma };
                        draws[i * size + j] = rng.gen_bool(p.clamp(0.0, 1.0));
                    }
                }
            }
            Task::new(padded_id("t", k, spec.n), members, |i, j| {
                draws[i * size + j]
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ids = (0..spec.m).map(|i| padded_id("s", i, spec.m)).collect();
    Ok((AgreementMultigraph::new(ids, tasks)?, truth.clone()))
}

/// Rating table generator: each task has a latent score; a subject rates
/// seriously with probability `tau_i` (latent plus Gaussian noise, rounded to
/// the scale) and otherwise uniformly at random over the scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingSpec {
    pub dimension: Dimension,
    pub n: usize,
    pub raters_per_task: (usize, usize),
    /// Per-subject reliability; its length is the subject count.
    pub tau: Vec<f64>,
    /// Spread of latent task scores around the scale midpoint.
    pub latent_sd: f64,
    /// Noise of a serious rating around the latent score.
    pub noise_sd: f64,
    pub seed: u64,
}

pub fn sample_ratings(spec: &RatingSpec) -> Result<ResponseTable> {
    let m = spec.tau.len();
    let (lo, hi) = spec.raters_per_task;
    if lo < 1 || lo > hi || hi > m {
        return Err(Error::Invalid(format!(
            "raters per task {lo}..={hi} invalid for {m} subjects"
        )));
    }
    if spec.tau.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Invalid("tau must lie in [0, 1]".into()));
    }
    let (smin, smax) = spec.dimension.bounds();
    let latent = Normal::new(spec.dimension.neutral(), spec.latent_sd)
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut rows = Vec::new();
    for k in 0..spec.n {
        let mut rng = stream(spec.seed, Purpose::Task, k as u64);
        let size = rng.gen_range(lo..=hi);
        let mut members = index::sample(&mut rng, m, size).into_vec();
        members.sort_unstable();
        let center: f64 = latent.sample(&mut rng).clamp(smin, smax);
        for s in members {
            let rating = if rng.gen_bool(spec.tau[s]) {
                (center + noise.sample(&mut rng)).round().clamp(smin, smax)
            } else {
                rng.gen_range(smin as i64..=smax as i64) as f64
            };
            rows.push(
                Response::new(padded_id("s", s, m), padded_id("t", k, spec.n))
                    .with_score(spec.dimension, rating),
            );
        }
    }
    ResponseTable::new(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InjectionSpec {
    pub spammer_count: usize,
    pub tasks_per_spammer: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub table: ResponseTable,
    /// Ids of the injected subjects, in creation order.
    pub spammers: Vec<String>,
}

pub const SPAMMER_PREFIX: &str = "injected-spammer-";

/// Adds synthetic spammers who label disjoint sets of tasks by drawing each
/// rating independently from the population's marginal rating distribution.
pub fn inject_spammers(
    table: &ResponseTable,
    dim: Dimension,
    spec: &InjectionSpec,
) -> Result<Injection> {
    if spec.spammer_count == 0 || spec.tasks_per_spammer == 0 {
        return Err(Error::Invalid(
            "spammer and task counts must be positive".into(),
        ));
    }
    let pool: Vec<f64> = table.ratings(dim).map(|(_, _, v)| v).collect();
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let tasks: Vec<&str> = table
        .ratings(dim)
        .map(|(_, t, _)| t)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let needed = spec.spammer_count * spec.tasks_per_spammer;
    if needed > tasks.len() {
        return Err(Error::Invalid(format!(
            "{needed} disjoint spammer tasks requested but only {} tasks exist",
            tasks.len()
        )));
    }
    let existing: HashSet<&str> = table.rows().iter().map(|r| r.subject.as_str()).collect();
    let spammers: Vec<String> = (0..spec.spammer_count)
        .map(|s| padded_id(SPAMMER_PREFIX, s, spec.spammer_count))
        .collect();
    if let Some(clash) = spammers.iter().find(|s| existing.contains(s.as_str())) {
        return Err(Error::Invalid(format!(
            "subject id `{clash}` already present"
        )));
    }

    let mut order = tasks.clone();
    order.shuffle(&mut stream(spec.seed, Purpose::Injection, 0));
    let mut rows = table.rows().to_vec();
    for (s, (id, assigned)) in spammers
        .iter()
        .zip(order.chunks(spec.tasks_per_spammer))
        .enumerate()
    {
        let mut rng = stream(spec.seed, Purpose::Injection, 1 + s as u64);
        let mut assigned = assigned.to_vec();
        assigned.sort_unstable();
        for task in assigned {
            let rating = pool[rng.gen_range(0..pool.len())];
            rows.push(Response::new(id.clone(), task).with_score(dim, rating));
        }
    }
    Ok(Injection {
        table: ResponseTable::new(rows)?,
        spammers,
    })
}
