//! Simulation scenarios and rank statistics behind the acceptance suite.
//!
//! Every scenario is a pure function of its seed, so the suite can be re-run
//! to check byte-identical output.

use std::collections::BTreeSet;

use glba::glba::{fit, FitConfig, FitReport, ModelParams};
use glba::ingest::{build_multigraph, AgreementMultigraph, Dimension, ResponseTable, DEFAULT_DELTA, DEFAULT_MIN_RATERS};
use glba::scoring::{rank_subjects, SubjectReport};
use glba::simulate::{padded_id, sample_multigraph, sample_ratings, spread_indices, GenerativeSpec, RatingSpec};
use glba::Result;

pub const SUBJECTS: usize = 200;
pub const PLANTED: usize = 20;
pub const TASKS: usize = 2000;
pub const RATERS: usize = 5;
pub const RELIABLE_TAU: f64 = 0.9;
pub const TRUE_GAMMA: f64 = 0.37;
/// Regularity of every simulated subject; agreement mean 0.7.
pub const TRUE_ALPHA: f64 = 7.0;
pub const TRUE_BETA: f64 = 3.0;

/// Population reliabilities: `PLANTED` of `m` subjects, spread evenly, at 0.
pub fn planted_tau(m: usize, planted: usize) -> Vec<f64> {
    let mut tau = vec![RELIABLE_TAU; m];
    for i in spread_indices(m, planted) {
        tau[i] = 0.0;
    }
    tau
}

/// Ids of the planted subjects under the simulators' id scheme.
pub fn planted_ids(m: usize, planted: usize) -> BTreeSet<String> {
    spread_indices(m, planted)
        .into_iter()
        .map(|i| padded_id("s", i, m))
        .collect()
}

/// Multigraph drawn from the generative model with planted unreliable subjects.
pub fn recovery_graph(seed: u64) -> Result<(AgreementMultigraph, ModelParams<f64>)> {
    let truth = ModelParams {
        tau: planted_tau(SUBJECTS, PLANTED),
        alpha: vec![TRUE_ALPHA; SUBJECTS],
        beta: vec![TRUE_BETA; SUBJECTS],
        gamma: TRUE_GAMMA,
    };
    sample_multigraph(&GenerativeSpec {
        m: SUBJECTS,
        n: TASKS,
        raters_per_task: (RATERS, RATERS),
        truth,
        seed,
    })
}

/// Spread of latent task scores on the 1 to 9 valence scale.
pub const LATENT_SD: f64 = 3.0;
/// Noise of a serious rating around its task's latent score.
pub const NOISE_SD: f64 = 0.5;

/// Integer valence ratings with the recovery population design: planted
/// subjects answer uniformly at random, everyone else near a latent score.
pub fn rating_population(m: usize, n: usize, raters: (usize, usize), planted: usize, seed: u64) -> Result<ResponseTable> {
    sample_ratings(&RatingSpec {
        dimension: Dimension::Valence,
        n,
        raters_per_task: raters,
        tau: planted_tau(m, planted),
        latent_sd: LATENT_SD,
        noise_sd: NOISE_SD,
        seed,
    })
}

/// Per-gamma fits and the subject ranking derived from them.
pub type Fitted = (Vec<FitReport<f64>>, Vec<SubjectReport<f64>>);

/// Builds the valence multigraph with default agreement settings, fits every
/// `gamma` of the default grid and ranks subjects by mean `tau`.
pub fn fit_and_rank(table: &ResponseTable) -> Result<Fitted> {
    let graph = build_multigraph(table, Dimension::Valence, DEFAULT_DELTA, DEFAULT_MIN_RATERS)?;
    let fits = fit(&graph, &FitConfig::default())?;
    let ranking = rank_subjects(&fits)?;
    Ok((fits, ranking))
}

/// 1-based ranks with ties sharing their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mid;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Spearman correlation: Pearson correlation of midranks.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&midranks(x), &midranks(y))
}

/// How many of `wanted` appear among the first `k` ids of `ranked`.
pub fn hits_in_prefix(ranked: &[String], wanted: &BTreeSet<String>, k: usize) -> usize {
    ranked.iter().take(k).filter(|id| wanted.contains(*id)).count()
}

/// Ids ordered ascending by score, ties broken by id.
pub fn order_by_score(ids: &[String], scores: &[f64]) -> Vec<String> {
    let mut idx: Vec<usize> = (0..ids.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then_with(|| ids[a].cmp(&ids[b])));
    idx.into_iter().map(|i| ids[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), [3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn spearman_reference_values() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        // d = (0, 1, -1, 0): 1 - 6 * 2 / (4 * 15)
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn planted_subjects_are_spread() {
        let ids = planted_ids(200, 20);
        assert_eq!(ids.len(), 20);
        assert!(ids.contains("s000") && ids.contains("s190"));
        assert_eq!(planted_tau(200, 20).iter().filter(|&&t| t == 0.0).count(), 20);
    }

    #[test]
    fn prefix_hits() {
        let ranked: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let wanted: BTreeSet<String> = ["c".to_string()].into();
        assert_eq!(hits_in_prefix(&ranked, &wanted, 2), 0);
        assert_eq!(hits_in_prefix(&ranked, &wanted, 3), 1);
        assert_eq!(order_by_score(&ranked, &[0.5, 0.1, 0.5]), ["b", "a", "c"]);
    }
}
