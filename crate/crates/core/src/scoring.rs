//! Subject rankings, confidence-weighted stimulus scores and evaluation curves.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::glba::FitReport;
use crate::ingest::{Dimension, ResponseTable};
use crate::num::Real;

/// Per-subject summary of fits across a `gamma` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectReport<T> {
    pub subject_id: String,
    /// Mean `tau` over the grid; the ranking key.
    pub tau_mean: T,
    /// `(gamma, tau)` per fit, in grid order.
    pub tau_by_gamma: Vec<(T, T)>,
    /// Regularity at the reference `gamma`.
    pub alpha: T,
    pub beta: T,
    pub beta_variance: T,
    /// 1-based position, ascending by `tau_mean` (most susceptible first).
    pub rank: usize,
}

/// Variance of `Beta(a, b)`.
pub fn beta_variance<T: Real>(a: T, b: T) -> T {
    let s = a + b;
    a * b / (s * s * (s + T::one()))
}

/// Index of the fit whose `gamma` is nearest the grid midpoint, the lower
/// `gamma` winning ties.
pub fn reference_fit<T: Real>(fits: &[FitReport<T>]) -> Option<usize> {
    let gammas: Vec<T> = fits.iter().map(|f| f.params.gamma).collect();
    let lo = gammas.iter().copied().fold(T::infinity(), T::min);
    let hi = gammas.iter().copied().fold(T::neg_infinity(), T::max);
    let mid = (lo + hi) / T::lit(2.0);
    let slack = T::lit(1e-9) * (hi - lo).max(T::one());
    let mut best: Option<usize> = None;
    for (i, &g) in gammas.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let (d, db) = ((g - mid).abs(), (gammas[b] - mid).abs());
                if d < db - slack || ((d - db).abs() <= slack && g < gammas[b]) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Averages `tau` over the fits and ranks subjects ascending, ties broken by id.
pub fn rank_subjects<T: Real>(fits: &[FitReport<T>]) -> Result<Vec<SubjectReport<T>>> {
    let first = fits
        .first()
        .ok_or_else(|| Error::Invalid("no fits to rank".into()))?;
    if let Some(f) = fits.iter().find(|f| f.subject_ids != first.subject_ids) {
        return Err(Error::Invalid(format!(
            "fit at gamma {} covers a different subject set",
            f.params.gamma
        )));
    }
    let reference = &fits[reference_fit(fits).expect("nonempty")];
    let count = T::from_count(fits.len());
    let mut reports: Vec<SubjectReport<T>> = first
        .subject_ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let tau_by_gamma: Vec<(T, T)> = fits
                .iter()
                .map(|f| (f.params.gamma, f.params.tau[i]))
                .collect();
            let tau_mean = tau_by_gamma.iter().map(|p| p.1).sum::<T>() / count;
            let (alpha, beta) = (reference.params.alpha[i], reference.params.beta[i]);
            SubjectReport {
                subject_id: id.clone(),
                tau_mean: tau_mean.max(T::zero()).min(T::one()),
                tau_by_gamma,
                alpha,
                beta,
                beta_variance: beta_variance(alpha, beta),
                rank: 0,
            }
        })
        .collect();
    reports.sort_by(|a, b| {
        a.tau_mean
            .partial_cmp(&b.tau_mean)
            .expect("finite tau")
            .then_with(|| a.subject_id.cmp(&b.subject_id))
    });
    for (r, rep) in reports.iter_mut().enumerate() {
        rep.rank = r + 1;
    }
    Ok(reports)
}

/// Which end of the scale a stimulus score measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    High,
    Low,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::High => "high",
            Direction::Low => "low",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(Direction::High),
            "low" => Ok(Direction::Low),
            _ => Err(Error::Invalid(format!("unknown direction `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageReport<T> {
    pub task_id: String,
    pub direction: Direction,
    /// `weighted_mean * confidence`.
    pub adjusted_score: T,
    /// Probability that at least one rater was reliable.
    pub confidence: T,
    /// Reliability-weighted mean of the normalised (and, for `Low`, flipped)
    /// ratings. `None` when every rater has `tau = 0`.
    pub weighted_mean: Option<T>,
    /// Unweighted mean on the original scale.
    pub raw_mean: T,
    /// Weighted mean mapped back to the original scale and orientation.
    pub estimated_score: Option<T>,
}

/// `1 - prod (1 - tau_i)`.
pub fn confidence<T: Real>(taus: &[T]) -> T {
    T::one() - taus.iter().fold(T::one(), |p, &t| p * (T::one() - t))
}

/// Scores every task with at least `min_raters` ratings on `dim`. Each rater
/// must have a reliability in `tau`. Reports are sorted by adjusted score,
/// descending, then task id.
pub fn image_scores<T: Real>(
    table: &ResponseTable,
    dim: Dimension,
    tau: &HashMap<String, T>,
    direction: Direction,
    min_raters: usize,
) -> Result<Vec<ImageReport<T>>> {
    let (lo, hi) = dim.bounds();
    let mut by_task: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    for (s, t, v) in table.ratings(dim) {
        by_task.entry(t).or_default().push((s, v));
    }
    let mut reports = Vec::new();
    for (task, raters) in by_task {
        if raters.len() < min_raters.max(1) {
            continue;
        }
        let mut taus = Vec::with_capacity(raters.len());
        let mut num = T::zero();
        let mut raw = T::zero();
        for &(s, v) in &raters {
            let t = *tau.get(s).ok_or_else(|| {
                Error::Invalid(format!(
                    "no reliability estimate for subject `{s}` on task `{task}`"
                ))
            })?;
            let mut a = T::lit((v - lo) / (hi - lo));
            if direction == Direction::Low {
                a = T::one() - a;
            }
            num = num + t * a;
            raw = raw + T::lit(v);
            taus.push(t);
        }
        let weight: T = taus.iter().copied().sum();
        let confidence = confidence(&taus);
        let weighted_mean = (weight > T::zero()).then(|| num / weight);
        let estimated_score = weighted_mean.map(|w| {
            let w = if direction == Direction::Low {
                T::one() - w
            } else {
                w
            };
            T::lit(lo) + w * T::lit(hi - lo)
        });
        reports.push(ImageReport {
            task_id: task.to_string(),
            direction,
            adjusted_score: weighted_mean.map_or(T::zero(), |w| w * confidence),
            confidence,
            weighted_mean,
            raw_mean: raw / T::from_count(raters.len()),
            estimated_score,
        });
    }
    reports.sort_by(|a, b| {
        b.adjusted_score
            .partial_cmp(&a.adjusted_score)
            .expect("finite score")
            .then_with(|| a.task_id.cmp(&b.task_id))
    });
    Ok(reports)
}

/// Tasks whose estimated score reaches `score_min` (at or above it for `High`,
/// at or below it for `Low`) with confidence strictly above `conf_min`.
pub fn extreme_subset<T: Real>(
    reports: &[ImageReport<T>],
    score_min: T,
    conf_min: T,
) -> Vec<String> {
    reports
        .iter()
        .filter(|r| {
            let Some(score) = r.estimated_score else {
                return false;
            };
            let extreme = match r.direction {
                Direction::High => score >= score_min,
                Direction::Low => score <= score_min,
            };
            extreme && r.confidence > conf_min
        })
        .map(|r| r.task_id.clone())
        .collect()
}

/// What the overhead curve filters on.
#[derive(Debug, Clone, Copy)]
pub enum FilterBasis<'a, T> {
    /// Remove every label of subjects whose `tau_mean` is below the threshold.
    Subjects(&'a [SubjectReport<T>]),
    /// Remove every label on tasks whose confidence is below the threshold.
    Images(&'a [ImageReport<T>]),
}

/// `0, 0.05, ..., 1`.
pub fn default_thresholds<T: Real>() -> Vec<T> {
    (0..=20).map(|i| T::from_count(i) / T::lit(20.0)).collect()
}

/// Labels removed at each threshold. Subjects or tasks without a report are
/// never removed.
pub fn overhead_curve<T: Real>(
    table: &ResponseTable,
    dim: Dimension,
    basis: FilterBasis<'_, T>,
    thresholds: &[T],
) -> Vec<(T, usize)> {
    let key_scores: HashMap<&str, T> = match basis {
        FilterBasis::Subjects(s) => s
            .iter()
            .map(|r| (r.subject_id.as_str(), r.tau_mean))
            .collect(),
        FilterBasis::Images(i) => i
            .iter()
            .map(|r| (r.task_id.as_str(), r.confidence))
            .collect(),
    };
    let mut scores: Vec<T> = table
        .ratings(dim)
        .filter_map(|(s, t, _)| match basis {
            FilterBasis::Subjects(_) => key_scores.get(s).copied(),
            FilterBasis::Images(_) => key_scores.get(t).copied(),
        })
        .collect();
    scores.sort_by(|a, b| a.partial_cmp(b).expect("finite score"));
    thresholds
        .iter()
        .map(|&th| (th, scores.partition_point(|&s| s < th)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    /// One point per prefix length `1..=m`.
    pub points: Vec<PrPoint>,
    /// `(K, precision)` for each requested `K`, clipped to the ranking length.
    pub top_k: Vec<(usize, f64)>,
}

/// Precision and recall of every prefix of `ranked` (most suspicious first)
/// against a set of annotated spammers.
pub fn precision_recall(
    ranked: &[String],
    annotated: &BTreeSet<String>,
    ks: &[usize],
) -> Result<PrCurve> {
    if annotated.is_empty() {
        return Err(Error::Invalid("annotated set is empty".into()));
    }
    let known: BTreeSet<&str> = ranked.iter().map(String::as_str).collect();
    if let Some(missing) = annotated.iter().find(|a| !known.contains(a.as_str())) {
        return Err(Error::Invalid(format!(
            "annotated subject `{missing}` is not in the ranking"
        )));
    }
    let total = annotated.len() as f64;
    let mut hits = 0usize;
    let points: Vec<PrPoint> = ranked
        .iter()
        .enumerate()
        .map(|(i, id)| {
            hits += usize::from(annotated.contains(id));
            PrPoint {
                k: i + 1,
                precision: hits as f64 / (i + 1) as f64,
                recall: hits as f64 / total,
            }
        })
        .collect();
    let top_k = ks
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let k = k.min(points.len());
            (k, points[k - 1].precision)
        })
        .collect();
    Ok(PrCurve { points, top_k })
}

/// Subject ids in rank order.
pub fn ranked_ids<T>(reports: &[SubjectReport<T>]) -> Vec<String> {
    let mut sorted: Vec<&SubjectReport<T>> = reports.iter().collect();
    sorted.sort_by_key(|r| r.rank);
    sorted.into_iter().map(|r| r.subject_id.clone()).collect()
}

/// Empirical quantile with linear interpolation between order statistics.
/// `p` is a fraction in `[0, 1]`.
pub fn quantile<T: Real>(values: &[T], p: T) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite value"));
    let pos = p.max(T::zero()).min(T::one()) * T::from_count(v.len() - 1);
    let lo = pos.floor().to_usize().expect("in range");
    let hi = (lo + 1).min(v.len() - 1);
    let frac = pos - T::from_count(lo);
    Some(v[lo] + (v[hi] - v[lo]) * frac)
}

/// Subjects whose regularity is tightly estimated (`beta_variance < var_max`)
/// and whose `tau_mean` lies strictly below the `tau_pct` percentile
/// (`0..=100`) of the population.
pub fn flag_confidently_unreliable<T: Real>(
    reports: &[SubjectReport<T>],
    var_max: T,
    tau_pct: T,
) -> Vec<String> {
    let taus: Vec<T> = reports.iter().map(|r| r.tau_mean).collect();
    let Some(cut) = quantile(&taus, tau_pct / T::lit(100.0)) else {
        return Vec::new();
    };
    reports
        .iter()
        .filter(|r| r.beta_variance < var_max && r.tau_mean < cut)
        .map(|r| r.subject_id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glba::{ModelParams, Priors};
    use crate::ingest::Response;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn report(ids: &[&str], gamma: f64, tau: &[f64]) -> FitReport<f64> {
        let m = ids.len();
        FitReport {
            subject_ids: ids.iter().map(|s| s.to_string()).collect(),
            params: ModelParams {
                tau: tau.to_vec(),
                alpha: (0..m).map(|i| 1.0 + i as f64 + gamma).collect(),
                beta: vec![2.0; m],
                gamma,
            },
            priors: Priors::default(),
            iterations: 1,
            converged: true,
            loglik_trace: vec![],
            round_starts: vec![0],
            fallback_subjects: vec![],
            gamma_degenerate: false,
        }
    }

    #[test]
    fn single_fit_ranking_uses_its_tau() {
        let r = rank_subjects(&[report(&["a", "b", "c"], 0.4, &[0.9, 0.0, 0.5])]).unwrap();
        let ids: Vec<_> = r.iter().map(|s| s.subject_id.as_str()).collect();
        assert_eq!(ids, ["b", "c", "a"]);
        assert_eq!(r[0].rank, 1);
        assert_eq!(r[0].tau_mean, 0.0);
        assert_eq!(r[2].tau_mean, 0.9);
    }

    #[test]
    fn grid_mean_and_reference_gamma() {
        let fits = [
            report(&["a", "b"], 0.3, &[0.2, 0.5]),
            report(&["a", "b"], 0.38, &[0.4, 0.5]),
            report(&["a", "b"], 0.48, &[0.6, 0.5]),
        ];
        let r = rank_subjects(&fits).unwrap();
        assert_relative_eq!(r[0].tau_mean, 0.4, epsilon = 1e-15);
        assert_eq!(r[0].subject_id, "a");
        // midpoint 0.39: 0.38 is nearest
        assert_eq!(r[0].alpha, 1.38);
        assert_eq!(r[0].tau_by_gamma.len(), 3);
    }

    #[test]
    fn reference_ties_go_to_lower_gamma() {
        let grid = crate::glba::gamma_grid(0.3, 0.48, 10);
        let fits: Vec<_> = grid.iter().map(|&g| report(&["a"], g, &[0.5])).collect();
        assert!((fits[reference_fit(&fits).unwrap()].params.gamma - 0.38).abs() < 1e-12);
    }

    #[test]
    fn ties_break_by_id_and_mismatch_errors() {
        let r = rank_subjects(&[report(&["z", "y", "x"], 0.4, &[0.3, 0.3, 0.3])]).unwrap();
        let ids: Vec<_> = r.iter().map(|s| s.subject_id.as_str()).collect();
        assert_eq!(ids, ["x", "y", "z"]);
        let bad = [report(&["a"], 0.3, &[0.1]), report(&["b"], 0.4, &[0.1])];
        assert!(rank_subjects(&bad).is_err());
        assert!(rank_subjects::<f64>(&[]).is_err());
    }

    #[test]
    fn uniform_beta_variance() {
        assert_relative_eq!(beta_variance(1.0, 1.0), 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn fig1_confidence() {
        let c: f64 = confidence(&[0.08, 0.56, 0.34, 0.04]);
        assert!((c - 0.7435).abs() < 1e-4, "{c}");
        assert_eq!((c * 100.0).round(), 74.0);
    }

    fn single_task(ratings: &[(&str, f64)]) -> ResponseTable {
        ResponseTable::new(
            ratings
                .iter()
                .map(|&(s, v)| Response::new(s, "img").with_score(Dimension::Valence, v))
                .collect(),
        )
        .unwrap()
    }

    fn taus(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|&(s, t)| (s.to_string(), t)).collect()
    }

    #[test]
    fn fully_confident_single_rater() {
        // 7 on 1..9 normalises to 0.75
        let t = single_task(&[("a", 7.0)]);
        let r = image_scores(
            &t,
            Dimension::Valence,
            &taus(&[("a", 1.0)]),
            Direction::High,
            1,
        )
        .unwrap();
        assert_relative_eq!(r[0].adjusted_score, 0.75, epsilon = 1e-15);
        assert_eq!(r[0].estimated_score, Some(7.0));
        let low = image_scores(
            &t,
            Dimension::Valence,
            &taus(&[("a", 1.0)]),
            Direction::Low,
            1,
        )
        .unwrap();
        assert_relative_eq!(low[0].adjusted_score, 0.25, epsilon = 1e-15);
        assert_eq!(low[0].estimated_score, Some(7.0));
    }

    #[test]
    fn unreliable_raters_give_zero_score() {
        let t = single_task(&[("a", 9.0), ("b", 8.0)]);
        let r = image_scores(
            &t,
            Dimension::Valence,
            &taus(&[("a", 0.0), ("b", 0.0)]),
            Direction::High,
            1,
        )
        .unwrap();
        assert_eq!(r[0].adjusted_score, 0.0);
        assert_eq!(r[0].confidence, 0.0);
        assert_eq!(r[0].weighted_mean, None);
        assert_eq!(r[0].raw_mean, 8.5);
    }

    #[test]
    fn missing_estimate_is_an_error() {
        let t = single_task(&[("a", 9.0), ("b", 8.0)]);
        assert!(image_scores(
            &t,
            Dimension::Valence,
            &taus(&[("a", 0.5)]),
            Direction::High,
            1
        )
        .is_err());
        // below the rater threshold the task is not scored at all
        assert!(image_scores(
            &t,
            Dimension::Valence,
            &taus(&[("a", 0.5)]),
            Direction::High,
            3
        )
        .unwrap()
        .is_empty());
    }

    fn image(id: &str, score: f64, conf: f64) -> ImageReport<f64> {
        ImageReport {
            task_id: id.into(),
            direction: Direction::High,
            adjusted_score: 0.0,
            confidence: conf,
            weighted_mean: Some(0.0),
            raw_mean: score,
            estimated_score: Some(score),
        }
    }

    #[test]
    fn extreme_threshold_semantics() {
        let r = [
            image("keep", 8.2, 0.95),
            image("unsure", 8.2, 0.5),
            image("edge", 8.0, 0.9),
        ];
        assert_eq!(extreme_subset(&r, 8.0, 0.9), ["keep"]);
        assert!(extreme_subset::<f64>(&[], 8.0, 0.9).is_empty());
    }

    #[test]
    fn overhead_endpoints() {
        let t = ResponseTable::new(vec![
            Response::new("a", "x").with_score(Dimension::Valence, 3.0),
            Response::new("b", "x").with_score(Dimension::Valence, 4.0),
            Response::new("a", "y").with_score(Dimension::Valence, 5.0),
        ])
        .unwrap();
        let subjects = rank_subjects(&[report(&["a", "b"], 0.4, &[0.2, 1.0])]).unwrap();
        let c = overhead_curve(
            &t,
            Dimension::Valence,
            FilterBasis::Subjects(&subjects),
            &[0.0, 0.2, 0.5, 1.0 + 1e-9],
        );
        assert_eq!(c.iter().map(|p| p.1).collect::<Vec<_>>(), [0, 0, 2, 3]);
        let images = [image("x", 0.0, 0.95), image("y", 0.0, 0.5)];
        let c = overhead_curve(
            &t,
            Dimension::Valence,
            FilterBasis::Images(&images),
            &[0.0, 0.9, 1.0],
        );
        assert_eq!(c.iter().map(|p| p.1).collect::<Vec<_>>(), [0, 1, 3]);
        assert_eq!(default_thresholds::<f64>().len(), 21);
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i:03}")).collect()
    }

    #[test]
    fn perfect_and_worst_rankings() {
        let ranked = ids(10);
        let top: BTreeSet<String> = ranked[..3].iter().cloned().collect();
        let pr = precision_recall(&ranked, &top, &[3, 10, 50]).unwrap();
        assert_eq!(pr.top_k, [(3, 1.0), (10, 0.3), (10, 0.3)]);
        let bottom: BTreeSet<String> = ranked[7..].iter().cloned().collect();
        assert_eq!(
            precision_recall(&ranked, &bottom, &[5]).unwrap().top_k,
            [(5, 0.0)]
        );
        assert!(precision_recall(&ranked, &BTreeSet::new(), &[1]).is_err());
        let stranger: BTreeSet<String> = ["zz".to_string()].into();
        assert!(precision_recall(&ranked, &stranger, &[1]).is_err());
    }

    #[test]
    fn flags_need_tight_variance_and_low_tau() {
        let r =
            rank_subjects(&[report(&["a", "b", "c", "d"], 0.4, &[0.1, 0.2, 0.8, 0.9])]).unwrap();
        assert!(flag_confidently_unreliable(&r, 0.0, 50.0).is_empty());
        // alphas are 1.4, 2.4, 3.4, 4.4 with beta 2: variances fall with alpha
        let all = flag_confidently_unreliable(&r, 1.0, 50.0);
        assert_eq!(all, ["a", "b"]);
        let tight = flag_confidently_unreliable(&r, beta_variance(2.0, 2.0), 50.0);
        assert_eq!(tight, ["b"]);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[4.0, 1.0, 3.0, 2.0], 0.5), Some(2.5));
        assert_eq!(quantile(&[4.0, 1.0], 0.0), Some(1.0));
        assert_eq!(quantile::<f64>(&[], 0.3), None);
    }

    proptest! {
        #[test]
        fn adding_a_rater_never_lowers_confidence(
            taus in proptest::collection::vec(0.0f64..=1.0, 0..8),
            extra in 0.0f64..=1.0,
        ) {
            let mut more = taus.clone();
            more.push(extra);
            prop_assert!(confidence(&more) >= confidence(&taus) - 1e-15);
            let c = confidence(&taus);
            prop_assert!((0.0..=1.0).contains(&c));
        }

        #[test]
        fn score_rises_with_an_above_mean_raters_tau(
            ratings in proptest::collection::vec(1u8..=9, 2..7),
            taus in proptest::collection::vec(0.01f64..0.99, 7),
            who in 0usize..7,
            bump in 0.0f64..0.5,
        ) {
            let n = ratings.len();
            let who = who % n;
            let rows: Vec<(String, f64)> = (0..n).map(|i| (format!("r{i}"), f64::from(ratings[i]))).collect();
            let table = ResponseTable::new(
                rows.iter().map(|(s, v)| Response::new(s.clone(), "img").with_score(Dimension::Valence, *v)).collect(),
            ).unwrap();
            let mut tau: HashMap<String, f64> = rows.iter().zip(&taus).map(|((s, _), &t)| (s.clone(), t)).collect();
            let before = image_scores(&table, Dimension::Valence, &tau, Direction::High, 1).unwrap().remove(0);
            let a = (rows[who].1 - 1.0) / 8.0;
            prop_assume!(a > before.weighted_mean.unwrap());
            let key = rows[who].0.clone();
            let t = tau[&key];
            tau.insert(key, (t + bump).min(1.0));
            let after = image_scores(&table, Dimension::Valence, &tau, Direction::High, 1).unwrap().remove(0);
            prop_assert!(after.adjusted_score >= before.adjusted_score - 1e-12);
        }

        #[test]
        fn recall_is_monotone(mask in proptest::collection::vec(any::<bool>(), 1..60)) {
            prop_assume!(mask.iter().any(|&b| b));
            let ranked = ids(mask.len());
            let annotated: BTreeSet<String> = ranked.iter().zip(&mask).filter(|p| *p.1).map(|p| p.0.clone()).collect();
            let pr = precision_recall(&ranked, &annotated, &[]).unwrap();
            prop_assert!(pr.points.windows(2).all(|w| w[1].recall >= w[0].recall));
            let last = pr.points.last().unwrap();
            prop_assert_eq!(last.precision, annotated.len() as f64 / mask.len() as f64);
            prop_assert_eq!(last.recall, 1.0);
        }
    }
}
