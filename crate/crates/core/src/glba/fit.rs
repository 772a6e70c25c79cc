use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::AgreementMultigraph;
use crate::num::Real;

use super::estep::{e_step_task, update_gamma};
use super::mstep::m_step_subject;
use super::objective::variational_objective;
use super::{FitConfig, FitReport, ModelParams, Priors, TaskStats};

/// `count` values evenly spaced on `[lo, hi]`.
pub fn gamma_grid<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / T::from_count(count - 1);
            (0..count).map(|i| lo + step * T::from_count(i)).collect()
        }
    }
}

/// Fits once per configured `gamma`, in grid order.
pub fn fit<T: Real>(
    graph: &AgreementMultigraph,
    config: &FitConfig<T>,
) -> Result<Vec<FitReport<T>>> {
    config.validate()?;
    config
        .gamma
        .values()
        .into_iter()
        .map(|g| fit_at_gamma(graph, config, g))
        .collect()
}

/// One EM iteration: Jacobi E-step over tasks from `params`, then the M-step per
/// subject and the optional `gamma` update.
fn iterate<T: Real>(
    graph: &AgreementMultigraph,
    config: &FitConfig<T>,
    params: &ModelParams<T>,
    priors: &Priors<T>,
) -> (ModelParams<T>, Vec<TaskStats<T>>, Vec<usize>, bool) {
    let stats: Vec<TaskStats<T>> = graph
        .tasks()
        .par_iter()
        .map(|task| e_step_task(task, params, config.psi_index))
        .collect();
    let solved: Vec<_> = (0..graph.m())
        .into_par_iter()
        .map(|i| {
            let mine: Vec<(T, T, T)> = graph
                .subject_tasks(i)
                .iter()
                .map(|&(k, pos)| {
                    (
                        stats[k].alpha_tilde[pos],
                        stats[k].beta_tilde[pos],
                        stats[k].tau_tilde[pos],
                    )
                })
                .collect();
            m_step_subject(
                &mine,
                (params.alpha[i], params.beta[i]),
                priors,
                config.prior_grad_mode,
            )
        })
        .collect();
    let mut next = ModelParams {
        tau: solved.iter().map(|r| r.tau).collect(),
        alpha: solved.iter().map(|r| r.alpha).collect(),
        beta: solved.iter().map(|r| r.beta).collect(),
        gamma: params.gamma,
    };
    let fallback = solved
        .iter()
        .enumerate()
        .filter(|(_, r)| r.fallback)
        .map(|(i, _)| i)
        .collect();
    let mut degenerate = false;
    if config.update_gamma {
        let up = update_gamma(graph, &stats, config.psi_index, params.gamma);
        next.gamma = up.gamma;
        degenerate = up.degenerate;
    }
    (next, stats, fallback, degenerate)
}

fn mean<T: Real>(values: impl Iterator<Item = T>) -> T {
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    sum / T::from_count(n.max(1))
}

/// Variational EM at one starting `gamma` with the empirical-Bayes prior loop.
pub fn fit_at_gamma<T: Real>(
    graph: &AgreementMultigraph,
    config: &FitConfig<T>,
    gamma: T,
) -> Result<FitReport<T>> {
    config.validate()?;
    if graph.n() == 0 || graph.m() == 0 {
        return Err(Error::Invalid("empty multigraph".into()));
    }
    let mut params = ModelParams::initial(graph.m(), gamma);
    params.validate()?;
    let mut priors = Priors::<T>::default();
    let mut trace = Vec::new();
    let mut round_starts = Vec::new();
    let mut fallback_subjects = Vec::new();
    let mut gamma_degenerate = false;
    let mut converged = false;

    for _round in 0..config.eb_max_rounds {
        round_starts.push(trace.len());
        let mut em_converged = false;
        for _ in 0..config.max_iter {
            let (next, stats, fallback, degenerate) = iterate(graph, config, &params, &priors);
            let iteration = trace.len() + 1;
            for i in 0..graph.m() {
                if !(next.tau[i].is_finite()
                    && next.alpha[i].is_finite()
                    && next.beta[i].is_finite())
                {
                    return Err(Error::NonFinite {
                        subject: graph.subject_ids()[i].clone(),
                        iteration,
                    });
                }
            }
            gamma_degenerate |= degenerate;
            fallback_subjects = fallback;
            trace.push(variational_objective(
                &next,
                &priors,
                graph,
                &stats,
                config.psi_index,
                config.prior_grad_mode,
            ));
            let change = next
                .max_change(&params)
                .max((next.gamma - params.gamma).abs());
            params = next;
            if change < config.tol {
                em_converged = true;
                break;
            }
        }
        let tau0 = mean(params.tau.iter().copied())
            .max(T::lit(1e-3))
            .min(T::lit(1.0 - 1e-3));
        let s0 = mean(params.alpha.iter().zip(&params.beta).map(|(a, b)| *a + *b)) / T::lit(2.0);
        let moved = (tau0 - priors.tau0).abs().max((s0 - priors.s0).abs());
        if moved < config.eb_tol {
            converged = em_converged;
            break;
        }
        priors = Priors { tau0, s0 };
    }

    Ok(FitReport {
        subject_ids: graph.subject_ids().to_vec(),
        iterations: trace.len(),
        params,
        priors,
        converged,
        loglik_trace: trace,
        round_starts,
        fallback_subjects,
        gamma_degenerate,
    })
}
