use crate::error::{Error, Result};
use crate::ingest::{AgreementMultigraph, Task};
use crate::num::Real;

use super::{ModelParams, PsiIndexSet, TaskStats, GAMMA_CLAMP, R_CLAMP};

/// Weighted agreement sums for one focal rater.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSums<T> {
    /// `sum_j w_j I_ij`
    pub omega: T,
    /// `sum_j w_j`
    pub psi: T,
    /// `omega` with weights `1 - w`
    pub omega_bar: T,
    /// `psi` with weights `1 - w`
    pub psi_bar: T,
}

pub(crate) fn sums_at<T: Real>(
    task: &Task,
    weights: &[T],
    focal: usize,
    psi_index: PsiIndexSet,
) -> TaskSums<T> {
    let mut s = TaskSums {
        omega: T::zero(),
        psi: T::zero(),
        omega_bar: T::zero(),
        psi_bar: T::zero(),
    };
    for (j, &w) in weights.iter().enumerate() {
        if j == focal {
            if psi_index == PsiIndexSet::IncludeSelf {
                s.psi = s.psi + w;
                s.psi_bar = s.psi_bar + (T::one() - w);
            }
            continue;
        }
        s.psi = s.psi + w;
        s.psi_bar = s.psi_bar + (T::one() - w);
        if task.indicator(focal, j) {
            s.omega = s.omega + w;
            s.omega_bar = s.omega_bar + (T::one() - w);
        }
    }
    s
}

/// Sums over the task's raters for subject `focal`. `weights` is aligned with
/// `task.members()`.
pub fn task_sums<T: Real>(
    task: &Task,
    weights: &[T],
    focal: usize,
    psi_index: PsiIndexSet,
) -> Result<TaskSums<T>> {
    let pos = task
        .position(focal)
        .ok_or_else(|| Error::NotInTask(focal.to_string()))?;
    if weights.len() != task.len() {
        return Err(Error::Invalid("weights do not match task size".into()));
    }
    Ok(sums_at(task, weights, pos, psi_index))
}

/// Approximate gate likelihood ratio for the rater at position `focal`:
/// `prod_{i != focal} (alpha_i/gamma)^{I_{i,focal}} (beta_i/(1-gamma))^{1-I_{i,focal}} / (alpha_i + beta_i)`,
/// accumulated in log space and clamped to `[1e-12, 1e12]`.
pub fn r_approx<T: Real>(task: &Task, focal: usize, alpha_k: &[T], beta_k: &[T], gamma: T) -> T {
    let ln_gamma = gamma.ln();
    let ln_miss = (T::one() - gamma).ln();
    let mut log_r = T::zero();
    for i in 0..task.len() {
        if i == focal {
            continue;
        }
        let (a, b) = (alpha_k[i], beta_k[i]);
        log_r = log_r - (a + b).ln()
            + if task.indicator(i, focal) {
                a.ln() - ln_gamma
            } else {
                b.ln() - ln_miss
            };
    }
    let lo = T::lit(R_CLAMP.0).ln();
    let hi = T::lit(R_CLAMP.1).ln();
    log_r.max(lo).min(hi).exp()
}

/// Posterior gate probability from a likelihood ratio and prior reliability.
#[inline]
pub(crate) fn gate_posterior<T: Real>(r: T, tau: T) -> T {
    let num = r * tau;
    let den = num + (T::one() - tau);
    if den > T::zero() {
        num / den
    } else {
        T::zero()
    }
}

/// Variational statistics of one task from the current parameters.
pub fn e_step_task<T: Real>(
    task: &Task,
    params: &ModelParams<T>,
    psi_index: PsiIndexSet,
) -> TaskStats<T> {
    let members = task.members();
    let tau: Vec<T> = members.iter().map(|&s| params.tau[s]).collect();
    let mut alpha_tilde = Vec::with_capacity(members.len());
    let mut beta_tilde = Vec::with_capacity(members.len());
    for (pos, &s) in members.iter().enumerate() {
        let sums = sums_at(task, &tau, pos, psi_index);
        alpha_tilde.push(params.alpha[s] + sums.omega);
        beta_tilde.push(params.beta[s] + sums.psi - sums.omega);
    }
    let tau_tilde = (0..members.len())
        .map(|j| {
            gate_posterior(
                r_approx(task, j, &alpha_tilde, &beta_tilde, params.gamma),
                tau[j],
            )
        })
        .collect();
    TaskStats {
        alpha_tilde,
        beta_tilde,
        tau_tilde,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaUpdate<T> {
    pub gamma: T,
    /// The denominator vanished and the previous value was kept.
    pub degenerate: bool,
}

/// Chance-agreement rate from the gate posteriors:
/// `sum_k sum_i omega_bar_i / sum_k sum_i psi_bar_i`, clamped to `[0.01, 0.49]`.
/// Tasks are reduced in index order.
pub fn update_gamma<T: Real>(
    graph: &AgreementMultigraph,
    stats: &[TaskStats<T>],
    psi_index: PsiIndexSet,
    previous: T,
) -> GammaUpdate<T> {
    let mut num = T::zero();
    let mut den = T::zero();
    for (task, st) in graph.tasks().iter().zip(stats) {
        for pos in 0..task.len() {
            let s = sums_at(task, &st.tau_tilde, pos, psi_index);
            num = num + s.omega_bar;
            den = den + s.psi_bar;
        }
    }
    if den > T::zero() {
        GammaUpdate {
            gamma: (num / den)
                .max(T::lit(GAMMA_CLAMP.0))
                .min(T::lit(GAMMA_CLAMP.1)),
            degenerate: false,
        }
    } else {
        GammaUpdate {
            gamma: previous,
            degenerate: true,
        }
    }
}
