use crate::error::{Error, Result};
use crate::ingest::AgreementMultigraph;
use crate::num::Real;
use crate::special::{beta_log_moments, digamma, ln_beta};

use super::estep::sums_at;
use super::{ModelParams, PriorGradMode, Priors, PsiIndexSet, TaskStats};

/// `x ln y` with `0 ln 0 = 0`.
fn xlny<T: Real>(x: T, y: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x * y.ln()
    }
}

/// Log prior of `(tau, alpha + beta)` up to constants depending only on the priors.
/// The reliability term is the one whose stationary point is the closed-form
/// `tau` update; the concentration term integrates the configured gradient.
fn log_prior<T: Real>(tau: T, s: T, priors: &Priors<T>, mode: PriorGradMode) -> T {
    let tau_part = xlny(priors.tau0, tau) + xlny(T::one() - priors.tau0, T::one() - tau);
    let s_part = match mode {
        PriorGradMode::GammaMap => s.ln() - s / priors.s0,
        PriorGradMode::Literal => s * s.ln() - s - s * s / (T::lit(2.0) * priors.s0),
    };
    tau_part + s_part
}

/// Expected complete-data log posterior under the factorised posterior given
/// by `stats`: `E_q[ln p(I, T, J | params)] + ln p(params)`, up to constants
/// that depend only on the priors.
pub fn log_posterior<T: Real>(
    params: &ModelParams<T>,
    priors: &Priors<T>,
    graph: &AgreementMultigraph,
    stats: &[TaskStats<T>],
    psi_index: PsiIndexSet,
    mode: PriorGradMode,
) -> T {
    let mut total = T::zero();
    for i in 0..params.len() {
        total = total
            + log_prior(
                params.tau[i],
                params.alpha[i] + params.beta[i],
                priors,
                mode,
            );
    }
    let ln_gamma = params.gamma.ln();
    let ln_miss = (T::one() - params.gamma).ln();
    for (task, st) in graph.tasks().iter().zip(stats) {
        for (pos, &s) in task.members().iter().enumerate() {
            let (tau, a, b) = (params.tau[s], params.alpha[s], params.beta[s]);
            let tt = st.tau_tilde[pos];
            total = total + xlny(tt, tau) + xlny(T::one() - tt, T::one() - tau);
            let (log_j, log_not_j) = beta_log_moments(st.alpha_tilde[pos], st.beta_tilde[pos]);
            let sums = sums_at(task, &st.tau_tilde, pos, psi_index);
            // Beta density of J with the gated agreements folded into its exponents.
            let shape_a = a - T::one() + sums.omega;
            let shape_b = b - T::one() + sums.psi - sums.omega;
            total = total + shape_a * log_j + shape_b * log_not_j - ln_beta(a, b);
            total = total + sums.omega_bar * ln_gamma + (sums.psi_bar - sums.omega_bar) * ln_miss;
        }
    }
    total
}

/// Entropy of the factorised posterior: Bernoulli gates plus Beta regularities.
pub fn variational_entropy<T: Real>(stats: &[TaskStats<T>]) -> T {
    let two = T::lit(2.0);
    let mut total = T::zero();
    for st in stats {
        for ((&tt, &a), &b) in st.tau_tilde.iter().zip(&st.alpha_tilde).zip(&st.beta_tilde) {
            total = total - xlny(tt, tt) - xlny(T::one() - tt, T::one() - tt);
            total =
                total + ln_beta(a, b) - (a - T::one()) * digamma(a) - (b - T::one()) * digamma(b)
                    + (a + b - two) * digamma(a + b);
        }
    }
    total
}

/// Variational lower bound: [`log_posterior`] plus [`variational_entropy`].
/// The M-step maximises it for fixed statistics, and it is the quantity the
/// fit records per iteration.
pub fn variational_objective<T: Real>(
    params: &ModelParams<T>,
    priors: &Priors<T>,
    graph: &AgreementMultigraph,
    stats: &[TaskStats<T>],
    psi_index: PsiIndexSet,
    mode: PriorGradMode,
) -> T {
    log_posterior(params, priors, graph, stats, psi_index, mode) + variational_entropy(stats)
}

/// Agreement probability of the symmetrised model:
/// `H(p, q) = pq / (pq + (1 - p)(1 - q))`.
pub fn symmetrized_prob<T: Real>(p: T, q: T) -> Result<T> {
    let open = |x: T| x > T::zero() && x < T::one();
    if !open(p) || !open(q) {
        return Err(Error::Invalid(format!(
            "H({p}, {q}) needs arguments in (0, 1)"
        )));
    }
    let pq = p * q;
    Ok(pq / (pq + (T::one() - p) * (T::one() - q)))
}
