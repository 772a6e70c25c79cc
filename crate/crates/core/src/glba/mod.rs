//! Gated Latent Beta Allocation.
//!
//! Each subject `i` has a reliability `tau_i` (probability that a response is
//! given seriously) and a Beta-distributed regularity `Beta(alpha_i, beta_i)`
//! governing how often it agrees with other reliable responses. Agreement with
//! an unreliable party happens at the chance rate `gamma`. Parameters are
//! estimated by variational EM over an [`AgreementMultigraph`], with an
//! empirical-Bayes loop adjusting the priors `(tau0, s0)`.
//!
//! [`AgreementMultigraph`]: crate::ingest::AgreementMultigraph

mod estep;
mod fit;
mod mstep;
mod objective;

pub use estep::{e_step_task, r_approx, task_sums, update_gamma, GammaUpdate, TaskSums};
pub use fit::{fit, fit_at_gamma, gamma_grid};
pub use mstep::{m_step_subject, stationarity_residual, MStepResult};
pub use objective::{log_posterior, symmetrized_prob, variational_entropy, variational_objective};

use crate::error::{Error, Result};
use crate::num::Real;

/// Lower bound enforced on `alpha` and `beta`.
pub const POSITIVITY_FLOOR: f64 = 1e-6;
/// Clamp applied to the approximated gate likelihood ratio.
pub const R_CLAMP: (f64, f64) = (1e-12, 1e12);
/// Interval the estimated chance-agreement rate is clamped to.
pub const GAMMA_CLAMP: (f64, f64) = (0.01, 0.49);

/// Per-subject `(tau, alpha, beta)` plus the shared chance-agreement rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub tau: Vec<T>,
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub gamma: T,
}

impl<T: Real> ModelParams<T> {
    /// Every subject at `tau = alpha = beta = 1`.
    pub fn initial(m: usize, gamma: T) -> Self {
        ModelParams {
            tau: vec![T::one(); m],
            alpha: vec![T::one(); m],
            beta: vec![T::one(); m],
            gamma,
        }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.tau.len();
        if self.alpha.len() != m || self.beta.len() != m {
            return Err(Error::Invalid("parameter vectors differ in length".into()));
        }
        if !(self.gamma > T::zero() && self.gamma < T::lit(0.5)) {
            return Err(Error::Invalid(format!(
                "gamma must lie in (0, 0.5), got {}",
                self.gamma
            )));
        }
        let floor = T::lit(POSITIVITY_FLOOR);
        for i in 0..m {
            let (t, a, b) = (self.tau[i], self.alpha[i], self.beta[i]);
            if !(t >= T::zero() && t <= T::one())
                || !(a >= floor)
                || !(b >= floor)
                || !a.is_finite()
                || !b.is_finite()
            {
                return Err(Error::Invalid(format!(
                    "subject {i}: tau={t}, alpha={a}, beta={b} out of range"
                )));
            }
        }
        Ok(())
    }

    /// Largest absolute change in any `(tau, alpha, beta)` entry.
    pub fn max_change(&self, other: &Self) -> T {
        let diff = |a: &[T], b: &[T]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (*x - *y).abs())
                .fold(T::zero(), T::max)
        };
        diff(&self.tau, &other.tau)
            .max(diff(&self.alpha, &other.alpha))
            .max(diff(&self.beta, &other.beta))
    }

    /// `alpha / (alpha + beta)`.
    pub fn agreement_mean(&self, i: usize) -> T {
        self.alpha[i] / (self.alpha[i] + self.beta[i])
    }
}

/// Priors `tau_i ~ Beta(tau0, 1 - tau0)` and `alpha_i + beta_i ~ Gamma(2, s0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priors<T> {
    pub tau0: T,
    pub s0: T,
}

impl<T: Real> Priors<T> {
    pub fn new(tau0: T, s0: T) -> Result<Self> {
        if !(tau0 > T::zero() && tau0 < T::one()) || !(s0 > T::zero()) || !s0.is_finite() {
            return Err(Error::Invalid(format!(
                "priors tau0={tau0}, s0={s0} out of range"
            )));
        }
        Ok(Priors { tau0, s0 })
    }
}

impl<T: Real> Default for Priors<T> {
    /// `tau0 = 0.5`; `s0 = 1` is the value empirical Bayes assigns to the
    /// initial `alpha = beta = 1`.
    fn default() -> Self {
        Priors {
            tau0: T::lit(0.5),
            s0: T::one(),
        }
    }
}

/// Left-hand side used for the `(alpha, beta)` stationarity system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorGradMode {
    /// Gradient of the `Gamma(2, s0)` log prior: `1/s0 - 1/(alpha + beta)`.
    #[default]
    GammaMap,
    /// The printed form `(alpha + beta)/s0 - ln(alpha + beta)`.
    Literal,
}

/// Which neighbours the normalising sum `psi` runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsiIndexSet {
    /// Other raters of the task only.
    #[default]
    ExcludeSelf,
    /// Every rater of the task, the focal subject included.
    IncludeSelf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaSetting<T> {
    Fixed(T),
    Grid(Vec<T>),
}

impl<T: Real> GammaSetting<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            GammaSetting::Fixed(g) => vec![*g],
            GammaSetting::Grid(g) => g.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig<T> {
    pub gamma: GammaSetting<T>,
    pub update_gamma: bool,
    /// Convergence threshold on the largest absolute parameter change.
    pub tol: T,
    pub max_iter: usize,
    /// Convergence threshold on `(tau0, s0)` movement between refits.
    pub eb_tol: T,
    pub eb_max_rounds: usize,
    pub prior_grad_mode: PriorGradMode,
    pub psi_index: PsiIndexSet,
    /// Recorded for provenance; fitting itself draws no random numbers.
    pub seed: u64,
}

impl<T: Real> Default for FitConfig<T> {
    fn default() -> Self {
        FitConfig {
            gamma: GammaSetting::Grid(gamma_grid(T::lit(0.3), T::lit(0.48), 10)),
            update_gamma: false,
            tol: T::lit(1e-6),
            max_iter: 500,
            eb_tol: T::lit(1e-4),
            eb_max_rounds: 20,
            prior_grad_mode: PriorGradMode::GammaMap,
            psi_index: PsiIndexSet::ExcludeSelf,
            seed: 0,
        }
    }
}

impl<T: Real> FitConfig<T> {
    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = GammaSetting::Fixed(gamma);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) || self.max_iter == 0 {
            return Err(Error::Invalid(
                "tol must be positive and max_iter at least 1".into(),
            ));
        }
        if !(self.eb_tol > T::zero()) || self.eb_max_rounds == 0 {
            return Err(Error::Invalid(
                "eb_tol must be positive and eb_max_rounds at least 1".into(),
            ));
        }
        let gammas = self.gamma.values();
        if gammas.is_empty() {
            return Err(Error::Invalid("empty gamma grid".into()));
        }
        if let Some(g) = gammas
            .iter()
            .find(|g| !(**g > T::zero() && **g < T::lit(0.5)))
        {
            return Err(Error::Invalid(format!("gamma {g} outside (0, 0.5)")));
        }
        Ok(())
    }
}

/// Variational statistics of one task, aligned with the task's members.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskStats<T> {
    pub alpha_tilde: Vec<T>,
    pub beta_tilde: Vec<T>,
    pub tau_tilde: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<T> {
    pub subject_ids: Vec<String>,
    pub params: ModelParams<T>,
    /// Priors in force during the final refit.
    pub priors: Priors<T>,
    /// EM iterations summed over all empirical-Bayes rounds.
    pub iterations: usize,
    pub converged: bool,
    /// Monitored objective after every EM iteration.
    pub loglik_trace: Vec<T>,
    /// Index into `loglik_trace` where each empirical-Bayes round starts.
    pub round_starts: Vec<usize>,
    /// Subjects whose last M-step needed the bisection fallback.
    pub fallback_subjects: Vec<usize>,
    /// Set when a gamma update hit a zero denominator.
    pub gamma_degenerate: bool,
}

impl<T: Real> FitReport<T> {
    /// Trace segments, one per empirical-Bayes round.
    pub fn rounds(&self) -> impl Iterator<Item = &[T]> {
        let ends = self
            .round_starts
            .iter()
            .skip(1)
            .copied()
            .chain(std::iter::once(self.loglik_trace.len()));
        self.round_starts
            .iter()
            .zip(ends)
            .map(move |(&s, e)| &self.loglik_trace[s..e])
    }
}
