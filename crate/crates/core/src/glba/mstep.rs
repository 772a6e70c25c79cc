use crate::num::Real;
use crate::special::{digamma, trigamma};

use super::{PriorGradMode, Priors, POSITIVITY_FLOOR};

const MAX_NEWTON: usize = 100;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MStepResult<T> {
    pub alpha: T,
    pub beta: T,
    pub tau: T,
    /// Max-norm residual of the stationarity system at `(alpha, beta)`.
    pub residual: T,
    /// Newton failed and the nested bisection produced the answer.
    pub fallback: bool,
}

/// Prior part of the stationarity system and its derivative in `s = alpha + beta`.
fn prior_lhs<T: Real>(s: T, s0: T, mode: PriorGradMode) -> (T, T) {
    match mode {
        PriorGradMode::GammaMap => (s0.recip() - s.recip(), (s * s).recip()),
        PriorGradMode::Literal => (s / s0 - s.ln(), s0.recip() - s.recip()),
    }
}

/// Data sufficient for the `(alpha, beta)` solve: summed expected logs and task count.
#[derive(Debug, Clone, Copy)]
struct Moments<T> {
    log_j: T,
    log_not_j: T,
    count: T,
}

impl<T: Real> Moments<T> {
    fn new(stats: &[(T, T, T)]) -> Self {
        let mut m = Moments {
            log_j: T::zero(),
            log_not_j: T::zero(),
            count: T::from_count(stats.len()),
        };
        for &(a, b, _) in stats {
            let total = digamma(a + b);
            m.log_j = m.log_j + digamma(a) - total;
            m.log_not_j = m.log_not_j + digamma(b) - total;
        }
        m
    }

    fn residual(&self, alpha: T, beta: T, s0: T, mode: PriorGradMode) -> (T, T) {
        let s = alpha + beta;
        let ds = digamma(s);
        let (lhs, _) = prior_lhs(s, s0, mode);
        (
            self.log_j - self.count * (digamma(alpha) - ds) - lhs,
            self.log_not_j - self.count * (digamma(beta) - ds) - lhs,
        )
    }

    fn jacobian(&self, alpha: T, beta: T, s0: T, mode: PriorGradMode) -> [[T; 2]; 2] {
        let s = alpha + beta;
        let ts = trigamma(s);
        let (_, dlhs) = prior_lhs(s, s0, mode);
        let off = self.count * ts - dlhs;
        [
            [-self.count * (trigamma(alpha) - ts) - dlhs, off],
            [off, -self.count * (trigamma(beta) - ts) - dlhs],
        ]
    }
}

fn norm<T: Real>(r: (T, T)) -> T {
    r.0.abs().max(r.1.abs())
}

/// Residual of the `(alpha, beta)` stationarity system for one subject.
/// `stats` holds `(alpha_tilde, beta_tilde, tau_tilde)` for every task the subject rated.
pub fn stationarity_residual<T: Real>(
    alpha: T,
    beta: T,
    stats: &[(T, T, T)],
    priors: &Priors<T>,
    mode: PriorGradMode,
) -> (T, T) {
    Moments::new(stats).residual(alpha, beta, priors.s0, mode)
}

fn newton_tol<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(1e3))
}

/// M-step for one subject: `(alpha, beta)` from the stationarity system by
/// projected damped Newton (nested bisection as fallback), `tau` in closed form.
pub fn m_step_subject<T: Real>(
    stats: &[(T, T, T)],
    warm: (T, T),
    priors: &Priors<T>,
    mode: PriorGradMode,
) -> MStepResult<T> {
    let n = T::from_count(stats.len());
    let tau_sum: T = stats.iter().map(|s| s.2).sum();
    let tau = (priors.tau0 + tau_sum) / (n + T::one());

    let floor = T::lit(POSITIVITY_FLOOR);
    let warm = (warm.0.max(floor), warm.1.max(floor));
    let moments = Moments::new(stats);
    let (alpha, beta, fallback) = if stats.is_empty() {
        solve_prior_only(warm, priors.s0, mode)
    } else {
        match newton(&moments, warm, priors.s0, mode) {
            Some((a, b)) => (a, b, false),
            None => {
                let (a, b) = bisect(&moments, priors.s0, mode);
                (a, b, true)
            }
        }
    };
    MStepResult {
        alpha,
        beta,
        tau,
        residual: norm(moments.residual(alpha, beta, priors.s0, mode)),
        fallback,
    }
}

fn newton<T: Real>(m: &Moments<T>, start: (T, T), s0: T, mode: PriorGradMode) -> Option<(T, T)> {
    let floor = T::lit(POSITIVITY_FLOOR);
    let tol = newton_tol::<T>();
    let (mut a, mut b) = start;
    let mut r = m.residual(a, b, s0, mode);
    let mut rn = norm(r);
    for _ in 0..MAX_NEWTON {
        if rn <= tol {
            return Some((a, b));
        }
        let j = m.jacobian(a, b, s0, mode);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let da = -(j[1][1] * r.0 - j[0][1] * r.1) / det;
        let db = -(-j[1][0] * r.0 + j[0][0] * r.1) / det;
        let mut step = T::one();
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let ca = (a + step * da).max(floor);
            let cb = (b + step * db).max(floor);
            let cr = m.residual(ca, cb, s0, mode);
            let cn = norm(cr);
            if cn.is_finite() && cn < rn {
                a = ca;
                b = cb;
                r = cr;
                rn = cn;
                accepted = true;
                break;
            }
            step = step * T::lit(0.5);
        }
        if !accepted {
            // Stalled at rounding level, or pinned against the floor.
            return (rn <= T::lit(1e-8).max(tol) || a == floor || b == floor).then_some((a, b));
        }
    }
    (rn <= tol).then_some((a, b))
}

/// No rated tasks: only the prior constrains `alpha + beta`; the warm start's
/// ratio is kept.
fn solve_prior_only<T: Real>(warm: (T, T), s0: T, mode: PriorGradMode) -> (T, T, bool) {
    let ratio = warm.0 / (warm.0 + warm.1);
    let split = |s: T| (ratio * s, (T::one() - ratio) * s);
    match mode {
        PriorGradMode::GammaMap => {
            let (a, b) = split(s0);
            (a, b, false)
        }
        PriorGradMode::Literal => {
            // s/s0 = ln s has roots only when s0 >= e; take the one nearest the warm start.
            let f = |s: T| s / s0 - s.ln();
            let lo = T::lit(2.0 * POSITIVITY_FLOOR);
            if f(s0) > T::zero() {
                return (warm.0, warm.1, true);
            }
            let root = |mut x: T, mut y: T| {
                for _ in 0..200 {
                    let mid = (x * y).sqrt();
                    if (f(mid) > T::zero()) == (f(x) > T::zero()) {
                        x = mid;
                    } else {
                        y = mid;
                    }
                }
                (x * y).sqrt()
            };
            let small = root(lo.max(T::one()), s0);
            let large = root(s0, s0 * s0.ln().max(T::one()) * T::lit(4.0) + T::lit(4.0));
            let s = warm.0 + warm.1;
            let pick = if (s.ln() - small.ln()).abs() <= (s.ln() - large.ln()).abs() {
                small
            } else {
                large
            };
            let (a, b) = split(pick);
            (a, b, false)
        }
    }
}

/// Outer bisection on `ln s`, inner bisection on the mean `alpha / s`. The
/// difference of the two equations is free of the prior and strictly monotone
/// in the mean; the first equation along that curve is monotone in `s` when
/// the prior is log-concave.
fn bisect<T: Real>(m: &Moments<T>, s0: T, mode: PriorGradMode) -> (T, T) {
    let floor = T::lit(POSITIVITY_FLOOR);
    let gap = m.log_j - m.log_not_j;
    let split = |s: T| {
        let mut lo = floor / s;
        let mut hi = T::one() - floor / s;
        let d = |mu: T| gap - m.count * (digamma(mu * s) - digamma((T::one() - mu) * s));
        if d(lo) <= T::zero() {
            return (floor, s - floor);
        }
        if d(hi) >= T::zero() {
            return (s - floor, floor);
        }
        for _ in 0..200 {
            let mid = T::lit(0.5) * (lo + hi);
            if d(mid) > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() {
                break;
            }
        }
        let mu = T::lit(0.5) * (lo + hi);
        (mu * s, (T::one() - mu) * s)
    };
    let g = |log_s: T| {
        let (a, b) = split(log_s.exp());
        m.residual(a, b, s0, mode).0
    };
    let mut lo = (floor * T::lit(2.000_001)).ln();
    let mut hi = T::lit(1e10).ln();
    let (glo, ghi) = (g(lo), g(hi));
    if glo.signum() == ghi.signum() {
        let end = if glo.abs() <= ghi.abs() { lo } else { hi };
        return split(end.exp());
    }
    let lo_positive = glo > T::zero();
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if (g(mid) > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * hi.abs().max(T::one()) {
            break;
        }
    }
    split((T::lit(0.5) * (lo + hi)).exp())
}
