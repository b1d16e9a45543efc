//! Stationary states with the cavity eliminated adiabatically, and the
//! normal/superradiant threshold.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::MeanFieldSystem;
use crate::error::{Error, Result};
use crate::model::{order_parameters_raw, CondensateState, ModelParams};
use crate::scalar::Real;

/// Symmetry-breaking admixture placed in `c_{±1}` of the default seed.
pub const DEFAULT_SEED_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImaginaryTimeConfig<T> {
    /// Imaginary-time step.
    pub dtau: T,
    /// Convergence threshold on the max-norm of `H C − μ C`.
    pub tol: T,
    pub max_iter: usize,
    /// Iterations without a tenfold residual decrease before the run is
    /// declared oscillatory.
    pub stall_window: usize,
    /// Fall back to co-relaxing the cavity amplitude when the direct
    /// iteration stalls.
    pub allow_extrapolation: bool,
    /// Cavity relaxation factor of the fallback iteration.
    pub relaxation: T,
}

impl<T: Real> Default for ImaginaryTimeConfig<T> {
    fn default() -> Self {
        Self {
            dtau: T::lit(1e-3),
            tol: T::lit(1e-10),
            max_iter: 20_000_000,
            stall_window: 2_000_000,
            allow_extrapolation: true,
            relaxation: T::lit(0.01),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState<T> {
    pub condensate: CondensateState<T>,
    pub a: Complex<T>,
    /// Chemical potential, the eigenvalue of `M(a) + g|ψ|²`.
    pub mu: T,
    /// Energy per particle `⟨M(a)⟩ + (g/2)⟨|ψ|⁴⟩`; equals `mu` when `g = 0`.
    pub energy: T,
    /// Max-norm of the real-time drift in the frame rotating at `mu`.
    pub residual: T,
    /// Produced by the damped fallback iteration rather than the direct one.
    pub extrapolated: bool,
    pub iterations: usize,
}

impl<T: Real> SteadyState<T> {
    pub fn theta(&self) -> T {
        order_parameters_raw(self.condensate.amplitudes()).0
    }

    pub fn bmean(&self) -> T {
        order_parameters_raw(self.condensate.amplitudes()).1
    }
}

/// Cavity amplitude slaved to the atoms: the stationary point of
/// `i da/dt = (δ_eff − iκ) a + ηΘ`, i.e. `a = −ηΘ / (δ_eff − iκ)`.
pub fn adiabatic_cavity<T: Real>(theta: T, bmean: T, p: &ModelParams<T>) -> Complex<T> {
    let denom = Complex::new(p.delta_eff(bmean), -p.kappa);
    Complex::new(-p.eta * theta, T::zero()) / denom
}

/// Analytic normal→superradiant threshold
/// `η_c² = (1/2 + g)(δ₀ + κ²/δ₀)`; `None` when `δ₀ ≤ 0`.
pub fn analytic_critical_pump<T: Real>(p: &ModelParams<T>) -> Option<T> {
    let d0 = p.delta0();
    if d0 <= T::zero() {
        return None;
    }
    let val = (T::lit(0.5) + p.g1d) * (d0 + p.kappa * p.kappa / d0);
    (val > T::zero()).then(|| val.sqrt())
}

/// Homogeneous condensate with `c_{±1} = ε` (renormalized).
pub fn symmetry_breaking_seed<T: Real>(n_max: usize, epsilon: T) -> CondensateState<T> {
    let eps = Complex::new(epsilon, T::zero());
    CondensateState::from_modes(n_max, &[(0, Complex::new(T::one(), T::zero())), (1, eps), (-1, eps)])
        .expect("seed modes lie inside the truncation")
}

struct Iteration<T: Real> {
    sys: MeanFieldSystem<T>,
    c: Vec<Complex<T>>,
    hc: Vec<Complex<T>>,
}

impl<T: Real> Iteration<T> {
    /// Evaluates `H C`, returning `(μ, residual)` at cavity amplitude `a`.
    fn evaluate(&mut self, a: Complex<T>) -> (T, T) {
        let eta = self.sys.params().eta;
        self.sys.apply_hamiltonian(&self.c, a, eta, &mut self.hc);
        let mu: T = self.c.iter().zip(&self.hc).map(|(c, h)| (c.conj() * h).re).sum();
        let atomic = self
            .c
            .iter()
            .zip(&self.hc)
            .map(|(c, h)| (*h - *c * mu).norm())
            .fold(T::zero(), T::max);
        let p = self.sys.params();
        let (theta, bmean) = order_parameters_raw(&self.c);
        let cavity = (a * Complex::new(p.delta_eff(bmean), -p.kappa)
            + Complex::new(p.eta * theta, T::zero()))
        .norm();
        (mu, atomic.max(cavity))
    }

    fn descend(&mut self, dtau: T) {
        for (c, h) in self.c.iter_mut().zip(&self.hc) {
            *c = *c - *h * dtau;
        }
        let norm = self.c.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        let inv = T::one() / norm;
        self.c.iter_mut().for_each(|z| *z = *z * inv);
    }

    fn slaved_cavity(&self) -> Complex<T> {
        let (theta, bmean) = order_parameters_raw(&self.c);
        adiabatic_cavity(theta, bmean, self.sys.params())
    }

    fn finish(mut self, a: Complex<T>, extrapolated: bool, iterations: usize) -> SteadyState<T> {
        let (mu, residual) = self.evaluate(a);
        let interaction = self.sys.interaction_energy(&self.c);
        SteadyState {
            condensate: CondensateState::from_amplitudes(self.c).expect("odd mode count"),
            a,
            mu,
            energy: mu - interaction,
            residual,
            extrapolated,
            iterations,
        }
    }
}

/// Relaxes `init` in imaginary time under `−(M(a(C)) + g|ψ|²)`, renormalizing
/// every step and re-slaving the cavity to the current `(Θ, B)`.
pub fn imaginary_time_solve<T: Real>(
    p: &ModelParams<T>,
    init: &CondensateState<T>,
    cfg: &ImaginaryTimeConfig<T>,
) -> Result<SteadyState<T>> {
    let sys = MeanFieldSystem::new(*p)?;
    let top = T::from_usize_lossy(p.n_max * p.n_max);
    if !(cfg.dtau > T::zero()) || cfg.dtau * top >= T::lit(2.0) {
        return Err(Error::InvalidValue {
            name: "dtau",
            reason: format!("explicit descent needs 0 < dtau < 2 / n_max^2 = {}", 2.0 / (p.n_max * p.n_max) as f64),
        });
    }
    if init.amplitudes().len() != p.modes() {
        return Err(Error::DimensionMismatch { expected: p.modes(), found: init.amplitudes().len() });
    }
    let c = init.clone().normalized()?.into_amplitudes();
    let k = c.len();
    let mut it = Iteration { sys, c, hc: vec![Complex::new(T::zero(), T::zero()); k] };

    let mut best = T::infinity();
    let mut best_at = 0usize;
    let mut a = it.slaved_cavity();
    for n in 0..cfg.max_iter {
        let (_, residual) = it.evaluate(a);
        if !residual.is_finite() {
            return Err(Error::NonFiniteState { t: n as f64 * cfg.dtau.as_f64() });
        }
        if residual <= cfg.tol {
            return Ok(it.finish(a, false, n));
        }
        if residual < best * T::lit(0.1) {
            best = residual;
            best_at = n;
        } else if n - best_at > cfg.stall_window {
            let theta = order_parameters_raw(&it.c).0.as_f64();
            if !cfg.allow_extrapolation {
                return Err(Error::OscillatoryResidual { residual: residual.as_f64(), theta });
            }
            return relax_with_lag(it, a, cfg, n);
        }
        it.descend(cfg.dtau);
        a = it.slaved_cavity();
    }
    let (_, residual) = it.evaluate(a);
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        residual: residual.as_f64(),
        theta: order_parameters_raw(&it.c).0.as_f64(),
    })
}

fn relax_with_lag<T: Real>(
    mut it: Iteration<T>,
    mut a: Complex<T>,
    cfg: &ImaginaryTimeConfig<T>,
    done: usize,
) -> Result<SteadyState<T>> {
    let mut best = T::infinity();
    let mut best_at = 0usize;
    let budget = cfg.max_iter.saturating_sub(done);
    for n in 0..budget {
        let (_, residual) = it.evaluate(a);
        if residual <= cfg.tol {
            return Ok(it.finish(a, true, done + n));
        }
        if residual < best * T::lit(0.1) {
            best = residual;
            best_at = n;
        } else if n - best_at > cfg.stall_window {
            return Err(Error::OscillatoryResidual {
                residual: residual.as_f64(),
                theta: order_parameters_raw(&it.c).0.as_f64(),
            });
        }
        it.descend(cfg.dtau);
        let target = it.slaved_cavity();
        a = a + (target - a) * cfg.relaxation;
    }
    let (_, residual) = it.evaluate(a);
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        residual: residual.as_f64(),
        theta: order_parameters_raw(&it.c).0.as_f64(),
    })
}

/// Default seeded solve: `ε = +1e-3` in `c_{±1}`, or `−1e-3` for the Z₂ partner.
pub fn solve_from_seed<T: Real>(
    p: &ModelParams<T>,
    positive_branch: bool,
    cfg: &ImaginaryTimeConfig<T>,
) -> Result<SteadyState<T>> {
    let eps = T::lit(DEFAULT_SEED_EPSILON);
    let seed = symmetry_breaking_seed(p.n_max, if positive_branch { eps } else { -eps });
    imaginary_time_solve(p, &seed, cfg)
}

/// Whether the imaginary-time solution from a small seed is superradiant.
///
/// Runs that hit the iteration cap are judged by whether `|Θ|` ended above
/// its seeded value.
pub fn relaxes_to_superradiant<T: Real>(
    p: &ModelParams<T>,
    seed_epsilon: T,
    cfg: &ImaginaryTimeConfig<T>,
) -> Result<bool> {
    let seed = symmetry_breaking_seed(p.n_max, seed_epsilon);
    let theta0 = order_parameters_raw(seed.amplitudes()).0.abs();
    match imaginary_time_solve(p, &seed, cfg) {
        Ok(ss) => Ok(ss.theta().abs() > T::lit(1e3) * cfg.tol.max(T::epsilon())),
        Err(Error::NoConvergence { theta, .. }) | Err(Error::OscillatoryResidual { theta, .. }) => {
            Ok(T::lit(theta.abs()) > theta0)
        }
        Err(e) => Err(e),
    }
}

/// Bisects the pump rate at which the imaginary-time steady state departs
/// from the homogeneous condensate, to relative width `rel_tol`.
pub fn numerical_critical_pump<T: Real>(
    p: &ModelParams<T>,
    lower: T,
    upper: T,
    rel_tol: T,
    cfg: &ImaginaryTimeConfig<T>,
) -> Result<T> {
    let eps = T::lit(1e-6);
    let mut lo = lower;
    let mut hi = upper;
    if relaxes_to_superradiant(&p.with_eta(lo), eps, cfg)? {
        return Err(Error::InvalidValue {
            name: "lower",
            reason: format!("already superradiant at eta = {lo}"),
        });
    }
    if !relaxes_to_superradiant(&p.with_eta(hi), eps, cfg)? {
        return Err(Error::InvalidValue {
            name: "upper",
            reason: format!("still normal at eta = {hi}"),
        });
    }
    while hi - lo > rel_tol * hi {
        let mid = (lo + hi) * T::lit(0.5);
        if relaxes_to_superradiant(&p.with_eta(mid), eps, cfg)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}
