//! Linear stability of stationary states.
//!
//! Fluctuations around a steady state `C e^{−iμt}`, `a` are collected in the
//! vector `(δC, δC*, δa, δa*)` of length `2(2 n_max + 1) + 2` and obey
//! `i ∂ₜ v = S v`. A mode `e^{−iλt}` grows when `Im λ > 0`.

use nalgebra::{DMatrix, RealField, Schur};
use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dynamics::mean_field_matrix;
use crate::error::{Error, Result};
use crate::model::{order_parameters_raw, ModelParams};
use crate::scalar::Real;
use crate::steady::SteadyState;

/// Growth rates at or below this value count as neutral.
pub const GROWTH_THRESHOLD: f64 = 1e-6;

/// Radius around zero inside which the two smallest eigenvalues are taken to
/// be the global-phase pair and left out of the growth rate.
pub const NEUTRAL_RADIUS: f64 = 1e-4;

/// Largest steady-state residual accepted when assembling `S`.
pub const RESIDUAL_GATE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport<T> {
    pub eigenvalues: Vec<Complex<T>>,
    /// `max Im λ` over all but the global-phase pair, clamped to zero below
    /// [`GROWTH_THRESHOLD`].
    pub max_growth: T,
    pub stable: bool,
}

/// Coupling matrix `Q = a U₀N (δ⁰/2 + δ²/4) + η δ¹/2` as a banded dense matrix.
fn coupling_matrix<T: Real>(a: Complex<T>, p: &ModelParams<T>) -> DMatrix<Complex<T>> {
    let k = p.modes();
    let zero = Complex::new(T::zero(), T::zero());
    let mut q = DMatrix::from_element(k, k, zero);
    let diag = a * (p.u0n * T::lit(0.5));
    let second = a * (p.u0n * T::lit(0.25));
    let first = Complex::new(p.eta * T::lit(0.5), T::zero());
    for i in 0..k {
        q[(i, i)] = diag;
        if i + 1 < k {
            q[(i, i + 1)] = first;
            q[(i + 1, i)] = first;
        }
        if i + 2 < k {
            q[(i, i + 2)] = second;
            q[(i + 2, i)] = second;
        }
    }
    q
}

/// Assembles the linearization matrix `S` around `ss`.
pub fn build_stability_matrix<T: Real>(
    ss: &SteadyState<T>,
    p: &ModelParams<T>,
) -> Result<DMatrix<Complex<T>>> {
    let p = p.validate()?;
    if p.g1d != T::zero() {
        return Err(Error::InteractionUnsupported);
    }
    let c = ss.condensate.amplitudes();
    let k = p.modes();
    if c.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: c.len() });
    }
    if !(ss.residual.as_f64() <= RESIDUAL_GATE) {
        return Err(Error::BadSteadyState { residual: ss.residual.as_f64(), gate: RESIDUAL_GATE });
    }

    let a = ss.a;
    let m = mean_field_matrix(a, &p);
    let q = coupling_matrix(a, &p);
    let q_conj = coupling_matrix(a.conj(), &p);
    let mu = Complex::new(ss.mu, T::zero());
    let (_, bmean) = order_parameters_raw(c);

    let n = 2 * k + 2;
    let zero = Complex::new(T::zero(), T::zero());
    let mut s = DMatrix::from_element(n, n, zero);
    let (ia, ib) = (2 * k, 2 * k + 1);

    for i in 0..k {
        for j in 0..k {
            s[(i, j)] = m[(i, j)];
            s[(k + i, k + j)] = -m[(i, j)].conj();
        }
        s[(i, i)] -= mu;
        s[(k + i, k + i)] += mu;
    }

    // Column blocks coupling the condensate to (δa, δa*).
    for i in 0..k {
        let mut qs_c = zero;
        let mut q_c = zero;
        let mut qs_cc = zero;
        let mut q_cc = zero;
        for j in 0..k {
            qs_c += q_conj[(i, j)] * c[j];
            q_c += q[(i, j)] * c[j];
            qs_cc += q_conj[(i, j)] * c[j].conj();
            q_cc += q[(i, j)] * c[j].conj();
        }
        s[(i, ia)] = qs_c;
        s[(i, ib)] = q_c;
        s[(k + i, ia)] = -qs_cc;
        s[(k + i, ib)] = -q_cc;
    }

    // Row blocks: the cavity responds to δΘ and δB.
    for j in 0..k {
        let mut cq = zero;
        let mut ctq = zero;
        let mut cq_conj = zero;
        let mut ctq_conj = zero;
        for i in 0..k {
            cq += c[i].conj() * q[(i, j)];
            ctq += c[i] * q[(i, j)];
            cq_conj += c[i].conj() * q_conj[(i, j)];
            ctq_conj += c[i] * q_conj[(i, j)];
        }
        s[(ia, j)] = cq;
        s[(ia, k + j)] = ctq;
        s[(ib, j)] = -cq_conj;
        s[(ib, k + j)] = -ctq_conj;
    }

    let shift = p.delta_eff(bmean);
    s[(ia, ia)] = Complex::new(shift, -p.kappa);
    s[(ib, ib)] = Complex::new(-shift, -p.kappa);
    Ok(s)
}

/// Eigenvalues of a dense complex matrix via the complex Schur form.
pub fn eigenvalues<T: Real + RealField>(s: &DMatrix<Complex<T>>) -> Result<Vec<Complex<T>>> {
    let eps = <T as Float>::epsilon();
    let schur = Schur::try_new(s.clone(), eps, 10_000).ok_or(Error::EigenSolverFailure)?;
    let (_, t) = schur.unpack();
    let lambdas: Vec<Complex<T>> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    if lambdas.iter().any(|z| !Float::is_finite(z.re) || !Float::is_finite(z.im)) {
        return Err(Error::EigenSolverFailure);
    }
    Ok(lambdas)
}

/// Largest growth rate of `S`.
///
/// The global phase of the condensate is a symmetry, so `S` always carries a
/// defective zero eigenvalue of multiplicity two. A residual `r` of the steady
/// state splits it by about `√r`, which can exceed [`GROWTH_THRESHOLD`]; the
/// two eigenvalues closest to zero are therefore dropped when both lie within
/// [`NEUTRAL_RADIUS`]. What remains is clamped to zero below the threshold.
pub fn max_growth_rate<T: Real + RealField>(s: &DMatrix<Complex<T>>) -> Result<T> {
    let lambdas = eigenvalues(s)?;
    Ok(clamped_growth(&lambdas))
}

fn clamped_growth<T: Real>(lambdas: &[Complex<T>]) -> T {
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&i, &j| lambdas[i].norm().partial_cmp(&lambdas[j].norm()).unwrap_or(std::cmp::Ordering::Equal));
    let radius = T::lit(NEUTRAL_RADIUS);
    let skip = if order.len() >= 2 && lambdas[order[1]].norm() < radius { 2 } else { 0 };
    let growth = order[skip..].iter().map(|&i| lambdas[i].im).fold(T::neg_infinity(), T::max);
    if growth <= T::lit(GROWTH_THRESHOLD) {
        T::zero()
    } else {
        growth
    }
}

/// Full stability analysis of a steady state.
pub fn analyze<T: Real + RealField>(
    ss: &SteadyState<T>,
    p: &ModelParams<T>,
) -> Result<StabilityReport<T>> {
    let s = build_stability_matrix(ss, p)?;
    let eigenvalues = eigenvalues(&s)?;
    let max_growth = clamped_growth(&eigenvalues);
    Ok(StabilityReport { eigenvalues, stable: max_growth == T::zero(), max_growth })
}

/// Packs a perturbation `(δC, δa)` into the fluctuation vector `(δC, δC*, δa, δa*)`.
pub fn fluctuation_vector<T: Real>(dc: &[Complex<T>], da: Complex<T>) -> Vec<Complex<T>> {
    let mut v: Vec<Complex<T>> = dc.to_vec();
    v.extend(dc.iter().map(|z| z.conj()));
    v.push(da);
    v.push(da.conj());
    v
}
