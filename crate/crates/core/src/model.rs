//! Dimensionless model of a transversely pumped condensate in a single-mode
//! lossy cavity, and the pointwise observables derived from its state.
//!
//! Units: `ħ = 1`, energies and rates in the recoil frequency `ω_R`, times in
//! `1/ω_R`, lengths in `1/k_c`. The cavity amplitude is stored normalized,
//! `a = α/√N`, so the mean-field equations depend on the atom number only
//! through the products `U₀N` and the effective pump `η`.
//!
//! The condensate lives on one cavity wavelength with periodic boundaries and
//! is expanded on integer momenta, `ψ(x) = Σ_n c_n e^{i n x}` for
//! `n ∈ [-n_max, n_max]`, normalized to `Σ|c_n|² = 1`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{min_grid_points, SpectralGrid};
use crate::scalar::Real;

/// Norm deviation beyond which observables refuse a state.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Default boundary occupation above which a run raises the truncation alarm.
pub const TRUNCATION_ALARM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Bare cavity detuning Δ_c.
    pub delta_c: T,
    /// Collective light shift U₀N (negative for a red-detuned pump).
    pub u0n: T,
    /// Cavity field decay rate κ.
    pub kappa: T,
    /// Effective two-photon pump rate η.
    pub eta: T,
    /// Contact interaction g_aa N / L.
    pub g1d: T,
    /// Atom number; only sets the quantum-noise scale.
    pub atom_number: T,
    /// Momentum truncation, modes `-n_max..=n_max`.
    pub n_max: usize,
    /// Real-space grid points over one cavity period.
    pub grid_points: usize,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self {
            delta_c: T::lit(10.0),
            u0n: T::lit(-12.0),
            kappa: T::lit(10.0),
            eta: T::lit(4.0),
            g1d: T::zero(),
            atom_number: T::lit(1e5),
            n_max: 16,
            grid_points: 128,
        }
    }
}

impl<T: Real> ModelParams<T> {
    /// Checks every parameter invariant and returns the parameters unchanged.
    pub fn validate(self) -> Result<Self> {
        let fields = [
            ("delta_c", self.delta_c),
            ("u0n", self.u0n),
            ("kappa", self.kappa),
            ("eta", self.eta),
            ("g1d", self.g1d),
            ("atom_number", self.atom_number),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue(name));
            }
        }
        if self.kappa <= T::zero() {
            return Err(Error::NonPositiveKappa(self.kappa.as_f64()));
        }
        if self.n_max < 2 {
            return Err(Error::TruncationTooSmall(self.n_max));
        }
        let required = min_grid_points(self.n_max);
        if self.grid_points < required {
            return Err(Error::GridTooCoarse { grid_points: self.grid_points, required });
        }
        if self.atom_number < T::one() {
            return Err(Error::InvalidValue {
                name: "atom_number",
                reason: format!("must be at least 1, got {}", self.atom_number),
            });
        }
        Ok(self)
    }

    /// Number of retained momentum modes, `2 n_max + 1`.
    pub fn modes(&self) -> usize {
        2 * self.n_max + 1
    }

    /// Dispersively shifted detuning of the homogeneous state, `δ₀ = Δ_c + U₀N/2`.
    pub fn delta0(&self) -> T {
        self.delta_c + self.u0n * T::lit(0.5)
    }

    /// Effective detuning `δ_eff = Δ_c + U₀N·B` for bunching `B`.
    pub fn delta_eff(&self, bmean: T) -> T {
        self.delta_c + self.u0n * bmean
    }

    pub fn with_eta(mut self, eta: T) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_delta_c(mut self, delta_c: T) -> Self {
        self.delta_c = delta_c;
        self
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }
}

/// Condensate amplitudes `c_n`, stored at index `n + n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensateState<T> {
    amps: Vec<Complex<T>>,
}

impl<T: Real> CondensateState<T> {
    /// Homogeneous condensate, `c_0 = 1`.
    pub fn homogeneous(n_max: usize) -> Self {
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 2 * n_max + 1];
        amps[n_max] = Complex::new(T::one(), T::zero());
        Self { amps }
    }

    /// Wraps raw amplitudes without normalizing them. The length must be odd.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        if amps.len() < 5 || amps.len() % 2 == 0 {
            return Err(Error::InvalidValue {
                name: "amplitudes",
                reason: format!("expected 2 n_max + 1 >= 5 entries, got {}", amps.len()),
            });
        }
        Ok(Self { amps })
    }

    /// Builds a state from `(n, c_n)` pairs and normalizes it.
    pub fn from_modes(n_max: usize, modes: &[(i32, Complex<T>)]) -> Result<Self> {
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 2 * n_max + 1];
        for &(n, c) in modes {
            let k = n + n_max as i32;
            if k < 0 || k as usize >= amps.len() {
                return Err(Error::InvalidValue {
                    name: "mode",
                    reason: format!("n = {n} outside ±{n_max}"),
                });
            }
            amps[k as usize] = c;
        }
        Self::from_amplitudes(amps)?.normalized()
    }

    pub fn n_max(&self) -> usize {
        self.amps.len() / 2
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    /// Amplitude of momentum `n`; zero outside the truncation.
    pub fn get(&self, n: i32) -> Complex<T> {
        let k = n + self.n_max() as i32;
        if k < 0 || k as usize >= self.amps.len() {
            Complex::new(T::zero(), T::zero())
        } else {
            self.amps[k as usize]
        }
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::UnnormalizedState { norm: norm.as_f64() });
        }
        let inv = T::one() / norm;
        self.amps.iter_mut().for_each(|c| *c = *c * inv);
        Ok(self)
    }

    fn check_norm(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - T::one()).abs() > T::lit(NORM_TOLERANCE) || !norm.is_finite() {
            return Err(Error::UnnormalizedState { norm: norm.as_f64() });
        }
        Ok(())
    }

    /// Occupation of the outermost retained modes, `max(|c_{±n_max}|²)`.
    pub fn boundary_occupation(&self) -> T {
        let last = self.amps.len() - 1;
        self.amps[0].norm_sqr().max(self.amps[last].norm_sqr())
    }

    /// Applies `c_n → e^{iφ} c_n`.
    pub fn rotated(&self, phase: T) -> Self {
        let r = Complex::from_polar(T::one(), phase);
        Self { amps: self.amps.iter().map(|c| c * r).collect() }
    }
}

/// Full mean-field state: condensate, normalized cavity amplitude and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState<T> {
    pub condensate: CondensateState<T>,
    pub a: Complex<T>,
    pub t: T,
}

impl<T: Real> SystemState<T> {
    pub fn new(condensate: CondensateState<T>, a: Complex<T>, t: T) -> Self {
        Self { condensate, a, t }
    }

    /// Homogeneous condensate with a real, positive cavity seed at `t = 0`.
    pub fn seeded(n_max: usize, seed: T) -> Self {
        Self {
            condensate: CondensateState::homogeneous(n_max),
            a: Complex::new(seed, T::zero()),
            t: T::zero(),
        }
    }

    /// Renormalized intensity `I = |a|² = |α|²/N`.
    pub fn intensity(&self) -> T {
        self.a.norm_sqr()
    }
}

/// Density-grating order parameters Θ = ⟨cos x⟩ and B = ⟨cos² x⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParams<T> {
    pub theta: T,
    pub bmean: T,
}

/// Quadratic forms `(C†(δ¹/2)C, C†(δ⁰/2 + δ²/4)C)` without a norm check.
#[inline]
pub fn order_parameters_raw<T: Real>(amps: &[Complex<T>]) -> (T, T) {
    let mut theta = T::zero();
    let mut cos2 = T::zero();
    let mut norm = T::zero();
    for (k, c) in amps.iter().enumerate() {
        norm += c.norm_sqr();
        if let Some(next) = amps.get(k + 1) {
            theta += c.re * next.re + c.im * next.im;
        }
        if let Some(next2) = amps.get(k + 2) {
            cos2 += c.re * next2.re + c.im * next2.im;
        }
    }
    let half = T::lit(0.5);
    (theta, half * norm + half * cos2)
}

/// Θ and B of a normalized condensate.
pub fn order_parameters<T: Real>(c: &CondensateState<T>) -> Result<OrderParams<T>> {
    c.check_norm()?;
    let (theta, bmean) = order_parameters_raw(c.amplitudes());
    Ok(OrderParams { theta, bmean })
}

/// Half-period translation: `a → -a`, `c_n → (-1)^n c_n`.
pub fn z2_transform<T: Real>(s: &SystemState<T>) -> SystemState<T> {
    let n_max = s.condensate.n_max();
    let amps = s
        .condensate
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, &c)| if (k + n_max) % 2 == 1 { -c } else { c })
        .collect();
    SystemState { condensate: CondensateState { amps }, a: -s.a, t: s.t }
}

/// Normalized density `ρ(x_j) = |ψ(x_j)|² / 2π` on `grid_points` uniform
/// points covering `[0, 2π)`.
pub fn density_profile<T: Real>(c: &CondensateState<T>, grid_points: usize) -> Result<Vec<T>> {
    c.check_norm()?;
    let mut grid = SpectralGrid::new(c.n_max(), grid_points)?;
    let mut field = vec![Complex::new(T::zero(), T::zero()); grid_points];
    grid.synthesize(c.amplitudes(), &mut field);
    let inv_len = T::one() / T::TAU();
    Ok(field.iter().map(|z| z.norm_sqr() * inv_len).collect())
}

/// Kinetic energy per particle, `Σ n² |c_n|²` in units of `ħω_R`.
pub fn kinetic_energy<T: Real>(c: &CondensateState<T>) -> T {
    kinetic_energy_raw(c.amplitudes())
}

#[inline]
pub fn kinetic_energy_raw<T: Real>(amps: &[Complex<T>]) -> T {
    let n_max = (amps.len() / 2) as isize;
    amps.iter()
        .enumerate()
        .map(|(k, c)| {
            let n = T::from_isize(k as isize - n_max).unwrap();
            n * n * c.norm_sqr()
        })
        .sum()
}

/// Momentum-space correlation `χ_n = c_0 (c_n* + c_{-n}*)`.
pub fn chi<T: Real>(c: &CondensateState<T>, n: usize) -> Complex<T> {
    chi_raw(c.amplitudes(), n)
}

#[inline]
pub fn chi_raw<T: Real>(amps: &[Complex<T>], n: usize) -> Complex<T> {
    let n_max = amps.len() / 2;
    if n > n_max {
        return Complex::new(T::zero(), T::zero());
    }
    amps[n_max] * (amps[n_max + n].conj() + amps[n_max - n].conj())
}
