//! Closed-form distinguishability bound and run-count planning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise amplitudes: pairwise overlap `xi`, transmission amplitude `eta`
/// (a boson survives with probability `eta^2`) and dark-count rate `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub xi: f64,
    pub eta: f64,
    pub nu: f64,
}

impl NoiseParams {
    /// Strict constructor: `xi, eta` in `(0, 1]`, `nu >= 0`.
    pub fn new(xi: f64, eta: f64, nu: f64) -> Result<Self> {
        let p = NoiseParams { xi, eta, nu };
        p.validate()?;
        Ok(p)
    }

    /// Ideal lossless channel with overlap `xi`.
    pub fn lossless(xi: f64) -> Self {
        NoiseParams { xi, eta: 1.0, nu: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let unit_open = |x: f64| x > 0.0 && x <= 1.0;
        if !unit_open(self.xi) {
            return Err(Error::InvalidNoise(format!("xi = {} must lie in (0, 1]", self.xi)));
        }
        if !unit_open(self.eta) {
            return Err(Error::InvalidNoise(format!("eta = {} must lie in (0, 1]", self.eta)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidNoise(format!("nu = {} must be finite and non-negative", self.nu)));
        }
        Ok(())
    }

    /// Channel-level check used by the probability engine and samplers, which
    /// also accept the closed endpoints `xi = 0` and `eta = 0`.
    pub fn validate_channel(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.xi) {
            return Err(Error::InvalidNoise(format!("xi = {} must lie in [0, 1]", self.xi)));
        }
        if !unit(self.eta) {
            return Err(Error::InvalidNoise(format!("eta = {} must lie in [0, 1]", self.eta)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidNoise(format!("nu = {} must be finite and non-negative", self.nu)));
        }
        Ok(())
    }

    /// Single-boson survival probability `eta^2`.
    pub fn survival(&self) -> f64 {
        self.eta * self.eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    NoCollision,
    StrongCollision,
    Intermediate,
}

/// Advisory label: `rho > 0.2` is strong collision, `rho < 2/sqrt(N)` no
/// collision, anything else intermediate. The strong test wins when both hold.
pub fn classify_regime(rho: f64, n: usize) -> Regime {
    if rho > 0.2 {
        Regime::StrongCollision
    } else if rho < 2.0 / (n as f64).sqrt() {
        Regime::NoCollision
    } else {
        Regime::Intermediate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub w1: f64,
    pub relative_variance: f64,
    pub regime: Regime,
    pub sample_budget: u64,
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("density rho = {rho} must lie in (0, 1]")));
    }
    Ok(())
}

fn check_k(k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidArgument("cutoff K must be at least 1".into()));
    }
    Ok(())
}

/// `W_1 = (xi eta rho)^{K+1} / (1 + xi eta rho) * exp(-1 - nu - eta rho)`.
pub fn w1_bound(noise: &NoiseParams, rho: f64, k: usize) -> Result<f64> {
    noise.validate()?;
    check_rho(rho)?;
    check_k(k)?;
    let x = noise.xi * noise.eta * rho;
    Ok(x.powi(k as i32 + 1) / (1.0 + x) * (-1.0 - noise.nu - noise.eta * rho).exp())
}

/// Haar relative variance of the gap, `(1 - rho)(K + 1)^2 / N`.
pub fn relative_variance(rho: f64, k: usize, n: usize) -> Result<f64> {
    check_rho(rho)?;
    check_k(k)?;
    if n < 1 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let kp1 = (k + 1) as f64;
    Ok((1.0 - rho) * kp1 * kp1 / n as f64)
}

pub const DEFAULT_TARGET_SIGMAS: f64 = 5.0;

/// Smallest run count `T` with `target_sigmas / sqrt(T) <= W_1 / 2`.
pub fn sample_budget(noise: &NoiseParams, rho: f64, k: usize, n: usize, target_sigmas: f64) -> Result<BoundReport> {
    if !(target_sigmas > 0.0 && target_sigmas.is_finite()) {
        return Err(Error::InvalidArgument(format!("target_sigmas = {target_sigmas} must be positive")));
    }
    let w1 = w1_bound(noise, rho, k)?;
    let relative_variance = relative_variance(rho, k, n)?;
    if w1 <= 0.0 || !w1.is_normal() {
        return Err(Error::BudgetOverflow(format!("W1 = {w1:e} underflows; no finite run count resolves it")));
    }
    let raw = (2.0 * target_sigmas / w1).powi(2);
    if !(raw < u64::MAX as f64) {
        return Err(Error::BudgetOverflow(format!(
            "resolving W1 = {w1:e} at {target_sigmas} sigma needs about {raw:e} runs"
        )));
    }
    let mut budget = raw.ceil() as u64;
    // guard against the ceiling landing one short through rounding
    while target_sigmas / (budget as f64).sqrt() > w1 / 2.0 {
        budget += 1;
    }
    Ok(BoundReport { w1, relative_variance, regime: classify_regime(rho, n), sample_budget: budget.max(1) })
}
