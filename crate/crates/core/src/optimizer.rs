//! Sequential single-parameter optimization for sinusoidal losses.
//!
//! For a circuit whose parameters each enter one `exp(-iθP/2)` rotation, the
//! loss restricted to a single parameter is `c + A cos(x) - B sin(x)` around
//! the current value. Two probes at `±π/2` plus the current value determine
//! the three coefficients, and the minimum follows in closed form.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// A loss that may reuse partial results between nearby evaluations.
pub trait FragmentedLoss {
    fn num_params(&self) -> usize;

    /// From-scratch evaluation at `theta`; re-anchors any cache there.
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64>;

    /// Loss at `theta` with parameter `i` replaced by `value`, where `theta`
    /// is the current anchor. Implementations may reuse every cached result
    /// that does not depend on parameter `i`.
    fn evaluate_shifted(&mut self, theta: &[f64], i: usize, value: f64) -> Result<f64> {
        let mut t = theta.to_vec();
        t[i] = value;
        self.evaluate(&t)
    }

    /// Moves the anchor: parameter `i` changed by `delta` after probes at
    /// `±π/2` were taken with [`FragmentedLoss::evaluate_shifted`].
    fn accept(&mut self, _theta: &[f64], _i: usize, _delta: f64) -> Result<()> {
        Ok(())
    }
}

/// Adapter for a plain closure without caching.
pub struct FnLoss<F> {
    pub n_params: usize,
    pub f: F,
}

impl<F: FnMut(&[f64]) -> f64> FragmentedLoss for FnLoss<F> {
    fn num_params(&self) -> usize {
        self.n_params
    }

    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        Ok((self.f)(theta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NftConfig {
    pub max_sweeps: usize,
    /// Sweeps between from-scratch loss evaluations.
    pub reset_interval: usize,
    /// Stop once a sweep improves the best loss by less than this.
    pub plateau_tol: f64,
}

impl Default for NftConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 50,
            reset_interval: 1,
            plateau_tol: 1e-3,
        }
    }
}

/// Amplitude below which a parameter is treated as having no effect.
const DEGENERATE: f64 = 1e-12;

fn wrap(angle: f64) -> f64 {
    let a = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// One closed-form update of parameter `i`. `current` is the loss at
/// `theta`. Returns the fitted loss at the new value; `theta` is modified
/// in place.
pub fn nft_update<L: FragmentedLoss + ?Sized>(
    loss: &mut L,
    theta: &mut [f64],
    i: usize,
    current: f64,
) -> Result<f64> {
    let t = theta[i];
    let plus = loss.evaluate_shifted(theta, i, t + FRAC_PI_2)?;
    let minus = loss.evaluate_shifted(theta, i, t - FRAC_PI_2)?;
    let c = 0.5 * (plus + minus);
    let a = current - c;
    let b = 0.5 * (minus - plus);
    let r = a.hypot(b);
    if r < DEGENERATE {
        loss.accept(theta, i, 0.0)?;
        return Ok(current);
    }
    let delta = b.atan2(-a);
    theta[i] = wrap(t + delta);
    loss.accept(theta, i, delta)?;
    Ok(c - r)
}

/// Outcome of [`nft_minimize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NftResult {
    pub theta: Vec<f64>,
    /// Best loss seen at a from-scratch evaluation (or fitted, between resets).
    pub loss: f64,
    pub sweeps: usize,
    /// Full or partial loss evaluations performed.
    pub evaluations: usize,
    /// Best loss after each sweep.
    pub history: Vec<f64>,
}

/// Sweeps [`nft_update`] over all parameters in order until a sweep fails
/// to improve the best loss by `plateau_tol`, returning the best point seen.
pub fn nft_minimize<L: FragmentedLoss + ?Sized>(loss: &mut L, theta0: &[f64], cfg: &NftConfig) -> Result<NftResult> {
    assert!(cfg.max_sweeps >= 1 && cfg.reset_interval >= 1, "invalid NFT configuration");
    let d = loss.num_params();
    assert_eq!(theta0.len(), d, "parameter vector length");
    let mut theta = theta0.to_vec();
    let mut current = loss.evaluate(&theta)?;
    let mut evaluations = 1;
    let mut best = (current, theta.clone());
    let mut history = Vec::new();
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let before = best.0;
        for i in 0..d {
            current = nft_update(loss, &mut theta, i, current)?;
            evaluations += 2;
        }
        if sweeps % cfg.reset_interval == 0 {
            current = loss.evaluate(&theta)?;
            evaluations += 1;
        }
        if current < best.0 {
            best = (current, theta.clone());
        }
        history.push(best.0);
        if before - best.0 < cfg.plateau_tol {
            break;
        }
    }
    Ok(NftResult {
        theta: best.1,
        loss: best.0,
        sweeps,
        evaluations,
        history,
    })
}
