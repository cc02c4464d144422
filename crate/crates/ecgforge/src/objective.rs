//! Hybrid training objective and evaluation metrics.
//!
//! The loss couples a time-domain Huber term with a frequency-domain
//! spectral-entropy term:
//!
//! ```text
//! L_total(n) = L_H + w(n) * L_SE,   w(n) = (1 + cos(pi n / E)) / 2
//! ```
//!
//! Spectral entropy is the Shannon entropy (bits) of the power-normalized
//! one-sided DFT spectrum, DC bin included, no windowing or detrending.
//! Scale cancels in the normalization, so `L_SE` compares spectral shape
//! only. All functions are pure and reentrant; gradients are exact
//! derivatives of the forward expressions, finite-difference checked in the
//! tests.

use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// One-sided squared-magnitude DFT bins and their power-normalized form.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSpectrum {
    pub bins: Vec<f64>,
    /// `bins / total_power`; sums to 1.
    pub normalized: Vec<f64>,
}

/// Loss hyperparameters. `epochs` is the schedule horizon E of the cosine
/// decay; `epsilon` stabilizes the entropy log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub huber_delta: f64,
    pub epsilon: f64,
    pub epochs: usize,
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.huber_delta > 0.0) {
            return Err(Error::Config(format!(
                "huber_delta {} must be positive",
                self.huber_delta
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            huber_delta: 1.0,
            epsilon: 1e-12,
            epochs: 200,
        }
    }
}

/// Loss value with its components, for the per-epoch log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub huber: f64,
    pub spectral_entropy: f64,
    pub weight: f64,
}

fn full_dft(signal: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new()
        .plan_fft_forward(signal.len())
        .process(&mut buf);
    buf
}

fn check_signal(signal: &[f64]) -> Result<()> {
    if signal.len() < 2 {
        return Err(Error::Shape(format!(
            "signal length {} too short for a spectrum",
            signal.len()
        )));
    }
    if signal.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite signal value".into()));
    }
    Ok(())
}

/// One-sided power spectrum of a signal, bins `f = 0 ..= floor(T/2)`.
/// An all-zero signal has no normalizable spectrum and is rejected.
pub fn power_spectrum(signal: &[f64]) -> Result<PowerSpectrum> {
    check_signal(signal)?;
    let spectrum = full_dft(signal);
    let n_bins = signal.len() / 2 + 1;
    let bins: Vec<f64> = spectrum[..n_bins].iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = bins.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroPower);
    }
    let normalized = bins.iter().map(|&b| b / total).collect();
    Ok(PowerSpectrum { bins, normalized })
}

/// Shannon entropy (bits) of an already-normalized spectrum.
pub fn entropy_of_normalized(normalized: &[f64], epsilon: f64) -> f64 {
    -normalized
        .iter()
        .map(|&p| p * (p + epsilon).log2())
        .sum::<f64>()
}

/// Spectral entropy of a signal, in bits.
pub fn spectral_entropy(signal: &[f64], epsilon: f64) -> Result<f64> {
    let ps = power_spectrum(signal)?;
    Ok(entropy_of_normalized(&ps.normalized, epsilon))
}

/// Exact gradient of [`spectral_entropy`] with respect to the signal.
pub fn spectral_entropy_grad(signal: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    check_signal(signal)?;
    let t_len = signal.len();
    let spectrum = full_dft(signal);
    let n_bins = t_len / 2 + 1;
    let bins: Vec<f64> = spectrum[..n_bins].iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = bins.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroPower);
    }
    let ln2 = std::f64::consts::LN_2;
    // dE/d p_tilde_f
    let d_norm: Vec<f64> = bins
        .iter()
        .map(|&b| {
            let p = b / total;
            -((p + epsilon).log2() + p / ((p + epsilon) * ln2))
        })
        .collect();
    // dE/d P_f through the normalization p_tilde = P / sum(P)
    let weighted: f64 = d_norm.iter().zip(&bins).map(|(d, b)| d * b).sum();
    let d_bins: Vec<f64> = d_norm
        .iter()
        .map(|&d| d / total - weighted / (total * total))
        .collect();
    // dP_f/dy_t = 2 (Re_f cos(2 pi f t / T) - Im_f sin(2 pi f t / T))
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut grad = vec![0.0; t_len];
    for (f, &db) in d_bins.iter().enumerate() {
        if db == 0.0 {
            continue;
        }
        let re = spectrum[f].re;
        let im = spectrum[f].im;
        for (t, g) in grad.iter_mut().enumerate() {
            let theta = two_pi * (f * t) as f64 / t_len as f64;
            *g += db * 2.0 * (re * theta.cos() - im * theta.sin());
        }
    }
    Ok(grad)
}

fn check_batch(batch_y: &[Vec<f64>], batch_yhat: &[Vec<f64>]) -> Result<()> {
    if batch_y.len() != batch_yhat.len() || batch_y.is_empty() {
        return Err(Error::Shape(format!(
            "batch sizes {} vs {}",
            batch_y.len(),
            batch_yhat.len()
        )));
    }
    for (y, yh) in batch_y.iter().zip(batch_yhat) {
        if y.len() != yh.len() {
            return Err(Error::Shape(format!(
                "signal lengths {} vs {}",
                y.len(),
                yh.len()
            )));
        }
    }
    Ok(())
}

/// Mean squared difference of spectral entropies over a batch.
pub fn spectral_entropy_loss(
    batch_y: &[Vec<f64>],
    batch_yhat: &[Vec<f64>],
    epsilon: f64,
) -> Result<f64> {
    check_batch(batch_y, batch_yhat)?;
    let b = batch_y.len() as f64;
    let mut acc = 0.0;
    for (y, yh) in batch_y.iter().zip(batch_yhat) {
        let d = spectral_entropy(y, epsilon)? - spectral_entropy(yh, epsilon)?;
        acc += d * d;
    }
    Ok(acc / b)
}

/// Huber loss, mean-reduced over batch and time.
pub fn huber_loss(batch_y: &[Vec<f64>], batch_yhat: &[Vec<f64>], delta: f64) -> Result<f64> {
    check_batch(batch_y, batch_yhat)?;
    let mut acc = 0.0;
    let mut count = 0usize;
    for (y, yh) in batch_y.iter().zip(batch_yhat) {
        for (&a, &b) in y.iter().zip(yh) {
            let e = (b - a).abs();
            acc += if e <= delta {
                0.5 * e * e
            } else {
                delta * (e - 0.5 * delta)
            };
            count += 1;
        }
    }
    Ok(acc / count as f64)
}

/// Cosine decay weight of the spectral-entropy term: `w(0) = 1`,
/// `w(E) = 0`. `n` is the 0-based count of completed epochs.
pub fn se_weight(n: usize, epochs: usize) -> Result<f64> {
    if epochs == 0 {
        return Err(Error::Config("epochs must be >= 1".into()));
    }
    if n > epochs {
        return Err(Error::Config(format!(
            "epoch counter {n} exceeds the schedule horizon {epochs}"
        )));
    }
    Ok(0.5 * (1.0 + (std::f64::consts::PI * n as f64 / epochs as f64).cos()))
}

/// `L_H + w(n) * L_SE` over a batch, with the components reported
/// separately for logging.
pub fn total_loss(
    batch_y: &[Vec<f64>],
    batch_yhat: &[Vec<f64>],
    n: usize,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    cfg.validate()?;
    let weight = se_weight(n, cfg.epochs)?;
    let huber = huber_loss(batch_y, batch_yhat, cfg.huber_delta)?;
    let se = spectral_entropy_loss(batch_y, batch_yhat, cfg.epsilon)?;
    Ok(LossBreakdown {
        total: huber + weight * se,
        huber,
        spectral_entropy: se,
        weight,
    })
}

/// Gradient of [`total_loss`] with respect to every predicted signal.
pub fn total_loss_grad(
    batch_y: &[Vec<f64>],
    batch_yhat: &[Vec<f64>],
    n: usize,
    cfg: &LossConfig,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    check_batch(batch_y, batch_yhat)?;
    let weight = se_weight(n, cfg.epochs)?;
    let b = batch_y.len() as f64;
    let t = batch_y[0].len() as f64;
    let mut grads = Vec::with_capacity(batch_y.len());
    for (y, yh) in batch_y.iter().zip(batch_yhat) {
        let mut g = vec![0.0; yh.len()];
        // Huber term, mean over B*T
        for ((&a, &p), slot) in y.iter().zip(yh).zip(&mut g) {
            let e = p - a;
            *slot = if e.abs() <= cfg.huber_delta {
                e
            } else {
                cfg.huber_delta * e.signum()
            } / (b * t);
        }
        if weight != 0.0 {
            let diff = spectral_entropy(yh, cfg.epsilon)? - spectral_entropy(y, cfg.epsilon)?;
            let se_grad = spectral_entropy_grad(yh, cfg.epsilon)?;
            let scale = weight * 2.0 / b * diff;
            for (slot, sg) in g.iter_mut().zip(se_grad) {
                *slot += scale * sg;
            }
        }
        grads.push(g);
    }
    Ok(grads)
}

/// Coefficient of determination of one signal. Errors on constant targets.
pub fn r2_score(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() || y.is_empty() {
        return Err(Error::Shape(format!(
            "signal lengths {} vs {}",
            y.len(),
            yhat.len()
        )));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|&a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(&a, &p)| (a - p) * (a - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Mean absolute error of one signal.
pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() || y.is_empty() {
        return Err(Error::Shape(format!(
            "signal lengths {} vs {}",
            y.len(),
            yhat.len()
        )));
    }
    Ok(y.iter().zip(yhat).map(|(&a, &p)| (a - p).abs()).sum::<f64>() / y.len() as f64)
}
