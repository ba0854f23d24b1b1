//! Modulation, soft demapping and the reliability-aware joint detector.
//!
//! Bit labels follow frame order: bit 0 of a symbol is the first bit of its
//! group in the coded frame. LLRs are `ln P(+1) / P(-1)` with `+1` standing
//! for logical 0.

mod detector;

pub use detector::{map_detect, DetectorConfig, DetectorSlotInput, DetectorSlotOutput, StreamLlrs};

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::fec::{clamp_llr, BitFrame, LlrFrame, Stage};
use crate::logsum::{log_probs, lse, lse2, sigmoid, softplus};
use crate::numerics::DEGENERATE_THRESHOLD;

/// Lower clamp of every relay error probability fed to the detector.
pub const PE_MIN: f64 = 1e-6;
/// Upper clamp; beyond 0.5 a flip model is equivalent to its complement.
pub const PE_MAX: f64 = 0.5;

/// Q-ary constellation with unit average energy. `points[label]` is the
/// symbol for the bit label read MSB-first.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        let q = points.len();
        if q < 2 || !q.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "constellation order {q} is not a power of two"
            )));
        }
        let energy = points.iter().map(Complex64::norm_sqr).sum::<f64>() / q as f64;
        if (energy - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "average symbol energy {energy}, expected 1"
            )));
        }
        Ok(Self {
            bits_per_symbol: q.trailing_zeros() as usize,
            points,
        })
    }

    /// Gray QPSK: `(b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`.
    pub fn qpsk() -> Self {
        let points = (0..4u8)
            .map(|label| {
                let (b0, b1) = (f64::from(label >> 1), f64::from(label & 1));
                Complex64::new(1.0 - 2.0 * b0, 1.0 - 2.0 * b1) * FRAC_1_SQRT_2
            })
            .collect();
        Self {
            points,
            bits_per_symbol: 2,
        }
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Bit `j` (frame order) of a label.
    #[inline]
    pub fn label_bit(&self, label: usize, j: usize) -> u8 {
        ((label >> (self.bits_per_symbol - 1 - j)) & 1) as u8
    }

    fn label_of(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(Complex64::norm_sqr).sum::<f64>() / self.order() as f64
    }
}

/// Which node put a symbol frame on the air.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Source,
    Relay,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolFrame {
    pub symbols: Vec<Complex64>,
    pub origin: Origin,
}

/// Maps consecutive `B`-bit groups of a coded frame onto symbols.
pub fn modulate(coded: &BitFrame, cmap: &Constellation, origin: Origin) -> Result<SymbolFrame> {
    let b = cmap.bits_per_symbol();
    if !coded.len().is_multiple_of(b) {
        return Err(Error::Dimension(format!(
            "{} coded bits not divisible by {b} bits per symbol",
            coded.len()
        )));
    }
    let symbols = coded
        .bits()
        .chunks_exact(b)
        .map(|g| cmap.points[cmap.label_of(g)])
        .collect();
    Ok(SymbolFrame { symbols, origin })
}

/// Prior of the relay's transmitted bit being `+1` when the source bit is
/// `+1` with probability `p_plus` and the relay flips it with probability `pe`.
pub fn modify_priors(p_plus: f64, pe: f64) -> f64 {
    (1.0 - pe) * p_plus + pe * (1.0 - p_plus)
}

/// Log-domain [`modify_priors`]: `(ln p_hat(+1), ln p_hat(-1))` from the
/// source bit's LLR.
#[inline]
pub(crate) fn modified_log_priors(llr: f64, ln_keep: f64, ln_flip: f64) -> (f64, f64) {
    let (lp, lm) = log_probs(llr);
    (lse2(ln_keep + lp, ln_flip + lm), lse2(ln_keep + lm, ln_flip + lp))
}

/// `P(+1) = e^L / (1 + e^L)`.
pub fn llr_to_posterior(llr: f64) -> f64 {
    sigmoid(llr)
}

/// `(P(+1), P(-1))` for one bit.
pub fn posterior_pair(llr: f64) -> (f64, f64) {
    (sigmoid(llr), sigmoid(-llr))
}

/// Relay error probability estimate before clamping: the mean probability
/// that source and relay versions of each bit disagree,
/// `(e^Ls + e^Lr) / ((1 + e^Ls)(1 + e^Lr))`, evaluated in the log domain.
pub fn estimate_pe_unclamped(source: &LlrFrame, relay: &LlrFrame) -> Result<f64> {
    if source.len() != relay.len() {
        return Err(Error::Dimension(format!(
            "estimating pe from {} and {} LLRs",
            source.len(),
            relay.len()
        )));
    }
    if source.is_empty() {
        return Err(Error::Dimension("estimating pe from empty frames".into()));
    }
    let total: f64 = source
        .llrs()
        .iter()
        .zip(relay.llrs())
        .map(|(&ls, &lr)| (lse2(ls, lr) - softplus(ls) - softplus(lr)).exp())
        .sum();
    Ok(total / source.len() as f64)
}

/// [`estimate_pe_unclamped`] clamped into `[PE_MIN, PE_MAX]`.
pub fn estimate_pe(source: &LlrFrame, relay: &LlrFrame) -> Result<f64> {
    Ok(estimate_pe_unclamped(source, relay)?.clamp(PE_MIN, PE_MAX))
}

/// Exact per-bit LLRs for the scalar model `y = gain * x + v`,
/// `v ~ CN(0, noise_variance)`, marginalising over all constellation points.
pub fn relay_channel_llrs(
    y_row: &[Complex64],
    gain: Complex64,
    noise_variance: f64,
    cmap: &Constellation,
) -> Result<LlrFrame> {
    if gain.norm() < DEGENERATE_THRESHOLD {
        return Err(Error::DegenerateChannel {
            index: 1,
            magnitude: gain.norm(),
        });
    }
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise variance {noise_variance}")));
    }
    if y_row.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("relay observation"));
    }
    let (q, b) = (cmap.order(), cmap.bits_per_symbol());
    let candidates: Vec<Complex64> = cmap.points.iter().map(|&x| gain * x).collect();
    let mut metrics = vec![0.0; q];
    let mut zero = Vec::with_capacity(q / 2);
    let mut one = Vec::with_capacity(q / 2);
    let mut out = Vec::with_capacity(y_row.len() * b);
    for &y in y_row {
        for (m, &c) in metrics.iter_mut().zip(&candidates) {
            *m = -(y - c).norm_sqr() / noise_variance;
        }
        for j in 0..b {
            zero.clear();
            one.clear();
            for (label, &m) in metrics.iter().enumerate() {
                if cmap.label_bit(label, j) == 0 {
                    zero.push(m);
                } else {
                    one.push(m);
                }
            }
            out.push(clamp_llr(lse(&zero) - lse(&one)));
        }
    }
    Ok(LlrFrame::clamped(out, Stage::Channel))
}
