use num_complex::Complex64;

use super::{modified_log_priors, Constellation};
use crate::error::{Error, Result};
use crate::fec::{LlrFrame, Stage};
use crate::logsum::{log_probs, lse2};
use crate::numerics::RealMatrix;

/// One slot as seen by the destination, in the real-valued model.
///
/// `h_real` has four columns ordered `[Re relay, Re source, Im relay,
/// Im source]`; `y_real` is `2N x M` with one column per symbol time.
/// Priors are indexed like the coded frame (`M * B` bits). The relay priors
/// refer to the source's version of the frame the relay forwards, and `pe`
/// is the probability that the relay flipped any one of those bits.
#[derive(Clone, Debug)]
pub struct DetectorSlotInput {
    pub y_real: RealMatrix,
    pub h_real: RealMatrix,
    /// Complex noise variance per receive antenna.
    pub noise_variance: f64,
    pub relay_present: bool,
    pub source_present: bool,
    pub priors_relay: LlrFrame,
    pub priors_source: LlrFrame,
    pub pe: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DetectorConfig {
    /// Replace log-sum-exp over hypotheses by the maximum.
    pub max_log: bool,
}

/// Detector outputs for one stream.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamLlrs {
    /// A-posteriori LLR.
    pub posterior: LlrFrame,
    /// Posterior minus the stream's own prior.
    pub extrinsic: LlrFrame,
    /// Prior-free evidence about the bits actually on the air. For the relay
    /// stream this is taken before the error-probability weighting.
    pub transmitted: LlrFrame,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorSlotOutput {
    pub source: Option<StreamLlrs>,
    pub relay: Option<StreamLlrs>,
}

impl DetectorSlotInput {
    fn validate(&self, cmap: &Constellation) -> Result<()> {
        if !(self.relay_present || self.source_present) {
            return Err(Error::InvalidParameter("slot with no transmitter".into()));
        }
        if self.h_real.cols() != 4 || self.h_real.rows() != self.y_real.rows() || !self.y_real.rows().is_multiple_of(2)
        {
            return Err(Error::Dimension(format!(
                "observation {}x{} with channel {}x{}",
                self.y_real.rows(),
                self.y_real.cols(),
                self.h_real.rows(),
                self.h_real.cols()
            )));
        }
        let bits = self.y_real.cols() * cmap.bits_per_symbol();
        if self.priors_relay.len() != bits || self.priors_source.len() != bits {
            return Err(Error::Dimension(format!(
                "priors of {} and {} bits for {bits} coded bits",
                self.priors_relay.len(),
                self.priors_source.len()
            )));
        }
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance {}",
                self.noise_variance
            )));
        }
        if !(0.0..=1.0).contains(&self.pe) {
            return Err(Error::InvalidParameter(format!("pe = {}", self.pe)));
        }
        Ok(())
    }
}

struct Hypothesis {
    relay: usize,
    source: usize,
}

/// Splits `metrics` by a per-hypothesis bit and combines each half:
/// log-sum-exp, or its max-log approximation.
fn split_combine(metrics: &[f64], bit: impl Fn(usize) -> u8, max_log: bool) -> (f64, f64) {
    let mut max = [f64::NEG_INFINITY; 2];
    for (k, &m) in metrics.iter().enumerate() {
        let b = bit(k) as usize;
        max[b] = max[b].max(m);
    }
    if max_log {
        return (max[0], max[1]);
    }
    let mut sum = [0.0; 2];
    for (k, &m) in metrics.iter().enumerate() {
        let b = bit(k) as usize;
        sum[b] += (m - max[b]).exp();
    }
    (max[0] + sum[0].ln(), max[1] + sum[1].ln())
}

/// Joint MAP detection of the source and relay streams of one slot.
///
/// Source LLRs marginalise over relay hypotheses weighted by the relay
/// priors after passing them through the flip model with probability `pe`.
/// The relay output is the LLR of the source's version of the forwarded bit:
/// its own prior plus the flip-weighted ratio of the channel evidence, with
/// the other relay bits again weighted by their flip-modified priors. At
/// `pe = 0` both reduce to plain joint MAP detection.
pub fn map_detect(
    input: &DetectorSlotInput,
    cmap: &Constellation,
    config: DetectorConfig,
) -> Result<DetectorSlotOutput> {
    input.validate(cmap)?;
    let (q, b) = (cmap.order(), cmap.bits_per_symbol());
    let rows = input.y_real.rows();
    let symbols = input.y_real.cols();

    let labels = |present: bool| if present { q } else { 1 };
    let point = |present: bool, label: usize| {
        if present {
            cmap.points()[label]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let mut hypotheses = Vec::with_capacity(labels(input.relay_present) * labels(input.source_present));
    let mut means = Vec::with_capacity(hypotheses.capacity() * rows);
    for relay in 0..labels(input.relay_present) {
        for source in 0..labels(input.source_present) {
            let (xr, xs) = (point(input.relay_present, relay), point(input.source_present, source));
            means.extend(input.h_real.mul_vec(&[xr.re, xs.re, xr.im, xs.im])?);
            hypotheses.push(Hypothesis { relay, source });
        }
    }

    let ln_keep = (1.0 - input.pe).ln();
    let ln_flip = input.pe.ln();
    let inv_var = 1.0 / input.noise_variance;

    let mut src = [Vec::with_capacity(symbols * b), Vec::with_capacity(symbols * b)];
    let mut rel = [
        Vec::with_capacity(symbols * b),
        Vec::with_capacity(symbols * b),
        Vec::with_capacity(symbols * b),
    ];
    let mut y = vec![0.0; rows];
    let mut metrics = vec![0.0; hypotheses.len()];
    let mut theta_src = vec![0.0; q];
    let mut theta_rel = vec![0.0; q];
    let mut src_lp = vec![(0.0, 0.0); b];
    let mut rel_lq = vec![(0.0, 0.0); b];
    let pick = |pair: (f64, f64), bit: u8| if bit == 0 { pair.0 } else { pair.1 };

    for m in 0..symbols {
        for (i, v) in y.iter_mut().enumerate() {
            *v = input.y_real[(i, m)];
        }
        let bits = m * b..(m + 1) * b;
        for (j, idx) in bits.clone().enumerate() {
            src_lp[j] = log_probs(input.priors_source.llrs()[idx]);
            rel_lq[j] = modified_log_priors(input.priors_relay.llrs()[idx], ln_keep, ln_flip);
        }
        for label in 0..q {
            theta_src[label] = (0..b).map(|j| pick(src_lp[j], cmap.label_bit(label, j))).sum();
            theta_rel[label] = (0..b).map(|j| pick(rel_lq[j], cmap.label_bit(label, j))).sum();
        }
        for (k, h) in hypotheses.iter().enumerate() {
            let mean = &means[k * rows..(k + 1) * rows];
            let dist: f64 = y.iter().zip(mean).map(|(a, c)| (a - c) * (a - c)).sum();
            let mut metric = -dist * inv_var;
            if input.source_present {
                metric += theta_src[h.source];
            }
            if input.relay_present {
                metric += theta_rel[h.relay];
            }
            metrics[k] = metric;
        }

        if input.source_present {
            for (j, idx) in bits.clone().enumerate() {
                let (l0, l1) = split_combine(&metrics, |k| cmap.label_bit(hypotheses[k].source, j), config.max_log);
                let post = l0 - l1;
                src[0].push(post);
                src[1].push(post - input.priors_source.llrs()[idx]);
            }
        }
        if input.relay_present {
            for (j, idx) in bits.enumerate() {
                let (l0, l1) = split_combine(&metrics, |k| cmap.label_bit(hypotheses[k].relay, j), config.max_log);
                let (s_plus, s_minus) = (l0 - rel_lq[j].0, l1 - rel_lq[j].1);
                let weighted = lse2(ln_keep + s_plus, ln_flip + s_minus) - lse2(ln_keep + s_minus, ln_flip + s_plus);
                rel[0].push(input.priors_relay.llrs()[idx] + weighted);
                rel[1].push(weighted);
                rel[2].push(s_plus - s_minus);
            }
        }
    }

    let frame = |v: Vec<f64>| LlrFrame::clamped(v, Stage::Channel);
    let source = input.source_present.then(|| {
        let [posterior, extrinsic] = src;
        let transmitted = frame(extrinsic.clone());
        StreamLlrs {
            posterior: frame(posterior),
            extrinsic: frame(extrinsic),
            transmitted,
        }
    });
    let relay = input.relay_present.then(|| {
        let [posterior, extrinsic, transmitted] = rel;
        StreamLlrs {
            posterior: frame(posterior),
            extrinsic: frame(extrinsic),
            transmitted: frame(transmitted),
        }
    });
    Ok(DetectorSlotOutput { source, relay })
}
