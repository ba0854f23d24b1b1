//! Log-domain forward-backward decoding over the two 2-state trellises of
//! the code. The encoder starts in state 0; the final state is left free.

use super::clamp_llr;
use crate::error::{Error, Result};
use crate::logsum::lse2;

const NEG_INF: f64 = f64::NEG_INFINITY;

/// Memory-1 feed-forward code with two octal generators. For each
/// generator, bit 1 (MSB) taps the current input and bit 0 the previous one,
/// so `3 -> u[n] ^ u[n-1]` and `2 -> u[n]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OuterCode {
    generators: [u8; 2],
}

impl OuterCode {
    pub fn new(generators: [u8; 2]) -> Result<Self> {
        if generators.iter().any(|&g| g == 0 || g > 3) {
            return Err(Error::InvalidParameter(format!(
                "memory-1 generators must be in 1..=3 (octal), got {:o}, {:o}",
                generators[0], generators[1]
            )));
        }
        Ok(Self { generators })
    }

    pub fn generators(&self) -> [u8; 2] {
        self.generators
    }

    /// `(next_state, outputs)` for input `u` from state `s` (= previous input).
    #[inline]
    pub fn step(&self, s: u8, u: u8) -> (u8, [u8; 2]) {
        let tap = |g: u8| ((g >> 1) & u) ^ (g & 1 & s);
        (u, [tap(self.generators[0]), tap(self.generators[1])])
    }
}

/// Which constituent trellis to decode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trellis {
    /// One step per info bit, two output bits per step.
    Outer(OuterCode),
    /// Doped accumulator: one step and one output bit per input bit.
    InnerDoped { period: usize },
}

impl Trellis {
    fn outputs_per_step(&self) -> usize {
        match self {
            Trellis::Outer(_) => 2,
            Trellis::InnerDoped { .. } => 1,
        }
    }

    #[inline]
    fn branch(&self, step: usize, s: u8, u: u8) -> (u8, [u8; 2]) {
        match *self {
            Trellis::Outer(code) => code.step(s, u),
            Trellis::InnerDoped { period } => {
                let next = s ^ u;
                let out = if step % period == period - 1 { u } else { next };
                (next, [out, 0])
            }
        }
    }
}

/// Soft outputs of one BCJR pass, all clamped to `±LLR_MAX`.
#[derive(Clone, Debug, Default)]
pub struct BcjrOutput {
    /// Posterior LLRs of the trellis input bits.
    pub input_posterior: Vec<f64>,
    /// `input_posterior - priors`.
    pub input_extrinsic: Vec<f64>,
    /// Posterior LLRs of the trellis output (code) bits.
    pub output_posterior: Vec<f64>,
    /// `output_posterior - channel_llrs`.
    pub output_extrinsic: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Want {
    input: bool,
    output: bool,
}

impl Want {
    pub(crate) const INPUT: Want = Want {
        input: true,
        output: false,
    };
    pub(crate) const OUTPUT: Want = Want {
        input: false,
        output: true,
    };
    pub(crate) const BOTH: Want = Want {
        input: true,
        output: true,
    };
}

/// Full forward-backward pass. `channel_llrs` observe the trellis outputs
/// (`outputs_per_step` per step, in step order), `priors` the inputs.
pub fn bcjr_decode(trellis: Trellis, channel_llrs: &[f64], priors: &[f64]) -> Result<BcjrOutput> {
    run(trellis, channel_llrs, priors, Want::BOTH)
}

#[inline]
fn bit_metric(bit: u8, llr: f64) -> f64 {
    if bit == 0 {
        0.5 * llr
    } else {
        -0.5 * llr
    }
}

pub(crate) fn run(trellis: Trellis, channel_llrs: &[f64], priors: &[f64], want: Want) -> Result<BcjrOutput> {
    let outs = trellis.outputs_per_step();
    let steps = priors.len();
    if channel_llrs.len() != steps * outs {
        return Err(Error::Dimension(format!(
            "{} channel LLRs for {steps} trellis steps of {outs} outputs",
            channel_llrs.len()
        )));
    }
    if channel_llrs.iter().chain(priors).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("BCJR input"));
    }
    if let Trellis::InnerDoped { period: 0 } = trellis {
        return Err(Error::InvalidParameter("doping period must be >= 1".into()));
    }

    // Branch tables per step, indexed [s * 2 + u].
    let mut gamma = vec![[0.0f64; 4]; steps];
    let mut next = vec![[0u8; 4]; steps];
    let mut out_bits = vec![[[0u8; 2]; 4]; steps];
    for n in 0..steps {
        let ch = &channel_llrs[n * outs..(n + 1) * outs];
        for s in 0..2u8 {
            for u in 0..2u8 {
                let idx = (s * 2 + u) as usize;
                let (ns, bits) = trellis.branch(n, s, u);
                let mut g = bit_metric(u, priors[n]);
                for (o, &l) in ch.iter().enumerate() {
                    g += bit_metric(bits[o], l);
                }
                gamma[n][idx] = g;
                next[n][idx] = ns;
                out_bits[n][idx] = bits;
            }
        }
    }

    let mut alpha = vec![[NEG_INF; 2]; steps + 1];
    alpha[0] = [0.0, NEG_INF];
    for n in 0..steps {
        let mut a = [NEG_INF; 2];
        for idx in 0..4 {
            let s = idx / 2;
            let ns = next[n][idx] as usize;
            a[ns] = lse2(a[ns], alpha[n][s] + gamma[n][idx]);
        }
        let norm = a[0].max(a[1]);
        alpha[n + 1] = [a[0] - norm, a[1] - norm];
    }

    let mut beta = vec![[0.0f64; 2]; steps + 1];
    for n in (0..steps).rev() {
        let mut b = [NEG_INF; 2];
        for idx in 0..4 {
            let s = idx / 2;
            b[s] = lse2(b[s], gamma[n][idx] + beta[n + 1][next[n][idx] as usize]);
        }
        let norm = b[0].max(b[1]);
        beta[n] = [b[0] - norm, b[1] - norm];
    }

    let mut result = BcjrOutput::default();
    if want.input {
        result.input_posterior.reserve(steps);
        result.input_extrinsic.reserve(steps);
    }
    if want.output {
        result.output_posterior.reserve(steps * outs);
        result.output_extrinsic.reserve(steps * outs);
    }
    for n in 0..steps {
        let mut metric = [0.0f64; 4];
        for (idx, m) in metric.iter_mut().enumerate() {
            *m = alpha[n][idx / 2] + gamma[n][idx] + beta[n + 1][next[n][idx] as usize];
        }
        if want.input {
            // idx = s * 2 + u: u = 0 at even indices.
            let post = lse2(metric[0], metric[2]) - lse2(metric[1], metric[3]);
            result.input_posterior.push(clamp_llr(post));
            result.input_extrinsic.push(clamp_llr(post - priors[n]));
        }
        if want.output {
            for o in 0..outs {
                let (mut zero, mut one) = (NEG_INF, NEG_INF);
                for (idx, &m) in metric.iter().enumerate() {
                    if out_bits[n][idx][o] == 0 {
                        zero = lse2(zero, m);
                    } else {
                        one = lse2(one, m);
                    }
                }
                let post = zero - one;
                result.output_posterior.push(clamp_llr(post));
                result
                    .output_extrinsic
                    .push(clamp_llr(post - channel_llrs[n * outs + o]));
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::LLR_MAX;
    use crate::logsum::lse;
    use crate::numerics::RngStream;
    use rand::Rng;

    fn outer() -> Trellis {
        Trellis::Outer(OuterCode::new([0o3, 0o2]).unwrap())
    }

    /// Exhaustive codeword enumeration for short trellises.
    fn brute_force(trellis: Trellis, channel: &[f64], priors: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let steps = priors.len();
        let outs = trellis.outputs_per_step();
        let mut in_zero = vec![Vec::new(); steps];
        let mut in_one = vec![Vec::new(); steps];
        let mut out_zero = vec![Vec::new(); steps * outs];
        let mut out_one = vec![Vec::new(); steps * outs];
        for word in 0..(1u32 << steps) {
            let mut s = 0u8;
            let mut metric = 0.0;
            let mut outputs = Vec::new();
            for n in 0..steps {
                let u = ((word >> n) & 1) as u8;
                let (ns, bits) = trellis.branch(n, s, u);
                metric += bit_metric(u, priors[n]);
                for o in 0..outs {
                    metric += bit_metric(bits[o], channel[n * outs + o]);
                    outputs.push(bits[o]);
                }
                s = ns;
            }
            for n in 0..steps {
                if (word >> n) & 1 == 0 {
                    in_zero[n].push(metric)
                } else {
                    in_one[n].push(metric)
                }
            }
            for (i, &b) in outputs.iter().enumerate() {
                if b == 0 {
                    out_zero[i].push(metric)
                } else {
                    out_one[i].push(metric)
                }
            }
        }
        let ins = (0..steps).map(|n| lse(&in_zero[n]) - lse(&in_one[n])).collect();
        let outs = (0..steps * outs)
            .map(|i| lse(&out_zero[i]) - lse(&out_one[i]))
            .collect();
        (ins, outs)
    }

    #[test]
    fn matches_enumeration_on_short_blocks() {
        let mut rng = RngStream::new(123, 0);
        for trellis in [
            outer(),
            Trellis::InnerDoped { period: 2 },
            Trellis::InnerDoped { period: 3 },
        ] {
            for _ in 0..20 {
                let steps = 9;
                let outs = trellis.outputs_per_step();
                let channel: Vec<f64> = (0..steps * outs).map(|_| rng.random_range(-4.0..4.0)).collect();
                let priors: Vec<f64> = (0..steps).map(|_| rng.random_range(-2.0..2.0)).collect();
                let got = bcjr_decode(trellis, &channel, &priors).unwrap();
                let (ins, outs) = brute_force(trellis, &channel, &priors);
                for (a, b) in got.input_posterior.iter().zip(&ins) {
                    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
                for (a, b) in got.output_posterior.iter().zip(&outs) {
                    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
                for ((post, prior), ext) in got.input_posterior.iter().zip(&priors).zip(&got.input_extrinsic) {
                    assert!((ext - (post - prior)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_inputs_give_zero_extrinsic() {
        for trellis in [outer(), Trellis::InnerDoped { period: 2 }] {
            let outs = trellis.outputs_per_step();
            let got = bcjr_decode(trellis, &vec![0.0; 40 * outs], &[0.0; 40]).unwrap();
            assert!(got.input_extrinsic.iter().all(|&x| x == 0.0));
            assert!(got.output_extrinsic.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn saturated_inputs_stay_finite() {
        let mut rng = RngStream::new(5, 5);
        let channel: Vec<f64> = (0..200)
            .map(|_| if rng.random::<bool>() { LLR_MAX } else { -LLR_MAX })
            .collect();
        let priors: Vec<f64> = (0..100)
            .map(|_| if rng.random::<bool>() { LLR_MAX } else { -LLR_MAX })
            .collect();
        let got = bcjr_decode(outer(), &channel, &priors).unwrap();
        for v in got
            .input_posterior
            .iter()
            .chain(&got.output_posterior)
            .chain(&got.output_extrinsic)
        {
            assert!(v.is_finite() && v.abs() <= LLR_MAX);
        }
    }

    #[test]
    fn input_validation() {
        assert!(bcjr_decode(outer(), &[0.0; 5], &[0.0; 3]).is_err());
        assert!(bcjr_decode(outer(), &[0.0, f64::INFINITY], &[0.0]).is_err());
        assert!(bcjr_decode(Trellis::InnerDoped { period: 0 }, &[0.0], &[0.0]).is_err());
        assert!(OuterCode::new([0o4, 0o2]).is_err());
    }
}
