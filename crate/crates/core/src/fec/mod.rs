//! Serially concatenated convolutional code shared by source and relays.
//!
//! Encoder chain: rate-1/2 memory-1 feed-forward outer code, a random
//! interleaver, then a rate-1 doped accumulator. The decoder iterates two
//! 2-state BCJR passes and exposes both information-bit and channel-bit
//! posteriors, the latter being what the destination feeds back to its
//! detector.
//!
//! LLR convention everywhere: `L = ln P(bit = 0) / P(bit = 1)`, so logical 0
//! is amplitude `+1`.

mod bcjr;
mod interleaver;

pub use bcjr::{bcjr_decode, BcjrOutput, OuterCode, Trellis};
pub use interleaver::{deinterleave, interleave, Interleaver};

use crate::error::{Error, Result};

/// Saturation magnitude for every LLR the library produces.
pub const LLR_MAX: f64 = 50.0;

/// Clamps an LLR into `[-LLR_MAX, LLR_MAX]`.
#[inline]
pub fn clamp_llr(llr: f64) -> f64 {
    llr.clamp(-LLR_MAX, LLR_MAX)
}

/// Codec stage a frame belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Info,
    OuterCoded,
    Interleaved,
    Channel,
}

/// Hard bits (`0`/`1`) tagged with their codec stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitFrame {
    bits: Vec<u8>,
    stage: Stage,
}

impl BitFrame {
    pub fn new(bits: Vec<u8>, stage: Stage) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("bits must be 0 or 1".into()));
        }
        Ok(Self { bits, stage })
    }

    pub fn zeros(len: usize, stage: Stage) -> Self {
        Self {
            bits: vec![0; len],
            stage,
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    pub(crate) fn with_stage(bits: Vec<u8>, stage: Stage) -> Self {
        Self { bits, stage }
    }

    fn expect_stage(&self, expected: Stage) -> Result<()> {
        if self.stage != expected {
            return Err(Error::Stage {
                expected,
                found: self.stage,
            });
        }
        Ok(())
    }
}

/// LLR sequence tagged with its codec stage. Values are finite and clamped
/// to `±LLR_MAX` on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrFrame {
    llrs: Vec<f64>,
    stage: Stage,
}

impl LlrFrame {
    pub fn new(llrs: Vec<f64>, stage: Stage) -> Result<Self> {
        if llrs.iter().any(|x| x.is_nan()) {
            return Err(Error::NonFinite("LLR frame"));
        }
        Ok(Self::clamped(llrs, stage))
    }

    pub fn zeros(len: usize, stage: Stage) -> Self {
        Self {
            llrs: vec![0.0; len],
            stage,
        }
    }

    /// Clamps in place; `NaN` must already be excluded by the caller.
    pub(crate) fn clamped(mut llrs: Vec<f64>, stage: Stage) -> Self {
        for x in &mut llrs {
            *x = clamp_llr(*x);
        }
        Self { llrs, stage }
    }

    pub fn llrs(&self) -> &[f64] {
        &self.llrs
    }

    pub fn into_llrs(self) -> Vec<f64> {
        self.llrs
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn len(&self) -> usize {
        self.llrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.llrs.is_empty()
    }

    /// Sign decisions; a zero LLR decides for bit 0.
    pub fn hard_decisions(&self) -> BitFrame {
        BitFrame::with_stage(self.llrs.iter().map(|&l| u8::from(l < 0.0)).collect(), self.stage)
    }

    /// Element-wise sum, re-clamped.
    pub fn add(&self, other: &LlrFrame) -> Result<LlrFrame> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "adding LLR frames of {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Self::clamped(
            self.llrs.iter().zip(&other.llrs).map(|(a, b)| a + b).collect(),
            self.stage,
        ))
    }

    /// Element-wise difference, re-clamped.
    pub fn sub(&self, other: &LlrFrame) -> Result<LlrFrame> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "subtracting LLR frames of {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Self::clamped(
            self.llrs.iter().zip(&other.llrs).map(|(a, b)| a - b).collect(),
            self.stage,
        ))
    }
}

/// Code parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScccConfig {
    /// Outer generator pair in octal, MSB tap on the current input.
    pub outer_generators: [u8; 2],
    pub doping_period: usize,
    /// Inner turbo iterations per decoder invocation.
    pub inner_iterations: usize,
    /// Information bits per frame (`K`).
    pub info_len: usize,
}

impl Default for ScccConfig {
    fn default() -> Self {
        Self {
            outer_generators: [0o3, 0o2],
            doping_period: 2,
            inner_iterations: 8,
            info_len: 512,
        }
    }
}

impl ScccConfig {
    pub fn validate(&self) -> Result<()> {
        if self.doping_period == 0 {
            return Err(Error::InvalidParameter("doping period must be >= 1".into()));
        }
        if self.inner_iterations == 0 {
            return Err(Error::InvalidParameter("decoder iterations must be >= 1".into()));
        }
        if self.info_len == 0 {
            return Err(Error::InvalidParameter("info length must be > 0".into()));
        }
        OuterCode::new(self.outer_generators)?;
        Ok(())
    }

    pub fn coded_len(&self) -> usize {
        2 * self.info_len
    }
}

/// Rate-1/2 outer encoder; no trellis termination.
pub fn conv_encode_outer(info: &BitFrame, code: OuterCode) -> Result<BitFrame> {
    info.expect_stage(Stage::Info)?;
    let mut out = Vec::with_capacity(2 * info.len());
    let mut state = 0u8;
    for &u in info.bits() {
        let (next, bits) = code.step(state, u);
        out.extend_from_slice(&bits);
        state = next;
    }
    Ok(BitFrame::with_stage(out, Stage::OuterCoded))
}

/// Rate-1 accumulator `s[n] = x[n] ^ s[n-1]` whose output at positions
/// `n % period == period - 1` is replaced by the systematic bit `x[n]`.
pub fn doped_accumulate(x: &BitFrame, period: usize) -> Result<BitFrame> {
    x.expect_stage(Stage::Interleaved)?;
    if period == 0 {
        return Err(Error::InvalidParameter("doping period must be >= 1".into()));
    }
    let mut state = 0u8;
    let out = x
        .bits()
        .iter()
        .enumerate()
        .map(|(n, &b)| {
            state ^= b;
            if n % period == period - 1 {
                b
            } else {
                state
            }
        })
        .collect();
    Ok(BitFrame::with_stage(out, Stage::Channel))
}

/// Hamming distance between two equal-length frames.
pub fn count_frame_errors(decoded: &BitFrame, truth: &BitFrame) -> Result<usize> {
    if decoded.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "comparing frames of {} and {} bits",
            decoded.len(),
            truth.len()
        )));
    }
    Ok(decoded.bits().iter().zip(truth.bits()).filter(|(a, b)| a != b).count())
}

/// Output of [`sccc_decode`].
#[derive(Clone, Debug)]
pub struct ScccDecoded {
    /// Information-bit posteriors (`K`).
    pub info_llrs: LlrFrame,
    /// Posteriors of the transmitted channel bits (`2K`).
    pub coded_llrs: LlrFrame,
}

/// One frame's code instance: parameters plus its interleaver.
#[derive(Clone, Debug)]
pub struct Sccc {
    config: ScccConfig,
    outer: OuterCode,
    interleaver: Interleaver,
}

impl Sccc {
    pub fn new(config: ScccConfig, interleaver: Interleaver) -> Result<Self> {
        config.validate()?;
        if interleaver.len() != config.coded_len() {
            return Err(Error::Dimension(format!(
                "interleaver of {} for coded length {}",
                interleaver.len(),
                config.coded_len()
            )));
        }
        Ok(Self {
            outer: OuterCode::new(config.outer_generators)?,
            config,
            interleaver,
        })
    }

    /// Code with a random interleaver drawn from `seed`.
    pub fn with_seed(config: ScccConfig, seed: u64) -> Result<Self> {
        Self::new(config, Interleaver::random(config.coded_len(), seed))
    }

    pub fn config(&self) -> &ScccConfig {
        &self.config
    }

    pub fn interleaver(&self) -> &Interleaver {
        &self.interleaver
    }

    /// Info bits to channel bits.
    pub fn encode(&self, info: &BitFrame) -> Result<BitFrame> {
        if info.len() != self.config.info_len {
            return Err(Error::Dimension(format!(
                "info frame of {} bits, expected {}",
                info.len(),
                self.config.info_len
            )));
        }
        let outer = conv_encode_outer(info, self.outer)?;
        let permuted = interleave(&outer, &self.interleaver)?;
        doped_accumulate(&permuted, self.config.doping_period)
    }

    pub fn decode(&self, channel_llrs: &LlrFrame) -> Result<ScccDecoded> {
        sccc_decode(self, channel_llrs, self.config.inner_iterations)
    }
}

/// Iterative decoder: inner BCJR, deinterleave, outer BCJR, interleave,
/// repeated `iterations` times, followed by a final inner pass so the
/// channel-bit posteriors reflect the last outer update.
pub fn sccc_decode(code: &Sccc, channel_llrs: &LlrFrame, iterations: usize) -> Result<ScccDecoded> {
    if channel_llrs.stage() != Stage::Channel {
        return Err(Error::Stage {
            expected: Stage::Channel,
            found: channel_llrs.stage(),
        });
    }
    let coded_len = code.config.coded_len();
    if channel_llrs.len() != coded_len {
        return Err(Error::Dimension(format!(
            "channel LLRs of {}, expected {coded_len}",
            channel_llrs.len()
        )));
    }
    if iterations == 0 {
        return Err(Error::InvalidParameter("decoder iterations must be >= 1".into()));
    }
    let inner = Trellis::InnerDoped {
        period: code.config.doping_period,
    };
    let outer = Trellis::Outer(code.outer);
    let channel = channel_llrs.llrs();
    let outer_priors = vec![0.0; code.config.info_len];
    let mut inner_priors = vec![0.0; coded_len];
    let mut info = Vec::new();

    for it in 0..iterations {
        let inner_out = bcjr::run(inner, channel, &inner_priors, bcjr::Want::INPUT)?;
        let outer_in = code.interleaver.deinterleave_slice(&inner_out.input_extrinsic);
        let want = if it + 1 == iterations {
            bcjr::Want::BOTH
        } else {
            bcjr::Want::OUTPUT
        };
        let outer_out = bcjr::run(outer, &outer_in, &outer_priors, want)?;
        inner_priors = code.interleaver.interleave_slice(&outer_out.output_extrinsic);
        info = outer_out.input_posterior;
    }
    let last = bcjr::run(inner, channel, &inner_priors, bcjr::Want::OUTPUT)?;
    Ok(ScccDecoded {
        info_llrs: LlrFrame::clamped(info, Stage::Info),
        coded_llrs: LlrFrame::clamped(last.output_posterior, Stage::Channel),
    })
}
