//! Slot schedule, relay behaviour and the destination's iterative receiver.
//!
//! Slots and frames are numbered from 1 in the public API. Slot `l` carries
//! source frame `l` (for `l <= L`) and, from slot 2 on, the previous frame
//! `l - 1` re-encoded by the relay that received it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fec::{count_frame_errors, BitFrame, LlrFrame, Sccc, Stage};
use crate::numerics::{qr_decompose, to_real_channel, to_real_observation, ComplexMatrix, DEGENERATE_THRESHOLD};
use crate::phy::{
    estimate_pe, map_detect, relay_channel_llrs, Constellation, DetectorConfig, DetectorSlotInput, DetectorSlotOutput,
    PE_MAX, PE_MIN,
};

/// Error fraction below which the threshold baseline forwards.
pub const THRESHOLD_FRACTION: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelayId {
    R1,
    R2,
}

impl RelayId {
    pub fn other(self) -> Self {
        match self {
            Self::R1 => Self::R2,
            Self::R2 => Self::R1,
        }
    }
}

/// Who does what in one slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotRoles {
    pub transmitting_relay: Option<RelayId>,
    pub source_active: bool,
    pub receiving_relay: Option<RelayId>,
}

/// `L` frames over `L + 1` slots. R1 receives in odd slots and forwards in
/// even slots; R2 does the opposite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotSchedule {
    frames: usize,
}

impl SlotSchedule {
    pub fn new(frames: usize) -> Result<Self> {
        if frames < 2 || !frames.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "L must be even and >= 2, got {frames}"
            )));
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn slots(&self) -> usize {
        self.frames + 1
    }

    fn check(&self, slot: usize) -> Result<()> {
        if slot == 0 || slot > self.slots() {
            return Err(Error::InvalidParameter(format!(
                "slot {slot} outside 1..={}",
                self.slots()
            )));
        }
        Ok(())
    }

    fn receiver_of(slot: usize) -> RelayId {
        if slot % 2 == 1 {
            RelayId::R1
        } else {
            RelayId::R2
        }
    }

    pub fn roles(&self, slot: usize) -> Result<SlotRoles> {
        self.check(slot)?;
        let source_active = slot <= self.frames;
        Ok(SlotRoles {
            transmitting_relay: (slot >= 2).then(|| Self::receiver_of(slot - 1)),
            source_active,
            receiving_relay: source_active.then(|| Self::receiver_of(slot)),
        })
    }

    /// Frame forwarded by the relay in `slot`, if any.
    pub fn relayed_frame(&self, slot: usize) -> Result<Option<usize>> {
        self.check(slot)?;
        Ok((slot >= 2).then(|| slot - 1))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, SlotRoles)> + '_ {
        (1..=self.slots()).map(|l| (l, self.roles(l).expect("slot in range")))
    }
}

/// Relay forwarding rule. Error checks use the genie truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForwardingPolicy {
    AlwaysForward,
    /// Forward only error-free frames (idealised CRC).
    CrcSelective,
    /// Forward when info-bit errors are below `fraction * K`.
    ThresholdSelective {
        fraction: f64,
    },
    /// Forward the true source frame.
    PerfectGenie,
}

impl ForwardingPolicy {
    pub fn threshold() -> Self {
        Self::ThresholdSelective {
            fraction: THRESHOLD_FRACTION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::ThresholdSelective { fraction } if !(fraction > 0.0 && fraction < 1.0) => Err(
                Error::InvalidParameter(format!("threshold fraction {fraction} outside (0, 1)")),
            ),
            _ => Ok(()),
        }
    }
}

/// Whether a relay that decoded `decoded` forwards it.
pub fn decide_forward(policy: ForwardingPolicy, decoded: &BitFrame, truth: &BitFrame) -> Result<bool> {
    policy.validate()?;
    let errors = count_frame_errors(decoded, truth)?;
    Ok(match policy {
        ForwardingPolicy::AlwaysForward | ForwardingPolicy::PerfectGenie => true,
        ForwardingPolicy::CrcSelective => errors == 0,
        ForwardingPolicy::ThresholdSelective { fraction } => (errors as f64) < fraction * truth.len() as f64,
    })
}

/// What a relay does with one received frame.
#[derive(Clone, Debug, PartialEq)]
pub struct RelayState {
    pub decoded: BitFrame,
    pub errors: usize,
    /// Re-encoded channel bits, `None` when the relay stays silent.
    pub forwarded: Option<BitFrame>,
}

impl RelayState {
    pub fn new(policy: ForwardingPolicy, decoded: BitFrame, truth: &BitFrame, code: &Sccc) -> Result<Self> {
        let errors = count_frame_errors(&decoded, truth)?;
        let forwarded = if decide_forward(policy, &decoded, truth)? {
            let bits = if policy == ForwardingPolicy::PerfectGenie {
                truth
            } else {
                &decoded
            };
            Some(code.encode(bits)?)
        } else {
            None
        };
        Ok(Self {
            decoded,
            errors,
            forwarded,
        })
    }
}

/// Decoded frame at a relay plus its error count against the truth.
#[derive(Clone, Debug, PartialEq)]
pub struct RelayDecoding {
    pub info: BitFrame,
    pub errors: usize,
}

/// Relay reception of one slot.
///
/// `h` is `N x 2` with columns `[interfering relay, source]`. With
/// interference the observation is rotated by `Q^H` and the second row,
/// which only sees the source through the real gain `R[1][1]`, is demapped.
/// Without interference the source column is combined by maximum ratio.
pub fn relay_receive(
    y: &ComplexMatrix,
    h: &ComplexMatrix,
    noise_variance: f64,
    interference_present: bool,
    code: &Sccc,
    cmap: &Constellation,
    truth: &BitFrame,
) -> Result<RelayDecoding> {
    if h.cols() != 2 || h.rows() != y.rows() {
        return Err(Error::Dimension(format!(
            "relay channel {}x{} for observation {}x{}",
            h.rows(),
            h.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let (row, gain) = if interference_present {
        if h.rows() < 2 {
            return Err(Error::InvalidParameter(
                "interference cancellation needs at least 2 relay antennas".into(),
            ));
        }
        let qr = qr_decompose(h)?;
        let rotated = qr.q.adjoint().matmul(y)?;
        (rotated.row(1).to_vec(), qr.r[(1, 1)])
    } else {
        let col = h.column(1);
        let norm = col.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if norm < DEGENERATE_THRESHOLD {
            return Err(Error::DegenerateChannel {
                index: 0,
                magnitude: norm,
            });
        }
        let combined = (0..y.cols())
            .map(|m| {
                col.iter()
                    .enumerate()
                    .map(|(r, hc)| hc.conj() * y[(r, m)])
                    .sum::<Complex64>()
                    / norm
            })
            .collect::<Vec<_>>();
        (combined, Complex64::new(norm, 0.0))
    };
    let llrs = relay_channel_llrs(&row, gain, noise_variance, cmap)?;
    let info = code.decode(&llrs)?.info_llrs.hard_decisions();
    let errors = count_frame_errors(&info, truth)?;
    Ok(RelayDecoding { info, errors })
}

/// Detector input for destination slot `slot`. `h` is `N x 2` with columns
/// `[relay, source]`; `relay_silent` marks a selective relay that kept quiet.
pub fn destination_collect_slot(
    slot: usize,
    y: &ComplexMatrix,
    h: &ComplexMatrix,
    schedule: &SlotSchedule,
    relay_silent: bool,
    noise_variance: f64,
    cmap: &Constellation,
) -> Result<DetectorSlotInput> {
    let roles = schedule.roles(slot)?;
    if h.cols() != 2 || h.rows() != y.rows() {
        return Err(Error::Dimension(format!(
            "destination channel {}x{} for observation {}x{}",
            h.rows(),
            h.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let bits = y.cols() * cmap.bits_per_symbol();
    Ok(DetectorSlotInput {
        y_real: to_real_observation(y),
        h_real: to_real_channel(h),
        noise_variance,
        relay_present: roles.transmitting_relay.is_some() && !relay_silent,
        source_present: roles.source_active,
        priors_relay: LlrFrame::zeros(bits, Stage::Channel),
        priors_source: LlrFrame::zeros(bits, Stage::Channel),
        pe: PE_MAX,
    })
}

/// Where the detector's relay error probability comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeMode {
    /// Estimated from the two soft versions of each frame, starting at 0.5.
    Estimated,
    /// True coded-bit disagreement fraction of the forwarded frame.
    Genie,
    /// Relay assumed error-free (`PE_MIN`).
    Zero,
}

/// What the decoder returns to the detector as priors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeedbackMode {
    /// Full coded-bit posteriors.
    Posterior,
    /// Posteriors minus the version the detector supplied.
    Extrinsic,
}

#[derive(Clone, Debug)]
pub struct ReceiverConfig {
    pub iterations: usize,
    pub pe_mode: PeMode,
    pub feedback: FeedbackMode,
    pub detector: DetectorConfig,
    pub constellation: Constellation,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            iterations: 5,
            pe_mode: PeMode::Estimated,
            feedback: FeedbackMode::Posterior,
            detector: DetectorConfig::default(),
            constellation: Constellation::qpsk(),
        }
    }
}

/// Receiver configuration for a given pe source, other settings default.
pub fn pe_feedback_mode(mode: PeMode) -> ReceiverConfig {
    ReceiverConfig {
        pe_mode: mode,
        ..ReceiverConfig::default()
    }
}

/// Result of [`iterative_receive`].
#[derive(Clone, Debug)]
pub struct ReceiveOutcome {
    /// Info-bit decisions per frame after the last iteration.
    pub decisions: Vec<BitFrame>,
    /// Decisions after every iteration, `[iteration][frame]`.
    pub per_iteration: Vec<Vec<BitFrame>>,
    /// Estimated pe per iteration and slot (`[iteration][slot - 1]`), `None`
    /// where the slot has no relay stream.
    pub pe_estimates: Vec<Vec<Option<f64>>>,
    /// pe the detector used per iteration and slot.
    pub pe_used: Vec<Vec<Option<f64>>>,
}

/// Destination loop over all `L + 1` collected slots: detect every slot,
/// add the two versions of each frame, decode, feed coded-bit posteriors
/// back as priors of both versions and refresh the relay error estimates.
///
/// `codes[f]` is frame `f + 1`'s code. `genie_pe[slot - 1]` is required in
/// [`PeMode::Genie`].
pub fn iterative_receive(
    slots: &[DetectorSlotInput],
    codes: &[Sccc],
    config: &ReceiverConfig,
    genie_pe: Option<&[f64]>,
) -> Result<ReceiveOutcome> {
    let frames = codes.len();
    if slots.len() != frames + 1 {
        return Err(Error::Dimension(format!("{} slots for {frames} frames", slots.len())));
    }
    if config.iterations == 0 {
        return Err(Error::InvalidParameter("receiver iterations must be >= 1".into()));
    }
    if slots[0].relay_present || slots[frames].source_present {
        return Err(Error::InvalidParameter(
            "edge slots inconsistent with the schedule".into(),
        ));
    }
    if slots[..frames].iter().any(|s| !s.source_present) {
        return Err(Error::InvalidParameter("source stream missing in a frame slot".into()));
    }
    let genie = match (config.pe_mode, genie_pe) {
        (PeMode::Genie, Some(g)) if g.len() == slots.len() => Some(g),
        (PeMode::Genie, _) => {
            return Err(Error::InvalidParameter(
                "genie pe mode needs one true pe per slot".into(),
            ));
        }
        _ => None,
    };

    let mut slots = slots.to_vec();
    for (l, slot) in slots.iter_mut().enumerate() {
        slot.pe = match config.pe_mode {
            PeMode::Estimated => PE_MAX,
            PeMode::Zero => PE_MIN,
            PeMode::Genie => genie.map_or(PE_MIN, |g| g[l]).clamp(PE_MIN, PE_MAX),
        };
    }

    let cmap = &config.constellation;
    let mut outcome = ReceiveOutcome {
        decisions: Vec::new(),
        per_iteration: Vec::with_capacity(config.iterations),
        pe_estimates: Vec::with_capacity(config.iterations),
        pe_used: Vec::with_capacity(config.iterations),
    };
    for _ in 0..config.iterations {
        outcome
            .pe_used
            .push(slots.iter().map(|s| s.relay_present.then_some(s.pe)).collect());
        let outputs = slots
            .iter()
            .map(|s| {
                if s.relay_present || s.source_present {
                    map_detect(s, cmap, config.detector)
                } else {
                    Ok(DetectorSlotOutput {
                        source: None,
                        relay: None,
                    })
                }
            })
            .collect::<Result<Vec<DetectorSlotOutput>>>()?;

        let mut decisions = Vec::with_capacity(frames);
        let mut estimates = vec![None; slots.len()];
        for f in 0..frames {
            let source = outputs[f].source.as_ref().expect("source stream checked above");
            let relay = outputs[f + 1].relay.as_ref();
            let combined = match relay {
                Some(r) => source.extrinsic.add(&r.extrinsic)?,
                None => source.extrinsic.clone(),
            };
            let decoded = codes[f].decode(&combined)?;
            decisions.push(decoded.info_llrs.hard_decisions());

            slots[f].priors_source = match config.feedback {
                FeedbackMode::Posterior => decoded.coded_llrs.clone(),
                FeedbackMode::Extrinsic => decoded.coded_llrs.sub(&source.extrinsic)?,
            };
            if let Some(r) = relay {
                slots[f + 1].priors_relay = match config.feedback {
                    FeedbackMode::Posterior => decoded.coded_llrs,
                    FeedbackMode::Extrinsic => decoded.coded_llrs.sub(&r.extrinsic)?,
                };
                let estimate = estimate_pe(&source.posterior, &r.transmitted)?;
                estimates[f + 1] = Some(estimate);
                if config.pe_mode == PeMode::Estimated {
                    slots[f + 1].pe = estimate;
                }
            }
        }
        outcome.per_iteration.push(decisions);
        outcome.pe_estimates.push(estimates);
    }
    outcome.decisions = outcome.per_iteration.last().cloned().unwrap_or_default();
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::ScccConfig;
    use crate::numerics::{sample_rayleigh, RngStream};
    use crate::phy::{modulate, Origin};

    fn code(k: usize, seed: u64) -> Sccc {
        Sccc::with_seed(
            ScccConfig {
                info_len: k,
                ..ScccConfig::default()
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn schedule_edges_and_alternation() {
        let s = SlotSchedule::new(4).unwrap();
        let roles: Vec<_> = s.iter().map(|(_, r)| r).collect();
        assert_eq!(
            roles[0],
            SlotRoles {
                transmitting_relay: None,
                source_active: true,
                receiving_relay: Some(RelayId::R1)
            }
        );
        assert_eq!(roles[1].transmitting_relay, Some(RelayId::R1));
        assert_eq!(roles[1].receiving_relay, Some(RelayId::R2));
        assert_eq!(roles[2].transmitting_relay, Some(RelayId::R2));
        assert_eq!(
            roles[4],
            SlotRoles {
                transmitting_relay: Some(RelayId::R2),
                source_active: false,
                receiving_relay: None
            }
        );
        assert_eq!(s.relayed_frame(5).unwrap(), Some(4));
        assert_eq!(s.relayed_frame(1).unwrap(), None);
        assert!(SlotSchedule::new(7).is_err());
        assert!(s.roles(0).is_err() && s.roles(6).is_err());
    }

    #[test]
    fn schedule_conservation() {
        let s = SlotSchedule::new(20).unwrap();
        assert_eq!(s.iter().filter(|(_, r)| r.source_active).count(), 20);
        let relayed: Vec<_> = (1..=s.slots()).filter_map(|l| s.relayed_frame(l).unwrap()).collect();
        assert_eq!(relayed, (1..=20).collect::<Vec<_>>());
        for (l, r) in s.iter() {
            if let (Some(tx), Some(rx)) = (r.transmitting_relay, r.receiving_relay) {
                assert_ne!(tx, rx, "slot {l}");
            }
        }
    }

    #[test]
    fn forwarding_policies() {
        let truth = BitFrame::zeros(512, Stage::Info);
        let with_errors = |n: usize| {
            let mut bits = vec![0u8; 512];
            bits[..n].fill(1);
            BitFrame::new(bits, Stage::Info).unwrap()
        };
        assert!(decide_forward(ForwardingPolicy::AlwaysForward, &with_errors(37), &truth).unwrap());
        assert!(!decide_forward(ForwardingPolicy::CrcSelective, &with_errors(1), &truth).unwrap());
        assert!(decide_forward(ForwardingPolicy::CrcSelective, &with_errors(0), &truth).unwrap());
        assert!(decide_forward(ForwardingPolicy::threshold(), &with_errors(76), &truth).unwrap());
        assert!(!decide_forward(ForwardingPolicy::threshold(), &with_errors(77), &truth).unwrap());
        let bad = ForwardingPolicy::ThresholdSelective { fraction: 1.5 };
        assert!(decide_forward(bad, &truth, &truth).is_err());

        let c = code(512, 3);
        let genie = RelayState::new(ForwardingPolicy::PerfectGenie, with_errors(9), &truth, &c).unwrap();
        assert_eq!(genie.errors, 9);
        assert_eq!(genie.forwarded.unwrap(), c.encode(&truth).unwrap());
        assert!(
            RelayState::new(ForwardingPolicy::CrcSelective, with_errors(2), &truth, &c)
                .unwrap()
                .forwarded
                .is_none()
        );
    }

    #[test]
    fn collect_presence_flags() {
        let s = SlotSchedule::new(10).unwrap();
        let cmap = Constellation::qpsk();
        let mut rng = RngStream::new(1, 2);
        let h = sample_rayleigh(2, 2, &mut rng).unwrap();
        let y = sample_rayleigh(2, 8, &mut rng).unwrap();
        let first = destination_collect_slot(1, &y, &h, &s, false, 1.0, &cmap).unwrap();
        assert!(!first.relay_present && first.source_present);
        let last = destination_collect_slot(11, &y, &h, &s, false, 1.0, &cmap).unwrap();
        assert!(last.relay_present && !last.source_present);
        let silent = destination_collect_slot(5, &y, &h, &s, true, 1.0, &cmap).unwrap();
        assert!(!silent.relay_present && silent.source_present);
        assert_eq!(silent.priors_source.len(), 16);
    }

    /// Relay observation `h[:,0] x_int + h[:,1] x_src`, noiseless.
    fn relay_observation(h: &ComplexMatrix, interferer: &[Complex64], source: &[Complex64]) -> ComplexMatrix {
        let mut y = ComplexMatrix::zeros(h.rows(), source.len());
        for r in 0..h.rows() {
            for m in 0..source.len() {
                y[(r, m)] = h[(r, 0)] * interferer[m] + h[(r, 1)] * source[m];
            }
        }
        y
    }

    #[test]
    fn relay_cancels_interference_noiselessly() {
        let cmap = Constellation::qpsk();
        let c = code(128, 11);
        let mut rng = RngStream::new(12, 0);
        let truth = BitFrame::new(rng.bits(128), Stage::Info).unwrap();
        let source = modulate(&c.encode(&truth).unwrap(), &cmap, Origin::Source)
            .unwrap()
            .symbols;
        let mut h = sample_rayleigh(2, 2, &mut rng).unwrap();
        h.scale_column(0, 10.0);
        let mut first = None;
        for _ in 0..20 {
            let other = BitFrame::new(rng.bits(128), Stage::Info).unwrap();
            let interferer = modulate(&c.encode(&other).unwrap(), &cmap, Origin::Relay)
                .unwrap()
                .symbols;
            let y = relay_observation(&h, &interferer, &source);
            let out = relay_receive(&y, &h, 1e-8, true, &c, &cmap, &truth).unwrap();
            assert_eq!(out.errors, 0);
            assert_eq!(*first.get_or_insert_with(|| out.info.clone()), out.info);
        }
    }

    #[test]
    fn relay_needs_two_antennas_under_interference() {
        let cmap = Constellation::qpsk();
        let c = code(16, 1);
        let mut rng = RngStream::new(13, 0);
        let h = sample_rayleigh(1, 2, &mut rng).unwrap();
        let y = sample_rayleigh(1, 16, &mut rng).unwrap();
        let truth = BitFrame::zeros(16, Stage::Info);
        assert!(relay_receive(&y, &h, 1.0, true, &c, &cmap, &truth).is_err());
        assert!(relay_receive(&y, &h, 1.0, false, &c, &cmap, &truth).is_ok());
        let zero = ComplexMatrix::zeros(1, 2);
        assert!(matches!(
            relay_receive(&y, &zero, 1.0, false, &c, &cmap, &truth),
            Err(Error::DegenerateChannel { .. })
        ));
    }

    #[test]
    fn receiver_rejects_inconsistent_slots() {
        let s = SlotSchedule::new(2).unwrap();
        let cmap = Constellation::qpsk();
        let mut rng = RngStream::new(14, 0);
        let h = sample_rayleigh(2, 2, &mut rng).unwrap();
        let y = sample_rayleigh(2, 8, &mut rng).unwrap();
        let slots: Vec<_> = (1..=3)
            .map(|l| destination_collect_slot(l, &y, &h, &s, false, 1.0, &cmap).unwrap())
            .collect();
        let codes = vec![code(8, 1), code(8, 2)];
        assert!(iterative_receive(&slots[..2], &codes, &ReceiverConfig::default(), None).is_err());
        assert!(iterative_receive(&slots, &codes, &pe_feedback_mode(PeMode::Genie), None).is_err());
        let out = iterative_receive(&slots, &codes, &ReceiverConfig::default(), None).unwrap();
        assert_eq!(out.per_iteration.len(), 5);
        assert_eq!(out.pe_estimates[0][0], None);
        assert!(out.pe_estimates[0][1].is_some());
        assert_eq!(out.pe_used[0][1], Some(PE_MAX));
    }
}
