//! Scenarios, link budgets and Monte Carlo campaigns.
//!
//! Every random quantity of a realization (data, fading, noise) is drawn from
//! a stream keyed by `(base_seed, realization, redraw attempt)` only, so all
//! schemes and SNR points of one realization see identical draws. SNR enters
//! as an amplitude scaling of the unit-variance channel columns; receiver
//! noise is `CN(0, 1)`.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fec::{count_frame_errors, BitFrame, Sccc, ScccConfig, Stage};
use crate::nodes::{
    destination_collect_slot, iterative_receive, relay_receive, FeedbackMode, ForwardingPolicy, PeMode, ReceiverConfig,
    RelayState, SlotSchedule,
};
use crate::numerics::{qr_decompose, sample_awgn, sample_rayleigh, ComplexMatrix, RngStream};
use crate::phy::{modulate, Constellation, Origin};

/// Receiver metric variance in noiseless mode.
pub const NOISELESS_METRIC_VARIANCE: f64 = 1e-8;

const MAX_REDRAWS: u32 = 1 << 16;

/// Transmission schemes compared by a campaign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    ProposedWithPe,
    ProposedWithoutPe,
    CrcSdf,
    ThresholdSdf,
    PerfectRelay,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::ProposedWithPe,
        Scheme::ProposedWithoutPe,
        Scheme::CrcSdf,
        Scheme::ThresholdSdf,
        Scheme::PerfectRelay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ProposedWithPe => "proposed-with-pe",
            Self::ProposedWithoutPe => "proposed-without-pe",
            Self::CrcSdf => "crc-sdf",
            Self::ThresholdSdf => "threshold-sdf",
            Self::PerfectRelay => "perfect-relay",
        }
    }

    pub fn policy(self) -> ForwardingPolicy {
        match self {
            Self::ProposedWithPe | Self::ProposedWithoutPe => ForwardingPolicy::AlwaysForward,
            Self::CrcSdf => ForwardingPolicy::CrcSelective,
            Self::ThresholdSdf => ForwardingPolicy::threshold(),
            Self::PerfectRelay => ForwardingPolicy::PerfectGenie,
        }
    }

    /// pe source used unless the scenario overrides it. Only the
    /// without-pe baseline ignores relay errors.
    pub fn default_pe_mode(self) -> PeMode {
        match self {
            Self::ProposedWithoutPe => PeMode::Zero,
            _ => PeMode::Estimated,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme '{s}'")))
    }
}

/// Relay placement relative to source and destination.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelayLocation {
    /// All links with equal path loss.
    A,
    /// Relays half-way to the destination: `d_SR = d/2`, `d_RD = 3d/4`,
    /// `d_RR = d/2`.
    B,
}

impl fmt::Display for RelayLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::A => "A",
            Self::B => "B",
        })
    }
}

impl FromStr for RelayLocation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Self::A),
            "B" | "b" => Ok(Self::B),
            other => Err(Error::InvalidParameter(format!("unknown relay location '{other}'"))),
        }
    }
}

/// Per-link SNRs in dB.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkBudget {
    pub gamma_sd: f64,
    pub gamma_sr1: f64,
    pub gamma_sr2: f64,
    pub gamma_r1d: f64,
    pub gamma_r2d: f64,
    pub gamma_rr: f64,
}

/// Link SNRs from the geometry: a link of relative length `r` gains
/// `-10 * exponent * log10(r)` dB over the source-destination link.
pub fn link_budget(location: RelayLocation, gamma_sd_db: f64, pathloss_exponent: f64) -> Result<LinkBudget> {
    if !(pathloss_exponent > 0.0 && pathloss_exponent.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "path-loss exponent {pathloss_exponent}"
        )));
    }
    if !gamma_sd_db.is_finite() {
        return Err(Error::NonFinite("S-D SNR"));
    }
    let gain = |ratio: f64| -10.0 * pathloss_exponent * ratio.log10();
    let (sr, rd, rr) = match location {
        RelayLocation::A => (0.0, 0.0, 0.0),
        RelayLocation::B => (gain(0.5), gain(0.75), gain(0.5)),
    };
    Ok(LinkBudget {
        gamma_sd: gamma_sd_db,
        gamma_sr1: gamma_sd_db + sr,
        gamma_sr2: gamma_sd_db + sr,
        gamma_r1d: gamma_sd_db + rd,
        gamma_r2d: gamma_sd_db + rd,
        gamma_rr: gamma_sd_db + rr,
    })
}

fn amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Everything a campaign needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub relay_location: RelayLocation,
    pub snr_grid_db: Vec<f64>,
    /// Frames per block (`L`, even).
    pub frames: usize,
    /// Info bits per frame (`K`).
    pub info_bits: usize,
    /// Receive antennas at relays and destination (`N`).
    pub antennas: usize,
    /// Destination detector/decoder iterations.
    pub iterations: usize,
    pub schemes: Vec<Scheme>,
    pub realizations: usize,
    pub base_seed: u64,
    pub pathloss_exponent: f64,
    /// Drop all receiver noise; receivers use [`NOISELESS_METRIC_VARIANCE`].
    pub noiseless: bool,
    /// Overrides every scheme's pe source.
    pub pe_mode: Option<PeMode>,
    pub feedback: FeedbackMode,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            relay_location: RelayLocation::A,
            snr_grid_db: (0..=8).map(|i| f64::from(2 * i)).collect(),
            frames: 20,
            info_bits: 512,
            antennas: 2,
            iterations: 5,
            schemes: Scheme::ALL.to_vec(),
            realizations: 1000,
            base_seed: 1,
            pathloss_exponent: 3.52,
            noiseless: false,
            pe_mode: None,
            feedback: FeedbackMode::Posterior,
        }
    }
}

impl ScenarioConfig {
    /// Reduced sizes for quick runs: 100 realizations, `L = 10`, `K = 256`,
    /// SNR grid {0, 4, 8} dB.
    pub fn desk_scale(mut self) -> Self {
        self.realizations = 100;
        self.frames = 10;
        self.info_bits = 256;
        self.snr_grid_db = vec![0.0, 4.0, 8.0];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.frames.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("L must be even, got {}", self.frames)));
        }
        if self.frames == 0 {
            return Err(Error::InvalidParameter("L must be positive".into()));
        }
        if self.info_bits == 0 {
            return Err(Error::InvalidParameter("K must be positive".into()));
        }
        if self.antennas < 2 {
            return Err(Error::InvalidParameter(format!(
                "N must be >= 2, got {}",
                self.antennas
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("Iter must be >= 1".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidParameter("realizations must be >= 1".into()));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("SNR grid must be non-empty and finite".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidParameter("no scheme selected".into()));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return Err(Error::InvalidParameter(format!("scheme {s} listed twice")));
            }
        }
        if !(self.pathloss_exponent > 0.0 && self.pathloss_exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "path-loss exponent must be positive, got {}",
                self.pathloss_exponent
            )));
        }
        Ok(())
    }

    fn code_config(&self) -> ScccConfig {
        ScccConfig {
            info_len: self.info_bits,
            ..ScccConfig::default()
        }
    }

    /// Symbols per frame.
    pub fn symbols_per_frame(&self) -> usize {
        self.code_config().coded_len() / 2
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Interleaver seed of frame `frame` (1-based), shared by source and relays.
pub fn interleaver_seed(base_seed: u64, frame: usize) -> u64 {
    splitmix64(splitmix64(base_seed) ^ frame as u64)
}

/// Random draws of one realization, before any SNR scaling.
#[derive(Clone, Debug)]
pub struct RealizationDraws {
    pub info: Vec<BitFrame>,
    /// Per slot, `N x 2` with columns `[relay, source]`.
    pub destination_channels: Vec<ComplexMatrix>,
    pub destination_noise: Vec<ComplexMatrix>,
    /// Per frame slot, `N x 2` with columns `[other relay, source]`.
    pub relay_channels: Vec<ComplexMatrix>,
    pub relay_noise: Vec<ComplexMatrix>,
    /// Draw attempts discarded for a rank-deficient relay channel.
    pub redraws: u32,
}

impl RealizationDraws {
    pub fn draw(config: &ScenarioConfig, index: u64) -> Result<Self> {
        for attempt in 0..MAX_REDRAWS {
            let mut rng = RngStream::new(config.base_seed, (index << 16) | u64::from(attempt));
            let draws = Self::draw_once(config, &mut rng, attempt)?;
            if draws.relay_channels_usable() {
                return Ok(draws);
            }
        }
        Err(Error::DegenerateChannel {
            index: 1,
            magnitude: 0.0,
        })
    }

    fn draw_once(config: &ScenarioConfig, rng: &mut RngStream, redraws: u32) -> Result<Self> {
        let (l, n, m) = (config.frames, config.antennas, config.symbols_per_frame());
        let info = (0..l)
            .map(|_| BitFrame::new(rng.bits(config.info_bits), Stage::Info))
            .collect::<Result<Vec<_>>>()?;
        let mut channels =
            |count: usize| -> Result<Vec<ComplexMatrix>> { (0..count).map(|_| sample_rayleigh(n, 2, rng)).collect() };
        let destination_channels = channels(l + 1)?;
        let relay_channels = channels(l)?;
        let mut noise =
            |count: usize| -> Result<Vec<ComplexMatrix>> { (0..count).map(|_| sample_awgn(n, m, 1.0, rng)).collect() };
        let destination_noise = noise(l + 1)?;
        let relay_noise = noise(l)?;
        Ok(Self {
            info,
            destination_channels,
            destination_noise,
            relay_channels,
            relay_noise,
            redraws,
        })
    }

    fn relay_channels_usable(&self) -> bool {
        self.relay_channels.iter().all(|h| qr_decompose(h).is_ok())
    }
}

/// Per-scheme result of one realization at one SNR point.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub bit_errors: u64,
    pub bits_total: u64,
    /// Info-bit errors after each destination iteration.
    pub errors_per_iteration: Vec<u64>,
    /// Estimated pe per slot after the last iteration.
    pub pe_estimates: Vec<Option<f64>>,
    /// Estimated pe per iteration and slot.
    pub pe_history: Vec<Vec<Option<f64>>>,
    /// pe the detector used per iteration and slot.
    pub pe_used: Vec<Vec<Option<f64>>>,
    /// Info-bit errors of each relay decoding, per frame.
    pub relay_errors: Vec<usize>,
    /// Whether each frame was forwarded.
    pub forwarded: Vec<bool>,
    /// Fraction of forwarded channel bits differing from the source's, per slot.
    pub true_pe: Vec<f64>,
}

/// One realization across the SNR grid: `outcomes[snr][scheme]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizationResult {
    pub index: u64,
    pub outcomes: Vec<Vec<SchemeOutcome>>,
    pub redraws: u32,
}

/// Campaign context: validated scenario plus the per-frame codes.
#[derive(Clone, Debug)]
pub struct Simulator {
    config: ScenarioConfig,
    codes: Vec<Sccc>,
    schedule: SlotSchedule,
    constellation: Constellation,
}

impl Simulator {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let codes = (1..=config.frames)
            .map(|f| Sccc::with_seed(config.code_config(), interleaver_seed(config.base_seed, f)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            schedule: SlotSchedule::new(config.frames)?,
            codes,
            config,
            constellation: Constellation::qpsk(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn codes(&self) -> &[Sccc] {
        &self.codes
    }

    pub fn run_realization(&self, index: u64) -> Result<RealizationResult> {
        let draws = RealizationDraws::draw(&self.config, index)?;
        let source_coded = self
            .codes
            .iter()
            .zip(&draws.info)
            .map(|(c, info)| c.encode(info))
            .collect::<Result<Vec<_>>>()?;
        let outcomes = self
            .config
            .snr_grid_db
            .iter()
            .map(|&snr| {
                self.config
                    .schemes
                    .iter()
                    .map(|&scheme| self.run_scheme(&draws, &source_coded, snr, scheme))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RealizationResult {
            index,
            outcomes,
            redraws: draws.redraws,
        })
    }

    /// Full relay + destination pipeline of one scheme on fixed draws.
    pub fn run_scheme(
        &self,
        draws: &RealizationDraws,
        source_coded: &[BitFrame],
        snr_db: f64,
        scheme: Scheme,
    ) -> Result<SchemeOutcome> {
        let cfg = &self.config;
        let cmap = &self.constellation;
        let budget = link_budget(cfg.relay_location, snr_db, cfg.pathloss_exponent)?;
        let (metric_variance, noise_scale) = if cfg.noiseless {
            (NOISELESS_METRIC_VARIANCE, 0.0)
        } else {
            (1.0, 1.0)
        };
        let frames = cfg.frames;
        let policy = scheme.policy();
        let symbols = |bits: &BitFrame, origin| modulate(bits, cmap, origin).map(|s| s.symbols);
        let source_symbols = source_coded
            .iter()
            .map(|c| symbols(c, Origin::Source))
            .collect::<Result<Vec<_>>>()?;

        // Relays, in slot order: frame f is received in slot f while the
        // other relay forwards frame f - 1.
        let mut forwarded: Vec<Option<Vec<Complex64>>> = Vec::with_capacity(frames);
        let mut forwarded_bits: Vec<Option<BitFrame>> = Vec::with_capacity(frames);
        let mut relay_errors = Vec::with_capacity(frames);
        for (f, source_frame) in source_symbols.iter().enumerate() {
            let interferer = f.checked_sub(1).and_then(|p| forwarded[p].as_ref());
            let (a_sr, a_rr) = (amplitude(budget.gamma_sr1), amplitude(budget.gamma_rr));
            let mut h = draws.relay_channels[f].clone();
            h.scale_column(0, a_rr);
            h.scale_column(1, a_sr);
            let y = superpose(
                &h,
                interferer.map(Vec::as_slice),
                Some(source_frame),
                &draws.relay_noise[f],
                noise_scale,
            );
            let decoding = relay_receive(
                &y,
                &h,
                metric_variance,
                interferer.is_some(),
                &self.codes[f],
                cmap,
                &draws.info[f],
            )?;
            relay_errors.push(decoding.errors);
            let state = RelayState::new(policy, decoding.info, &draws.info[f], &self.codes[f])?;
            forwarded.push(
                state
                    .forwarded
                    .as_ref()
                    .map(|b| symbols(b, Origin::Relay))
                    .transpose()?,
            );
            forwarded_bits.push(state.forwarded);
        }

        let mut true_pe = vec![0.0; frames + 1];
        for f in 0..frames {
            if let Some(bits) = &forwarded_bits[f] {
                let diff = count_frame_errors(bits, &source_coded[f])?;
                true_pe[f + 1] = diff as f64 / bits.len() as f64;
            }
        }

        let (a_sd, a_rd) = (amplitude(budget.gamma_sd), amplitude(budget.gamma_r1d));
        let slots = (1..=frames + 1)
            .map(|l| {
                let relay = l.checked_sub(2).and_then(|f| forwarded[f].as_ref());
                let source = source_symbols.get(l - 1);
                let mut h = draws.destination_channels[l - 1].clone();
                h.scale_column(0, a_rd);
                h.scale_column(1, a_sd);
                let y = superpose(
                    &h,
                    relay.map(Vec::as_slice),
                    source.map(Vec::as_slice),
                    &draws.destination_noise[l - 1],
                    noise_scale,
                );
                destination_collect_slot(
                    l,
                    &y,
                    &h,
                    &self.schedule,
                    l >= 2 && relay.is_none(),
                    metric_variance,
                    cmap,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        let receiver = ReceiverConfig {
            iterations: cfg.iterations,
            pe_mode: cfg.pe_mode.unwrap_or(scheme.default_pe_mode()),
            feedback: cfg.feedback,
            ..ReceiverConfig::default()
        };
        let outcome = iterative_receive(&slots, &self.codes, &receiver, Some(&true_pe))?;
        let count = |decisions: &[BitFrame]| -> Result<u64> {
            decisions
                .iter()
                .zip(&draws.info)
                .map(|(d, t)| count_frame_errors(d, t).map(|e| e as u64))
                .sum()
        };
        let errors_per_iteration = outcome
            .per_iteration
            .iter()
            .map(|d| count(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(SchemeOutcome {
            scheme,
            bit_errors: *errors_per_iteration.last().expect("at least one iteration"),
            bits_total: (frames * cfg.info_bits) as u64,
            errors_per_iteration,
            pe_estimates: outcome.pe_estimates.last().cloned().unwrap_or_default(),
            pe_history: outcome.pe_estimates,
            pe_used: outcome.pe_used,
            relay_errors,
            forwarded: forwarded_bits.iter().map(Option::is_some).collect(),
            true_pe,
        })
    }

    /// Runs every realization (in parallel) and reduces in index order.
    /// `progress` receives the number of completed realizations.
    pub fn run_campaign(&self, progress: Option<&(dyn Fn(usize) + Sync)>) -> Result<CampaignResult> {
        let done = AtomicUsize::new(0);
        let results = (0..self.config.realizations as u64)
            .into_par_iter()
            .map(|i| {
                let r = self.run_realization(i);
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(p) = progress {
                    p(n);
                }
                r
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CampaignResult::reduce(&self.config, &results))
    }
}

/// `y = h[:,0] x_relay + h[:,1] x_source + noise_scale * noise`; absent
/// streams contribute nothing.
fn superpose(
    h: &ComplexMatrix,
    relay: Option<&[Complex64]>,
    source: Option<&[Complex64]>,
    noise: &ComplexMatrix,
    noise_scale: f64,
) -> ComplexMatrix {
    let mut y = ComplexMatrix::zeros(noise.rows(), noise.cols());
    for r in 0..noise.rows() {
        for m in 0..noise.cols() {
            let mut v = noise[(r, m)] * noise_scale;
            if let Some(x) = relay {
                v += h[(r, 0)] * x[m];
            }
            if let Some(x) = source {
                v += h[(r, 1)] * x[m];
            }
            y[(r, m)] = v;
        }
    }
    y
}

/// BER tally of one scheme at one SNR point.
#[derive(Clone, Debug, PartialEq)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub realizations: u64,
    /// Mean final pe estimate per slot over the realizations in which the
    /// slot carried a relay stream.
    pub mean_pe: Vec<Option<f64>>,
}

impl BerRecord {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits_total as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignResult {
    /// One record per (SNR point, scheme), SNR-major.
    pub records: Vec<BerRecord>,
    pub redraws: u64,
}

impl CampaignResult {
    /// Sums realization results in slice order.
    pub fn reduce(config: &ScenarioConfig, results: &[RealizationResult]) -> Self {
        let slots = config.frames + 1;
        let mut records = Vec::with_capacity(config.snr_grid_db.len() * config.schemes.len());
        for (si, &snr_db) in config.snr_grid_db.iter().enumerate() {
            for (ki, &scheme) in config.schemes.iter().enumerate() {
                let mut pe_sum = vec![0.0; slots];
                let mut pe_count = vec![0u64; slots];
                let mut record = BerRecord {
                    scheme,
                    snr_db,
                    bit_errors: 0,
                    bits_total: 0,
                    realizations: 0,
                    mean_pe: Vec::new(),
                };
                for r in results {
                    let o = &r.outcomes[si][ki];
                    record.bit_errors += o.bit_errors;
                    record.bits_total += o.bits_total;
                    record.realizations += 1;
                    for (l, pe) in o.pe_estimates.iter().enumerate() {
                        if let Some(pe) = pe {
                            pe_sum[l] += pe;
                            pe_count[l] += 1;
                        }
                    }
                }
                record.mean_pe = pe_sum
                    .iter()
                    .zip(&pe_count)
                    .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
                    .collect();
                records.push(record);
            }
        }
        Self {
            records,
            redraws: results.iter().map(|r| u64::from(r.redraws)).sum(),
        }
    }

    pub fn record(&self, scheme: Scheme, snr_db: f64) -> Option<&BerRecord> {
        self.records.iter().find(|r| r.scheme == scheme && r.snr_db == snr_db)
    }
}

/// One realization of `config`.
pub fn run_realization(config: &ScenarioConfig, index: u64) -> Result<RealizationResult> {
    Simulator::new(config.clone())?.run_realization(index)
}

/// Whole campaign of `config`.
pub fn run_campaign(config: &ScenarioConfig) -> Result<CampaignResult> {
    Simulator::new(config.clone())?.run_campaign(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            relay_location: RelayLocation::B,
            snr_grid_db: vec![2.0, 6.0],
            frames: 2,
            info_bits: 64,
            realizations: 3,
            base_seed: seed,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn link_budget_examples() {
        let a = link_budget(RelayLocation::A, 7.0, 3.52).unwrap();
        for g in [
            a.gamma_sd,
            a.gamma_sr1,
            a.gamma_sr2,
            a.gamma_r1d,
            a.gamma_r2d,
            a.gamma_rr,
        ] {
            assert_eq!(g, 7.0);
        }
        let b = link_budget(RelayLocation::B, 5.0, 3.52).unwrap();
        assert!((b.gamma_sr1 - 15.6).abs() < 0.05 && b.gamma_sr1 == b.gamma_sr2);
        assert!((b.gamma_r1d - 9.4).abs() < 0.05 && b.gamma_r1d == b.gamma_r2d);
        assert!((b.gamma_sr1 - 5.0 - 10.0 * 3.52 * 2f64.log10()).abs() < 1e-12);
        assert!((b.gamma_sr1 - 5.0 - 10.597).abs() < 1e-3);
        assert!(link_budget(RelayLocation::B, 5.0, 0.0).is_err());
        assert!("C".parse::<RelayLocation>().is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("df".parse::<Scheme>().is_err());
        assert_eq!(Scheme::ProposedWithoutPe.default_pe_mode(), PeMode::Zero);
        assert_eq!(Scheme::CrcSdf.policy(), ForwardingPolicy::CrcSelective);
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::default().validate().is_ok());
        let bad = [
            ScenarioConfig {
                frames: 7,
                ..ScenarioConfig::default()
            },
            ScenarioConfig {
                info_bits: 0,
                ..ScenarioConfig::default()
            },
            ScenarioConfig {
                antennas: 1,
                ..ScenarioConfig::default()
            },
            ScenarioConfig {
                realizations: 0,
                ..ScenarioConfig::default()
            },
            ScenarioConfig {
                snr_grid_db: vec![],
                ..ScenarioConfig::default()
            },
            ScenarioConfig {
                schemes: vec![Scheme::CrcSdf, Scheme::CrcSdf],
                ..ScenarioConfig::default()
            },
        ];
        for c in &bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        let err = ScenarioConfig {
            frames: 7,
            ..ScenarioConfig::default()
        }
        .validate()
        .unwrap_err();
        assert!(err.to_string().contains("L must be even"));
        let desk = ScenarioConfig::default().desk_scale();
        assert_eq!((desk.realizations, desk.frames, desk.info_bits), (100, 10, 256));
        assert_eq!(desk.snr_grid_db, vec![0.0, 4.0, 8.0]);
    }

    #[test]
    fn realization_is_deterministic() {
        let sim = Simulator::new(small(5)).unwrap();
        assert_eq!(sim.run_realization(1).unwrap(), sim.run_realization(1).unwrap());
        let other = sim.run_realization(2).unwrap();
        let a = RealizationDraws::draw(sim.config(), 1).unwrap();
        let b = RealizationDraws::draw(sim.config(), 2).unwrap();
        assert_ne!(a.info, b.info);
        assert_eq!(other.outcomes.len(), 2);
        assert_eq!(other.outcomes[0].len(), 5);
    }

    #[test]
    fn draws_do_not_depend_on_snr_grid() {
        let a = RealizationDraws::draw(&small(9), 4).unwrap();
        let b = RealizationDraws::draw(
            &ScenarioConfig {
                snr_grid_db: vec![11.0],
                ..small(9)
            },
            4,
        )
        .unwrap();
        assert_eq!(a.info, b.info);
        assert_eq!(a.destination_noise, b.destination_noise);
    }

    #[test]
    fn single_realization_campaign_matches() {
        let config = ScenarioConfig {
            realizations: 1,
            ..small(6)
        };
        let campaign = run_campaign(&config).unwrap();
        let single = run_realization(&config, 0).unwrap();
        for (si, &snr) in config.snr_grid_db.iter().enumerate() {
            for (ki, &scheme) in config.schemes.iter().enumerate() {
                let rec = campaign.record(scheme, snr).unwrap();
                assert_eq!(rec.bit_errors, single.outcomes[si][ki].bit_errors);
                assert_eq!(rec.bits_total, 2 * 64);
            }
        }
    }

    #[test]
    fn reduction_is_order_independent() {
        let config = small(7);
        let sim = Simulator::new(config.clone()).unwrap();
        let results: Vec<_> = (0..3).map(|i| sim.run_realization(i).unwrap()).collect();
        let mut reversed = results.clone();
        reversed.reverse();
        let fwd = CampaignResult::reduce(&config, &results);
        let rev = CampaignResult::reduce(&config, &reversed);
        for (a, b) in fwd.records.iter().zip(&rev.records) {
            assert_eq!((a.bit_errors, a.bits_total), (b.bit_errors, b.bits_total));
        }
        let total: u64 = results.iter().map(|r| r.outcomes[1][0].bit_errors).sum();
        assert_eq!(fwd.records[5].bit_errors, total);
        assert_eq!(sim.run_campaign(None).unwrap(), fwd);
    }

    #[test]
    fn noiseless_is_error_free() {
        let config = ScenarioConfig {
            noiseless: true,
            snr_grid_db: vec![0.0],
            realizations: 2,
            ..small(8)
        };
        let result = run_campaign(&config).unwrap();
        assert!(result.records.iter().all(|r| r.bit_errors == 0));
    }

    #[test]
    fn interleaver_seeds_differ_per_frame() {
        let sim = Simulator::new(small(1)).unwrap();
        assert_ne!(sim.codes()[0].interleaver(), sim.codes()[1].interleaver());
        assert_ne!(interleaver_seed(1, 1), interleaver_seed(2, 1));
    }
}
