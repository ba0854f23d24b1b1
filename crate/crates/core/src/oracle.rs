//! Brute-force reference computations for tests.
//!
//! Everything here works in the complex, probability domain by explicit
//! enumeration and shares no code path with the production detector,
//! estimator or demapper beyond the constellation table.

use num_complex::Complex64;

use crate::numerics::RealMatrix;
use crate::phy::{Constellation, DetectorSlotInput};

/// One enumerated hypothesis: relay label, source label, log weight.
type Term = (Option<usize>, Option<usize>, f64);

/// Per-bit LLRs of both streams.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReferenceLlrs {
    pub source: Vec<f64>,
    pub relay: Vec<f64>,
}

fn prob_plus(llr: f64) -> f64 {
    1.0 / (1.0 + (-llr).exp())
}

fn bit_prob(llr: f64, bit: u8) -> f64 {
    if bit == 0 {
        prob_plus(llr)
    } else {
        1.0 - prob_plus(llr)
    }
}

fn complex_channel(h_real: &RealMatrix) -> Vec<[Complex64; 2]> {
    let n = h_real.rows() / 2;
    (0..n)
        .map(|r| {
            let relay = Complex64::new(h_real[(r, 0)], h_real[(r + n, 0)]);
            let source = Complex64::new(h_real[(r, 1)], h_real[(r + n, 1)]);
            [relay, source]
        })
        .collect()
}

fn complex_column(y_real: &RealMatrix, m: usize) -> Vec<Complex64> {
    let n = y_real.rows() / 2;
    (0..n)
        .map(|r| Complex64::new(y_real[(r, m)], y_real[(r + n, m)]))
        .collect()
}

fn labels_of(cmap: &Constellation, present: bool) -> Vec<Option<usize>> {
    if present {
        (0..cmap.order()).map(Some).collect()
    } else {
        vec![None]
    }
}

fn symbol_bits(cmap: &Constellation, label: usize) -> Vec<u8> {
    (0..cmap.bits_per_symbol()).map(|j| cmap.label_bit(label, j)).collect()
}

/// Generative model: the source sends `s`, the relay sends `u xor e` where
/// `u` is the source's version of the relayed bits (with the relay priors)
/// and each bit of `e` is 1 with probability `pe`. Returns exact per-bit
/// posterior LLRs of `s` and `u`.
pub fn generative_posteriors(input: &DetectorSlotInput, cmap: &Constellation) -> ReferenceLlrs {
    let b = cmap.bits_per_symbol();
    let h = complex_channel(&input.h_real);
    let mut out = ReferenceLlrs::default();
    for m in 0..input.y_real.cols() {
        let y = complex_column(&input.y_real, m);
        let zero = Complex64::new(0.0, 0.0);
        let mut terms = Vec::new();
        for s in labels_of(cmap, input.source_present) {
            for u in labels_of(cmap, input.relay_present) {
                for e in labels_of(cmap, input.relay_present) {
                    let xs = s.map_or(zero, |l| cmap.points()[l]);
                    let xr = match (u, e) {
                        (Some(u), Some(e)) => cmap.points()[u ^ e],
                        _ => zero,
                    };
                    let dist: f64 = y
                        .iter()
                        .zip(&h)
                        .map(|(y, h)| (y - h[0] * xr - h[1] * xs).norm_sqr())
                        .sum();
                    let mut weight = -dist / input.noise_variance;
                    if let Some(s) = s {
                        for (j, bit) in symbol_bits(cmap, s).into_iter().enumerate() {
                            weight += bit_prob(input.priors_source.llrs()[m * b + j], bit).ln();
                        }
                    }
                    if let (Some(u), Some(e)) = (u, e) {
                        for (j, bit) in symbol_bits(cmap, u).into_iter().enumerate() {
                            weight += bit_prob(input.priors_relay.llrs()[m * b + j], bit).ln();
                        }
                        for bit in symbol_bits(cmap, e) {
                            weight += if bit == 1 { input.pe } else { 1.0 - input.pe }.ln();
                        }
                    }
                    terms.push((s, u, weight));
                }
            }
        }
        let peak = terms.iter().map(|t| t.2).fold(f64::NEG_INFINITY, f64::max);
        let ratio = |select: &dyn Fn(&Term) -> Option<u8>| {
            let (mut p0, mut p1) = (0.0, 0.0);
            for t in &terms {
                match select(t) {
                    Some(0) => p0 += (t.2 - peak).exp(),
                    Some(_) => p1 += (t.2 - peak).exp(),
                    None => {}
                }
            }
            (p0 / p1).ln()
        };
        for j in 0..b {
            if input.source_present {
                out.source.push(ratio(&|t| t.0.map(|s| cmap.label_bit(s, j))));
            }
            if input.relay_present {
                out.relay.push(ratio(&|t| t.1.map(|u| cmap.label_bit(u, j))));
            }
        }
    }
    out
}

/// Plain joint MAP detection of the bits on the air, every stream weighted
/// by its own priors.
pub fn conventional_map(input: &DetectorSlotInput, cmap: &Constellation) -> ReferenceLlrs {
    let zero_pe = DetectorSlotInput {
        pe: 0.0,
        ..input.clone()
    };
    generative_posteriors(&zero_pe, cmap)
}

/// Mean disagreement probability between two independent soft versions of
/// each bit, evaluated directly from the bit probabilities.
pub fn disagreement_probability(source: &[f64], relay: &[f64]) -> f64 {
    let total: f64 = source
        .iter()
        .zip(relay)
        .map(|(&ls, &lr)| {
            let (ps, pr) = (prob_plus(ls), prob_plus(lr));
            ps * (1.0 - pr) + (1.0 - ps) * pr
        })
        .sum();
    total / source.len() as f64
}
