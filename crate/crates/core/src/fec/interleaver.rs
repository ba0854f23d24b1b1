use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BitFrame, LlrFrame, Stage};
use crate::error::{Error, Result};

/// Bijective index map; `interleave(x)[i] = x[perm[i]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
    seed: Option<u64>,
}

impl Interleaver {
    /// Uniformly random permutation drawn from `seed`.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { perm, seed: Some(seed) }
    }

    pub fn identity(len: usize) -> Self {
        Self {
            perm: (0..len).collect(),
            seed: None,
        }
    }

    pub fn from_permutation(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
        }
        Ok(Self { perm, seed: None })
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub(crate) fn interleave_slice<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| x[p]).collect()
    }

    pub(crate) fn deinterleave_slice<T: Copy + Default>(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); y.len()];
        for (&p, &v) in self.perm.iter().zip(y) {
            out[p] = v;
        }
        out
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.perm.len() {
            return Err(Error::Dimension(format!(
                "frame of {len} through an interleaver of {}",
                self.perm.len()
            )));
        }
        Ok(())
    }
}

/// Frames that can pass through an [`Interleaver`].
pub trait Permutable: Sized {
    fn permute(&self, pi: &Interleaver, forward: bool) -> Result<Self>;
}

impl Permutable for BitFrame {
    fn permute(&self, pi: &Interleaver, forward: bool) -> Result<Self> {
        pi.check(self.len())?;
        let (bits, stage) = if forward {
            (pi.interleave_slice(self.bits()), Stage::Interleaved)
        } else {
            (pi.deinterleave_slice(self.bits()), Stage::OuterCoded)
        };
        Ok(BitFrame::with_stage(bits, stage))
    }
}

impl Permutable for LlrFrame {
    fn permute(&self, pi: &Interleaver, forward: bool) -> Result<Self> {
        pi.check(self.len())?;
        let (llrs, stage) = if forward {
            (pi.interleave_slice(self.llrs()), Stage::Interleaved)
        } else {
            (pi.deinterleave_slice(self.llrs()), Stage::OuterCoded)
        };
        Ok(LlrFrame::clamped(llrs, stage))
    }
}

pub fn interleave<F: Permutable>(x: &F, pi: &Interleaver) -> Result<F> {
    x.permute(pi, true)
}

pub fn deinterleave<F: Permutable>(y: &F, pi: &Interleaver) -> Result<F> {
    y.permute(pi, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn identity_leaves_frame_unchanged() {
        let frame = BitFrame::new(vec![1, 0, 0, 1, 1], Stage::OuterCoded).unwrap();
        let out = interleave(&frame, &Interleaver::identity(5)).unwrap();
        assert_eq!(out.bits(), frame.bits());
    }

    #[test]
    fn round_trip_bits_and_llrs() {
        let pi = Interleaver::random(1024, 77);
        let mut rng = RngStream::new(1, 1);
        let bits = BitFrame::new(rng.bits(1024), Stage::OuterCoded).unwrap();
        assert_eq!(deinterleave(&interleave(&bits, &pi).unwrap(), &pi).unwrap(), bits);
        let llrs = LlrFrame::new((0..1024).map(|i| i as f64 / 40.0 - 12.0).collect(), Stage::OuterCoded).unwrap();
        assert_eq!(deinterleave(&interleave(&llrs, &pi).unwrap(), &pi).unwrap(), llrs);
    }

    #[test]
    fn seeds_give_distinct_bijections() {
        let a = Interleaver::random(1024, 1);
        let b = Interleaver::random(1024, 2);
        assert_ne!(a.permutation(), b.permutation());
        let mut sorted = a.permutation().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..1024).collect::<Vec<_>>());
        assert_eq!(Interleaver::random(1024, 1), a);
    }

    #[test]
    fn length_mismatch_and_bad_permutation() {
        let pi = Interleaver::identity(4);
        assert!(interleave(&BitFrame::zeros(5, Stage::OuterCoded), &pi).is_err());
        assert!(Interleaver::from_permutation(vec![0, 0, 1]).is_err());
        assert!(Interleaver::from_permutation(vec![2, 0, 1]).is_ok());
    }
}
