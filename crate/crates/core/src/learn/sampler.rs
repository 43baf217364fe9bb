//! Training frame pairs `(t, t')` with `t'` uniform in `[t + 1, t + delta]`.
//!
//! Each pair is followed by its reverse `(t', t)`: tracking backwards in time
//! is a free augmentation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct PairSampler {
    len: usize,
    delta: usize,
    rng: ChaCha8Rng,
    pending_reverse: Option<(usize, usize)>,
}

impl PairSampler {
    /// `delta` is clamped to at least 1 and to the sequence length.
    pub fn new(sequence_length: usize, delta: usize, seed: u64) -> Self {
        Self {
            len: sequence_length,
            delta: delta.max(1),
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending_reverse: None,
        }
    }
}

impl Iterator for PairSampler {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        if let Some(r) = self.pending_reverse.take() {
            return Some(r);
        }
        if self.len < 2 {
            return None;
        }
        let delta = self.delta.min(self.len - 1);
        // every start admits the full gap range, so gaps stay uniform
        let t = self.rng.random_range(0..self.len - delta);
        let t2 = t + self.rng.random_range(1..=delta);
        self.pending_reverse = Some((t2, t));
        Some((t, t2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_one_is_consecutive() {
        let s = PairSampler::new(50, 1, 7);
        for (a, b) in s.take(200).step_by(2) {
            assert_eq!(b, a + 1);
        }
    }

    #[test]
    fn each_pair_is_followed_by_its_reverse() {
        let pairs: Vec<_> = PairSampler::new(100, 30, 9).take(400).collect();
        for w in pairs.chunks(2) {
            assert_eq!(w[0], (w[1].1, w[1].0));
            assert!(w[0].1 > w[0].0 && w[0].1 < 100);
        }
    }

    #[test]
    fn short_sequences() {
        assert_eq!(PairSampler::new(1, 30, 0).next(), None);
        let pairs: Vec<_> = PairSampler::new(5, 30, 0).take(100).collect();
        assert!(pairs.iter().all(|(a, b)| *a < 5 && *b < 5 && a != b));
    }
}
