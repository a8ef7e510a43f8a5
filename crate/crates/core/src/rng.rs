//! Counter-addressed Gaussian stream.
//!
//! Draw number `c` of stream `s` is a pure function of `(seed, s, c)`: the
//! ChaCha8 keystream is positioned at word `4c` and two 64-bit words feed a
//! cosine-branch Box-Muller transform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream used by the time stepper for forcing increments.
pub const FORCING_STREAM: u64 = 0;
/// Stream used for seeded random initial conditions.
pub const INITIAL_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: u64,
    pub counter: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    /// Fills `out` with standard normals from `stream` and advances the counter.
    pub fn gaussians(self, stream: u64, out: &mut [f64]) -> RngState {
        let mut g = GaussianStream::at(self.seed, stream, self.counter);
        for v in out.iter_mut() {
            *v = g.next();
        }
        RngState { seed: self.seed, counter: self.counter + out.len() as u64 }
    }
}

/// Sequential reader over one counter sub-stream.
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn at(seed: u64, stream: u64, counter: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(u128::from(counter) * 4);
        Self { rng }
    }

    pub fn next(&mut self) -> f64 {
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform in [0, 1), consuming one Gaussian slot.
    pub fn next_uniform(&mut self) -> f64 {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let _ = self.rng.next_u64();
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_addressing_matches_sequential() {
        let mut all = [0.0; 10];
        RngState::new(7).gaussians(0, &mut all);
        let mut tail = [0.0; 4];
        let s = RngState { seed: 7, counter: 6 }.gaussians(0, &mut tail);
        assert_eq!(&all[6..], &tail[..]);
        assert_eq!(s.counter, 10);
    }

    #[test]
    fn streams_and_seeds_differ() {
        let mut a = [0.0; 4];
        let mut b = [0.0; 4];
        let mut c = [0.0; 4];
        RngState::new(1).gaussians(0, &mut a);
        RngState::new(1).gaussians(1, &mut b);
        RngState::new(2).gaussians(0, &mut c);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn moments() {
        let mut v = vec![0.0; 200_000];
        RngState::new(3).gaussians(0, &mut v);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 4.0 / n.sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt());
    }
}
