//! Reproducible random-number contract.
//!
//! All randomness flows through [`StreamRng`], a PCG-32 generator
//! (64-bit state, 32-bit output) addressed by `(seed, stream)`. Streams
//! are derived, never shared: `stream = fnv1a64(purpose) ^ index`, so a
//! run seed plus a purpose tag plus a step index always lands on the
//! same sequence, on every platform.

use rand_core::RngCore;
use rand_pcg::Pcg32;

/// FNV-1a 64-bit hash of a purpose tag.
fn fnv1a64(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic seeded generator with derived streams.
#[derive(Debug, Clone)]
pub struct StreamRng {
    pcg: Pcg32,
    spare_normal: Option<f64>,
}

impl StreamRng {
    /// Generator for an explicit `(seed, stream)` pair.
    pub fn from_parts(seed: u64, stream: u64) -> Self {
        Self { pcg: Pcg32::new(seed, stream), spare_normal: None }
    }

    /// Generator for `(seed, purpose, index)`; see the module docs for
    /// the stream derivation.
    pub fn derive(seed: u64, purpose: &str, index: u64) -> Self {
        Self::from_parts(seed, fnv1a64(purpose) ^ index)
    }

    pub fn next_u32(&mut self) -> u32 {
        self.pcg.next_u32()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.pcg.next_u64()
    }

    /// Uniform draw in `[0, bound)` via the multiply-shift reduction;
    /// returns 0 when `bound` is 0.
    pub fn below(&mut self, bound: u32) -> u32 {
        if bound == 0 {
            return 0;
        }
        ((u64::from(self.next_u32()) * u64::from(bound)) >> 32) as u32
    }

    /// Uniform draw in `(0, 1]`.
    fn uniform_pos(&mut self) -> f64 {
        (f64::from(self.next_u32()) + 1.0) / 4_294_967_296.0
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        f64::from(self.next_u32()) / 4_294_967_296.0
    }

    /// Standard normal via the Box-Muller transform on generator output.
    /// Each transform yields a pair; the second value is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_pos();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// `count` standard-normal samples.
    pub fn normal_vec(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.normal()).collect()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u32 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_parts_give_identical_sequences() {
        let mut a = StreamRng::derive(7, "offset", 3);
        let mut b = StreamRng::derive(7, "offset", 3);
        for _ in 0..100 {
            assert_eq!(a.next_u32(), b.next_u32());
        }
    }

    #[test]
    fn first_normals_are_frozen() {
        // Guards the generator + transform against silent changes.
        let mut rng = StreamRng::derive(42, "test", 0);
        let got = rng.normal_vec(10);
        let frozen = FROZEN_NORMALS_SEED42_TEST0;
        for (g, f) in got.iter().zip(frozen.iter()) {
            assert!((g - f).abs() < 1e-15, "got {g}, frozen {f}");
        }
    }

    // First ten normals for StreamRng::derive(42, "test", 0).
    const FROZEN_NORMALS_SEED42_TEST0: [f64; 10] = [
        2.37485369196230728e-1,
        9.03939770130317011e-1,
        -1.14908625252169286e-1,
        3.46504874284363940e-1,
        1.23803034980115578e-1,
        5.59483207061806320e-1,
        -4.88333054494481833e-1,
        2.77134611003268860e-1,
        -5.98550379449546366e-1,
        1.55896123524722263e0,
    ];

    #[test]
    fn normal_moments() {
        let mut rng = StreamRng::derive(1, "moments", 0);
        let n = 1_000_000;
        let xs = rng.normal_vec(n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        // 4 standard errors: se(mean) = 1/sqrt(n), se(var) ~ sqrt(2/n).
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn distinct_streams_decorrelated() {
        let mut a = StreamRng::derive(99, "stream_a", 0);
        let mut b = StreamRng::derive(99, "stream_b", 0);
        let n = 100_000;
        let xs = a.normal_vec(n);
        let ys = b.normal_vec(n);
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (x, y) in xs.iter().zip(ys.iter()) {
            cov += (x - mx) * (y - my);
            vx += (x - mx) * (x - mx);
            vy += (y - my) * (y - my);
        }
        let corr = cov / (vx.sqrt() * vy.sqrt());
        assert!(corr.abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn below_is_in_range_and_deterministic() {
        let mut rng = StreamRng::derive(5, "below", 0);
        for _ in 0..1000 {
            assert!(rng.below(7) < 7);
        }
        assert_eq!(StreamRng::derive(5, "below", 1).below(100), StreamRng::derive(5, "below", 1).below(100));
    }
}
