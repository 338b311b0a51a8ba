//! Counter-based random numbers.
//!
//! Every random quantity in the crate is a pure function of a 64-bit master
//! seed and a 128-bit counter, evaluated with Philox4x32-10. There is no
//! sequential generator state, so results do not depend on generation order
//! or on how work is split across threads.
//!
//! Counter layout for Brownian increments is `[step, path, index, domain]`.
//! The domain word separates unrelated consumers (noise, initial conditions,
//! test vectors, index sampling) that share a seed.

use rand::RngCore;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// Domain tags for the fourth counter word.
pub mod domain {
    pub const BROWNIAN: u32 = 0x0000_0001;
    pub const HALF_GAUSSIAN: u32 = 0x0000_0002;
    pub const INITIAL_CONDITION: u32 = 0x0000_0003;
    pub const TEST_VECTOR: u32 = 0x0000_0004;
    pub const SELECTION: u32 = 0x0000_0005;
}

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// The Philox4x32 bijection with 10 rounds.
#[inline]
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut ctr = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, ctr[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0];
    }
    ctr
}

/// Uniform in the open interval (0, 1) from 64 random bits.
#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Master seed plus the derivation of independent streams from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngKey {
    seed: u64,
}

impl RngKey {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    fn key(&self) -> [u32; 2] {
        [self.seed as u32, (self.seed >> 32) as u32]
    }

    /// Raw 128 random bits for a counter.
    #[inline]
    pub fn block(&self, counter: [u32; 4]) -> [u32; 4] {
        philox4x32_10(counter, self.key())
    }

    /// Standard normal variate attached to `counter` (Box-Muller, cosine branch).
    #[inline]
    pub fn normal(&self, counter: [u32; 4]) -> f64 {
        let b = self.block(counter);
        let u1 = open_unit((u64::from(b[0]) << 32) | u64::from(b[1]));
        let u2 = open_unit((u64::from(b[2]) << 32) | u64::from(b[3]));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform (0, 1) variate attached to `counter`.
    #[inline]
    pub fn uniform(&self, counter: [u32; 4]) -> f64 {
        let b = self.block(counter);
        open_unit((u64::from(b[0]) << 32) | u64::from(b[1]))
    }

    /// Standard normal keyed by `(domain, index, path, step)`.
    #[inline]
    pub fn normal_at(&self, domain: u32, index: usize, path: usize, step: usize) -> f64 {
        self.normal(counter(domain, index, path, step))
    }

    /// A sequential stream for utilities that want an `RngCore` (index
    /// sampling, random test vectors). The stream is still counter-based:
    /// word `j` of the stream is a function of `(seed, domain, stream, j)`.
    pub fn stream(&self, domain: u32, stream: u64) -> PhiloxStream {
        PhiloxStream {
            key: *self,
            domain,
            stream,
            block_index: 0,
            buffer: [0; 4],
            used: 4,
        }
    }
}

#[inline]
fn counter(domain: u32, index: usize, path: usize, step: usize) -> [u32; 4] {
    debug_assert!(
        index <= u32::MAX as usize && path <= u32::MAX as usize && step <= u32::MAX as usize
    );
    [step as u32, path as u32, index as u32, domain]
}

/// Sequential view over a counter-based stream.
#[derive(Debug, Clone)]
pub struct PhiloxStream {
    key: RngKey,
    domain: u32,
    stream: u64,
    block_index: u32,
    buffer: [u32; 4],
    used: usize,
}

impl PhiloxStream {
    fn refill(&mut self) {
        let ctr = [
            self.block_index,
            self.stream as u32,
            (self.stream >> 32) as u32,
            self.domain | 0x8000_0000,
        ];
        self.buffer = self.key.block(ctr);
        self.block_index = self.block_index.wrapping_add(1);
        self.used = 0;
    }

    /// Standard normal from the stream (Box-Muller, cosine branch).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = open_unit(self.next_u64());
        let u2 = open_unit(self.next_u64());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

impl RngCore for PhiloxStream {
    fn next_u32(&mut self) -> u32 {
        if self.used == 4 {
            self.refill();
        }
        let v = self.buffer[self.used];
        self.used += 1;
        v
    }

    fn next_u64(&mut self) -> u64 {
        let hi = u64::from(self.next_u32());
        let lo = u64::from(self.next_u32());
        (hi << 32) | lo
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(4) {
            let bytes = self.next_u32().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors for Philox4x32-10 from the Random123 distribution.
    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x32_10([0, 0, 0, 0], [0, 0]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32_10([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32_10(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn normals_are_pure_functions_of_counter() {
        let key = RngKey::new(42);
        let a = key.normal_at(domain::BROWNIAN, 3, 7, 11);
        let _ = key.normal_at(domain::BROWNIAN, 0, 0, 0);
        let b = key.normal_at(domain::BROWNIAN, 3, 7, 11);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, key.normal_at(domain::BROWNIAN, 3, 7, 12));
        assert_ne!(a, RngKey::new(43).normal_at(domain::BROWNIAN, 3, 7, 11));
    }

    #[test]
    fn normal_moments() {
        let key = RngKey::new(7);
        let n = 200_000;
        let xs: Vec<f64> = (0..n)
            .map(|k| key.normal_at(domain::BROWNIAN, 0, 0, k))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let kurt = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64 / (var * var);
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
        assert!((kurt - 3.0).abs() < 0.05, "kurtosis {kurt}");
    }

    #[test]
    fn stream_is_reproducible() {
        let key = RngKey::new(1);
        let a: Vec<u64> = {
            let mut s = key.stream(domain::SELECTION, 9);
            (0..10).map(|_| s.next_u64()).collect()
        };
        let mut s = key.stream(domain::SELECTION, 9);
        let b: Vec<u64> = (0..10).map(|_| s.next_u64()).collect();
        assert_eq!(a, b);
        let mut other = key.stream(domain::SELECTION, 10);
        assert_ne!(a[0], other.next_u64());
    }
}
