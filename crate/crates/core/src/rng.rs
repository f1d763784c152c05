//! Counter-based random streams and Gaussian matrix sampling.
//!
//! The generator is Philox4x64-10 with the published multipliers and Weyl
//! constants. Draws are a pure function of `(master_seed, stream_id,
//! substream lanes, draw index)`:
//!
//! * key    = `[master_seed, stream_id]`
//! * counter = `[block_index, lane_0, lane_1, 0]`
//!
//! Each block yields four 64-bit words. Independent trials take distinct
//! `stream_id`s; nested parallel work inside a trial takes substream lanes.
//! Because there is no sequential hidden state across streams, results are
//! identical for any thread count or evaluation order.
//!
//! Uniforms use the top 53 bits of a word; Gaussian pairs use the polar
//! Box–Muller transform on `(u1, u2]`-style uniforms (u1 is offset into
//! `(0, 1]` so the logarithm is always finite).
//!
//! Reference vectors in the tests are frozen from two independent sources:
//! the algorithm's published known-answer tests, and NumPy's implementation
//! (which pre-increments its counter; the tests account for the offset).

use crate::field::Field;
use crate::matrix::DenseMatrix;
use serde::{Deserialize, Serialize};

/// Philox4x64 multipliers.
const M0: u64 = 0xD2E7_470E_E14C_6C93;
const M1: u64 = 0xCA5A_8263_9512_1157;
/// Weyl key-schedule increments.
const W0: u64 = 0x9E37_79B9_7F4A_7C15;
const W1: u64 = 0xBB67_AE85_84CA_A73B;

#[inline]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

#[inline]
fn philox_round(c: [u64; 4], k: [u64; 2]) -> [u64; 4] {
    let (hi0, lo0) = mulhilo(M0, c[0]);
    let (hi1, lo1) = mulhilo(M1, c[2]);
    [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0]
}

/// One Philox4x64-10 block: 10 rounds with the Weyl key bump between rounds.
pub fn philox4x64_10(counter: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let mut c = counter;
    let mut k = key;
    for r in 0..10 {
        if r > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        c = philox_round(c, k);
    }
    c
}

/// A deterministic, splittable random stream.
///
/// `new(seed, id)` gives the base stream of a trial; [`RngStream::substream`]
/// derives disjoint child streams for parallel sub-work (two nesting levels,
/// which is all the crate needs: trial → Monte Carlo block). Cloning a
/// stream clones its position.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    lanes: [u64; 2],
    block: u64,
    #[serde(skip)]
    buf: [u64; 4],
    /// 4 = buffer empty.
    #[serde(skip, default = "empty_pos")]
    pos: usize,
    /// Cached second member of a Box–Muller pair.
    #[serde(skip)]
    pending_gaussian: Option<f64>,
}

fn empty_pos() -> usize {
    4
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream {
            master_seed,
            stream_id,
            lanes: [0, 0],
            block: 0,
            buf: [0; 4],
            pos: 4,
            pending_gaussian: None,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh child stream occupying a disjoint counter region. Lane
    /// numbering starts at 0; children of the base stream fill lane word 0,
    /// grandchildren fill lane word 1. Deeper nesting is unsupported.
    pub fn substream(&self, lane: u64) -> RngStream {
        let lanes = if self.lanes[0] == 0 {
            [lane.checked_add(1).expect("substream lane overflow"), 0]
        } else if self.lanes[1] == 0 {
            [self.lanes[0], lane.checked_add(1).expect("substream lane overflow")]
        } else {
            panic!("substream nesting deeper than two levels");
        };
        RngStream {
            master_seed: self.master_seed,
            stream_id: self.stream_id,
            lanes,
            block: 0,
            buf: [0; 4],
            pos: 4,
            pending_gaussian: None,
        }
    }

    /// Next raw 64-bit word.
    pub fn next_u64(&mut self) -> u64 {
        if self.pos == 4 {
            self.buf = philox4x64_10(
                [self.block, self.lanes[0], self.lanes[1], 0],
                [self.master_seed, self.stream_id],
            );
            self.block = self.block.checked_add(1).expect("draw counter overflow");
            self.pos = 0;
        }
        let w = self.buf[self.pos];
        self.pos += 1;
        w
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * 2f64.powi(-53)
    }

    /// One standard Gaussian pair via Box–Muller.
    pub fn next_gaussian_pair(&mut self) -> (f64, f64) {
        let x1 = self.next_u64();
        let x2 = self.next_u64();
        // u1 ∈ (0, 1]: offset by one half-ulp step so ln(u1) is finite.
        let u1 = ((x1 >> 11) + 1) as f64 * 2f64.powi(-53);
        let u2 = (x2 >> 11) as f64 * 2f64.powi(-53);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (r * theta.cos(), r * theta.sin())
    }

    /// One standard Gaussian (second element of each pair is cached).
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(g) = self.pending_gaussian.take() {
            return g;
        }
        let (a, b) = self.next_gaussian_pair();
        self.pending_gaussian = Some(b);
        a
    }
}

/// Sample an `n×m` matrix of independent standard Gaussians, injected into
/// `field` (exact fields receive the exact dyadic value of each `f64` draw;
/// float fields round once to their precision).
pub fn sample_gaussian_matrix<F: Field>(
    field: &F,
    n: usize,
    m: usize,
    stream: &mut RngStream,
) -> DenseMatrix<F> {
    DenseMatrix::from_fn(field.clone(), n, m, |_, _| field.from_f64(stream.next_gaussian()))
}

/// As [`sample_gaussian_matrix`], also returning the pre-rounding samples
/// (the exact values of the `f64` draws before injection rounded them).
pub fn sample_gaussian_matrix_with_raw<F: Field>(
    field: &F,
    n: usize,
    m: usize,
    stream: &mut RngStream,
) -> (DenseMatrix<F>, DenseMatrix<crate::field::ExactField>) {
    let mut raw = Vec::with_capacity(n * m);
    let mat = DenseMatrix::from_fn(field.clone(), n, m, |_, _| {
        let g = stream.next_gaussian();
        raw.push(g);
        field.from_f64(g)
    });
    let exact = DenseMatrix::from_fn(crate::field::ExactField, n, m, |i, j| {
        crate::field::F64Field.to_rational(&raw[i * m + j])
    });
    (mat, exact)
}

/// Sample a length-`n` Gaussian vector in `field`.
pub fn sample_gaussian_vector<F: Field>(
    field: &F,
    n: usize,
    stream: &mut RngStream,
) -> Vec<F::Elem> {
    (0..n).map(|_| field.from_f64(stream.next_gaussian())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ExactField, F64Field, FpField};

    /// Published known-answer vectors for the core block function.
    #[test]
    fn philox_known_answer_vectors() {
        assert_eq!(
            philox4x64_10([0; 4], [0; 2]),
            [
                0x16554d9eca36314c,
                0xdb20fe9d672d0fdc,
                0xd7e772cee186176b,
                0x7e68b68aec7ba23b
            ]
        );
        assert_eq!(
            philox4x64_10([u64::MAX; 4], [u64::MAX; 2]),
            [
                0x87b092c3013fe90b,
                0x438c3c67be8d0224,
                0x9cc7d7c69cd777b6,
                0xa09caebf594f0ba0
            ]
        );
        // The pi-digits vector.
        assert_eq!(
            philox4x64_10(
                [
                    0x243f6a8885a308d3,
                    0x13198a2e03707344,
                    0xa4093822299f31d0,
                    0x082efa98ec4e6c89
                ],
                [0x452821e638d01377, 0xbe5466cf34e90c6c]
            ),
            [
                0xa528f45403e61d95,
                0x38c72dbd566e9788,
                0xa5a1610e72fd18b5,
                0x57bd43b5e52b7fe6
            ]
        );
    }

    /// Frozen from NumPy's implementation of the same algorithm (whose
    /// counter pre-increments; the +1 offsets below account for it).
    #[test]
    fn philox_matches_numpy_reference() {
        // numpy: Philox(counter=0, key=0).random_raw(4) -> block at counter 1.
        assert_eq!(
            philox4x64_10([1, 0, 0, 0], [0, 0]),
            [
                0x02f4ba6408e4d89b,
                0x3dd62b0b9ca8c5b2,
                0x1c8667a55d902e79,
                0x907d7a052fd5b4dc
            ]
        );
        // numpy: counter=2^256-1 wraps to 0 on pre-increment.
        assert_eq!(
            philox4x64_10([0, 0, 0, 0], [u64::MAX, u64::MAX]),
            [
                0x44b7493d1acfc229,
                0x6636af8e997921dd,
                0x3f73e132b5b3780e,
                0x605644dde03b01b1
            ]
        );
        // numpy: counter words [2,5,9,0], key [0xdeadbeef, 0x12345678].
        assert_eq!(
            philox4x64_10([3, 5, 9, 0], [0xdeadbeef, 0x12345678]),
            [
                0x07d90c129edb1565,
                0xe1d3607d708b05c4,
                0xd45fe83e5998a921,
                0x8b1c9eb4e8cdd03d
            ]
        );
    }

    #[test]
    fn stream_word_sequence_is_frozen() {
        let mut s = RngStream::new(42, 0);
        let head: Vec<u64> = (0..6).map(|_| s.next_u64()).collect();
        assert_eq!(
            head,
            vec![
                0xa7687e2d34c89dc6,
                0x4c5818ab9649d53f,
                0xea0add4230dddab5,
                0xe2a142eecee5bb40,
                0xd1f8817d4d62880e,
                0x307266b65cc8797e
            ]
        );
    }

    #[test]
    fn gaussian_sequence_is_frozen() {
        let mut s = RngStream::new(42, 0);
        let expect = [
            -0.27498790210540119,
            0.87969685407584708,
            0.31815021674760818,
            -0.27951816992173906,
            0.2345499249868942,
            0.58429870875522882,
        ];
        for (i, want) in expect.iter().enumerate() {
            let g = s.next_gaussian();
            assert!((g - want).abs() < 1e-12, "draw {i}: {g} vs {want}");
        }
        let mut sub = RngStream::new(7, 3).substream(1);
        // lanes [2, 0]: matches the reference computed at lane word 2.
        let expect_sub = [
            0.96864447373815543,
            -0.51096393680591401,
            -1.1141806999493351,
            0.79394337667824433,
        ];
        for want in expect_sub {
            assert!((sub.next_gaussian() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn streams_are_pure_functions_of_their_coordinates() {
        let mut a = RngStream::new(9, 5);
        let mut b = RngStream::new(9, 5);
        let xs: Vec<u64> = (0..300).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..300).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        // Different stream ids decorrelate.
        let mut c = RngStream::new(9, 6);
        assert_ne!(xs[0], c.next_u64());
        // Substreams are disjoint from the base stream and from each other.
        let base = RngStream::new(9, 5);
        let mut s0 = base.substream(0);
        let mut s1 = base.substream(1);
        let v0 = s0.next_u64();
        let v1 = s1.next_u64();
        assert_ne!(v0, v1);
        assert_ne!(v0, xs[0]);
        // Grandchildren work; great-grandchildren panic (enforced nesting).
        let gc = base.substream(0).substream(3);
        let _ = gc.clone();
        let r = std::panic::catch_unwind(|| gc.substream(0));
        assert!(r.is_err());
    }

    #[test]
    fn gaussian_moments_are_sane() {
        let mut s = RngStream::new(123, 77);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let g = s.next_gaussian();
            sum += g;
            sq += g * g;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn matrix_sampling_is_field_consistent() {
        // The same stream coordinates give the same underlying draws in
        // every field; the float image is the rounded exact image.
        let mut s1 = RngStream::new(5, 1);
        let mut s2 = RngStream::new(5, 1);
        let mut s3 = RngStream::new(5, 1);
        let exact = sample_gaussian_matrix(&ExactField, 3, 4, &mut s1);
        let fp = sample_gaussian_matrix(&FpField::with_precision(24).unwrap(), 3, 4, &mut s2);
        let native = sample_gaussian_matrix(&F64Field, 3, 4, &mut s3);
        for i in 0..3 {
            for j in 0..4 {
                let q = exact.get(i, j);
                assert_eq!(
                    fp.field().to_rational(fp.get(i, j)),
                    crate::scalar::round_to_precision(
                        q,
                        &crate::scalar::FpConfig::new(24).unwrap()
                    )
                    .to_rational()
                );
                assert_eq!(F64Field.to_rational(native.get(i, j)), q.clone());
            }
        }
    }

    #[test]
    fn raw_samples_accompany_rounded_matrix() {
        let f = FpField::with_precision(8).unwrap();
        let mut s = RngStream::new(11, 2);
        let (mat, raw) = sample_gaussian_matrix_with_raw(&f, 2, 2, &mut s);
        for i in 0..2 {
            for j in 0..2 {
                let rounded = crate::scalar::round_to_precision(
                    raw.get(i, j),
                    &crate::scalar::FpConfig::new(8).unwrap(),
                );
                assert_eq!(f.to_rational(mat.get(i, j)), rounded.to_rational());
            }
        }
    }
}
