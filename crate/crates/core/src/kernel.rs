//! Vectorizable pair log-likelihood kernel used by the embedder.
//!
//! `ln` and `exp` are evaluated with branch-free polynomial reductions so that the
//! per-pair loop vectorizes. Only IEEE add/mul/div/sqrt and integer bit operations are
//! used, none of which are fused, so the AVX2 build of the loop returns exactly the same
//! bits as the portable build.

#![allow(clippy::excessive_precision)]

use crate::geometry::HalfAngle;
use crate::model::{LN_PROB_FLOOR, PROB_FLOOR};

const LN2_HI: f64 = 6.93147180369123816490e-01;
const LN2_LO: f64 = 1.90821492927058770002e-10;
const INV_LN2: f64 = std::f64::consts::LOG2_E;
const LG1: f64 = 6.666666666666735130e-01;
const LG2: f64 = 3.999999999940941908e-01;
const LG3: f64 = 2.857142874366239149e-01;
const LG4: f64 = 2.222219843214978396e-01;
const LG5: f64 = 1.818357216161805012e-01;
const LG6: f64 = 1.531383769920937332e-01;
const LG7: f64 = 1.479819860511658591e-01;
const P1: f64 = 1.66666666666666019037e-01;
const P2: f64 = -2.77777777770155933842e-03;
const P3: f64 = 6.61375632143793436117e-05;
const P4: f64 = -1.65339022054652515390e-06;
const P5: f64 = 4.13813679705723846039e-08;
/// 1.5·2^52: adding it rounds to an integer held in the low mantissa bits.
const ROUND_MAGIC: f64 = 6755399441055744.0;
const INT_MAGIC_BITS: u64 = 0x4330_0000_0000_0000;

/// Natural log for positive normal `x`.
#[inline(always)]
pub(crate) fn ln(x: f64) -> f64 {
    let u = x.to_bits();
    let hx = (u >> 32).wrapping_add(0x3ff0_0000 - 0x3fe6_a09e);
    // k + 1024, always non-negative for normal input
    let kb = ((hx >> 20) & 0xfff).wrapping_add(1024 - 0x3ff);
    let hx = (hx & 0x000f_ffff) + 0x3fe6_a09e;
    let m = f64::from_bits((hx << 32) | (u & 0xffff_ffff));
    let k = f64::from_bits(INT_MAGIC_BITS | kb) - (4503599627370496.0 + 1024.0);
    let f = m - 1.0;
    let hfsq = 0.5 * f * f;
    let s = f / (2.0 + f);
    let z = s * s;
    let w = z * z;
    let t1 = w * (LG2 + w * (LG4 + w * LG6));
    let t2 = z * (LG1 + w * (LG3 + w * (LG5 + w * LG7)));
    let r = t2 + t1;
    s * (hfsq + r) + k * LN2_LO - hfsq + f + k * LN2_HI
}

/// `exp(x)` for `x` in `[-700, 0]`.
#[inline(always)]
pub(crate) fn exp(x: f64) -> f64 {
    let t = x * INV_LN2 + ROUND_MAGIC;
    let kf = t - ROUND_MAGIC;
    let k = (t.to_bits() as i64).wrapping_sub(ROUND_MAGIC.to_bits() as i64);
    let hi = x - kf * LN2_HI;
    let lo = kf * LN2_LO;
    let r = hi - lo;
    let xx = r * r;
    let c = r - xx * (P1 + xx * (P2 + xx * (P3 + xx * (P4 + xx * P5))));
    let y = 1.0 + (r * c / (2.0 - c) - lo + hi);
    y * f64::from_bits((k.wrapping_add(1023) as u64) << 52)
}

/// `ln(1 + q)` for `q >= 0`, accurate for small `q`, division free apart from `ln`.
#[inline(always)]
pub(crate) fn ln_1p(q: f64) -> f64 {
    let u = 1.0 + q;
    let d = u - 1.0;
    // rounding error of u, scaled by 1/u (series, exact enough where it matters)
    let e = d.min(1.0);
    let inv = 1.0 - e * (1.0 - e * (1.0 - e));
    ln(u) + (q - d) * inv
}

/// Old-node side of a block of pairs, structure-of-arrays. Lengths are padded to a
/// multiple of [`LANES`] with zero-weight entries.
#[derive(Debug, Clone, Default)]
pub(crate) struct PairBlock {
    pub hs: Vec<f64>,
    pub hc: Vec<f64>,
    /// `cosh ζ(ra - rb) - 1`
    pub excess: Vec<f64>,
    /// `2 sinh ζra sinh ζrb`
    pub sinh_prod: Vec<f64>,
    /// `ζ R` of the pair.
    pub zr: Vec<f64>,
    /// `+1` for a link, `-1` for a non-link.
    pub sign: Vec<f64>,
    pub weight: Vec<f64>,
}

pub(crate) const LANES: usize = 8;

impl PairBlock {
    pub fn with_capacity(n: usize) -> Self {
        let cap = n.div_ceil(LANES) * LANES;
        let v = || Vec::with_capacity(cap);
        PairBlock { hs: v(), hc: v(), excess: v(), sinh_prod: v(), zr: v(), sign: v(), weight: v() }
    }

    pub fn push(&mut self, half: HalfAngle, excess: f64, sinh_prod: f64, zr: f64, linked: bool) {
        self.hs.push(half.s);
        self.hc.push(half.c);
        self.excess.push(excess);
        self.sinh_prod.push(sinh_prod);
        self.zr.push(zr);
        self.sign.push(if linked { 1.0 } else { -1.0 });
        self.weight.push(1.0);
    }

    /// Pads to a whole number of lanes. Must be called once after the last `push`.
    pub fn finish(&mut self) {
        while !self.hs.len().is_multiple_of(LANES) {
            self.hs.push(0.0);
            self.hc.push(1.0);
            self.excess.push(0.0);
            self.sinh_prod.push(0.0);
            self.zr.push(0.0);
            self.sign.push(-1.0);
            self.weight.push(0.0);
        }
    }
}

/// Sum of pair log-likelihood terms for a new angle with half-angle `h`.
///
/// `inv_two_t` is `1/(2T)`; `None` selects the `T = 0` step function.
pub(crate) fn log_likelihood(block: &PairBlock, h: HalfAngle, inv_two_t: Option<f64>) -> f64 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { log_likelihood_avx512(block, h, inv_two_t) };
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { log_likelihood_avx2(block, h, inv_two_t) };
        }
    }
    log_likelihood_portable(block, h, inv_two_t)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn log_likelihood_avx2(block: &PairBlock, h: HalfAngle, inv_two_t: Option<f64>) -> f64 {
    sum_terms(block, h, inv_two_t)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn log_likelihood_avx512(block: &PairBlock, h: HalfAngle, inv_two_t: Option<f64>) -> f64 {
    sum_terms(block, h, inv_two_t)
}

pub(crate) fn log_likelihood_portable(block: &PairBlock, h: HalfAngle, inv_two_t: Option<f64>) -> f64 {
    sum_terms(block, h, inv_two_t)
}

#[inline(always)]
fn sum_terms(block: &PairBlock, h: HalfAngle, inv_two_t: Option<f64>) -> f64 {
    match inv_two_t {
        Some(c) => sum_lanes(block, h, |_, v| {
            let v = v * c;
            let e = exp((-v.abs()).max(-700.0));
            -(v.max(0.0) + ln_1p(e))
        }),
        None => sum_lanes(block, h, |sg, v| {
            // a link at exactly R is kept, a non-link at exactly R is not
            let bad = v > 0.0 || (v == 0.0 && sg < 0.0);
            if bad {
                LN_PROB_FLOOR
            } else {
                0.0
            }
        }),
    }
}

#[inline(always)]
fn sum_lanes(block: &PairBlock, h: HalfAngle, term: impl Fn(f64, f64) -> f64) -> f64 {
    let n = block.hs.len();
    debug_assert_eq!(n % LANES, 0);
    let mut acc = [0.0f64; LANES];
    let chunks = block
        .hs
        .chunks_exact(LANES)
        .zip(block.hc.chunks_exact(LANES))
        .zip(block.excess.chunks_exact(LANES))
        .zip(block.sinh_prod.chunks_exact(LANES))
        .zip(block.zr.chunks_exact(LANES))
        .zip(block.sign.chunks_exact(LANES))
        .zip(block.weight.chunks_exact(LANES));
    for ((((((hs, hc), ex), sp), zr), sg), wt) in chunks {
        let hs: &[f64; LANES] = hs.try_into().unwrap();
        let hc: &[f64; LANES] = hc.try_into().unwrap();
        let ex: &[f64; LANES] = ex.try_into().unwrap();
        let sp: &[f64; LANES] = sp.try_into().unwrap();
        let zr: &[f64; LANES] = zr.try_into().unwrap();
        let sg: &[f64; LANES] = sg.try_into().unwrap();
        let wt: &[f64; LANES] = wt.try_into().unwrap();
        for l in 0..LANES {
            let s = h.s * hc[l] - h.c * hs[l];
            let y = (ex[l] + sp[l] * s * s).max(0.0);
            let zx = ln_1p(y + (y * (y + 2.0)).sqrt());
            let v = sg[l] * (zx - zr[l]);
            acc[l] += wt[l] * term(sg[l], v).clamp(LN_PROB_FLOOR, -PROB_FLOOR);
        }
    }
    tree_sum(acc)
}

/// Pairwise sum in a fixed order.
#[inline(always)]
fn tree_sum(mut acc: [f64; LANES]) -> f64 {
    let mut width = LANES;
    while width > 1 {
        width /= 2;
        for l in 0..width {
            acc[l] += acc[l + width];
        }
    }
    acc[0]
}
