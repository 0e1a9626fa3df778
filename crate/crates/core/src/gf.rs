//! Binary extension fields GF(2^w) for w ∈ {4, 8, 16, 32, 64}.
//!
//! Elements are stored in the low `w` bits of a `u64`, bit `i` holding the
//! coefficient of `x^i`. Multiplication is a carry-less product followed by
//! reduction modulo a fixed irreducible polynomial. On x86_64 with
//! `pclmulqdq` the 64-bit field uses the hardware carry-less multiplier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widths with a pinned reduction polynomial.
pub const SUPPORTED_WIDTHS: [u32; 5] = [4, 8, 16, 32, 64];

/// Field description: width plus the full reduction polynomial (including the
/// leading `x^w` term, hence `u128`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    width: u32,
    reduction_poly: u128,
}

impl FieldSpec {
    pub fn new(width: u32) -> Result<Self> {
        let reduction_poly: u128 = match width {
            // x^4 + x + 1
            4 => 0x13,
            // x^8 + x^4 + x^3 + x + 1
            8 => 0x11B,
            // x^16 + x^5 + x^3 + x + 1
            16 => 0x1_002B,
            // x^32 + x^7 + x^3 + x^2 + 1
            32 => 0x1_0000_008D,
            // x^64 + x^4 + x^3 + x + 1
            64 => (1u128 << 64) | 0x1B,
            w => return Err(Error::UnsupportedWidth(w)),
        };
        Ok(Self { width, reduction_poly })
    }

    /// The production field GF(2^64).
    pub fn gf64() -> Self {
        Self::new(64).expect("64 is a supported width")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn reduction_poly(&self) -> u128 {
        self.reduction_poly
    }

    /// Mask selecting the low `w` bits.
    pub fn mask(&self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }

    pub fn contains(&self, a: u64) -> bool {
        a & !self.mask() == 0
    }

    /// Product of `a` and `b` in GF(2^w). Inputs must already be field elements.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(self.contains(a) && self.contains(b));
        if self.width == 64 {
            mul64(a, b)
        } else {
            self.reduce(clmul(a, b))
        }
    }

    /// Reduces a carry-less product of two field elements.
    fn reduce(&self, mut p: u128) -> u64 {
        let w = self.width;
        let low = self.reduction_poly ^ (1u128 << w);
        loop {
            let hi = p >> w;
            if hi == 0 {
                return p as u64;
            }
            p = (p & ((1u128 << w) - 1)) ^ clmul_wide(hi, low);
        }
    }

    /// Horner evaluation of `coeffs` (highest degree first) at every point,
    /// writing results into `out`.
    pub fn eval_many(&self, coeffs: &[u64], points: &[u64], out: &mut [u64]) {
        assert_eq!(points.len(), out.len());
        if self.width == 64 {
            #[cfg(target_arch = "x86_64")]
            {
                if std::arch::is_x86_feature_detected!("pclmulqdq") {
                    // SAFETY: the feature was detected at runtime.
                    unsafe { x86::horner64(coeffs, points, out) };
                    return;
                }
            }
        }
        for (x, y) in points.iter().zip(out.iter_mut()) {
            *y = self.horner(coeffs, *x);
        }
    }

    /// Rows `[x^(k−1), …, x, 1]` for every point, laid out point-major, so
    /// that `dot(coeffs, row)` evaluates the polynomial at that point.
    pub fn power_table(&self, points: &[u64], k: usize) -> Vec<u64> {
        let mut table = vec![0u64; points.len() * k];
        for (row, &x) in table.chunks_exact_mut(k).zip(points) {
            let mut p = 1u64;
            for slot in row.iter_mut().rev() {
                *slot = p;
                p = self.mul(p, x);
            }
        }
        table
    }

    /// `Σ a_i · b_i` in the field, accumulating unreduced carry-less
    /// products and reducing once.
    #[inline]
    pub fn dot(&self, a: &[u64], b: &[u64]) -> u64 {
        assert_eq!(a.len(), b.len());
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("pclmulqdq") {
                // SAFETY: the feature was detected at runtime.
                let p = unsafe { x86::clmul_dot(a, b) };
                return self.reduce_wide(p);
            }
        }
        let p = a.iter().zip(b).fold(0u128, |acc, (&x, &y)| acc ^ clmul_soft(x, y));
        self.reduce_wide(p)
    }

    fn reduce_wide(&self, p: u128) -> u64 {
        if self.width == 64 {
            reduce64((p >> 64) as u64, p as u64)
        } else {
            self.reduce(p)
        }
    }

    /// Horner evaluation at a single point.
    pub fn horner(&self, coeffs: &[u64], x: u64) -> u64 {
        coeffs.iter().fold(0u64, |acc, &c| self.mul(acc, x) ^ c)
    }

    /// Irreducibility of the reduction polynomial by Rabin's test (works for
    /// every supported width, since each width is a power of two).
    pub fn is_irreducible(&self) -> bool {
        rabin_irreducible(self.reduction_poly, self.width)
    }
}

/// Multiplication in GF(2^64) modulo x^64 + x^4 + x^3 + x + 1.
#[inline]
pub fn mul64(a: u64, b: u64) -> u64 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { x86::mul64(a, b) };
        }
    }
    let p = clmul_soft(a, b);
    reduce64((p >> 64) as u64, p as u64)
}

#[inline(always)]
fn reduce64(hi: u64, lo: u64) -> u64 {
    // hi·x^64 ≡ hi·(x^4 + x^3 + x + 1); the bits shifted past x^63 fold once more.
    let t = hi ^ (hi >> 60) ^ (hi >> 61) ^ (hi >> 63);
    lo ^ t ^ (t << 1) ^ (t << 3) ^ (t << 4)
}

/// Carry-less product of two 64-bit words.
#[inline]
pub fn clmul(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { x86::clmul(a, b) };
        }
    }
    clmul_soft(a, b)
}

/// Portable shift-and-xor carry-less multiply.
pub fn clmul_soft(a: u64, b: u64) -> u128 {
    let a = a as u128;
    let mut b = b;
    let mut r = 0u128;
    while b != 0 {
        r ^= a << b.trailing_zeros();
        b &= b - 1;
    }
    r
}

/// Carry-less product where the result is known to fit in 128 bits.
fn clmul_wide(a: u128, b: u128) -> u128 {
    let mut r = 0u128;
    let mut b = b;
    while b != 0 {
        r ^= a << b.trailing_zeros();
        b &= b - 1;
    }
    r
}

#[cfg(target_arch = "x86_64")]
mod x86 {
    use std::arch::x86_64::*;

    #[inline]
    #[target_feature(enable = "pclmulqdq,sse2")]
    pub unsafe fn clmul(a: u64, b: u64) -> u128 {
        let va = _mm_set_epi64x(0, a as i64);
        let vb = _mm_set_epi64x(0, b as i64);
        let p = _mm_clmulepi64_si128(va, vb, 0x00);
        let lo = _mm_cvtsi128_si64(p) as u64;
        let hi = _mm_cvtsi128_si64(_mm_unpackhi_epi64(p, p)) as u64;
        ((hi as u128) << 64) | lo as u128
    }

    #[inline]
    #[target_feature(enable = "pclmulqdq,sse2")]
    pub unsafe fn mul64(a: u64, b: u64) -> u64 {
        let p = clmul(a, b);
        super::reduce64((p >> 64) as u64, p as u64)
    }

    /// XOR of the carry-less products `a_i · b_i`, two lanes per load.
    #[target_feature(enable = "pclmulqdq,sse2")]
    pub unsafe fn clmul_dot(a: &[u64], b: &[u64]) -> u128 {
        let pairs = a.len() / 2;
        let mut acc0 = _mm_setzero_si128();
        let mut acc1 = _mm_setzero_si128();
        for i in 0..pairs {
            let va = _mm_loadu_si128(a.as_ptr().add(2 * i) as *const __m128i);
            let vb = _mm_loadu_si128(b.as_ptr().add(2 * i) as *const __m128i);
            acc0 = _mm_xor_si128(acc0, _mm_clmulepi64_si128(va, vb, 0x00));
            acc1 = _mm_xor_si128(acc1, _mm_clmulepi64_si128(va, vb, 0x11));
        }
        let acc = _mm_xor_si128(acc0, acc1);
        let lo = _mm_cvtsi128_si64(acc) as u64;
        let hi = _mm_cvtsi128_si64(_mm_unpackhi_epi64(acc, acc)) as u64;
        let mut r = ((hi as u128) << 64) | lo as u128;
        if a.len() % 2 == 1 {
            let last = a.len() - 1;
            r ^= clmul(a[last], b[last]);
        }
        r
    }

    /// Horner over many points, interleaving independent chains so the
    /// multiplier pipeline stays full.
    #[target_feature(enable = "pclmulqdq,sse2")]
    pub unsafe fn horner64(coeffs: &[u64], points: &[u64], out: &mut [u64]) {
        const LANES: usize = 8;
        let mut start = 0;
        while start + LANES <= points.len() {
            let x: [u64; LANES] = points[start..start + LANES].try_into().unwrap();
            let mut acc = [0u64; LANES];
            for &c in coeffs {
                for l in 0..LANES {
                    acc[l] = mul64(acc[l], x[l]) ^ c;
                }
            }
            out[start..start + LANES].copy_from_slice(&acc);
            start += LANES;
        }
        for i in start..points.len() {
            let x = points[i];
            let mut acc = 0u64;
            for &c in coeffs {
                acc = mul64(acc, x) ^ c;
            }
            out[i] = acc;
        }
    }
}

/// Remainder of `a` modulo `m` in GF(2)[x].
pub fn poly_rem(mut a: u128, m: u128) -> u128 {
    assert!(m != 0);
    let dm = 127 - m.leading_zeros();
    while a != 0 && 127 - a.leading_zeros() >= dm {
        a ^= m << (127 - a.leading_zeros() - dm);
    }
    a
}

/// Greatest common divisor in GF(2)[x].
pub fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_rem(a, b);
        a = b;
        b = r;
    }
    a
}

/// Product of `a` and `b` modulo `m` in GF(2)[x], with deg a, deg b < deg m ≤ 64.
fn poly_mulmod(a: u128, b: u128, m: u128) -> u128 {
    let deg = 127 - m.leading_zeros();
    let mut acc = 0u128;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if (a >> deg) & 1 == 1 {
            a ^= m;
        }
    }
    acc
}

/// Rabin's irreducibility test for a degree-`w` polynomial `f`, `w` a power
/// of two: `x^(2^w) ≡ x (mod f)` and `gcd(x^(2^(w/2)) − x, f) = 1`.
pub fn rabin_irreducible(f: u128, w: u32) -> bool {
    if 127 - f.leading_zeros() != w || !w.is_power_of_two() {
        return false;
    }
    let x = poly_rem(0b10, f);
    let mut t = x;
    for _ in 0..w / 2 {
        t = poly_mulmod(t, t, f);
    }
    if w > 1 && poly_gcd(f, t ^ x) != 1 {
        return false;
    }
    for _ in w / 2..w {
        t = poly_mulmod(t, t, f);
    }
    t == x
}

/// Irreducibility by trial division with every polynomial of degree
/// 1..=w/2. Exponential in `w`; meant for w ≤ 16.
pub fn trial_division_irreducible(f: u128, w: u32) -> bool {
    if 127 - f.leading_zeros() != w {
        return false;
    }
    for deg in 1..=w / 2 {
        for low in 0..(1u128 << deg) {
            let g = (1u128 << deg) | low;
            if poly_rem(f, g) == 0 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unsupported_width_rejected() {
        assert_eq!(FieldSpec::new(12), Err(Error::UnsupportedWidth(12)));
    }

    #[test]
    fn small_widths_irreducible_by_trial_division() {
        for w in [4, 8, 16] {
            let f = FieldSpec::new(w).unwrap();
            assert!(trial_division_irreducible(f.reduction_poly(), w), "w={w}");
        }
    }

    #[test]
    fn all_widths_pass_rabin() {
        for w in SUPPORTED_WIDTHS {
            assert!(FieldSpec::new(w).unwrap().is_irreducible(), "w={w}");
        }
        // x^4 + 1 = (x + 1)^4
        assert!(!rabin_irreducible(0x11, 4));
        assert!(!trial_division_irreducible(0x11, 4));
    }

    #[test]
    fn identity_and_annihilator_gf64() {
        let f = FieldSpec::gf64();
        for a in [0u64, 1, 5, u64::MAX, 0xdead_beef_0123_4567] {
            assert_eq!(f.mul(a, 0), 0);
            assert_eq!(f.mul(a, 1), a);
        }
    }

    #[test]
    fn hardware_and_software_clmul_agree() {
        let mut s = 0x9e37_79b9_7f4a_7c15u64;
        for _ in 0..1000 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = s;
            let b = s.rotate_left(29) ^ 0x5555;
            assert_eq!(clmul(a, b), clmul_soft(a, b));
            let p = clmul_soft(a, b);
            let generic = FieldSpec {
                width: 64,
                reduction_poly: (1u128 << 64) | 0x1B,
            }
            .reduce(p);
            assert_eq!(mul64(a, b), generic);
        }
    }

    #[test]
    fn power_table_dot_matches_horner() {
        for w in SUPPORTED_WIDTHS {
            let f = FieldSpec::new(w).unwrap();
            let coeffs: Vec<u64> = (0..9u64)
                .map(|i| i.wrapping_mul(0x9e37_79b9_7f4a_7c15) & f.mask())
                .collect();
            let points: Vec<u64> = (0..16).collect();
            let table = f.power_table(&points, coeffs.len());
            for (row, &x) in table.chunks_exact(coeffs.len()).zip(&points) {
                assert_eq!(f.dot(&coeffs, row), f.horner(&coeffs, x), "w={w} x={x}");
            }
        }
    }

    #[test]
    fn eval_many_matches_scalar_horner() {
        let f = FieldSpec::gf64();
        let coeffs: Vec<u64> = (0..17u64).map(|i| i.wrapping_mul(0x1234_5678_9abc_def1)).collect();
        let points: Vec<u64> = (0..21).collect();
        let mut out = vec![0; points.len()];
        f.eval_many(&coeffs, &points, &mut out);
        for (x, y) in points.iter().zip(&out) {
            assert_eq!(*y, f.horner(&coeffs, *x));
        }
    }
}
