//! k-wise independent families of w-bit strings.
//!
//! A family is a polynomial of degree k − 1 over GF(2^w) with seed-supplied
//! coefficients. Evaluating at k distinct points is an invertible
//! (Vandermonde) linear map of the coefficient vector, so uniform coefficients
//! give exactly uniform and independent values on any k distinct positions.

use crate::error::{Error, Result};
use crate::gf::FieldSpec;
use crate::seed::SeedBits;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KWiseFamily {
    field: FieldSpec,
    coeffs: Vec<u64>,
}

/// A point of the grid {2^-M, 2·2^-M, …, 1}, stored as its zero-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    index: u64,
    precision: u32,
}

impl GridPoint {
    pub fn new(index: u64, precision: u32) -> Self {
        debug_assert!(precision == 64 || index < (1u64 << precision));
        Self { index, precision }
    }

    /// Grid numerator in `1..=2^M`.
    pub fn numerator(&self) -> u128 {
        self.index as u128 + 1
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// `(index + 1) / 2^M` in `(0, 1]`.
    pub fn value(&self) -> f64 {
        grid_value(self.index, self.precision)
    }
}

/// `(index + 1) · 2^-M` as a double.
#[inline]
pub fn grid_value(index: u64, precision: u32) -> f64 {
    (index as f64 + 1.0) * (-(precision as f64)).exp2()
}

impl KWiseFamily {
    /// Builds a family from exactly `k·w` seed bits; chunk `i` (bits
    /// `[i·w, (i+1)·w)`) is the coefficient of `x^(k−1−i)`.
    pub fn new(field: FieldSpec, k: usize, seed: &SeedBits) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("independence order k must be positive".into()));
        }
        let w = field.width();
        let expected = k as u64 * w as u64;
        if seed.len() != expected {
            return Err(Error::SeedLength {
                expected,
                actual: seed.len(),
            });
        }
        let coeffs = (0..k as u64).map(|i| seed.chunk(i * w as u64, w)).collect();
        Ok(Self { field, coeffs })
    }

    /// Builds a family directly from coefficients, highest degree first.
    pub fn from_coeffs(field: FieldSpec, coeffs: Vec<u64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Parameter("independence order k must be positive".into()));
        }
        if let Some(&bad) = coeffs.iter().find(|&&c| !field.contains(c)) {
            return Err(Error::Domain(format!(
                "coefficient {bad:#x} is not a {}-bit field element",
                field.width()
            )));
        }
        Ok(Self { field, coeffs })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    fn encode(&self, index: u64) -> Result<u64> {
        if !self.field.contains(index) {
            return Err(Error::PositionOverflow {
                index,
                width: self.field.width(),
            });
        }
        Ok(index)
    }

    /// The w-bit output at position `index`.
    pub fn eval(&self, index: u64) -> Result<u64> {
        let x = self.encode(index)?;
        Ok(self.field.horner(&self.coeffs, x))
    }

    /// Outputs at positions `0..out.len()`.
    pub fn eval_prefix(&self, out: &mut [u64]) -> Result<()> {
        if let Some(last) = out.len().checked_sub(1) {
            self.encode(last as u64)?;
        }
        let points: Vec<u64> = (0..out.len() as u64).collect();
        self.field.eval_many(&self.coeffs, &points, out);
        Ok(())
    }

    /// Top `precision` bits of the output at `index`, as a grid point in (0, 1].
    pub fn uniform(&self, index: u64, precision: u32) -> Result<GridPoint> {
        check_precision(precision, self.field.width())?;
        let raw = self.eval(index)?;
        Ok(GridPoint::new(top_bits(raw, self.field.width(), precision), precision))
    }
}

pub(crate) fn check_precision(precision: u32, width: u32) -> Result<()> {
    if precision > width {
        return Err(Error::Precision { precision, width });
    }
    if precision == 0 {
        return Err(Error::Parameter("precision M must be at least 1".into()));
    }
    Ok(())
}

/// The `precision` most significant bits of a `width`-bit string.
#[inline]
pub fn top_bits(raw: u64, width: u32, precision: u32) -> u64 {
    raw >> (width - precision)
}
