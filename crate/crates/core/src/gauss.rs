//! Discretized Box–Muller Gaussians driven by k-wise independent grid values.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::kwise::{check_precision, grid_value, top_bits, KWiseFamily};

/// Default calibration constant for `δ = c0 · 2^(-M/2)`.
pub const DEFAULT_C0: f64 = 8.0;

/// `√(−2 ln u) · cos(2π v)` for `u, v ∈ (0, 1]`.
pub fn box_muller(u: f64, v: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::Domain(format!("box_muller needs u in (0, 1], got {u}")));
    }
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Domain(format!("box_muller needs v in (0, 1], got {v}")));
    }
    Ok(box_muller_unchecked(u, v))
}

#[inline]
pub(crate) fn box_muller_unchecked(u: f64, v: f64) -> f64 {
    (-2.0 * u.ln()).sqrt() * (TAU * v).cos()
}

/// Rounds `x ∈ (0, 1]` up to the nearest multiple of `2^-M`.
#[inline]
pub fn round_up_to_grid(x: f64, precision: u32) -> f64 {
    let scale = (precision as f64).exp2();
    (x * scale).ceil() / scale
}

/// One block Z_i: two independently seeded families feeding Box–Muller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussianBlock {
    u_family: KWiseFamily,
    v_family: KWiseFamily,
    n: usize,
    precision: u32,
}

impl GaussianBlock {
    pub fn new(u_family: KWiseFamily, v_family: KWiseFamily, n: usize, precision: u32) -> Result<Self> {
        if u_family.k() != v_family.k() || u_family.field() != v_family.field() {
            return Err(Error::Parameter("u and v families must share k and field width".into()));
        }
        let width = u_family.field().width();
        check_precision(precision, width)?;
        if width < 64 && n as u64 > (1u64 << width) {
            return Err(Error::PositionOverflow {
                index: n as u64 - 1,
                width,
            });
        }
        Ok(Self {
            u_family,
            v_family,
            n,
            precision,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn u_family(&self) -> &KWiseFamily {
        &self.u_family
    }

    pub fn v_family(&self) -> &KWiseFamily {
        &self.v_family
    }

    /// Coordinate `j` of the block.
    pub fn sample(&self, j: usize) -> Result<f64> {
        if j >= self.n {
            return Err(Error::Coordinate { index: j, dim: self.n });
        }
        let u = self.u_family.uniform(j as u64, self.precision)?.value();
        let v = self.v_family.uniform(j as u64, self.precision)?.value();
        Ok(box_muller_unchecked(u, v))
    }

    /// All `n` coordinates, using the batched field evaluation.
    pub fn sample_all(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        let mut scratch = BlockScratch::new(self.u_family.field(), self.n, self.u_family.k());
        self.sample_into(&mut out, &mut scratch);
        out
    }

    pub(crate) fn sample_into(&self, out: &mut [f64], scratch: &mut BlockScratch) {
        sample_coeffs_into(
            self.u_family.field(),
            self.u_family.coeffs(),
            self.v_family.coeffs(),
            self.precision,
            out,
            scratch,
        );
    }
}

/// Powers of the positions `0..n`, shared by every block with the same k.
#[derive(Debug, Clone)]
pub(crate) struct BlockScratch {
    k: usize,
    powers: Vec<u64>,
}

impl BlockScratch {
    pub fn new(field: crate::gf::FieldSpec, n: usize, k: usize) -> Self {
        let points: Vec<u64> = (0..n as u64).collect();
        Self {
            k,
            powers: field.power_table(&points, k),
        }
    }
}

/// Evaluates the block defined by raw coefficient slices into `out`
/// (positions `0..out.len()`).
pub(crate) fn sample_coeffs_into(
    field: crate::gf::FieldSpec,
    u_coeffs: &[u64],
    v_coeffs: &[u64],
    precision: u32,
    out: &mut [f64],
    scratch: &mut BlockScratch,
) {
    let width = field.width();
    debug_assert_eq!(u_coeffs.len(), scratch.k);
    for (z, row) in out.iter_mut().zip(scratch.powers.chunks_exact(scratch.k)) {
        let u_raw = field.dot(u_coeffs, row);
        let v_raw = field.dot(v_coeffs, row);
        let u = grid_value(top_bits(u_raw, width, precision), precision);
        let v = grid_value(top_bits(v_raw, width, precision), precision);
        *z = box_muller_unchecked(u, v);
    }
}

/// The closeness parameter δ = c0 · 2^(-M/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationBound {
    pub precision: u32,
    pub delta: f64,
    pub c0: f64,
}

pub fn closeness_bound(precision: u32, c0: f64) -> Result<DiscretizationBound> {
    if precision < 4 {
        return Err(Error::Parameter(format!(
            "precision M must be at least 4, got {precision}"
        )));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::Parameter(format!("c0 must be positive, got {c0}")));
    }
    let delta = c0 * (-(precision as f64) / 2.0).exp2();
    if delta >= 1.0 {
        return Err(Error::TooCoarse { precision, delta });
    }
    Ok(DiscretizationBound { precision, delta, c0 })
}

/// |a(u, v) − a(u', v')| where primes denote rounding up to the M-grid.
pub fn coupling_error(u: f64, v: f64, precision: u32) -> f64 {
    let exact = box_muller_unchecked(u, v);
    let rounded = box_muller_unchecked(round_up_to_grid(u, precision), round_up_to_grid(v, precision));
    (exact - rounded).abs()
}
