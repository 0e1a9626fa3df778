//! Orthonormal (probabilists') Hermite basis and the Ornstein–Uhlenbeck
//! operator.
//!
//! `h_j = He_j / √(j!)` is orthonormal under the standard Gaussian, so for a
//! multivariate expansion `p = Σ a_α h_α` we get `E[p²] = Σ a_α²` and the noise
//! operator acts diagonally: `A^θ h_α = cos(θ)^|α| h_α`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::{total_degree, MultiIndex, Polynomial};
use crate::error::{Error, Result};

/// Largest per-polynomial degree accepted by the basis change.
pub const MAX_HERMITE_DEGREE: u32 = 20;

/// Relative size below which converted coefficients are treated as zero.
const PRUNE_REL: f64 = 1e-14;

struct Tables {
    /// `x^e = Σ_j mono[e][j] h_j`
    mono: Vec<Vec<f64>>,
    /// `h_j = Σ_e herm[j][e] x^e`
    herm: Vec<Vec<f64>>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let top = MAX_HERMITE_DEGREE as usize;
        let sqrt_fact: Vec<f64> = (0..=top)
            .scan(1.0f64, |f, j| {
                if j > 0 {
                    *f *= j as f64;
                }
                Some(f.sqrt())
            })
            .collect();

        // x·He_j = He_{j+1} + j·He_{j-1}
        let mut he_of_mono = vec![vec![0.0; top + 1]; top + 1];
        he_of_mono[0][0] = 1.0;
        for e in 0..top {
            for j in 0..=e {
                let a = he_of_mono[e][j];
                if a == 0.0 {
                    continue;
                }
                he_of_mono[e + 1][j + 1] += a;
                if j > 0 {
                    he_of_mono[e + 1][j - 1] += j as f64 * a;
                }
            }
        }
        let mono = he_of_mono
            .iter()
            .map(|row| row.iter().zip(&sqrt_fact).map(|(a, s)| a * s).collect())
            .collect();

        // He_{j+1} = x·He_j − j·He_{j-1}
        let mut he = vec![vec![0.0; top + 1]; top + 1];
        he[0][0] = 1.0;
        if top >= 1 {
            he[1][1] = 1.0;
        }
        for j in 1..top {
            for e in 0..=top {
                let shifted = if e > 0 { he[j][e - 1] } else { 0.0 };
                he[j + 1][e] = shifted - j as f64 * he[j - 1][e];
            }
        }
        let herm = he
            .iter()
            .zip(&sqrt_fact)
            .map(|(row, s)| row.iter().map(|c| c / s).collect())
            .collect();
        Tables { mono, herm }
    })
}

/// Coefficients in the orthonormal Hermite basis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HermiteExpansion {
    n: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl HermiteExpansion {
    pub fn from_coeffs<I>(n: usize, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut out = Self {
            n,
            coeffs: BTreeMap::new(),
        };
        for (a, c) in coeffs {
            if a.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    actual: a.len(),
                });
            }
            if total_degree(&a) > MAX_HERMITE_DEGREE {
                return Err(Error::DegreeCap {
                    degree: total_degree(&a),
                    cap: MAX_HERMITE_DEGREE,
                });
            }
            *out.coeffs.entry(a).or_insert(0.0) += c;
        }
        out.coeffs.retain(|_, c| *c != 0.0);
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.coeffs
    }

    pub fn coeff(&self, a: &[u32]) -> f64 {
        self.coeffs.get(a).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|a| total_degree(a)).max().unwrap_or(0)
    }

    /// `√(Σ a_α²)`, the Gaussian L² norm.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Multiplies the coefficient of each `h_α` by `f(|α|)`.
    pub fn scale_by_degree(&self, f: impl Fn(u32) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(a, c)| (a.clone(), c * f(total_degree(a))))
            .filter(|(_, c)| *c != 0.0)
            .collect();
        Self { n: self.n, coeffs }
    }

    /// Back to the monomial basis.
    pub fn to_polynomial(&self) -> Polynomial {
        let t = tables();
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (a, c) in &self.coeffs {
            let rows: Vec<&Vec<f64>> = a.iter().map(|&j| &t.herm[j as usize]).collect();
            tensor_accumulate(&rows, a, *c, &mut acc);
        }
        let scale = self.max_abs_coeff();
        let terms = acc.into_iter().filter(|(_, c)| c.abs() > PRUNE_REL * scale);
        Polynomial::from_terms(self.n, terms).expect("dimensions preserved")
    }
}

/// Adds `c · Π_i (Σ_k rows[i][k] b_k)` into `acc`, where only entries
/// `k ≤ top[i]` with the parity of `top[i]` can be nonzero.
fn tensor_accumulate(rows: &[&Vec<f64>], top: &[u32], c: f64, acc: &mut BTreeMap<MultiIndex, f64>) {
    let n = rows.len();
    let mut idx: Vec<u32> = top.iter().map(|&t| t % 2).collect();
    loop {
        let mut v = c;
        for i in 0..n {
            v *= rows[i][idx[i] as usize];
        }
        if v != 0.0 {
            *acc.entry(idx.clone()).or_insert(0.0) += v;
        }
        // odometer over same-parity indices ≤ top
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            if idx[i] + 2 <= top[i] {
                idx[i] += 2;
                break;
            }
            idx[i] = top[i] % 2;
            i += 1;
        }
    }
}

/// Change of basis from monomials to orthonormal Hermite products.
pub fn hermite_expand(p: &Polynomial) -> Result<HermiteExpansion> {
    let degree = p.degree();
    if degree > MAX_HERMITE_DEGREE {
        return Err(Error::DegreeCap {
            degree,
            cap: MAX_HERMITE_DEGREE,
        });
    }
    let t = tables();
    let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for (e, c) in p.terms() {
        let rows: Vec<&Vec<f64>> = e.iter().map(|&k| &t.mono[k as usize]).collect();
        tensor_accumulate(&rows, e, *c, &mut acc);
    }
    let scale = p.max_abs_coeff();
    let coeffs = acc.into_iter().filter(|(_, c)| c.abs() > PRUNE_REL * scale).collect();
    Ok(HermiteExpansion { n: p.n(), coeffs })
}

/// Gaussian L² norm `E[p(Y)²]^(1/2)`, exact via Parseval.
pub fn l2_norm(p: &Polynomial) -> Result<f64> {
    Ok(hermite_expand(p)?.l2_norm())
}

/// `A^θ p`: each Hermite component of degree j scaled by cos(θ)^j.
pub fn ou_apply(p: &Polynomial, theta: f64) -> Result<Polynomial> {
    ou_apply_factor(p, theta.cos())
}

/// The noise operator with eigenvalue base `rho` (= cos θ).
pub fn ou_apply_factor(p: &Polynomial, rho: f64) -> Result<Polynomial> {
    let h = hermite_expand(p)?;
    let scaled = h.scale_by_degree(|j| rho.powi(j as i32));
    let out = scaled.to_polynomial();
    Ok(out.prune(PRUNE_REL * p.max_abs_coeff()))
}
