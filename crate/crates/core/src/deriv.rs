//! Noisy points, noisy derivatives and the averaged derivative norms built
//! from them, plus the interpolation weights that annihilate the
//! noise-averaging sequence of a bounded-degree polynomial.
//!
//! `N^θ_Y(X) = cos θ·X + sin θ·Y`, and
//! `D^θ_{Y,Z} f(X) = (f(N^θ_Y X) − f(N^θ_Z X)) / θ`. Iterated derivatives
//! apply the outermost pair first: `D_{Y₁,Z₁} D_{Y₂,Z₂} f(X)` evaluates `f`
//! at `N_{W₂}(N_{W₁}(X))` for `W_i ∈ {Y_i, Z_i}`.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::poly::{hermite_expand, ou_apply, Evaluator, MultiIndex, Polynomial};
use crate::stats::{fill_normal, monte_carlo, proportion, Estimate};

/// Default inner (direction) sample count for averaged derivative norms.
pub const DEFAULT_INNER_SAMPLES: u64 = 10_000;
/// Default outer (noise chain) sample count for averaged derivative norms.
pub const DEFAULT_OUTER_SAMPLES: u64 = 1_000;

/// Largest instance for which the derivative norm is built symbolically.
pub const EXACT_MAX_N: usize = 4;
pub const EXACT_MAX_DEGREE: u32 = 3;
pub const EXACT_MAX_ELL: u32 = 2;

/// Angle, derivative order, averaging depth and Monte Carlo budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivParams {
    pub theta: f64,
    pub ell: u32,
    pub m: u32,
    pub samples: u64,
}

impl DerivParams {
    pub fn validate(&self) -> Result<()> {
        check_theta(self.theta)?;
        if self.samples < 1000 {
            return Err(Error::Parameter(format!(
                "at least 1000 Monte Carlo samples required, got {}",
                self.samples
            )));
        }
        Ok(())
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < std::f64::consts::FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta must lie in (0, pi/2), got {theta}")))
    }
}

fn check_dims(expected: usize, xs: &[&[f64]]) -> Result<()> {
    for x in xs {
        if x.len() != expected {
            return Err(Error::Dimension {
                expected,
                actual: x.len(),
            });
        }
    }
    Ok(())
}

/// `cos θ·X + sin θ·Y`.
pub fn noisy_point(x: &[f64], y: &[f64], theta: f64) -> Result<Vec<f64>> {
    check_dims(x.len(), &[y])?;
    let (s, c) = theta.sin_cos();
    Ok(x.iter().zip(y).map(|(a, b)| c * a + s * b).collect())
}

#[inline]
fn rotate_into(x: &[f64], y: &[f64], c: f64, s: f64, out: &mut [f64]) {
    for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
        *o = c * a + s * b;
    }
}

/// `(p(N^θ_Y X) − p(N^θ_Z X)) / θ`.
pub fn noisy_derivative(p: &Polynomial, x: &[f64], y: &[f64], z: &[f64], theta: f64) -> Result<f64> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::Domain(format!(
            "noisy derivative needs a nonzero angle, got {theta}"
        )));
    }
    check_dims(p.n(), &[x, y, z])?;
    let a = p.eval(&noisy_point(x, y, theta)?)?;
    let b = p.eval(&noisy_point(x, z, theta)?)?;
    Ok((a - b) / theta)
}

/// Evaluates iterated noisy derivatives for one polynomial at a fixed angle.
struct NestedDerivative<'a> {
    ev: &'a Evaluator,
    n: usize,
    cos: f64,
    sin: f64,
    inv_theta: f64,
}

impl<'a> NestedDerivative<'a> {
    fn new(ev: &'a Evaluator, theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        Self {
            ev,
            n: ev.n(),
            cos,
            sin,
            inv_theta: 1.0 / theta,
        }
    }

    /// `D_{Y₁,Z₁} ⋯ D_{Y_ℓ,Z_ℓ} p(X)` where `dirs` holds `Y₁ Z₁ Y₂ Z₂ …`
    /// back to back and `scratch` has room for `ℓ·n` values.
    fn eval(&self, x: &[f64], dirs: &[f64], scratch: &mut [f64]) -> f64 {
        if dirs.is_empty() {
            return self.ev.eval(x);
        }
        let n = self.n;
        let (y, rest) = dirs.split_at(n);
        let (z, rest) = rest.split_at(n);
        let (here, deeper) = scratch.split_at_mut(n);
        rotate_into(x, y, self.cos, self.sin, here);
        let a = self.eval(here, rest, deeper);
        rotate_into(x, z, self.cos, self.sin, here);
        let b = self.eval(here, rest, deeper);
        (a - b) * self.inv_theta
    }
}

/// `D_{Y₁,Z₁} ⋯ D_{Y_ℓ,Z_ℓ} p(X)` for explicit direction pairs.
pub fn iterated_derivative(p: &Polynomial, x: &[f64], dirs: &[(Vec<f64>, Vec<f64>)], theta: f64) -> Result<f64> {
    check_theta(theta)?;
    check_dims(p.n(), &[x])?;
    let mut flat = Vec::with_capacity(2 * p.n() * dirs.len());
    for (y, z) in dirs {
        check_dims(p.n(), &[y, z])?;
        flat.extend_from_slice(y);
        flat.extend_from_slice(z);
    }
    let ev = p.evaluator();
    let mut scratch = vec![0.0; p.n() * dirs.len()];
    Ok(NestedDerivative::new(&ev, theta).eval(x, &flat, &mut scratch))
}

/// Monte Carlo estimate of `|p^{(ℓ)}_θ(X)|₂²`, the mean square of the ℓ-fold
/// noisy derivative over iid Gaussian direction pairs. `ℓ = 0` is exact.
pub fn deriv_norm_mc(
    p: &Polynomial,
    x: &[f64],
    ell: u32,
    theta: f64,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<Estimate> {
    check_dims(p.n(), &[x])?;
    if ell == 0 {
        let v = p.eval(x)?;
        return Ok(Estimate::exact(v * v));
    }
    check_theta(theta)?;
    if samples < 2 {
        return Err(Error::Parameter("need at least two samples".into()));
    }
    let ev = p.evaluator();
    let nd = NestedDerivative::new(&ev, theta);
    let n = p.n();
    let ell = ell as usize;
    let stats = monte_carlo(samples, seed, exec, |rng| {
        let mut dirs = vec![0.0; 2 * ell * n];
        let mut scratch = vec![0.0; ell * n];
        fill_normal(rng, &mut dirs);
        let v = nd.eval(x, &dirs, &mut scratch);
        v * v
    });
    Ok(stats.estimate())
}

/// How `q_lm` evaluates the averaged derivative norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum QMode {
    /// Outer noise chains, each with `inner` direction samples.
    Mc { outer: u64, inner: u64 },
    /// Symbolic derivative norm, exact averaging.
    Exact,
}

impl Default for QMode {
    fn default() -> Self {
        QMode::Mc {
            outer: DEFAULT_OUTER_SAMPLES,
            inner: DEFAULT_INNER_SAMPLES,
        }
    }
}

/// `q_{ℓ,m}(X) = (A^θ)^m |p^{(ℓ)}_θ(·)|₂² evaluated at X`.
#[allow(clippy::too_many_arguments)]
pub fn q_lm(
    p: &Polynomial,
    x: &[f64],
    ell: u32,
    m: u32,
    theta: f64,
    mode: QMode,
    seed: u64,
    exec: Execution,
) -> Result<Estimate> {
    check_dims(p.n(), &[x])?;
    check_theta(theta)?;
    match mode {
        QMode::Exact => {
            let mut q = deriv_norm_poly(p, ell, theta)?;
            for _ in 0..m {
                q = ou_apply(&q, theta)?;
            }
            Ok(Estimate::exact(q.eval(x)?))
        }
        QMode::Mc { outer, inner } => {
            if m == 0 {
                return deriv_norm_mc(p, x, ell, theta, inner, seed, exec);
            }
            if outer < 2 || inner < 1 {
                return Err(Error::Parameter("need at least two outer and one inner sample".into()));
            }
            let ev = p.evaluator();
            let nd = NestedDerivative::new(&ev, theta);
            let n = p.n();
            let ell = ell as usize;
            let stats = monte_carlo(outer, seed, exec, |rng: &mut ChaCha8Rng| {
                let mut point = x.to_vec();
                let mut next = vec![0.0; n];
                let mut noise = vec![0.0; n];
                for _ in 0..m {
                    fill_normal(rng, &mut noise);
                    rotate_into(&point, &noise, nd.cos, nd.sin, &mut next);
                    std::mem::swap(&mut point, &mut next);
                }
                let mut dirs = vec![0.0; 2 * ell * n];
                let mut scratch = vec![0.0; ell * n];
                let mut sum = 0.0;
                for _ in 0..inner {
                    fill_normal(rng, &mut dirs);
                    let v = nd.eval(&point, &dirs, &mut scratch);
                    sum += v * v;
                }
                sum / inner as f64
            });
            Ok(stats.estimate())
        }
    }
}

/// The polynomial `X ↦ |p^{(ℓ)}_θ(X)|₂²`, built by expanding the iterated
/// derivative in `X` and all direction variables and integrating the
/// directions out with Gaussian moments.
pub fn deriv_norm_poly(p: &Polynomial, ell: u32, theta: f64) -> Result<Polynomial> {
    check_theta(theta)?;
    let n = p.n();
    if n > EXACT_MAX_N || p.degree() > EXACT_MAX_DEGREE || ell > EXACT_MAX_ELL {
        return Err(Error::Capability(format!(
            "exact derivative norms need n <= {EXACT_MAX_N}, degree <= {EXACT_MAX_DEGREE}, ell <= {EXACT_MAX_ELL} \
             (got n = {n}, degree = {}, ell = {ell})",
            p.degree()
        )));
    }
    if ell == 0 {
        return Ok(p.square());
    }
    let ell = ell as usize;
    // variables: X, then Y₁ Z₁ Y₂ Z₂ …, n each
    let total = n * (1 + 2 * ell);
    let (s, c) = theta.sin_cos();
    let mut deriv = Polynomial::zero(total);
    for mask in 0u32..(1 << ell) {
        let subs: Vec<Polynomial> = (0..n)
            .map(|j| {
                let mut terms = vec![(unit(total, j), c.powi(ell as i32))];
                for i in 0..ell {
                    let side = ((mask >> i) & 1) as usize;
                    let var = n * (1 + 2 * i + side) + j;
                    terms.push((unit(total, var), c.powi((ell - 1 - i) as i32) * s));
                }
                Polynomial::from_terms(total, terms).expect("valid substitution")
            })
            .collect();
        let term = p.compose(&subs)?;
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        deriv = deriv.add(&term.scale(sign));
    }
    let deriv = deriv.scale(theta.powi(-(ell as i32)));
    Ok(integrate_square(&deriv, n))
}

fn unit(len: usize, i: usize) -> MultiIndex {
    let mut e = vec![0; len];
    e[i] = 1;
    e
}

/// `E_W[f(X, W)²]` for iid standard Gaussian `W` (all variables after the
/// first `n`), as a polynomial in `X`.
fn integrate_square(f: &Polynomial, n: usize) -> Polynomial {
    let terms: Vec<(&[u32], &[u32], f64)> = f.terms().iter().map(|(e, c)| (&e[..n], &e[n..], *c)).collect();
    let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    let mut w = vec![0u32; f.n() - n];
    for (i, (xa, wa, ca)) in terms.iter().enumerate() {
        for (j, (xb, wb, cb)) in terms.iter().enumerate().skip(i) {
            let mut moment = 1.0;
            for ((slot, a), b) in w.iter_mut().zip(*wa).zip(*wb) {
                *slot = a + b;
            }
            if w.iter().any(|k| k % 2 == 1) {
                continue;
            }
            for &k in &w {
                moment *= double_factorial_odd(k);
            }
            // off-diagonal pairs appear twice in the square
            let weight = if i == j { 1.0 } else { 2.0 };
            let key: MultiIndex = xa.iter().zip(*xb).map(|(a, b)| a + b).collect();
            *acc.entry(key).or_insert(0.0) += weight * ca * cb * moment;
        }
    }
    Polynomial::from_terms(n, acc).expect("dimension preserved")
}

/// `E[W^k]` for standard Gaussian `W` and even `k`: `(k − 1)!!`.
fn double_factorial_odd(k: u32) -> f64 {
    (1..k).step_by(2).map(|j| j as f64).product()
}

/// Estimates `q_{ℓ,m}` for a range of orders and depths at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivProfile {
    pub point: Vec<f64>,
    pub theta: f64,
    pub values: BTreeMap<(u32, u32), Estimate>,
}

impl DerivProfile {
    #[allow(clippy::too_many_arguments)]
    pub fn compute(
        p: &Polynomial,
        x: &[f64],
        ells: &[u32],
        ms: &[u32],
        theta: f64,
        mode: QMode,
        seed: u64,
        exec: Execution,
    ) -> Result<Self> {
        let mut values = BTreeMap::new();
        for &ell in ells {
            for &m in ms {
                let tag = ((ell as u64) << 32) | m as u64;
                values.insert((ell, m), q_lm(p, x, ell, m, theta, mode, derive_seed(seed, tag), exec)?);
            }
        }
        Ok(Self {
            point: x.to_vec(),
            theta,
            values,
        })
    }
}

/// Weights `c₀ … c_{D+1}` with `Σ_m c_m λ^{mj} = 0` for `j = 0..=D`,
/// `λ = cos θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationScheme {
    pub degree: u32,
    pub theta: f64,
    pub coeffs: Vec<f64>,
    pub normalization: String,
    /// `max |c_m| / min |c_m|`.
    pub spread: f64,
}

impl InterpolationScheme {
    pub fn lambda(&self) -> f64 {
        self.theta.cos()
    }

    /// `Σ_m c_m λ^{mj}`, the eigenvalue of the combined operator on degree `j`.
    pub fn eigen_sum(&self, j: u32) -> f64 {
        let lj = self.lambda().powi(j as i32);
        let mut pow = 1.0;
        let mut terms = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            terms.push(c * pow);
            pow *= lj;
        }
        crate::stats::pairwise_sum(&terms)
    }
}

/// Null vector of the `(D+1)×(D+2)` system `Σ_m c_m λ^{mj} = 0`.
///
/// The nodes `μ_m = λ^m` are distinct, so the null space is spanned by the
/// divided-difference weights `1 / Π_{i≠m} (μ_m − μ_i)`. They are formed in
/// log space with `expm1` for the close nodes, then scaled so the largest
/// magnitude is 1 and `c₀ > 0`.
pub fn interp_coeffs(degree: u32, theta: f64) -> Result<InterpolationScheme> {
    check_theta(theta)?;
    let ln_l = theta.cos().ln();
    if ln_l == 0.0 {
        return Err(Error::Domain(format!("cos({theta}) rounds to 1; nodes coincide")));
    }
    let count = degree as usize + 2;
    let mut logs = Vec::with_capacity(count);
    let mut signs = Vec::with_capacity(count);
    for m in 0..count {
        let mut log = 0.0;
        let mut negative = false;
        for i in 0..count {
            if i == m {
                continue;
            }
            // μ_m − μ_i = λ^min · (λ^{|m−i|} − 1) · sgn(i − m)
            let lo = m.min(i) as f64;
            let gap = (m as f64 - i as f64).abs();
            let diff_mag = -(gap * ln_l).exp_m1();
            log += lo * ln_l + diff_mag.ln();
            if m > i {
                negative = !negative;
            }
        }
        logs.push(-log);
        signs.push(if negative { -1.0 } else { 1.0 });
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut coeffs: Vec<f64> = logs.iter().zip(&signs).map(|(l, s)| s * (l - top).exp()).collect();
    if coeffs[0] < 0.0 {
        coeffs.iter_mut().for_each(|c| *c = -*c);
    }
    let min_log = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(InterpolationScheme {
        degree,
        theta,
        coeffs,
        normalization: "max_abs_one_c0_positive".into(),
        spread: (top - min_log).exp(),
    })
}

/// Result of applying `Σ_m c_m (A^θ)^m` to a polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnihilationReport {
    /// Largest Hermite coefficient of the combination.
    pub residual: f64,
    /// Largest coefficient of the input.
    pub scale: f64,
    pub relative: f64,
}

/// `Σ_m c_m (A^θ)^m p` with no degree check.
///
/// The noise operator is diagonal in the Hermite basis, so the combination
/// scales the degree-`j` coefficients by `Σ_m c_m λ^{mj}`. Using `Σ c_m = 0`
/// this is evaluated as `Σ_m c_m (λ^{mj} − 1)` with `expm1`, which is exact
/// for constants and avoids cancellation for small θ.
pub fn annihilation_residual(p: &Polynomial, scheme: &InterpolationScheme) -> Result<AnnihilationReport> {
    let ln_l = scheme.lambda().ln();
    let h = hermite_expand(p)?;
    let combined = h.scale_by_degree(|j| {
        let terms: Vec<f64> = scheme
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * (m as f64 * j as f64 * ln_l).exp_m1())
            .collect();
        crate::stats::pairwise_sum(&terms)
    });
    let residual = combined.max_abs_coeff();
    let scale = p.max_abs_coeff();
    Ok(AnnihilationReport {
        residual,
        scale,
        relative: if scale > 0.0 { residual / scale } else { 0.0 },
    })
}

/// [`annihilation_residual`] for polynomials within the scheme's degree.
pub fn verify_annihilation(p: &Polynomial, scheme: &InterpolationScheme) -> Result<AnnihilationReport> {
    if p.degree() > scheme.degree {
        return Err(Error::DegreeCap {
            degree: p.degree(),
            cap: scheme.degree,
        });
    }
    annihilation_residual(p, scheme)
}

/// Frequency of `|p(X)| < ε·|D^θ_{Y,Z} p(X)|` over iid Gaussian `X, Y, Z`.
pub fn size_vs_derivative(
    p: &Polynomial,
    eps: f64,
    theta: f64,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<Estimate> {
    check_theta(theta)?;
    let ev = p.evaluator();
    let nd = NestedDerivative::new(&ev, theta);
    let n = p.n();
    let stats = monte_carlo(samples, seed, exec, |rng| {
        let mut buf = vec![0.0; 3 * n];
        let mut scratch = vec![0.0; n];
        fill_normal(rng, &mut buf);
        let (x, dirs) = buf.split_at(n);
        let d = nd.eval(x, dirs, &mut scratch);
        if ev.eval(x).abs() < eps * d.abs() {
            1.0
        } else {
            0.0
        }
    });
    Ok(proportion((stats.mean() * samples as f64).round() as u64, samples))
}
