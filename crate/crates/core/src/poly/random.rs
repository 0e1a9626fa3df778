use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{l2_norm, Corpus, HermiteExpansion, MultiIndex, Polynomial};
use crate::error::{Error, Result};
use crate::exec::{derive_seed, rng_stream};

/// Largest number of basis elements a dense enumeration may touch.
pub const MAX_BASIS_SIZE: u64 = 1_000_000;

/// Basis in which random coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Monomial,
    Hermite,
}

/// binom(n + d, d), saturating.
fn basis_size(n: usize, d: u32) -> u64 {
    let mut r: u128 = 1;
    for i in 1..=d as u128 {
        r = r * (n as u128 + i) / i;
        if r > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    r as u64
}

/// All exponent vectors of total degree ≤ d, graded by degree and then in
/// lexicographic order.
pub fn multi_indices(n: usize, d: u32) -> Result<Vec<MultiIndex>> {
    let size = basis_size(n, d);
    if size > MAX_BASIS_SIZE {
        return Err(Error::Capability(format!(
            "{size} basis elements for n = {n}, d = {d} exceeds {MAX_BASIS_SIZE}"
        )));
    }
    let mut out = Vec::with_capacity(size as usize);
    for total in 0..=d {
        let mut current = vec![0u32; n];
        fill_exact(&mut current, 0, total, &mut out);
    }
    Ok(out)
}

fn fill_exact(current: &mut MultiIndex, pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 >= current.len() {
        if let Some(last) = current.last_mut() {
            *last = remaining;
            out.push(current.clone());
        } else if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        fill_exact(current, pos + 1, remaining - k, out);
    }
    current[pos] = 0;
}

/// Polynomial with iid standard Gaussian coefficients on every basis element
/// of degree ≤ d.
pub fn random_poly(n: usize, d: u32, seed: u64, basis: Basis) -> Result<Polynomial> {
    let indices = multi_indices(n, d)?;
    let mut rng = rng_stream(seed, 0);
    let coeffs: Vec<(MultiIndex, f64)> = indices
        .into_iter()
        .map(|a| (a, StandardNormal.sample(&mut rng)))
        .collect();
    match basis {
        Basis::Monomial => Polynomial::from_terms(n, coeffs),
        Basis::Hermite => Ok(HermiteExpansion::from_coeffs(n, coeffs)?.to_polynomial()),
    }
}

/// `count` random polynomials in `n` variables with degrees cycling through
/// `1..=max_degree`, each scaled to unit Gaussian L² norm. Member `i` uses
/// a seed derived from `(seed, i)`.
pub fn random_corpus(n: usize, max_degree: u32, count: usize, seed: u64, basis: Basis) -> Result<Corpus> {
    let polys = (0..count)
        .map(|i| {
            let d = 1 + (i as u32) % max_degree.max(1);
            let p = random_poly(n, d, derive_seed(seed, i as u64), basis)?;
            let norm = l2_norm(&p)?;
            Ok(if norm > 0.0 { p.scale(1.0 / norm) } else { p })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus::from_polys(polys))
}
