//! Sparse multivariate real polynomials.
//!
//! Terms are keyed by exponent vectors in a `BTreeMap`, which fixes iteration
//! order and so keeps every derived quantity reproducible.

mod hermite;
mod io;
mod mc;
mod random;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub use hermite::{hermite_expand, l2_norm, ou_apply, ou_apply_factor, HermiteExpansion, MAX_HERMITE_DEGREE};
pub use io::{parse_corpus, Corpus, CorpusEntry, PolyJson, TermJson};
pub use mc::lk_norm_mc;
pub use random::{multi_indices, random_corpus, random_poly, Basis, MAX_BASIS_SIZE};

/// Exponent vector of a monomial (or multidegree of a Hermite product).
pub type MultiIndex = Vec<u32>;

pub fn total_degree(idx: &[u32]) -> u32 {
    idx.iter().sum()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_terms(n, [(vec![0; n], c)]).expect("well-formed constant")
    }

    /// The coordinate function `x_i`.
    pub fn variable(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut e = vec![0; n];
        e[i] = 1;
        Self::from_terms(n, [(e, 1.0)]).expect("well-formed variable")
    }

    /// Sums duplicate exponents and drops zero coefficients.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Self::zero(n);
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    actual: e.len(),
                });
            }
            if !c.is_finite() {
                return Err(Error::Domain(format!("non-finite coefficient {c}")));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub(crate) fn add_term(&mut self, e: MultiIndex, c: f64) {
        use std::collections::btree_map::Entry;
        if c == 0.0 {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| total_degree(e)).max().unwrap_or(0)
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.terms
    }

    pub fn coeff(&self, e: &[u32]) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Constant term value when the polynomial has degree 0.
    pub fn as_constant(&self) -> Option<f64> {
        if self.degree() == 0 {
            Some(self.coeff(&vec![0; self.n]))
        } else {
            None
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                actual: x.len(),
            });
        }
        Ok(self.evaluator().eval(x))
    }

    pub fn evaluator(&self) -> Evaluator {
        Evaluator::new(self)
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.n);
        }
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: MultiIndex = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        Self {
            n: self.n,
            terms: acc.into_iter().filter(|(_, c)| *c != 0.0).collect(),
        }
    }

    pub fn square(&self) -> Self {
        self.mul(self)
    }

    /// Re-expresses the polynomial in `m ≥ n` variables, variable `i` becoming
    /// variable `offset + i`.
    pub fn embed(&self, m: usize, offset: usize) -> Self {
        assert!(offset + self.n <= m);
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut big = vec![0; m];
                big[offset..offset + self.n].copy_from_slice(e);
                (big, *c)
            })
            .collect();
        Self { n: m, terms }
    }

    /// `p(L_1, …, L_n)` for polynomials `L_i` sharing a common dimension.
    pub fn compose(&self, subs: &[Polynomial]) -> Result<Self> {
        if subs.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                actual: subs.len(),
            });
        }
        let m = subs.first().map(|s| s.n).unwrap_or(0);
        if subs.iter().any(|s| s.n != m) {
            return Err(Error::Parameter(
                "substituted polynomials must share a dimension".into(),
            ));
        }
        let max_exp: Vec<u32> = (0..self.n)
            .map(|i| self.terms.keys().map(|e| e[i]).max().unwrap_or(0))
            .collect();
        let powers: Vec<Vec<Polynomial>> = subs
            .iter()
            .zip(&max_exp)
            .map(|(s, &top)| {
                let mut v = vec![Polynomial::constant(m, 1.0)];
                for _ in 0..top {
                    let next = v.last().unwrap().mul(s);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Polynomial::zero(m);
        for (e, c) in &self.terms {
            let mut term = Polynomial::constant(m, *c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&powers[i][k as usize]);
                }
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    /// Largest coefficient difference against `other`.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<&MultiIndex> = self.terms.keys().collect();
        keys.extend(other.terms.keys());
        keys.into_iter()
            .map(|e| (self.coeff(e) - other.coeff(e)).abs())
            .fold(0.0, f64::max)
    }
}

/// Flattened form of a polynomial for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Evaluator {
    n: usize,
    coeffs: Vec<f64>,
    /// Per term, `(power table slot)` for every variable with a nonzero exponent.
    factors: Vec<u32>,
    factor_ends: Vec<u32>,
    /// Start of each variable's power run inside the power table.
    pow_offsets: Vec<u32>,
    max_exp: Vec<u32>,
    table_len: usize,
}

impl Evaluator {
    fn new(p: &Polynomial) -> Self {
        let n = p.n;
        let max_exp: Vec<u32> = (0..n)
            .map(|i| p.terms.keys().map(|e| e[i]).max().unwrap_or(0))
            .collect();
        let mut pow_offsets = Vec::with_capacity(n);
        let mut len = 0u32;
        for &m in &max_exp {
            pow_offsets.push(len);
            len += m + 1;
        }
        let mut coeffs = Vec::with_capacity(p.terms.len());
        let mut factors = Vec::new();
        let mut factor_ends = Vec::with_capacity(p.terms.len());
        for (e, c) in &p.terms {
            coeffs.push(*c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    factors.push(pow_offsets[i] + k);
                }
            }
            factor_ends.push(factors.len() as u32);
        }
        Self {
            n,
            coeffs,
            factors,
            factor_ends,
            pow_offsets,
            max_exp,
            table_len: len as usize,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Evaluates at `x`; `x.len()` must equal `n`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut table = [0.0f64; 64];
        if self.table_len <= table.len() {
            self.eval_with(x, &mut table)
        } else {
            let mut v = vec![0.0; self.table_len];
            self.eval_with(x, &mut v)
        }
    }

    fn eval_with(&self, x: &[f64], table: &mut [f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        for ((&xi, &offset), &max) in x.iter().zip(&self.pow_offsets).zip(&self.max_exp) {
            let base = offset as usize;
            let mut p = 1.0;
            table[base] = 1.0;
            for k in 1..=max as usize {
                p *= xi;
                table[base + k] = p;
            }
        }
        let mut sum = 0.0;
        let mut start = 0usize;
        for (t, &c) in self.coeffs.iter().enumerate() {
            let end = self.factor_ends[t] as usize;
            let mut v = c;
            for &slot in &self.factors[start..end] {
                v *= table[slot as usize];
            }
            sum += v;
            start = end;
        }
        sum
    }
}
