//! Statistical experiments: fooling error of polynomial threshold functions,
//! anti-concentration, moment inequalities, discretization coupling, and the
//! derivative checks. Every verdict allows three standard errors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::deriv::{deriv_norm_mc, size_vs_derivative};
use crate::error::{Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::gauss::{closeness_bound, coupling_error};
use crate::poly::{l2_norm, Corpus, Polynomial};
use crate::prg::{MasterSeed, Prg};
use crate::stats::{fill_normal, monte_carlo_multi, normal_cdf, proportion, Estimate, RunningStats};

/// Standard-error multiple allowed in every verdict.
pub const SIGMAS: f64 = 3.0;

/// `sgn` with `sgn(0) = +1`.
#[inline]
pub fn sgn(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// A polynomial threshold function `x ↦ sgn(p(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ptf {
    pub id: String,
    pub p: Polynomial,
}

impl Ptf {
    pub fn new(id: impl Into<String>, p: Polynomial) -> Self {
        Self { id: id.into(), p }
    }

    pub fn from_corpus(corpus: &Corpus) -> Vec<Ptf> {
        corpus
            .entries
            .iter()
            .map(|e| Ptf::new(e.id.clone(), e.poly.clone()))
            .collect()
    }

    pub fn degree(&self) -> u32 {
        self.p.degree()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(sgn(self.p.eval(x)?))
    }
}

/// How the Gaussian reference value `E[f(Y)]` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum GaussMethod {
    /// `p` is constant.
    Constant,
    /// `p(s∘x) = −p(x)` for a coordinate reflection `s`, so the mean is 0.
    Symmetry,
    /// `1 − 2Φ(b/|a|₂)` for `p = a·x − b`.
    LinearThreshold,
    MonteCarlo {
        samples: u64,
    },
}

/// Closed-form `E[sgn(p(Y))]` when one is available.
pub fn analytic_gauss_mean(p: &Polynomial) -> Option<(f64, GaussMethod)> {
    if let Some(c) = p.as_constant() {
        return Some((sgn(c), GaussMethod::Constant));
    }
    if p.degree() == 1 {
        let n = p.n();
        let b = -p.coeff(&vec![0; n]);
        let norm = (0..n)
            .map(|i| {
                let mut e = vec![0; n];
                e[i] = 1;
                p.coeff(&e).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        return Some((1.0 - 2.0 * normal_cdf(b / norm), GaussMethod::LinearThreshold));
    }
    if odd_under_reflection(p) {
        return Some((0.0, GaussMethod::Symmetry));
    }
    None
}

/// Whether some nonempty set `S` of coordinates has odd total exponent in
/// every term, so that negating the coordinates in `S` negates `p`.
fn odd_under_reflection(p: &Polynomial) -> bool {
    let n = p.n();
    if n == 0 || n > 20 {
        return false;
    }
    let parities: Vec<u32> = p
        .terms()
        .keys()
        .map(|e| e.iter().enumerate().fold(0u32, |acc, (i, k)| acc | ((k & 1) << i)))
        .collect();
    (1u32..(1 << n)).any(|s| parities.iter().all(|v| (v & s).count_ones() % 2 == 1))
}

/// Budgets and seeds for a fooling experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoolingConfig {
    pub draws_prg: u64,
    pub draws_gauss: u64,
    pub threshold: f64,
    pub gauss_seed: u64,
    /// Use closed forms for the Gaussian side when available.
    pub analytic: bool,
}

impl Default for FoolingConfig {
    fn default() -> Self {
        Self {
            draws_prg: 100_000,
            draws_gauss: 1_000_000,
            threshold: 0.02,
            gauss_seed: 0,
            analytic: true,
        }
    }
}

/// Generator-vs-Gaussian comparison for one threshold function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoolingReport {
    pub id: String,
    pub degree: u32,
    pub prg_mean: f64,
    pub stderr_prg: f64,
    pub gauss_mean: f64,
    pub stderr_gauss: f64,
    pub gauss_method: GaussMethod,
    pub gap: f64,
    pub threshold: f64,
    pub verdict: bool,
}

/// Estimates `|E[f(X)] − E[f(Y)]|` for every member of `corpus`, with `X`
/// drawn from the generator and `Y` standard Gaussian. All functions share
/// the same generator draws.
pub fn fooling_test(
    prg: &Prg,
    master: &MasterSeed,
    corpus: &[Ptf],
    cfg: &FoolingConfig,
    exec: Execution,
) -> Result<Vec<FoolingReport>> {
    let params = prg.params();
    if cfg.draws_prg < 1000 || cfg.draws_gauss < 1000 {
        return Err(Error::Parameter(
            "fooling tests need at least 1000 draws per side".into(),
        ));
    }
    for f in corpus {
        if f.degree() > params.d {
            return Err(Error::Config(format!(
                "polynomial '{}' has degree {} but the generator targets degree {}",
                f.id,
                f.degree(),
                params.d
            )));
        }
        if f.p.n() != params.n {
            return Err(Error::Config(format!(
                "polynomial '{}' has {} variables but the generator emits {}",
                f.id,
                f.p.n(),
                params.n
            )));
        }
    }
    let evs: Vec<_> = corpus.iter().map(|f| f.p.evaluator()).collect();
    let width = corpus.len();

    let parts = prg.fold_stream(
        master,
        0..cfg.draws_prg,
        exec,
        || vec![RunningStats::new(); width],
        |acc, _, x| {
            for (a, ev) in acc.iter_mut().zip(&evs) {
                a.push(sgn(ev.eval(x)));
            }
        },
    );
    let prg_stats: Vec<RunningStats> = (0..width)
        .map(|i| RunningStats::merge_all(&parts.iter().map(|p| p[i]).collect::<Vec<_>>()))
        .collect();

    let analytic: Vec<Option<(f64, GaussMethod)>> = corpus
        .iter()
        .map(|f| if cfg.analytic { analytic_gauss_mean(&f.p) } else { None })
        .collect();
    let mc_index: Vec<usize> = (0..width).filter(|&i| analytic[i].is_none()).collect();
    let n = params.n;
    let gauss_stats = if mc_index.is_empty() {
        Vec::new()
    } else {
        monte_carlo_multi(cfg.draws_gauss, cfg.gauss_seed, exec, mc_index.len(), |rng, out| {
            let mut y = vec![0.0; n];
            fill_normal(rng, &mut y);
            for (o, &i) in out.iter_mut().zip(&mc_index) {
                *o = sgn(evs[i].eval(&y));
            }
        })
    };

    let mut reports = Vec::with_capacity(width);
    let mut mc_iter = gauss_stats.iter();
    for (i, f) in corpus.iter().enumerate() {
        let prg_est = prg_stats[i].estimate();
        let (gauss, method) = match analytic[i] {
            Some((v, m)) => (Estimate::exact(v), m),
            None => (
                mc_iter.next().expect("one estimate per Monte Carlo member").estimate(),
                GaussMethod::MonteCarlo {
                    samples: cfg.draws_gauss,
                },
            ),
        };
        let gap = (prg_est.value - gauss.value).abs();
        reports.push(FoolingReport {
            id: f.id.clone(),
            degree: f.degree(),
            prg_mean: prg_est.value,
            stderr_prg: prg_est.stderr,
            gauss_mean: gauss.value,
            stderr_gauss: gauss.stderr,
            gauss_method: method,
            gap,
            threshold: cfg.threshold,
            verdict: gap <= cfg.threshold + SIGMAS * (prg_est.stderr + gauss.stderr),
        });
    }
    Ok(reports)
}

/// One row of an anti-concentration table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnticoncentrationRow {
    pub eps: f64,
    /// `Pr(|p(Y)| ≤ ε|p|₂)`.
    pub freq: Estimate,
    /// `freq / (d·ε^{1/d})`.
    pub ratio: f64,
    /// `C·d·ε^{1/d}` once `C` is calibrated.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnticoncentrationTable {
    pub id: String,
    pub degree: u32,
    pub l2: f64,
    pub rows: Vec<AnticoncentrationRow>,
}

impl AnticoncentrationTable {
    /// Frequencies never decrease along the ε grid (sorted ascending).
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].freq.value <= w[1].freq.value)
    }

    /// Every frequency within its calibrated bound (plus 3σ).
    pub fn within_bounds(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.bound.is_none_or(|b| r.freq.value <= b + SIGMAS * r.freq.stderr))
    }
}

fn degree_floor(d: u32) -> f64 {
    d.max(1) as f64
}

/// Frequencies of `|p(Y)| ≤ ε|p|₂` on a shared set of Gaussian samples.
pub fn anticoncentration_test(
    id: &str,
    p: &Polynomial,
    eps_grid: &[f64],
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<AnticoncentrationTable> {
    let l2 = l2_norm(p)?;
    let mut grid = eps_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let d = degree_floor(p.degree());
    let ev = p.evaluator();
    let n = p.n();
    let stats = monte_carlo_multi(samples, seed, exec, grid.len(), |rng, out| {
        let mut y = vec![0.0; n];
        fill_normal(rng, &mut y);
        let v = ev.eval(&y).abs();
        for (o, e) in out.iter_mut().zip(&grid) {
            *o = if v <= e * l2 { 1.0 } else { 0.0 };
        }
    });
    let rows = grid
        .iter()
        .zip(&stats)
        .map(|(&eps, s)| {
            let freq = proportion((s.mean() * samples as f64).round() as u64, samples);
            AnticoncentrationRow {
                eps,
                freq,
                ratio: freq.value / (d * eps.powf(1.0 / d)),
                bound: None,
            }
        })
        .collect();
    Ok(AnticoncentrationTable {
        id: id.to_string(),
        degree: p.degree(),
        l2,
        rows,
    })
}

/// Sets the bound column of every table from one corpus-wide constant, the
/// largest observed ratio, and returns it.
pub fn calibrate_anticoncentration(tables: &mut [AnticoncentrationTable]) -> f64 {
    let c = tables
        .iter()
        .flat_map(|t| t.rows.iter().map(|r| r.ratio))
        .fold(0.0, f64::max);
    for t in tables.iter_mut() {
        let d = degree_floor(t.degree);
        for r in &mut t.rows {
            r.bound = Some(c * d * r.eps.powf(1.0 / d));
        }
    }
    c
}

/// Hypercontractive and small-ball checks for one polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub id: String,
    pub degree: u32,
    pub l2: f64,
    pub l4: Estimate,
    /// `√3^d·|p|₂`.
    pub hyper_bound: f64,
    pub hyper_pass: bool,
    /// `Pr(|p(Y)| ≥ |p|₂/2)`.
    pub pz_freq: Estimate,
    /// `9^{−d}/2`.
    pub pz_bound: f64,
    pub pz_pass: bool,
    pub l1: Estimate,
    /// `|p|₂/|p|₁`, reported only.
    pub ratio_2_1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub samples: u64,
    pub rows: Vec<InequalityRow>,
}

impl InequalityReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.hyper_pass && r.pz_pass)
    }
}

/// `|p|₄ ≤ √3^d|p|₂` and `Pr(|p| ≥ |p|₂/2) ≥ 9^{−d}/2` for every member.
pub fn inequality_suite(corpus: &Corpus, samples: u64, seed: u64, exec: Execution) -> Result<InequalityReport> {
    let mut rows = Vec::with_capacity(corpus.len());
    for (i, entry) in corpus.entries.iter().enumerate() {
        let p = &entry.poly;
        let d = p.degree();
        let l2 = l2_norm(p)?;
        let (l4, l1, pz_freq) = if let Some(c) = p.as_constant() {
            (Estimate::exact(c.abs()), Estimate::exact(c.abs()), Estimate::exact(1.0))
        } else {
            let ev = p.evaluator();
            let n = p.n();
            let stats = monte_carlo_multi(samples, derive_seed(seed, i as u64), exec, 3, |rng, out| {
                let mut y = vec![0.0; n];
                fill_normal(rng, &mut y);
                let v = ev.eval(&y).abs();
                out[0] = v.powi(4);
                out[1] = v;
                out[2] = if v >= l2 / 2.0 { 1.0 } else { 0.0 };
            });
            let m4 = stats[0].mean();
            let l4_value = m4.powf(0.25);
            let l4 = Estimate {
                value: l4_value,
                stderr: if m4 > 0.0 {
                    l4_value / (4.0 * m4) * stats[0].stderr()
                } else {
                    0.0
                },
            };
            let hits = (stats[2].mean() * samples as f64).round() as u64;
            (l4, stats[1].estimate(), proportion(hits, samples))
        };
        let hyper_bound = 3f64.sqrt().powi(d as i32) * l2;
        let pz_bound = 9f64.powi(-(d as i32)) / 2.0;
        rows.push(InequalityRow {
            id: entry.id.clone(),
            degree: d,
            l2,
            l4,
            hyper_bound,
            hyper_pass: l4.value <= hyper_bound * (1.0 + 1e-12) + SIGMAS * l4.stderr,
            pz_freq,
            pz_bound,
            pz_pass: pz_freq.value + SIGMAS * pz_freq.stderr >= pz_bound,
            l1,
            ratio_2_1: if l1.value > 0.0 { l2 / l1.value } else { f64::NAN },
        });
    }
    Ok(InequalityReport { samples, rows })
}

/// Coupling frequency at one grid precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationRow {
    pub precision: u32,
    pub c0: f64,
    pub delta: f64,
    /// `Pr(|BM(u, v) − BM(u', v')| > δ)` with `u', v'` rounded up to the grid.
    pub freq: Estimate,
    pub pass: bool,
}

/// Couples exact and grid-rounded Box–Muller inputs; the same `(u, v)` pairs
/// are reused for every precision.
pub fn discretization_test(
    precisions: &[u32],
    samples: u64,
    c0: f64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<DiscretizationRow>> {
    let bounds = precisions
        .iter()
        .map(|&m| closeness_bound(m, c0))
        .collect::<Result<Vec<_>>>()?;
    let stats = monte_carlo_multi(samples, seed, exec, bounds.len(), |rng, out| {
        // (0, 1]
        let u = 1.0 - rng.random::<f64>();
        let v = 1.0 - rng.random::<f64>();
        for (o, b) in out.iter_mut().zip(&bounds) {
            *o = if coupling_error(u, v, b.precision) > b.delta {
                1.0
            } else {
                0.0
            };
        }
    });
    Ok(bounds
        .iter()
        .zip(&stats)
        .map(|(b, s)| {
            let freq = proportion((s.mean() * samples as f64).round() as u64, samples);
            DiscretizationRow {
                precision: b.precision,
                c0,
                delta: b.delta,
                freq,
                pass: freq.value <= b.delta + SIGMAS * freq.stderr,
            }
        })
        .collect())
}

/// Top-order derivative norms at several points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstancyReport {
    pub id: String,
    pub degree: u32,
    pub theta: f64,
    pub points: Vec<Vec<f64>>,
    /// `|p^{(d)}_θ(X)|₂²` at each point.
    pub top: Vec<Estimate>,
    /// Largest pairwise gap over its combined standard error.
    pub max_z: f64,
    pub pass: bool,
    /// `|p^{(d+1)}_θ(X)|₂²` at each point; zero up to rounding.
    pub overshoot: Vec<f64>,
    pub overshoot_pass: bool,
}

/// Largest value accepted as a numerically vanishing derivative norm.
pub const VANISHING: f64 = 1e-20;

/// Estimates the order-`d` derivative norm at `points` random Gaussian points.
/// Every point uses the same direction samples, so differences between
/// points isolate the dependence on `X`.
pub fn constancy_test(
    id: &str,
    p: &Polynomial,
    points: usize,
    theta: f64,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<ConstancyReport> {
    let d = p.degree();
    let mut rng = crate::exec::rng_stream(seed, u64::MAX);
    let xs: Vec<Vec<f64>> = (0..points)
        .map(|_| {
            let mut x = vec![0.0; p.n()];
            fill_normal(&mut rng, &mut x);
            x
        })
        .collect();
    let dir_seed = derive_seed(seed, 1);
    let top = xs
        .iter()
        .map(|x| deriv_norm_mc(p, x, d, theta, samples, dir_seed, exec))
        .collect::<Result<Vec<_>>>()?;
    let mut max_z: f64 = 0.0;
    let mut pass = true;
    for (i, a) in top.iter().enumerate() {
        for b in &top[i + 1..] {
            pass &= a.agrees_with(b, SIGMAS);
            let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            if se > 0.0 {
                max_z = max_z.max((a.value - b.value).abs() / se);
            }
        }
    }
    let over_samples = samples.min(10_000);
    let overshoot = xs
        .iter()
        .map(|x| deriv_norm_mc(p, x, d + 1, theta, over_samples, dir_seed, exec).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    let overshoot_pass = overshoot.iter().all(|v| *v < VANISHING);
    Ok(ConstancyReport {
        id: id.to_string(),
        degree: d,
        theta,
        points: xs,
        top,
        max_z,
        pass,
        overshoot,
        overshoot_pass,
    })
}

/// One (polynomial, ε) cell of the size-versus-derivative experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeDerivRow {
    pub id: String,
    pub degree: u32,
    pub eps: f64,
    pub theta: f64,
    /// `Pr(|p(X)| < ε|D^θ_{Y,Z} p(X)|)`.
    pub freq: Estimate,
    /// `freq / (d²ε)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeDerivReport {
    pub rows: Vec<SizeDerivRow>,
    /// Smallest `C` with `freq ≤ C·d²·ε` on every row.
    pub c: f64,
    /// Frequencies nondecreasing in ε for each polynomial (3σ allowance).
    pub monotone: bool,
}

/// Runs the size-versus-derivative experiment at `θ = ε/2` over an ε grid.
pub fn size_vs_derivative_suite(
    corpus: &Corpus,
    eps_grid: &[f64],
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<SizeDerivReport> {
    let mut grid = eps_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    let mut monotone = true;
    for (i, entry) in corpus.entries.iter().enumerate() {
        let d = entry.poly.degree().max(1) as f64;
        let poly_seed = derive_seed(seed, i as u64);
        let mut prev: Option<Estimate> = None;
        for &eps in &grid {
            let theta = eps / 2.0;
            let freq = size_vs_derivative(&entry.poly, eps, theta, samples, poly_seed, exec)?;
            if let Some(pe) = prev {
                monotone &= pe.value <= freq.value + SIGMAS * (pe.stderr + freq.stderr);
            }
            prev = Some(freq);
            rows.push(SizeDerivRow {
                id: entry.id.clone(),
                degree: entry.poly.degree(),
                eps,
                theta,
                freq,
                ratio: freq.value / (d * d * eps),
            });
        }
    }
    let c = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(SizeDerivReport { rows, c, monotone })
}
