//! Named verification checks run by `ptfprg lab`.

use ptf_prg::deriv::{annihilation_residual, interp_coeffs, q_lm, verify_annihilation, QMode};
use ptf_prg::exec::{rng_stream, Execution};
use ptf_prg::harness::{
    anticoncentration_test, calibrate_anticoncentration, constancy_test, discretization_test, inequality_suite,
    size_vs_derivative_suite, SIGMAS, VANISHING,
};
use ptf_prg::poly::{hermite_expand, ou_apply, random_corpus, random_poly, Basis, Polynomial};
use ptf_prg::report::{anticoncentration_csv, discretization_csv, size_vs_derivative_csv, Check};
use ptf_prg::stats::{fill_normal, normal_cdf, Estimate};
use rand::Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::CliError;

pub const CHECKS: &[&str] = &[
    "annihilation",
    "semigroup",
    "constancy",
    "size-vs-derivative",
    "inequality",
    "anticoncentration",
    "discretization",
    "relation",
];

/// Settings shared by the checks, read from the run configuration.
pub struct LabContext<'a> {
    pub cfg: &'a RunConfig,
    pub seed: u64,
    pub exec: Execution,
}

/// Output of one named check: verdict rows plus an optional CSV table.
pub struct LabOutput {
    pub checks: Vec<Check>,
    pub csv: Option<String>,
}

fn check(name: &str, estimate: f64, stderr: f64, threshold: Option<f64>, verdict: bool) -> Check {
    Check {
        name: name.into(),
        estimate,
        stderr,
        threshold,
        verdict,
        detail: serde_json::Value::Null,
    }
}

pub fn parse_checks(selector: &str) -> Result<Vec<&'static str>, CliError> {
    if selector == "all" {
        return Ok(CHECKS.to_vec());
    }
    selector
        .split(',')
        .map(|s| {
            let s = s.trim();
            CHECKS.iter().copied().find(|c| *c == s).ok_or_else(|| {
                CliError::Usage(format!("unknown check '{s}'; valid checks: {}, all", CHECKS.join(", ")))
            })
        })
        .collect()
}

pub fn run(name: &str, ctx: &LabContext) -> Result<LabOutput, CliError> {
    let seed = ptf_prg::exec::derive_seed(ctx.seed, CHECKS.iter().position(|c| *c == name).unwrap() as u64);
    let cfg = ctx.cfg;
    let exec = ctx.exec;
    let plain = |checks| Ok(LabOutput { checks, csv: None });
    match name {
        "annihilation" => {
            let d: u32 = cfg.get_or("d", 4)?;
            let n: usize = cfg.get_or("n", 3)?;
            let theta: f64 = cfg.get_or("theta", 0.1)?;
            let p = random_poly(n, d, seed, Basis::Monomial)?;
            let scheme = interp_coeffs(d, theta)?;
            let report = verify_annihilation(&p, &scheme)?;
            let eigen = (0..=d).map(|j| scheme.eigen_sum(j).abs()).fold(0.0, f64::max);
            let negative = if d >= 1 {
                Some(annihilation_residual(&p, &interp_coeffs(d - 1, theta)?)?.relative)
            } else {
                None
            };
            let mut main = check(
                "annihilation",
                report.relative,
                0.0,
                Some(1e-9),
                report.relative <= 1e-9,
            );
            main.detail = json!({
                "degree": d,
                "theta": theta,
                "coeffs": scheme.coeffs,
                "spread": scheme.spread,
                "negative_control_residual": negative,
            });
            let sum = scheme.coeffs.iter().sum::<f64>().abs();
            plain(vec![
                main,
                check("coefficient-sum", sum, 0.0, Some(1e-12), sum <= 1e-12),
                check("eigen-sums", eigen, 0.0, Some(1e-12), eigen <= 1e-12),
            ])
        }
        "semigroup" => {
            let count: usize = cfg.get_or("corpus_size", 50)?;
            let mut rng = rng_stream(seed, 0);
            let mut worst: f64 = 0.0;
            let mut contraction_ok = true;
            for i in 0..count {
                let n = 1 + i % 3;
                let d = 1 + (i as u32) % 4;
                let p = random_poly(n, d, seed.wrapping_add(i as u64 + 1), Basis::Monomial)?;
                let t1: f64 = rng.random_range(0.05..1.5);
                let t2: f64 = rng.random_range(0.05..1.5);
                let t3 = (t1.cos() * t2.cos()).acos();
                let twice = ou_apply(&ou_apply(&p, t1)?, t2)?;
                let once = ou_apply(&p, t3)?;
                worst = worst.max(twice.max_coeff_diff(&once) / p.max_abs_coeff().max(1.0));
                let h = hermite_expand(&p)?;
                let rho = t1.cos();
                contraction_ok &= h.scale_by_degree(|j| rho.powi(j as i32)).l2_norm() <= h.l2_norm();
            }
            plain(vec![
                check("semigroup", worst, 0.0, Some(1e-10), worst <= 1e-10),
                check(
                    "contraction",
                    if contraction_ok { 0.0 } else { 1.0 },
                    0.0,
                    Some(0.0),
                    contraction_ok,
                ),
            ])
        }
        "constancy" => {
            let n: usize = cfg.get_or("n", 3)?;
            let d: u32 = cfg.get_or("d", 3)?;
            let count: usize = cfg.get_or("corpus_size", 5)?;
            let points: usize = cfg.get_or("points", 10)?;
            let theta: f64 = cfg.get_or("theta", 0.5)?;
            let samples: u64 = cfg.get_or("samples", 20_000)?;
            let corpus = random_corpus(n, d, count, seed, Basis::Hermite)?;
            let mut max_z: f64 = 0.0;
            let mut max_over: f64 = 0.0;
            let mut pass = true;
            let mut reports = Vec::new();
            for (i, e) in corpus.entries.iter().enumerate() {
                let r = constancy_test(&e.id, &e.poly, points, theta, samples, seed ^ i as u64, exec)?;
                max_z = max_z.max(r.max_z);
                max_over = r.overshoot.iter().cloned().fold(max_over, f64::max);
                pass &= r.pass;
                reports.push(r);
            }
            let mut c = check("constancy", max_z, 0.0, Some(SIGMAS), pass);
            c.detail = serde_json::to_value(&reports).expect("serializable");
            plain(vec![
                c,
                check(
                    "overshoot-vanishes",
                    max_over,
                    0.0,
                    Some(VANISHING),
                    max_over < VANISHING,
                ),
            ])
        }
        "size-vs-derivative" => {
            let n: usize = cfg.get_or("n", 3)?;
            let d: u32 = cfg.get_or("d", 3)?;
            let count: usize = cfg.get_or("corpus_size", 10)?;
            let samples: u64 = cfg.get_or("samples", 100_000)?;
            let grid: Vec<f64> = cfg.list("eps_grid", &[0.01, 0.02, 0.05])?;
            let corpus = random_corpus(n, d, count, seed, Basis::Hermite)?;
            let report = size_vs_derivative_suite(&corpus, &grid, samples, seed, exec)?;
            let mut c = check("size-vs-derivative-monotone", report.c, 0.0, None, report.monotone);
            c.detail = json!({ "C": report.c });
            Ok(LabOutput {
                checks: vec![c],
                csv: Some(size_vs_derivative_csv(&report)),
            })
        }
        "inequality" => {
            let n: usize = cfg.get_or("n", 8)?;
            let d: u32 = cfg.get_or("d", 4)?;
            let count: usize = cfg.get_or("corpus_size", 20)?;
            let samples: u64 = cfg.get_or("samples", 100_000)?;
            let corpus = random_corpus(n, d, count, seed, Basis::Hermite)?;
            let report = inequality_suite(&corpus, samples, seed, exec)?;
            let hyper = report
                .rows
                .iter()
                .map(|r| r.l4.value / r.hyper_bound)
                .fold(0.0, f64::max);
            let pz = report
                .rows
                .iter()
                .map(|r| r.pz_freq.value / r.pz_bound)
                .fold(f64::INFINITY, f64::min);
            let mut h = check(
                "hypercontractivity",
                hyper,
                0.0,
                Some(1.0),
                report.rows.iter().all(|r| r.hyper_pass),
            );
            h.detail = serde_json::to_value(&report).expect("serializable");
            plain(vec![
                h,
                check(
                    "paley-zygmund",
                    pz,
                    0.0,
                    Some(1.0),
                    report.rows.iter().all(|r| r.pz_pass),
                ),
            ])
        }
        "anticoncentration" => {
            let n: usize = cfg.get_or("n", 3)?;
            let d: u32 = cfg.get_or("d", 3)?;
            let count: usize = cfg.get_or("corpus_size", 10)?;
            let samples: u64 = cfg.get_or("samples", 100_000)?;
            let grid: Vec<f64> = cfg.list("eps_grid", &[0.01, 0.02, 0.05, 0.1, 0.2, 0.5])?;
            let corpus = random_corpus(n, d, count, seed, Basis::Hermite)?;
            let mut tables = corpus
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| anticoncentration_test(&e.id, &e.poly, &grid, samples, seed ^ i as u64, exec))
                .collect::<Result<Vec<_>, _>>()?;
            let c = calibrate_anticoncentration(&mut tables);
            let monotone = tables.iter().all(|t| t.monotone());

            let x = Polynomial::variable(1, 0);
            let lin = anticoncentration_test("x", &x, &[0.1], samples, seed, exec)?;
            let f = lin.rows[0].freq;
            let want = 2.0 * normal_cdf(0.1) - 1.0;
            let mut m = check("anticoncentration-monotone", c, 0.0, None, monotone);
            m.detail = json!({ "C": c });
            Ok(LabOutput {
                checks: vec![
                    m,
                    check(
                        "anticoncentration-linear-oracle",
                        f.value,
                        f.stderr,
                        Some(want),
                        f.agrees_with(&Estimate::exact(want), SIGMAS),
                    ),
                ],
                csv: Some(anticoncentration_csv(&tables)),
            })
        }
        "discretization" => {
            let grid: Vec<u32> = cfg.list("M_grid", &[16, 24, 32, 52])?;
            let samples: u64 = cfg.get_or("samples", 100_000)?;
            let c0: f64 = cfg.get_or("c0", ptf_prg::gauss::DEFAULT_C0)?;
            let rows = discretization_test(&grid, samples, c0, seed, exec)?;
            let checks = rows
                .iter()
                .map(|r| {
                    check(
                        &format!("discretization-M{}", r.precision),
                        r.freq.value,
                        r.freq.stderr,
                        Some(r.delta),
                        r.pass,
                    )
                })
                .collect();
            Ok(LabOutput {
                checks,
                csv: Some(discretization_csv(&rows)),
            })
        }
        "relation" => {
            let n: usize = cfg.get_or("n", 2)?;
            let d: u32 = cfg.get_or("d", 2)?;
            let theta: f64 = cfg.get_or("theta", 0.3)?;
            let p = random_poly(n, d, seed, Basis::Hermite)?;
            let mut rng = rng_stream(seed, 1);
            let mut x = vec![0.0; n];
            fill_normal(&mut rng, &mut x);
            let mut checks = Vec::new();
            for ell in 0..=d.min(ptf_prg::deriv::EXACT_MAX_ELL) {
                let degree = 2 * (d - ell);
                let scheme = interp_coeffs(degree, theta)?;
                let qs = (0..scheme.coeffs.len() as u32)
                    .map(|m| q_lm(&p, &x, ell, m, theta, QMode::Exact, 0, exec).map(|e| e.value))
                    .collect::<Result<Vec<_>, _>>()?;
                let scale = qs.iter().fold(0.0f64, |a, q| a.max(q.abs()));
                let combo: f64 = scheme.coeffs.iter().zip(&qs).map(|(c, q)| c * q).sum();
                let rel = if scale > 0.0 { combo.abs() / scale } else { 0.0 };
                let mut c = check(&format!("relation-ell{ell}"), rel, 0.0, Some(1e-9), rel <= 1e-9);
                c.detail = json!({ "q": qs, "coeffs": scheme.coeffs, "point": x });
                checks.push(c);
            }
            plain(checks)
        }
        _ => unreachable!("validated by parse_checks"),
    }
}
