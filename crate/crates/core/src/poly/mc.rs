use super::Polynomial;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::stats::{fill_normal, monte_carlo, Estimate};

/// `E[|p(Y)|^t]^(1/t)` over iid standard Gaussian `Y`, with a delta-method
/// standard error. Constants are returned exactly.
pub fn lk_norm_mc(p: &Polynomial, t: f64, samples: u64, seed: u64, exec: Execution) -> Result<Estimate> {
    if t.is_nan() || t < 1.0 {
        return Err(Error::Parameter(format!("norm order must be at least 1, got {t}")));
    }
    if let Some(c) = p.as_constant() {
        return Ok(Estimate::exact(c.abs()));
    }
    if samples < 2 {
        return Err(Error::Parameter("need at least two samples".into()));
    }
    let ev = p.evaluator();
    let n = p.n();
    let stats = monte_carlo(samples, seed, exec, |rng| {
        let mut y = vec![0.0; n];
        fill_normal(rng, &mut y);
        ev.eval(&y).abs().powf(t)
    });
    let m = stats.mean();
    let value = m.powf(1.0 / t);
    let stderr = if m > 0.0 { value / (t * m) * stats.stderr() } else { 0.0 };
    Ok(Estimate { value, stderr })
}
