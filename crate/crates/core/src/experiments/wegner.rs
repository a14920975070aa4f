//! Expected eigenvalue counts in small intervals and proximity
//! probabilities.

use crate::error::{precondition, Result};
use crate::model::{assemble_hamiltonian, sample_disorder, ModelConfig};
use crate::spectral::{count_below, EnergyInterval};
use crate::stats::{linear_fit, mean_stderr, LineFit};

use super::Runner;

/// One `(l, I)` cell of a Wegner run.
#[derive(Clone, Debug, PartialEq)]
pub struct WegnerRow {
    pub l: usize,
    pub e1: f64,
    pub e2: f64,
    /// Samples that entered the mean.
    pub n: usize,
    pub excluded: usize,
    pub mean: f64,
    pub stderr: f64,
    /// `mean / (|I|·l^d)`.
    pub ratio: f64,
    /// `ratio·ω_+`: the constant in front of `ω_+^{-1}|I|l^d`.
    pub ratio_disorder: f64,
    /// `ratio·(1 − a*)/ω_+`: the constant in front of `ω_+|I|l^d/(1 − a*)`.
    pub ratio_toeplitz: f64,
}

impl WegnerRow {
    pub fn width(&self) -> f64 {
        self.e2 - self.e1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WegnerResult {
    pub d: usize,
    pub omega_plus: f64,
    pub rows: Vec<WegnerRow>,
}

impl WegnerResult {
    pub fn excluded(&self) -> usize {
        self.rows.iter().map(|r| r.excluded).sum()
    }

    /// `max ratio / min ratio` over rows with `|I| > 0`.
    pub fn ratio_spread(&self) -> f64 {
        let ratios: Vec<f64> = self.rows.iter().filter(|r| r.width() > 0.0).map(|r| r.ratio).collect();
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    fn sides(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.rows.iter().map(|r| r.l).collect();
        s.dedup();
        s
    }

    /// Line fits of mean trace against `|I|`, one per box side.
    pub fn width_fits(&self) -> Vec<(usize, Option<LineFit>)> {
        self.sides()
            .into_iter()
            .map(|l| {
                let rows: Vec<&WegnerRow> = self.rows.iter().filter(|r| r.l == l).collect();
                let x: Vec<f64> = rows.iter().map(|r| r.width()).collect();
                let y: Vec<f64> = rows.iter().map(|r| r.mean).collect();
                (l, linear_fit(&x, &y))
            })
            .collect()
    }

    /// Line fits of mean trace against `l^d`, one per interval.
    pub fn volume_fits(&self) -> Vec<((f64, f64), Option<LineFit>)> {
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for r in &self.rows {
            if !intervals.contains(&(r.e1, r.e2)) {
                intervals.push((r.e1, r.e2));
            }
        }
        intervals
            .into_iter()
            .map(|iv| {
                let rows: Vec<&WegnerRow> = self.rows.iter().filter(|r| (r.e1, r.e2) == iv).collect();
                let x: Vec<f64> = rows.iter().map(|r| (r.l as f64).powi(self.d as i32)).collect();
                let y: Vec<f64> = rows.iter().map(|r| r.mean).collect();
                (iv, linear_fit(&x, &y))
            })
            .collect()
    }
}

/// Averages `Tr P_ω^l(I)` over `n_samples` fields for every box side and
/// interval.
pub fn wegner_experiment(
    config: &ModelConfig,
    intervals: &[EnergyInterval],
    sides: &[usize],
    n_samples: usize,
    seed: u64,
    runner: &Runner,
) -> Result<WegnerResult> {
    config.validate()?;
    if n_samples == 0 {
        return Err(precondition("need at least one sample"));
    }
    let mut rows = Vec::new();
    for &l in sides {
        let cfg = config.with_l(l);
        let batch = runner.map_samples(n_samples, |i| {
            let h = assemble_hamiltonian(&cfg, &sample_disorder(&cfg, seed, i)?)?;
            intervals
                .iter()
                .map(|iv| crate::spectral::trace_projector(&h, iv).map(|t| t as f64))
                .collect::<Result<Vec<f64>>>()
        })?;
        let volume = cfg.volume();
        for (k, iv) in intervals.iter().enumerate() {
            let traces: Vec<f64> = batch.values.iter().map(|(_, t)| t[k]).collect();
            let est = mean_stderr(&traces);
            let ratio = if iv.width() > 0.0 {
                est.mean / (iv.width() * volume)
            } else {
                0.0
            };
            rows.push(WegnerRow {
                l,
                e1: iv.e1,
                e2: iv.e2,
                n: est.n,
                excluded: batch.excluded.len(),
                mean: est.mean,
                stderr: est.stderr,
                ratio,
                ratio_disorder: ratio * cfg.omega_plus,
                ratio_toeplitz: ratio * (1.0 - cfg.site.a_star()) / cfg.omega_plus,
            });
        }
    }
    Ok(WegnerResult {
        d: config.d,
        omega_plus: config.omega_plus,
        rows,
    })
}

/// Empirical probability of an event with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbabilityEstimate {
    pub probability: f64,
    pub stderr: f64,
    pub n: usize,
    pub excluded: usize,
    /// `probability / (ε·l^{2d})` for proximity runs, `NaN` otherwise.
    pub normalized: f64,
}

fn estimate(hits: &[bool], excluded: usize) -> ProbabilityEstimate {
    let values: Vec<f64> = hits.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect();
    let est = mean_stderr(&values);
    ProbabilityEstimate {
        probability: est.mean,
        stderr: est.stderr,
        n: est.n,
        excluded,
        normalized: f64::NAN,
    }
}

/// Whether `H` has an eigenvalue in `]e1, e2[`.
fn has_eigenvalue_in(h: &crate::model::Hamiltonian, e1: f64, e2: f64) -> Result<bool> {
    Ok(count_below(h, e2)? > count_below(h, e1)?)
}

/// Fraction of fields with `d(σ(H_ω^l), E) ≤ ε`.
pub fn eigenvalue_proximity(
    config: &ModelConfig,
    e: f64,
    eps: f64,
    n_samples: usize,
    seed: u64,
    runner: &Runner,
) -> Result<ProbabilityEstimate> {
    config.validate()?;
    if !(eps > 0.0) {
        return Err(precondition(format!("ε must be positive, got {eps}")));
    }
    let batch = runner.map_samples(n_samples, |i| {
        let h = assemble_hamiltonian(config, &sample_disorder(config, seed, i)?)?;
        has_eigenvalue_in(&h, e - eps, e + eps)
    })?;
    let hits: Vec<bool> = batch.values.iter().map(|v| v.1).collect();
    let mut est = estimate(&hits, batch.excluded.len());
    est.normalized = est.probability / (eps * config.volume().powi(2));
    Ok(est)
}

/// Fraction of fields with `d(σ(H_ω^l), I) < l^{−α}/2` on the box of side `l`.
pub fn initial_scale_probability(
    config: &ModelConfig,
    interval: &EnergyInterval,
    l: usize,
    alpha: f64,
    n_samples: usize,
    seed: u64,
    runner: &Runner,
) -> Result<ProbabilityEstimate> {
    if !(alpha > 0.0 && alpha <= 0.25) {
        return Err(precondition(format!("α must lie in ]0, 1/4], got {alpha}")));
    }
    let cfg = config.with_l(l);
    cfg.validate()?;
    let radius = (l as f64).powf(-alpha) / 2.0;
    let batch = runner.map_samples(n_samples, |i| {
        let h = assemble_hamiltonian(&cfg, &sample_disorder(&cfg, seed, i)?)?;
        has_eigenvalue_in(&h, interval.e1 - radius, interval.e2 + radius)
    })?;
    let hits: Vec<bool> = batch.values.iter().map(|v| v.1).collect();
    Ok(estimate(&hits, batch.excluded.len()))
}
