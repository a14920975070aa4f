//! Integrated density of states, Dirichlet monotonicity and Lifshitz
//! probes.

use crate::error::{precondition, Result};
use crate::model::{assemble_hamiltonian, sample_disorder, BoundaryCondition, DisorderSample, Hamiltonian, ModelConfig};
use crate::spectral::{count_below, eigenvalues};
use crate::stats::{linear_fit, mean_stderr};

use super::Runner;

/// Averaged normalized counting function `N_ω^l(E) = l^{-d}·#{λ < E}`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdsTable {
    pub energies: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub l: usize,
    pub d: usize,
    pub bc: BoundaryCondition,
    pub n: usize,
    pub excluded: usize,
}

impl IdsTable {
    pub fn is_monotone(&self) -> bool {
        self.mean.windows(2).all(|w| w[0] <= w[1])
    }

    /// Piecewise linear interpolation of the mean, `None` outside the grid.
    pub fn interpolate(&self, e: f64) -> Option<f64> {
        let g = &self.energies;
        if g.is_empty() || e < g[0] || e > *g.last().unwrap() {
            return None;
        }
        let k = g.partition_point(|&x| x < e);
        if k < g.len() && g[k] == e {
            return Some(self.mean[k]);
        }
        let (x0, x1) = (g[k - 1], g[k]);
        let s = (e - x0) / (x1 - x0);
        Some(self.mean[k - 1] * (1.0 - s) + self.mean[k] * s)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(precondition("energy grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(precondition("energy grid must be strictly increasing"));
    }
    Ok(())
}

/// `N(E)` on the grid for one Hamiltonian.
pub fn ids_for_sample(config: &ModelConfig, h: &Hamiltonian, grid: &[f64]) -> Result<Vec<f64>> {
    let volume = config.volume();
    grid.iter()
        .map(|&e| count_below(h, e).map(|c| c as f64 / volume))
        .collect()
}

pub fn ids_estimate(config: &ModelConfig, grid: &[f64], n_samples: usize, seed: u64, runner: &Runner) -> Result<IdsTable> {
    config.validate()?;
    check_grid(grid)?;
    let batch = runner.map_samples(n_samples, |i| {
        let h = assemble_hamiltonian(config, &sample_disorder(config, seed, i)?)?;
        ids_for_sample(config, &h, grid)
    })?;
    let mut mean = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let column: Vec<f64> = batch.values.iter().map(|(_, v)| v[k]).collect();
        let est = mean_stderr(&column);
        mean.push(est.mean);
        stderr.push(est.stderr);
    }
    Ok(IdsTable {
        energies: grid.to_vec(),
        mean,
        stderr,
        l: config.l,
        d: config.d,
        bc: config.bc,
        n: batch.values.len(),
        excluded: batch.excluded.len(),
    })
}

/// `max_E (N(E) − N(E − ε))/ε` over grid energies with `E − ε` on the grid
/// range (interpolated).
pub fn lipschitz_modulus(table: &IdsTable, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(precondition(format!("ε must be positive, got {eps}")));
    }
    let mut best: Option<f64> = None;
    for (k, &e) in table.energies.iter().enumerate() {
        if let Some(lower) = table.interpolate(e - eps) {
            let q = (table.mean[k] - lower) / eps;
            best = Some(best.map_or(q, |b: f64| b.max(q)));
        }
    }
    best.ok_or_else(|| precondition("no grid energy E has E − ε inside the grid"))
}

/// IDS of the free one-dimensional grid operator `−Δ_h` per unit length,
/// `r·arccos(1 − E h²/2)/π` clamped to `[0, r]`.
pub fn free_ids_1d(e: f64, r: usize) -> f64 {
    let h = 1.0 / r as f64;
    let x = (1.0 - e * h * h / 2.0).clamp(-1.0, 1.0);
    r as f64 * x.acos() / std::f64::consts::PI
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub sides: Vec<usize>,
    pub samples: usize,
    pub excluded: usize,
    /// `(sample, smaller side, larger side, count small, count large)`.
    pub violations: Vec<(u64, usize, usize, usize, usize)>,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that the Dirichlet count `#{λ < E}` does not decrease along
/// nested boxes `[0, l_1] ⊂ [0, l_2] ⊂ …` carrying the same field.
pub fn dirichlet_monotonicity(
    config: &ModelConfig,
    sides: &[usize],
    e: f64,
    n_samples: usize,
    seed: u64,
    runner: &Runner,
) -> Result<MonotonicityReport> {
    config.validate()?;
    if config.bc != BoundaryCondition::Dirichlet {
        return Err(precondition("monotonicity under inclusion needs Dirichlet boundary conditions"));
    }
    if sides.is_empty() || sides.windows(2).any(|w| w[0] >= w[1]) {
        return Err(precondition("box sides must be nonempty and strictly increasing"));
    }
    let largest = config.with_l(*sides.last().unwrap());
    let configs: Vec<ModelConfig> = sides.iter().map(|&l| config.with_l(l)).collect();
    let batch = runner.map_samples(n_samples, |i| {
        let field = sample_disorder(&largest, seed, i)?;
        configs
            .iter()
            .map(|c| {
                let s: DisorderSample = field.restrict(&c.lambda_plus())?;
                count_below(&assemble_hamiltonian(c, &s)?, e)
            })
            .collect::<Result<Vec<usize>>>()
    })?;
    let mut violations = Vec::new();
    for (i, counts) in &batch.values {
        for k in 1..counts.len() {
            if counts[k] < counts[k - 1] {
                violations.push((*i, sides[k - 1], sides[k], counts[k - 1], counts[k]));
            }
        }
    }
    Ok(MonotonicityReport {
        sides: sides.to_vec(),
        samples: batch.values.len(),
        excluded: batch.excluded.len(),
        violations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LifshitzPoint {
    /// Distance `E − E_0` above the empirical bottom.
    pub offset: f64,
    pub ids: f64,
    /// `log|log N(E)| / log|E − E_0|`.
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LifshitzSeries {
    /// Smallest eigenvalue over all samples.
    pub bottom: f64,
    pub points: Vec<LifshitzPoint>,
    /// Offsets dropped because `N(E)` was 0 or the exponent undefined.
    pub skipped: Vec<f64>,
    pub n: usize,
    pub excluded: usize,
}

impl LifshitzSeries {
    pub fn all_negative(&self) -> bool {
        !self.points.is_empty() && self.points.iter().all(|p| p.exponent < 0.0)
    }

    /// Exponents ordered by offset move in one direction only.
    pub fn is_monotone(&self) -> bool {
        let mut pts: Vec<&LifshitzPoint> = self.points.iter().collect();
        pts.sort_by(|a, b| a.offset.total_cmp(&b.offset));
        let diffs: Vec<f64> = pts.windows(2).map(|w| w[1].exponent - w[0].exponent).collect();
        diffs.iter().all(|d| *d > 0.0) || diffs.iter().all(|d| *d < 0.0)
    }

    /// Regression slope of the exponent against the offset; positive means
    /// the exponent becomes more negative as `E` moves away from the bottom.
    pub fn trend(&self) -> Option<f64> {
        let x: Vec<f64> = self.points.iter().map(|p| p.offset).collect();
        let y: Vec<f64> = self.points.iter().map(|p| p.exponent).collect();
        linear_fit(&x, &y).map(|f| f.slope)
    }
}

/// Exponent series at energies `E_0 + offset` above the empirical spectral
/// bottom. Only sign-definite single sites have a fluctuation boundary at
/// the bottom, so other sites are refused.
pub fn lifshitz_probe(
    config: &ModelConfig,
    offsets: &[f64],
    n_samples: usize,
    seed: u64,
    runner: &Runner,
) -> Result<LifshitzSeries> {
    config.validate()?;
    if !config.site.is_sign_definite() {
        return Err(precondition(
            "the Lifshitz probe needs a sign-definite single site (all a_k >= 0); \
             an indefinite site has no fluctuation edge at the bottom of the spectrum",
        ));
    }
    if offsets.is_empty() || offsets.iter().any(|o| !(*o > 0.0)) {
        return Err(precondition("offsets must be positive"));
    }
    let batch = runner.map_samples(n_samples, |i| {
        Ok(eigenvalues(&assemble_hamiltonian(config, &sample_disorder(config, seed, i)?)?))
    })?;
    if batch.values.is_empty() {
        return Err(precondition("every sample was excluded"));
    }
    let bottom = batch
        .values
        .iter()
        .map(|(_, s)| s[0])
        .fold(f64::INFINITY, f64::min);
    let volume = config.volume();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &offset in offsets {
        let e = bottom + offset;
        let counts: Vec<f64> = batch
            .values
            .iter()
            .map(|(_, s)| s.partition_point(|&x| x < e) as f64 / volume)
            .collect();
        let ids = mean_stderr(&counts).mean;
        let exponent = ids.ln().abs().ln() / offset.ln();
        if ids > 0.0 && exponent.is_finite() {
            points.push(LifshitzPoint { offset, ids, exponent });
        } else {
            log::info!("Lifshitz point at offset {offset} skipped (N = {ids})");
            skipped.push(offset);
        }
    }
    Ok(LifshitzSeries {
        bottom,
        points,
        skipped,
        n: batch.values.len(),
        excluded: batch.excluded.len(),
    })
}
