//! Resolvent decay experiments: Combes–Thomas scans and regularity of
//! boxes along a multiscale schedule.

use num_complex::Complex64;

use crate::error::{precondition, Result};
use crate::lattice::Site;
use crate::model::{assemble_hamiltonian, sample_disorder, ModelConfig};
use crate::spectral::{axis_pairs, box_geometry, combes_thomas_fit, eigenvalues, m_regular, CombesThomasFit, RegularityProbe};
use crate::stats::mean_stderr;

use super::{MsaSchedule, Runner};

/// Decay fits of one field at energies `floor − gap`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayScan {
    /// Smallest eigenvalue of the sampled Hamiltonian.
    pub floor: f64,
    pub fits: Vec<(f64, CombesThomasFit)>,
}

impl DecayScan {
    /// Fitted rates do not decrease as the gap grows.
    pub fn rates_nondecreasing(&self) -> bool {
        self.fits.windows(2).all(|w| w[1].1.rate >= w[0].1.rate)
    }

    pub fn min_r_squared(&self) -> f64 {
        self.fits.iter().map(|f| f.1.r_squared).fold(f64::INFINITY, f64::min)
    }
}

/// Samples field `index`, then fits the decay of `‖χ_x R(floor − gap) χ_y‖`
/// along the first axis from `anchor` for each gap (sorted ascending).
pub fn combes_thomas_scan(
    config: &ModelConfig,
    seed: u64,
    index: u64,
    gaps: &[f64],
    anchor: &Site,
    max_sep: usize,
) -> Result<DecayScan> {
    if gaps.iter().any(|g| !(*g > 0.0)) {
        return Err(precondition("gaps below the spectrum must be positive"));
    }
    let mut gaps = gaps.to_vec();
    gaps.sort_by(f64::total_cmp);
    let h = assemble_hamiltonian(config, &sample_disorder(config, seed, index)?)?;
    let floor = eigenvalues(&h)[0];
    let pairs = axis_pairs(config, anchor, max_sep);
    let fits = gaps
        .iter()
        .map(|&g| combes_thomas_fit(&h, Complex64::new(floor - g, 0.0), &pairs).map(|f| (g, f)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayScan { floor, fits })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityRow {
    pub scale: usize,
    pub l: u128,
    pub m: f64,
    pub fraction: f64,
    pub stderr: f64,
    pub n: usize,
    pub excluded: usize,
    /// Reason the scale was not run.
    pub skipped: Option<String>,
}

/// Largest box side solved densely in each dimension.
fn max_side(d: usize) -> u128 {
    match d {
        1 => 96,
        2 => 24,
        _ => 8,
    }
}

/// Fraction of fields whose box of side `l_j` is `m_j`-regular at `E`, for
/// every scale of the schedule small enough to solve.
pub fn regularity_survey(
    config: &ModelConfig,
    schedule: &MsaSchedule,
    e: f64,
    delta: f64,
    n_samples: usize,
    seed: u64,
    runner: &Runner,
) -> Result<Vec<RegularityRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for (j, (&l, &m)) in schedule.l.iter().zip(&schedule.m).enumerate() {
        let mut row = RegularityRow {
            scale: j,
            l,
            m,
            fraction: f64::NAN,
            stderr: f64::NAN,
            n: 0,
            excluded: 0,
            skipped: None,
        };
        let probe = RegularityProbe::new(l as f64, m, delta);
        if l > max_side(config.d) {
            row.skipped = Some(format!("side {l} exceeds the dense limit {}", max_side(config.d)));
        } else if !(m > 0.0) {
            row.skipped = Some(format!("mass {m} is not positive"));
        } else if !(2.0 * delta < l as f64 / 3.0) {
            row.skipped = Some(format!("collar 2δ = {} too wide for side {l}", 2.0 * delta));
        }
        if row.skipped.is_some() {
            log::info!("regularity scale {j} skipped: {}", row.skipped.as_deref().unwrap_or(""));
            rows.push(row);
            continue;
        }
        let cfg = config.with_l(l as usize);
        let geometry = box_geometry(&cfg);
        let batch = runner.map_samples(n_samples, |i| {
            let h = assemble_hamiltonian(&cfg, &sample_disorder(&cfg, seed, i)?)?;
            m_regular(&h, &geometry, e, &probe)
        })?;
        let hits: Vec<f64> = batch.values.iter().map(|v| if v.1 { 1.0 } else { 0.0 }).collect();
        let est = mean_stderr(&hits);
        row.fraction = est.mean;
        row.stderr = est.stderr;
        row.n = est.n;
        row.excluded = batch.excluded.len();
        rows.push(row);
    }
    Ok(rows)
}
