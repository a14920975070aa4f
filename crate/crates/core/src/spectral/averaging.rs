//! Spectral averaging along one coordinate of the `η` field.

use crate::error::{precondition, Result};
use crate::lattice::Site;
use crate::model::{assemble_hamiltonian, DisorderSample, ModelConfig};
use crate::toeplitz::system_for_config;

use super::{eigen_decomposition, EnergyInterval};

/// Number of quadrature nodes on `[ξ, ξ + ω_+]`.
pub const QUADRATURE_POINTS: usize = 200;

const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct AveragingReport {
    /// Trapezoid value of `∫ ⟨f, χ_j P(η) χ_j f⟩ / (1 + tη_j²) dη_j`.
    pub integral: f64,
    /// `|I| / κ` (`|I|` for the unit step bump).
    pub bound: f64,
    /// Lower end of the `η_j` range.
    pub xi: f64,
    pub omega_plus: f64,
}

impl AveragingReport {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.integral <= self.bound * (1.0 + rel_tol)
    }
}

/// Varies `η_j` over the range allowed by the other coordinates of the
/// sample (`ω_j ∈ [0, ω_+]`), keeping all other `η_k` fixed, and integrates
/// the spectral weight of `χ_j f` in `I`.
pub fn spectral_averaging_check(
    config: &ModelConfig,
    sample: &DisorderSample,
    j: &Site,
    f: &[f64],
    interval: &EnergyInterval,
    t: f64,
) -> Result<AveragingReport> {
    config.validate()?;
    let height = config
        .site
        .step_height()
        .ok_or_else(|| precondition("spectral averaging needs the step bump"))?;
    if !(t >= 0.0) {
        return Err(precondition(format!("density parameter must be nonnegative, got {t}")));
    }
    if !config.in_box(j) {
        return Err(precondition(format!("site {j:?} is not a cell of the box")));
    }
    if f.len() != config.dimension() {
        return Err(precondition("test vector must live on the box grid"));
    }
    let norm: f64 = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(precondition(format!("test vector must be normalized, ‖f‖ = {norm}")));
    }

    let sys = system_for_config(config)?;
    let pivot = sys.sites.position(j).expect("cells lie in lambda_plus");
    let mut eta = sys.transform(&sample.omega)?;
    let xi = eta[pivot] - sample.omega[pivot];

    let chi_f: Vec<(usize, f64)> = config.cell_nodes(j).into_iter().map(|n| (n, f[n])).collect();
    let step = config.omega_plus / (QUADRATURE_POINTS - 1) as f64;
    let mut integral = 0.0;
    for q in 0..QUADRATURE_POINTS {
        let eta_j = xi + q as f64 * step;
        eta[pivot] = eta_j;
        let omega = sys.inverse_transform(&eta)?;
        let shifted = DisorderSample {
            omega,
            ..sample.clone()
        };
        let h = assemble_hamiltonian(config, &shifted)?;
        let (values, vectors) = eigen_decomposition(&h);
        let weight: f64 = values
            .iter()
            .enumerate()
            .filter(|(_, e)| interval.contains(**e))
            .map(|(k, _)| {
                let overlap: f64 = chi_f.iter().map(|&(n, v)| vectors[(n, k)] * v).sum();
                overlap * overlap
            })
            .sum();
        let w = if q == 0 || q == QUADRATURE_POINTS - 1 { 0.5 } else { 1.0 };
        integral += w * step * weight / (1.0 + t * eta_j * eta_j);
    }
    Ok(AveragingReport {
        integral,
        bound: interval.width() / height,
        xi,
        omega_plus: config.omega_plus,
    })
}
