//! Browser bindings for three quick computations: an averaged IDS curve,
//! the modulus of the Toeplitz symbol and a sheared volume.
//!
//! The `*_values` functions are plain Rust and carry the logic; the
//! exported wrappers only translate errors for JavaScript.

use wasm_bindgen::prelude::*;
use wegner_core::geometry::{mc_volume, ShearedUnion};
use wegner_core::model::{assemble_hamiltonian, sample_disorder, BoundaryCondition, ModelConfig, SingleSite};
use wegner_core::spectral::eigenvalues;
use wegner_core::toeplitz::{symbol_sweep, ConvolutionVector};
use wegner_core::{LabError, Result};

/// Keeps the page responsive.
const MAX_SIDE: usize = 256;
const MAX_SAMPLES: usize = 2000;
const MAX_MC: usize = 2_000_000;

fn parse_bc(bc: &str) -> Result<BoundaryCondition> {
    match bc {
        "dirichlet" => Ok(BoundaryCondition::Dirichlet),
        "neumann" => Ok(BoundaryCondition::Neumann),
        "periodic" => Ok(BoundaryCondition::Periodic),
        other => Err(LabError::Config(format!("unknown boundary condition `{other}`"))),
    }
}

/// Sample mean of `N(E)` on `points` energies from `e_min` to `e_max`, for
/// the one-dimensional model with coefficients `a` (`a[0] = 1`).
#[allow(clippy::too_many_arguments)]
pub fn ids_curve_values(
    a: &[f64],
    l: usize,
    bc: &str,
    omega_plus: f64,
    samples: usize,
    seed: u64,
    e_min: f64,
    e_max: f64,
    points: usize,
) -> Result<Vec<f64>> {
    if l == 0 || l > MAX_SIDE {
        return Err(LabError::Resource(format!("side must lie in 1..={MAX_SIDE}")));
    }
    if samples == 0 || samples > MAX_SAMPLES {
        return Err(LabError::Resource(format!("samples must lie in 1..={MAX_SAMPLES}")));
    }
    if points < 2 || !(e_max > e_min) {
        return Err(LabError::Precondition("need e_max > e_min and at least 2 points".into()));
    }
    let site = SingleSite::step(ConvolutionVector::from_1d(a)?);
    let config = ModelConfig::new(1, l, parse_bc(bc)?, site, omega_plus)?;
    let grid: Vec<f64> = (0..points)
        .map(|k| e_min + (e_max - e_min) * k as f64 / (points - 1) as f64)
        .collect();
    let mut sum = vec![0.0; points];
    for i in 0..samples as u64 {
        let h = assemble_hamiltonian(&config, &sample_disorder(&config, seed, i)?)?;
        let spectrum = eigenvalues(&h);
        for (s, e) in sum.iter_mut().zip(&grid) {
            *s += spectrum.partition_point(|x| x < e) as f64;
        }
    }
    let norm = samples as f64 * config.volume();
    Ok(sum.into_iter().map(|s| s / norm).collect())
}

/// `|S_A(θ)|` on `points` equispaced angles of `[−π, π]`.
pub fn symbol_modulus_values(a: &[f64], points: usize) -> Result<Vec<f64>> {
    let conv = ConvolutionVector::from_1d(a)?;
    Ok(symbol_sweep(&conv, &[1.0], points).iter().map(|p| p.value.norm()).collect())
}

/// `[exact, estimate, stderr]` for `Q ∪ (Q + [0, ω_+]·t)`.
pub fn sheared_volume_values(t: &[f64], omega_plus: f64, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if samples > MAX_MC {
        return Err(LabError::Resource(format!("at most {MAX_MC} Monte Carlo samples")));
    }
    let u = ShearedUnion::new(t.to_vec(), omega_plus)?;
    let est = mc_volume(|x| u.contains(x), &u.bbox(), samples, seed)?;
    Ok(vec![u.exact_volume(), est.estimate, est.stderr])
}

fn js(e: LabError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn ids_curve(
    a: Vec<f64>,
    l: usize,
    bc: &str,
    omega_plus: f64,
    samples: usize,
    seed: u64,
    e_min: f64,
    e_max: f64,
    points: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    ids_curve_values(&a, l, bc, omega_plus, samples, seed, e_min, e_max, points).map_err(js)
}

#[wasm_bindgen]
pub fn symbol_modulus(a: Vec<f64>, points: usize) -> std::result::Result<Vec<f64>, JsError> {
    symbol_modulus_values(&a, points).map_err(js)
}

#[wasm_bindgen]
pub fn sheared_volume(t: Vec<f64>, omega_plus: f64, samples: usize, seed: u64) -> std::result::Result<Vec<f64>, JsError> {
    sheared_volume_values(&t, omega_plus, samples, seed).map_err(js)
}
