//! Birman–Schwinger reduction below the spectrum of the free operator.

use nalgebra::DMatrix;

use crate::error::{numerical, precondition, LabError, Result};
use crate::model::Hamiltonian;

use super::{distance_to_spectrum, eigen_decomposition, sorted_eigenvalues};

/// Minimal distance between `E` and `inf σ(H_0)`.
const FLOOR_MARGIN: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-10;

/// `Γ(E) = (H_0 − E)^{-1/2} V (H_0 − E)^{-1/2}` together with the square root
/// it was built from.
#[derive(Clone, Debug)]
pub struct BirmanSchwingerOperator {
    pub gamma: DMatrix<f64>,
    pub energy: f64,
    pub h0_floor: f64,
    /// `(H_0 − E)^{-1/2}`.
    pub root: DMatrix<f64>,
}

impl BirmanSchwingerOperator {
    /// `inf σ(H_0) − E`.
    pub fn gap(&self) -> f64 {
        self.h0_floor - self.energy
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(self.gamma.clone())
    }

    /// `(H_0 − E)^{-1/2} [1 + Γ]^{-1} (H_0 − E)^{-1/2}`.
    pub fn resolvent(&self) -> Result<DMatrix<f64>> {
        let n = self.gamma.nrows();
        let inv = (DMatrix::identity(n, n) + &self.gamma)
            .lu()
            .try_inverse()
            .ok_or_else(|| numerical("-1 is an eigenvalue of the Birman–Schwinger operator"))?;
        Ok(&self.root * inv * &self.root)
    }

    /// Max-entry difference between [`Self::resolvent`] and a direct inverse
    /// of `H_0 + V − E`, relative to `max(1, max entry)`.
    pub fn identity_residual(&self, h0: &Hamiltonian, v: &[f64]) -> Result<f64> {
        let via_gamma = self.resolvent()?;
        let direct = shifted_inverse(h0, v, self.energy)?;
        let scale = direct.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        Ok((via_gamma - direct).iter().fold(0.0f64, |m, x| m.max(x.abs())) / scale)
    }
}

fn shifted_inverse(h0: &Hamiltonian, v: &[f64], e: f64) -> Result<DMatrix<f64>> {
    let mut m = h0.to_dense();
    for (i, vi) in v.iter().enumerate() {
        m[(i, i)] += vi - e;
    }
    m.lu()
        .try_inverse()
        .ok_or_else(|| numerical(format!("E = {e} is an eigenvalue of H_0 + V")))
}

pub fn birman_schwinger(h0: &Hamiltonian, v: &[f64], e: f64) -> Result<BirmanSchwingerOperator> {
    let n = h0.dim();
    if v.len() != n {
        return Err(precondition(format!("potential has {} entries, H_0 has dimension {n}", v.len())));
    }
    let (values, q) = eigen_decomposition(h0);
    let floor = values.first().copied().unwrap_or(f64::INFINITY);
    if !(e < floor - FLOOR_MARGIN) {
        return Err(precondition(format!(
            "E = {e} must lie below inf σ(H_0) = {floor} by at least {FLOOR_MARGIN}"
        )));
    }
    let scaled = DMatrix::from_fn(n, n, |r, c| q[(r, c)] / (values[c] - e).sqrt());
    let root = &scaled * q.transpose();
    let mut gamma = DMatrix::from_fn(n, n, |r, c| root[(r, c)] * 0.0);
    for k in 0..n {
        if v[k] == 0.0 {
            continue;
        }
        for r in 0..n {
            let a = root[(r, k)] * v[k];
            for c in 0..n {
                gamma[(r, c)] += a * root[(k, c)];
            }
        }
    }
    let scale = gamma.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let asym = (&gamma - gamma.transpose()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if asym > SYMMETRY_TOL * scale {
        return Err(LabError::Contract(format!("Γ lost symmetry: {asym:e}")));
    }
    let gamma = (&gamma + gamma.transpose()) * 0.5;
    Ok(BirmanSchwingerOperator {
        gamma,
        energy: e,
        h0_floor: floor,
        root,
    })
}

/// Quantities of the reduction `d(σ(H), E) < ε ⟺ ‖(H − E)^{-1}‖ > 1/ε
/// ⟹ ‖(1 + Γ)^{-1}‖ > gap/ε ⟺ d(σ(Γ), −1) < ε/gap`.
#[derive(Clone, Debug, PartialEq)]
pub struct BsReport {
    pub energy: f64,
    pub epsilon: f64,
    /// `inf σ(H_0) − E`.
    pub gap: f64,
    pub distance: f64,
    pub resolvent_norm: f64,
    pub near_spectrum: bool,
    pub large_resolvent: bool,
    pub inverse_norm: f64,
    pub large_inverse: bool,
    pub gamma_distance: f64,
    /// `ε / gap`.
    pub radius: f64,
    pub near_minus_one: bool,
    /// Eigenvalues of `Γ` in `]−1 − radius, −1 + radius[`.
    pub trace_count: usize,
}

impl BsReport {
    /// The two sides of the distance/norm equivalence agree.
    pub fn equivalence_holds(&self) -> bool {
        self.near_spectrum == self.large_resolvent
    }

    /// Every implication of the chain holds.
    pub fn chain_holds(&self) -> bool {
        self.equivalence_holds()
            && (!self.large_resolvent || self.large_inverse)
            && self.large_inverse == self.near_minus_one
            && (!self.near_minus_one || self.trace_count >= 1)
    }
}

pub fn bs_equivalence_check(h0: &Hamiltonian, v: &[f64], e: f64, eps: f64) -> Result<BsReport> {
    if !(eps > 0.0) {
        return Err(precondition(format!("ε must be positive, got {eps}")));
    }
    let op = birman_schwinger(h0, v, e)?;
    let spectrum = sorted_eigenvalues(h0.add_diagonal(v).to_dense());
    let distance = distance_to_spectrum(&spectrum, e);

    let direct = shifted_inverse(h0, v, e)?;
    let resolvent_norm = largest_singular_value(&direct)?;

    let gamma_values = op.eigenvalues();
    let gamma_distance = distance_to_spectrum(&gamma_values, -1.0);
    let n = op.gamma.nrows();
    let inverse_norm = largest_singular_value(
        &(DMatrix::identity(n, n) + &op.gamma)
            .lu()
            .try_inverse()
            .ok_or_else(|| numerical("-1 is an eigenvalue of the Birman–Schwinger operator"))?,
    )?;
    let gap = op.gap();
    let radius = eps / gap;
    let trace_count = gamma_values
        .iter()
        .filter(|g| (**g + 1.0).abs() < radius)
        .count();
    Ok(BsReport {
        energy: e,
        epsilon: eps,
        gap,
        distance,
        resolvent_norm,
        near_spectrum: distance < eps,
        large_resolvent: resolvent_norm > 1.0 / eps,
        inverse_norm,
        large_inverse: inverse_norm > gap / eps,
        gamma_distance,
        radius,
        near_minus_one: gamma_distance < radius,
        trace_count,
    })
}

fn largest_singular_value(m: &DMatrix<f64>) -> Result<f64> {
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 1000)
        .ok_or_else(|| numerical("singular value iteration did not converge"))?;
    Ok(svd.singular_values.iter().copied().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_free, assemble_potential, sample_disorder, BoundaryCondition, ModelConfig, SingleSite};
    use crate::spectral::eigenvalues;
    use crate::toeplitz::ConvolutionVector;

    fn config() -> ModelConfig {
        let conv = ConvolutionVector::from_1d(&[1.0, -0.5]).unwrap();
        ModelConfig::new(1, 10, BoundaryCondition::Dirichlet, SingleSite::step(conv), 1.0).unwrap()
    }

    #[test]
    fn zero_potential_gives_zero_operator() {
        let h0 = assemble_free(&config()).unwrap();
        let op = birman_schwinger(&h0, &[0.0; 10], -1.0).unwrap();
        assert!(op.gamma.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn constant_potential_closed_form() {
        let h0 = assemble_free(&config()).unwrap();
        let lambda = eigenvalues(&h0);
        let (c, e) = (0.7, -0.5);
        let op = birman_schwinger(&h0, &[c; 10], e).unwrap();
        let mut expected: Vec<f64> = lambda.iter().map(|l| c / (l - e)).collect();
        expected.sort_by(f64::total_cmp);
        for (g, x) in op.eigenvalues().iter().zip(&expected) {
            assert!((g - x).abs() < 1e-8);
        }
    }

    #[test]
    fn resolvent_identity() {
        let cfg = config();
        let h0 = assemble_free(&cfg).unwrap();
        for i in 0..10 {
            let v = assemble_potential(&cfg, &sample_disorder(&cfg, 9, i).unwrap()).unwrap();
            let op = birman_schwinger(&h0, &v, -0.3 - 0.1 * i as f64).unwrap();
            assert!(op.identity_residual(&h0, &v).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn energy_too_close_to_floor() {
        let h0 = assemble_free(&config()).unwrap();
        let floor = eigenvalues(&h0)[0];
        assert!(birman_schwinger(&h0, &[0.0; 10], floor).is_err());
        assert!(birman_schwinger(&h0, &[0.0; 10], floor - 1e-3).is_ok());
    }

    #[test]
    fn equivalence_extremes() {
        let cfg = config();
        let h0 = assemble_free(&cfg).unwrap();
        let v = assemble_potential(&cfg, &sample_disorder(&cfg, 10, 0).unwrap()).unwrap();
        let big = bs_equivalence_check(&h0, &v, -0.5, 100.0).unwrap();
        assert!(big.near_spectrum && big.large_resolvent && big.chain_holds());
        let tiny = bs_equivalence_check(&h0, &v, -0.5, 1e-9).unwrap();
        assert!(!tiny.near_spectrum && !tiny.large_resolvent && tiny.chain_holds());
    }

    #[test]
    fn chain_over_samples() {
        let cfg = config();
        let h0 = assemble_free(&cfg).unwrap();
        for i in 0..20 {
            let v = assemble_potential(&cfg, &sample_disorder(&cfg, 11, i).unwrap()).unwrap();
            let r = bs_equivalence_check(&h0, &v, -0.2, 0.3).unwrap();
            assert!(r.chain_holds(), "{r:?}");
            assert!((r.resolvent_norm * r.distance - 1.0).abs() < 1e-8);
        }
    }
}
