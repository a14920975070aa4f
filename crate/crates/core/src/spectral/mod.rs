//! Spectral kernels for finite-box Hamiltonians.

mod averaging;
mod birman;
mod inertia;
mod resolvent;

pub use averaging::{spectral_averaging_check, AveragingReport, QUADRATURE_POINTS};
pub use birman::{bs_equivalence_check, birman_schwinger, BirmanSchwingerOperator, BsReport};
pub use inertia::{symmetric_inertia, tridiagonal_inertia, Inertia, ZERO_PIVOT_REL};
pub use resolvent::{
    axis_pairs, box_geometry, combes_thomas_fit, geometric_resolvent_residual, m_regular,
    regularity_norm, resolvent_block_norm, BoxGeometry, CombesThomasFit, RegularityProbe,
    Resolvent, SitePair,
};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{numerical, precondition, Result};
use crate::model::Hamiltonian;

/// Open energy interval `]e1, e2[`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyInterval {
    pub e1: f64,
    pub e2: f64,
}

impl EnergyInterval {
    pub fn new(e1: f64, e2: f64) -> Result<Self> {
        if !(e1 <= e2) {
            return Err(precondition(format!("interval edges out of order: {e1} > {e2}")));
        }
        Ok(EnergyInterval { e1, e2 })
    }

    /// Interval of the given width centred at `center`.
    pub fn centered(center: f64, width: f64) -> Result<Self> {
        Self::new(center - width / 2.0, center + width / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.e2 - self.e1
    }

    pub fn contains(&self, e: f64) -> bool {
        self.e1 < e && e < self.e2
    }

    /// Distance from `e` to the closed interval.
    pub fn distance(&self, e: f64) -> f64 {
        if e < self.e1 {
            self.e1 - e
        } else if e > self.e2 {
            e - self.e2
        } else {
            0.0
        }
    }
}

/// Energy shift applied when `E` hits an eigenvalue to working precision.
pub const ENERGY_NUDGE: f64 = 1e-12;
const NUDGE_RETRIES: usize = 4;

fn is_tridiagonal(h: &Hamiltonian) -> bool {
    (0..h.dim()).all(|i| h.row(i).all(|(j, _)| i.abs_diff(j) <= 1))
}

fn inertia_at(h: &Hamiltonian, e: f64) -> Inertia {
    let n = h.dim();
    if is_tridiagonal(h) {
        let diag: Vec<f64> = (0..n).map(|i| h.get(i, i) - e).collect();
        let off: Vec<f64> = (1..n).map(|i| h.get(i, i - 1)).collect();
        tridiagonal_inertia(&diag, &off)
    } else {
        let mut m = h.to_dense();
        for i in 0..n {
            m[(i, i)] -= e;
        }
        symmetric_inertia(&m)
    }
}

/// `#{eigenvalues of H < E}` from the inertia of `H − E`.
///
/// A zero pivot means `E` sits on an eigenvalue; the energy is then moved
/// up by [`ENERGY_NUDGE`] and the factorization repeated.
pub fn count_below(h: &Hamiltonian, e: f64) -> Result<usize> {
    if !e.is_finite() {
        return Err(precondition(format!("energy must be finite, got {e}")));
    }
    let mut energy = e;
    for attempt in 0..NUDGE_RETRIES {
        let inertia = inertia_at(h, energy);
        if inertia.zero == 0 {
            return Ok(inertia.negative);
        }
        log::debug!("zero pivot at E = {energy}, nudging (attempt {attempt})");
        energy += ENERGY_NUDGE * (1u64 << attempt) as f64 * e.abs().max(1.0);
    }
    Err(numerical(format!(
        "inertia count at E = {e} kept hitting zero pivots"
    )))
}

/// `Tr P(]E1, E2[)`: number of eigenvalues inside the interval.
pub fn trace_projector(h: &Hamiltonian, interval: &EnergyInterval) -> Result<usize> {
    if interval.e1 == interval.e2 {
        return Ok(0);
    }
    let upper = count_below(h, interval.e2)?;
    let lower = count_below(h, interval.e1)?;
    Ok(upper.saturating_sub(lower))
}

/// All eigenvalues in ascending order (dense symmetric solver).
pub fn eigenvalues(h: &Hamiltonian) -> Vec<f64> {
    sorted_eigenvalues(h.to_dense())
}

pub fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Eigenvalues (ascending) with matching orthonormal eigenvectors as columns.
pub fn eigen_decomposition(h: &Hamiltonian) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h.to_dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// `d(σ(H), E)` from a sorted spectrum.
pub fn distance_to_spectrum(spectrum: &[f64], e: f64) -> f64 {
    spectrum
        .iter()
        .map(|l| (l - e).abs())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;
    use crate::model::{assemble_free, assemble_hamiltonian, sample_disorder, BoundaryCondition, ModelConfig, SingleSite};
    use crate::toeplitz::ConvolutionVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(d: usize, l: usize, bc: BoundaryCondition) -> ModelConfig {
        let conv = if d == 1 {
            ConvolutionVector::from_1d(&[1.0, -0.5]).unwrap()
        } else {
            ConvolutionVector::new(vec![(Site::zero(d), 1.0), (Site::new(vec![1; d]), -0.4)]).unwrap()
        };
        ModelConfig::new(d, l, bc, SingleSite::step(conv), 1.0).unwrap()
    }

    #[test]
    fn counts_outside_gershgorin_interval() {
        let cfg = config(2, 5, BoundaryCondition::Periodic);
        let h = assemble_hamiltonian(&cfg, &sample_disorder(&cfg, 1, 0).unwrap()).unwrap();
        let (lo, hi) = h.gershgorin_bounds();
        assert_eq!(count_below(&h, lo - 0.1).unwrap(), 0);
        assert_eq!(count_below(&h, hi + 0.1).unwrap(), h.dim());
    }

    #[test]
    fn count_matches_dense_on_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = 50;
            let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let sym = &m + m.transpose();
            let h = Hamiltonian::from_dense(&sym);
            let e = rng.random_range(-5.0..5.0);
            let dense = sorted_eigenvalues(sym).iter().filter(|v| **v < e).count();
            assert_eq!(count_below(&h, e).unwrap(), dense);
        }
    }

    #[test]
    fn eigenvalue_hit_is_nudged() {
        // E = 2 is an eigenvalue of the 3-site Dirichlet path graph
        let cfg = config(1, 3, BoundaryCondition::Dirichlet);
        let h = assemble_free(&cfg).unwrap();
        assert_eq!(count_below(&h, 2.0).unwrap(), 2);
        let periodic = assemble_free(&config(2, 4, BoundaryCondition::Periodic)).unwrap();
        // 0 is the (simple) ground state
        assert_eq!(count_below(&periodic, 0.0).unwrap(), 1);
    }

    #[test]
    fn trace_projector_examples() {
        let cfg = config(1, 12, BoundaryCondition::Neumann);
        let h = assemble_hamiltonian(&cfg, &sample_disorder(&cfg, 4, 2).unwrap()).unwrap();
        let empty = EnergyInterval::new(1.0, 1.0).unwrap();
        assert_eq!(trace_projector(&h, &empty).unwrap(), 0);
        let (lo, hi) = h.gershgorin_bounds();
        let all = EnergyInterval::new(lo - 1.0, hi + 1.0).unwrap();
        assert_eq!(trace_projector(&h, &all).unwrap(), h.dim());
        let iv = EnergyInterval::new(0.7, 2.3).unwrap();
        let dense = eigenvalues(&h).iter().filter(|e| iv.contains(**e)).count();
        assert_eq!(trace_projector(&h, &iv).unwrap(), dense);
        assert!(EnergyInterval::new(2.0, 1.0).is_err());
    }

    #[test]
    fn gershgorin_encloses_spectrum() {
        for (d, l) in [(1, 9), (2, 5), (3, 3)] {
            for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann, BoundaryCondition::Periodic] {
                let cfg = config(d, l, bc);
                let s = sample_disorder(&cfg, 8, 0).unwrap();
                let v = crate::model::assemble_potential(&cfg, &s).unwrap();
                let h = assemble_hamiltonian(&cfg, &s).unwrap();
                assert_eq!(h.max_asymmetry(), 0.0);
                let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
                let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e = eigenvalues(&h);
                let r2 = (cfg.r * cfg.r) as f64;
                assert!(e[0] >= vmin - 4.0 * d as f64 * r2 - 1e-12);
                assert!(*e.last().unwrap() <= vmax + 4.0 * d as f64 * r2 + 1e-12);
            }
        }
    }
}
