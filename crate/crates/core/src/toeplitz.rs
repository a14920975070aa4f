//! Cone-supported block-Toeplitz algebra.
//!
//! A convolution vector `a` supported in the positive cone generates the
//! matrix `A_{jk} = a_{j−k}` over an index set `Λ⁺`. Listed along a linear
//! extension of the cone order, `A` is unit lower triangular, so its
//! inverse `B` follows by forward substitution one row at a time and keeps
//! the same cone support.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{precondition, LabError, Result};
use crate::lattice::{Site, SiteSet};
use crate::model::{assemble_potential, DisorderSample, ModelConfig};

/// Largest admissible `|Λ⁺|` for the dense representation.
pub const MAX_SYSTEM_SIZE: usize = 20_000;

/// Coefficients `{a_k}` supported on a finite subset of the cone `k ≽ 0`,
/// normalized so that `a_0 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionVector {
    dim: usize,
    entries: Vec<(Site, f64)>,
}

impl ConvolutionVector {
    pub fn new(entries: Vec<(Site, f64)>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(LabError::Config("convolution vector is empty".into()));
        };
        let dim = first.0.dim();
        let zero = Site::zero(dim);
        let mut seen = HashMap::new();
        for (k, v) in &entries {
            if k.dim() != dim {
                return Err(LabError::Config("gamma points have inconsistent dimensions".into()));
            }
            if !k.dominates(&zero) {
                return Err(precondition(format!("gamma point {k:?} is outside the positive cone")));
            }
            if !v.is_finite() {
                return Err(LabError::Config(format!("coefficient at {k:?} is not finite")));
            }
            if seen.insert(k.clone(), *v).is_some() {
                return Err(LabError::Config(format!("gamma point {k:?} listed twice")));
            }
        }
        match seen.get(&zero) {
            Some(a0) if (a0 - 1.0).abs() <= 1e-12 => {}
            Some(a0) => {
                return Err(precondition(format!("a_0 must be normalized to 1, got {a0}")));
            }
            None => return Err(precondition("gamma must contain the origin")),
        }
        let sites = SiteSet::new(entries.iter().map(|(k, _)| k.clone()).collect());
        let entries = sites.iter().map(|k| (k.clone(), seen[k])).collect();
        Ok(ConvolutionVector { dim, entries })
    }

    /// `a = δ_0`.
    pub fn delta(dim: usize) -> Self {
        ConvolutionVector {
            dim,
            entries: vec![(Site::zero(dim), 1.0)],
        }
    }

    /// One-dimensional vector `(a_0, a_1, …)` with `a_0 = 1`.
    pub fn from_1d(coeffs: &[f64]) -> Result<Self> {
        Self::new(
            coeffs
                .iter()
                .enumerate()
                .map(|(i, &v)| (Site::new([i as i64]), v))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Support points with their coefficients, in linear-extension order.
    pub fn entries(&self) -> &[(Site, f64)] {
        &self.entries
    }

    pub fn get(&self, k: &Site) -> f64 {
        self.entries
            .iter()
            .find(|(s, _)| s == k)
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    }

    /// `a* = Σ_{k≠0} |a_k|`.
    pub fn a_star(&self) -> f64 {
        let zero = Site::zero(self.dim);
        self.entries
            .iter()
            .filter(|(k, _)| *k != zero)
            .map(|(_, v)| v.abs())
            .sum()
    }

    /// Side `g` of the smallest discrete cube `[0, g]^d` containing the support.
    pub fn cube_side(&self) -> usize {
        self.entries
            .iter()
            .flat_map(|(k, _)| k.0.iter().copied())
            .max()
            .unwrap_or(0) as usize
    }

    /// Zero-extension of the coefficients to the full cube `[0, g]^d`.
    pub fn padded(&self) -> Vec<(Site, f64)> {
        let g = self.cube_side() as i64;
        SiteSet::cube(&vec![0; self.dim], &vec![g; self.dim])
            .iter()
            .map(|k| (k.clone(), self.get(k)))
            .collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|(_, v)| *v >= 0.0)
    }
}

/// `A_{jk} = a_{j−k}` over `Λ⁺` together with its inverse.
#[derive(Clone, Debug)]
pub struct ConeToeplitzSystem {
    pub sites: SiteSet,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub a_star: f64,
}

/// `Λ⁺ = Λ̃ − Γ`, with `Γ` enlarged to its enclosing cube.
pub fn lambda_plus_of(conv: &ConvolutionVector, cells: &SiteSet) -> SiteSet {
    let padded = conv.padded();
    let mut out = Vec::with_capacity(cells.len() * padded.len());
    for c in cells.iter() {
        for (g, _) in &padded {
            out.push(c.sub(g));
        }
    }
    SiteSet::new(out)
}

fn toeplitz_matrix(conv: &ConvolutionVector, sites: &SiteSet) -> DMatrix<f64> {
    let coeff: HashMap<&Site, f64> = conv.entries().iter().map(|(k, v)| (k, *v)).collect();
    let n = sites.len();
    let mut a = DMatrix::zeros(n, n);
    for (j, sj) in sites.iter().enumerate() {
        for (k, sk) in sites.iter().enumerate() {
            if let Some(v) = coeff.get(&sj.sub(sk)) {
                a[(j, k)] = *v;
            }
        }
    }
    a
}

pub fn build_system(conv: &ConvolutionVector, cells: &SiteSet) -> Result<ConeToeplitzSystem> {
    let a_star = conv.a_star();
    if a_star >= 1.0 {
        return Err(precondition(format!(
            "convolution vector not admissible: a* = {a_star} >= 1"
        )));
    }
    let sites = lambda_plus_of(conv, cells);
    if sites.len() > MAX_SYSTEM_SIZE {
        return Err(LabError::Resource(format!(
            "|lambda_plus| = {} exceeds {MAX_SYSTEM_SIZE}",
            sites.len()
        )));
    }
    let a = toeplitz_matrix(conv, &sites);
    let order: Vec<usize> = (0..sites.len()).collect();
    let b = invert_by_substitution(&a, sites.sites(), &order)?;
    Ok(ConeToeplitzSystem {
        sites,
        a,
        b,
        a_star,
    })
}

/// The system whose index set is the `Λ⁺` of a model configuration.
pub fn system_for_config(config: &ModelConfig) -> Result<ConeToeplitzSystem> {
    config.validate()?;
    build_system(&config.site.conv, &config.cells())
}

/// Checks `A_{jj} = 1` and `A_{jk} ≠ 0 ⇒ j ≽ k`.
pub fn check_cone_triangular(a: &DMatrix<f64>, sites: &[Site]) -> Result<()> {
    let n = sites.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(LabError::Config(format!(
            "matrix is {}x{}, index set has {n} sites",
            a.nrows(),
            a.ncols()
        )));
    }
    for j in 0..n {
        if a[(j, j)] != 1.0 {
            return Err(LabError::Contract(format!(
                "diagonal entry at {:?} is {}, expected 1",
                sites[j],
                a[(j, j)]
            )));
        }
        for k in 0..n {
            if j != k && a[(j, k)] != 0.0 && !sites[j].dominates(&sites[k]) {
                return Err(LabError::Contract(format!(
                    "entry ({:?}, {:?}) is nonzero but the row site does not dominate the column site",
                    sites[j], sites[k]
                )));
            }
        }
    }
    Ok(())
}

/// Inverse of a cone-triangular matrix by forward substitution.
///
/// Rows are produced in the sequence `order`; row `m` of `B` is
/// `e_m − Σ_{j≺m} A_{mj} B_{j·}`, which only uses rows already finished
/// when `order` lists every dominated site before the sites dominating it.
pub fn invert_by_substitution(a: &DMatrix<f64>, sites: &[Site], order: &[usize]) -> Result<DMatrix<f64>> {
    check_cone_triangular(a, sites)?;
    let n = sites.len();
    let mut position = vec![usize::MAX; n];
    for (p, &i) in order.iter().enumerate() {
        if i >= n || position[i] != usize::MAX {
            return Err(precondition("substitution order is not a permutation of the index set"));
        }
        position[i] = p;
    }
    if order.len() != n {
        return Err(precondition("substitution order is not a permutation of the index set"));
    }

    let below: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|m| {
            (0..n)
                .filter(|&j| j != m && a[(m, j)] != 0.0)
                .map(|j| (j, a[(m, j)]))
                .collect()
        })
        .collect();
    for (m, row) in below.iter().enumerate() {
        if row.iter().any(|&(j, _)| position[j] > position[m]) {
            return Err(precondition(format!(
                "substitution order visits {:?} before a site it depends on",
                sites[m]
            )));
        }
    }

    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); n];
    for &m in order {
        let mut row = vec![0.0; n];
        row[m] = 1.0;
        for &(j, coeff) in &below[m] {
            for (r, bj) in row.iter_mut().zip(&rows[j]) {
                *r -= coeff * bj;
            }
        }
        rows[m] = row;
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Determinant of a cone-supported matrix as the product of its diagonal.
/// The support condition is checked; the diagonal may be arbitrary.
pub fn cone_determinant(a: &DMatrix<f64>, sites: &[Site]) -> Result<f64> {
    let n = sites.len();
    for j in 0..n {
        for k in 0..n {
            if j != k && a[(j, k)] != 0.0 && !sites[j].dominates(&sites[k]) {
                return Err(LabError::Contract(format!(
                    "entry ({:?}, {:?}) violates the cone support",
                    sites[j], sites[k]
                )));
            }
        }
    }
    Ok((0..n).map(|j| a[(j, j)]).product())
}

/// Column sum norm `max_k Σ_j |M_{jk}|`.
pub fn column_sum_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl ConeToeplitzSystem {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// `‖AB − I‖_max`.
    pub fn inverse_residual(&self) -> f64 {
        let prod = &self.a * &self.b;
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Upper bound `1/(1 − a*)` on `‖B‖₁`.
    pub fn norm_bound(&self) -> f64 {
        1.0 / (1.0 - self.a_star)
    }

    /// `η = Aω`.
    pub fn transform(&self, omega: &[f64]) -> Result<Vec<f64>> {
        self.apply(&self.a, omega)
    }

    /// `ω = Bη`.
    pub fn inverse_transform(&self, eta: &[f64]) -> Result<Vec<f64>> {
        self.apply(&self.b, eta)
    }

    fn apply(&self, m: &DMatrix<f64>, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.len() {
            return Err(LabError::Config(format!(
                "vector has {} entries, index set has {}",
                x.len(),
                self.len()
            )));
        }
        Ok((0..self.len())
            .map(|i| (0..self.len()).map(|k| m[(i, k)] * x[k]).sum())
            .collect())
    }

    /// Splits `Λ⁺` around the site at index `pivot`.
    pub fn split(&self, eta: &[f64], pivot: usize) -> EtaCoordinates {
        EtaCoordinates::split(self.sites.sites(), eta, pivot)
    }

    pub fn write_triplets<W: Write>(&self, which: Matrix, out: W) -> std::io::Result<()> {
        let m = match which {
            Matrix::A => &self.a,
            Matrix::B => &self.b,
        };
        write_matrix_triplets(m, out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Matrix {
    A,
    B,
}

/// Nonzero entries as `row,col,value` lines.
pub fn write_matrix_triplets<W: Write>(m: &DMatrix<f64>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# row,col,value")?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != 0.0 {
                writeln!(out, "{i},{j},{:e}", m[(i, j)])?;
            }
        }
    }
    Ok(())
}

/// `η` partitioned as `(η_<, η_j, η_>)` relative to a pivot site `j`:
/// `Λ_<` holds the sites not dominating `j`, `Λ_>` the sites strictly
/// dominating it.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaCoordinates {
    pub eta: Vec<f64>,
    pub pivot: usize,
    pub less: Vec<usize>,
    pub greater: Vec<usize>,
}

impl EtaCoordinates {
    pub fn split(sites: &[Site], eta: &[f64], pivot: usize) -> Self {
        assert_eq!(sites.len(), eta.len());
        let j = &sites[pivot];
        let mut less = Vec::new();
        let mut greater = Vec::new();
        for (i, s) in sites.iter().enumerate() {
            if i == pivot {
                continue;
            }
            if s.dominates(j) {
                greater.push(i);
            } else {
                less.push(i);
            }
        }
        EtaCoordinates {
            eta: eta.to_vec(),
            pivot,
            less,
            greater,
        }
    }

    pub fn eta_less(&self) -> Vec<f64> {
        self.less.iter().map(|&i| self.eta[i]).collect()
    }

    pub fn eta_pivot(&self) -> f64 {
        self.eta[self.pivot]
    }

    pub fn eta_greater(&self) -> Vec<f64> {
        self.greater.iter().map(|&i| self.eta[i]).collect()
    }

    /// Entries in `(η_<, η_j, η_>)` order.
    pub fn concatenated(&self) -> Vec<f64> {
        let mut out = self.eta_less();
        out.push(self.eta_pivot());
        out.extend(self.eta_greater());
        out
    }
}

/// Largest deviation between the directly summed potential on each cell
/// and the cell coordinate `κ·η_j` with `η = Aω`. Step bump and `r = 1` only.
pub fn verify_cell_representation(config: &ModelConfig, sample: &DisorderSample) -> Result<f64> {
    config.validate()?;
    let height = match config.site.step_height() {
        Some(h) if config.r == 1 => h,
        _ => {
            return Err(precondition(
                "cell representation needs the step bump on an unrefined mesh (r = 1)",
            ))
        }
    };
    let sys = system_for_config(config)?;
    if sample.lambda_plus != sys.sites {
        return Err(LabError::Config("sample is not indexed by lambda_plus".into()));
    }
    let eta = sys.transform(&sample.omega)?;
    let v = assemble_potential(config, sample)?;
    let mut worst: f64 = 0.0;
    for cell in config.cells().iter() {
        let node = config.cell_nodes(cell)[0];
        let j = sys.sites.position(cell).expect("cells lie in lambda_plus");
        worst = worst.max((v[node] - height * eta[j]).abs());
    }
    Ok(worst)
}

/// Symbol `S_A(θ) = Σ_k a_k e^{i k·θ}`.
pub fn symbol_eval(conv: &ConvolutionVector, theta: &[f64]) -> Complex64 {
    assert_eq!(theta.len(), conv.dim());
    conv.entries()
        .iter()
        .map(|(k, a)| {
            let phase: f64 = k.0.iter().zip(theta).map(|(&ki, &t)| ki as f64 * t).sum();
            Complex64::from_polar(*a, phase)
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolPoint {
    pub theta: f64,
    pub value: Complex64,
}

/// `S_A(θ·v)` for `θ` on `n` equispaced points of `[−π, π]`.
pub fn symbol_sweep(conv: &ConvolutionVector, direction: &[f64], n: usize) -> Vec<SymbolPoint> {
    let pi = std::f64::consts::PI;
    (0..n)
        .map(|i| {
            let theta = if n == 1 {
                0.0
            } else {
                -pi + 2.0 * pi * i as f64 / (n - 1) as f64
            };
            let angles: Vec<f64> = direction.iter().map(|v| v * theta).collect();
            SymbolPoint {
                theta,
                value: symbol_eval(conv, &angles),
            }
        })
        .collect()
}

/// Smallest singular value of the `Λ⁺` matrix for boxes of the given sides.
pub fn nu_trend(conv: &ConvolutionVector, sizes: &[usize]) -> Result<Vec<(usize, f64)>> {
    sizes
        .iter()
        .map(|&l| {
            if l == 0 {
                return Err(precondition("box side must be positive"));
            }
            let d = conv.dim();
            let cells = SiteSet::cube(&vec![0; d], &vec![l as i64 - 1; d]);
            let sites = lambda_plus_of(conv, &cells);
            if sites.len() > MAX_SYSTEM_SIZE {
                return Err(LabError::Resource(format!("|lambda_plus| = {}", sites.len())));
            }
            let a = toeplitz_matrix(conv, &sites);
            Ok((l, smallest_singular_value(a)))
        })
        .collect()
}

pub fn smallest_singular_value(m: DMatrix<f64>) -> f64 {
    m.svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{is_linear_extension, linear_extension};
    use crate::model::{sample_disorder, BoundaryCondition, SingleSite};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bidiagonal() -> ConvolutionVector {
        ConvolutionVector::from_1d(&[1.0, -0.5]).unwrap()
    }

    fn line(n: i64) -> SiteSet {
        SiteSet::cube(&[0], &[n - 1])
    }

    /// Random admissible vector on the cube `[0, g]^d` with prescribed `a*`.
    fn random_conv(rng: &mut ChaCha8Rng, d: usize, g: i64, a_star: f64) -> ConvolutionVector {
        let cube = SiteSet::cube(&vec![0; d], &vec![g; d]);
        let zero = Site::zero(d);
        let raw: Vec<(Site, f64)> = cube
            .iter()
            .filter(|k| **k != zero)
            .map(|k| (k.clone(), rng.random_range(-1.0..1.0)))
            .collect();
        let total: f64 = raw.iter().map(|(_, v)| v.abs()).sum();
        let mut entries = vec![(zero, 1.0)];
        entries.extend(raw.into_iter().map(|(k, v)| (k, v * a_star / total)));
        ConvolutionVector::new(entries).unwrap()
    }

    /// Random linear extension by repeatedly choosing a minimal remaining site.
    fn random_extension(rng: &mut ChaCha8Rng, sites: &[Site]) -> Vec<usize> {
        let mut remaining: Vec<usize> = (0..sites.len()).collect();
        let mut order = Vec::new();
        while !remaining.is_empty() {
            let minimal: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    !remaining
                        .iter()
                        .any(|&k| k != i && sites[i].dominates(&sites[k]))
                })
                .collect();
            let pick = minimal[rng.random_range(0..minimal.len())];
            order.push(pick);
            remaining.retain(|&i| i != pick);
        }
        order
    }

    #[test]
    fn conv_vector_validation() {
        assert!(ConvolutionVector::from_1d(&[0.5, 0.1]).is_err());
        assert!(ConvolutionVector::new(vec![(Site::new([1]), 1.0)]).is_err());
        assert!(ConvolutionVector::new(vec![(Site::new([0]), 1.0), (Site::new([-1]), 0.2)]).is_err());
        let c = ConvolutionVector::new(vec![(Site::new([0, 0]), 1.0), (Site::new([0, 2]), 0.3)]).unwrap();
        assert_eq!(c.cube_side(), 2);
        assert_eq!(c.padded().len(), 9);
        assert!((c.a_star() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn identity_convolution() {
        let sys = build_system(&ConvolutionVector::delta(2), &SiteSet::cube(&[0, 0], &[2, 2])).unwrap();
        assert_eq!(sys.a, DMatrix::identity(9, 9));
        assert_eq!(sys.b, DMatrix::identity(9, 9));
        assert_eq!(column_sum_norm(&sys.b), 1.0);
    }

    #[test]
    fn bidiagonal_inverse_is_geometric() {
        // Λ⁺ = {−1, …, 3} has 5 sites
        let sys = build_system(&bidiagonal(), &line(4)).unwrap();
        assert_eq!(sys.len(), 5);
        let oracle = sys.a.clone().try_inverse().unwrap();
        for j in 0..5 {
            for k in 0..5 {
                let expected = if j >= k { 0.5f64.powi((j - k) as i32) } else { 0.0 };
                assert!((sys.b[(j, k)] - expected).abs() < 1e-15);
                assert!((oracle[(j, k)] - expected).abs() < 1e-12);
            }
        }
        let det = cone_determinant(&sys.a, sys.sites.sites()).unwrap();
        assert_eq!(det, 1.0);
        // column sums Σ_{m<n} 0.5^m, the first column has all five terms
        let norm = column_sum_norm(&sys.b);
        assert!((norm - (2.0 - 0.5f64.powi(4))).abs() < 1e-14);
        assert!(norm < sys.norm_bound());
    }

    #[test]
    fn inadmissible_vector_is_rejected() {
        let c = ConvolutionVector::from_1d(&[1.0, -0.6, 0.5]).unwrap();
        assert!(matches!(build_system(&c, &line(3)), Err(LabError::Precondition(_))));
    }

    #[test]
    fn triangularity_violation_is_detected() {
        let sites = line(3);
        let mut a = DMatrix::identity(3, 3);
        a[(0, 2)] = 0.1;
        let order: Vec<usize> = (0..3).collect();
        assert!(matches!(
            invert_by_substitution(&a, sites.sites(), &order),
            Err(LabError::Contract(_))
        ));
        a[(0, 2)] = 0.0;
        a[(1, 1)] = 2.0;
        assert!(matches!(
            invert_by_substitution(&a, sites.sites(), &order),
            Err(LabError::Contract(_))
        ));
    }

    #[test]
    fn substitution_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let d = 1 + trial % 2;
            let g = 1 + (trial % 3) as i64;
            let side = if d == 1 { 150 } else { 11 };
            let a_star = rng.random_range(0.1..0.9);
            let conv = random_conv(&mut rng, d, g, a_star);
            let cells = SiteSet::cube(&vec![0; d], &vec![side - 1; d]);
            let sys = build_system(&conv, &cells).unwrap();
            assert!(sys.len() <= 200);
            let lu = sys.a.clone().lu();
            let oracle = lu.try_inverse().unwrap();
            let diff = (&sys.b - &oracle).abs().max();
            assert!(diff < 1e-8, "trial {trial}: {diff}");
            assert!(sys.inverse_residual() < 1e-10);
        }
    }

    #[test]
    fn any_linear_extension_gives_same_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let conv = random_conv(&mut rng, 2, 1, 0.7);
        let sys = build_system(&conv, &SiteSet::cube(&[0, 0], &[4, 4])).unwrap();
        for _ in 0..5 {
            let order = random_extension(&mut rng, sys.sites.sites());
            assert!(is_linear_extension(sys.sites.sites(), &order));
            let b = invert_by_substitution(&sys.a, sys.sites.sites(), &order).unwrap();
            assert!((&b - &sys.b).abs().max() <= 1e-10);
        }
        let bad: Vec<usize> = linear_extension(sys.sites.sites()).into_iter().rev().collect();
        assert!(invert_by_substitution(&sys.a, sys.sites.sites(), &bad).is_err());
    }

    #[test]
    fn determinant_of_non_toeplitz_cone_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sites = SiteSet::cube(&[0, 0], &[3, 2]);
        let n = sites.len();
        for _ in 0..10 {
            let a = DMatrix::from_fn(n, n, |j, k| {
                if j == k {
                    rng.random_range(0.5..1.5)
                } else if sites.get(j).dominates(sites.get(k)) {
                    rng.random_range(-1.0..1.0)
                } else {
                    0.0
                }
            });
            let prod = cone_determinant(&a, sites.sites()).unwrap();
            let generic = a.clone().determinant();
            assert!((prod - generic).abs() <= 1e-8 * prod.abs().max(1.0));
        }
    }

    #[test]
    fn norm_bound_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..100 {
            let d = 1 + i % 2;
            let a_star = 0.1 * (1 + i % 9) as f64;
            let conv = random_conv(&mut rng, d, 1 + (i % 2) as i64, a_star);
            let side = if d == 1 { 30 } else { 6 };
            let sys = build_system(&conv, &SiteSet::cube(&vec![0; d], &vec![side - 1; d])).unwrap();
            assert!(column_sum_norm(&sys.b) <= sys.norm_bound() + 1e-10);
        }
    }

    #[test]
    fn transform_examples() {
        let sys = build_system(&bidiagonal(), &line(2)).unwrap();
        assert_eq!(sys.transform(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        let eta = sys.transform(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(eta, vec![1.0, 0.5, 0.5]);
        let id = build_system(&ConvolutionVector::delta(1), &line(3)).unwrap();
        assert_eq!(id.transform(&[0.3, 0.2, 0.1]).unwrap(), vec![0.3, 0.2, 0.1]);
        assert!(sys.transform(&[1.0]).is_err());
    }

    #[test]
    fn split_partitions_lambda_plus() {
        let sys = build_system(&ConvolutionVector::delta(2), &SiteSet::cube(&[0, 0], &[2, 2])).unwrap();
        let eta: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let pivot = sys.sites.position(&Site::new([1, 1])).unwrap();
        let split = sys.split(&eta, pivot);
        assert_eq!(split.greater.len(), 3);
        assert_eq!(split.less.len(), 5);
        let mut all = split.concatenated();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, eta);
    }

    #[test]
    fn cell_representation_examples() {
        let site = SingleSite::step(bidiagonal());
        let cfg = ModelConfig::new(1, 8, BoundaryCondition::Dirichlet, site, 1.0).unwrap();
        assert_eq!(verify_cell_representation(&cfg, &DisorderSample::zero(&cfg)).unwrap(), 0.0);
        let s = sample_disorder(&cfg, 9, 0).unwrap();
        assert!(verify_cell_representation(&cfg, &s).unwrap() <= 1e-10);

        let conv2 = ConvolutionVector::new(vec![
            (Site::new([0, 0]), 1.0),
            (Site::new([0, 1]), 0.2),
            (Site::new([1, 0]), -0.3),
            (Site::new([1, 1]), 0.1),
        ])
        .unwrap();
        let cfg2 = ModelConfig::new(2, 4, BoundaryCondition::Periodic, SingleSite::step(conv2), 2.0).unwrap();
        let s2 = sample_disorder(&cfg2, 9, 1).unwrap();
        assert!(verify_cell_representation(&cfg2, &s2).unwrap() <= 1e-10);

        let bumpy = SingleSite::new(bidiagonal(), 1.0, Some(vec![1.0, 2.0])).unwrap();
        let cfg3 = ModelConfig {
            d: 1,
            l: 4,
            bc: BoundaryCondition::Dirichlet,
            r: 2,
            v0: vec![0.0; 2],
            site: bumpy,
            omega_plus: 1.0,
        };
        let s3 = sample_disorder(&cfg3, 1, 0).unwrap();
        assert!(matches!(verify_cell_representation(&cfg3, &s3), Err(LabError::Precondition(_))));
    }

    #[test]
    fn symbol_examples() {
        let pi = std::f64::consts::PI;
        let delta = ConvolutionVector::delta(2);
        assert_eq!(symbol_eval(&delta, &[0.3, -1.2]), Complex64::new(1.0, 0.0));
        let c = bidiagonal();
        for p in symbol_sweep(&c, &[1.0], 101) {
            let direct = Complex64::new(1.0, 0.0) - 0.5 * Complex64::from_polar(1.0, p.theta);
            assert!((p.value - direct).norm() < 1e-14);
            assert!(p.value.norm() >= 0.5 - 1e-14 && p.value.norm() <= 1.5 + 1e-14);
        }
        assert!((symbol_eval(&c, &[pi]).re - 1.5).abs() < 1e-14);
    }

    #[test]
    fn nu_stays_above_diagonal_dominance_bound() {
        let id = nu_trend(&ConvolutionVector::delta(1), &[1, 5, 9]).unwrap();
        assert!(id.iter().all(|(_, nu)| (nu - 1.0).abs() < 1e-12));
        let trend = nu_trend(&bidiagonal(), &[1, 2, 4, 8, 16, 32, 64]).unwrap();
        for (l, nu) in trend {
            assert!(nu >= 0.5 - 1e-10, "l = {l}: {nu}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn inverse_keeps_cone_support(seed in any::<u64>(), d in 1usize..=2, a_star in 0.05f64..0.95) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let conv = random_conv(&mut rng, d, 1, a_star);
            let side = if d == 1 { 10 } else { 4 };
            let sys = build_system(&conv, &SiteSet::cube(&vec![0; d], &vec![side - 1; d])).unwrap();
            for j in 0..sys.len() {
                prop_assert_eq!(sys.b[(j, j)], 1.0);
                for k in 0..sys.len() {
                    if sys.b[(j, k)] != 0.0 {
                        prop_assert!(sys.sites.get(j).dominates(sys.sites.get(k)));
                    }
                }
            }
            let omega: Vec<f64> = (0..sys.len()).map(|_| rng.random::<f64>()).collect();
            let back = sys.inverse_transform(&sys.transform(&omega).unwrap()).unwrap();
            for (x, y) in omega.iter().zip(&back) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }
    }
}
