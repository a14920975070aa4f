//! The discretized alloy-type operator `H = −Δ_h + V_0 + V_ω` on a box.
//!
//! Grid nodes are cell centred: a box of side `l` with refinement `r` has
//! `r·l` nodes per axis at positions `(i + 1/2)/r`, so every node lies in
//! exactly one unit cell. Flattened node indices are row-major with the
//! last coordinate running fastest.

use std::io::Write;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, LabError, Result};
use crate::lattice::{Site, SiteSet};
use crate::toeplitz::ConvolutionVector;

/// Default cap on the Hamiltonian dimension, overridable through the
/// `WEGNER_MAX_DIM` environment variable.
pub const DEFAULT_MAX_DIM: usize = 4096;

pub const MAX_DIM_ENV: &str = "WEGNER_MAX_DIM";

pub fn max_dimension() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(MAX_DIM_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_DIM)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Periodic,
}

impl BoundaryCondition {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Periodic => "periodic",
        }
    }
}

/// Generalized step function `u = Σ_{γ∈Γ} a_γ w(· − γ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleSite {
    pub conv: ConvolutionVector,
    pub kappa: f64,
    /// Samples of the base bump on one unit cell (`r^d` values). `None`
    /// means the step bump `κ·χ_[0,1]^d`.
    pub w: Option<Vec<f64>>,
}

impl SingleSite {
    pub fn new(conv: ConvolutionVector, kappa: f64, w: Option<Vec<f64>>) -> Result<Self> {
        let s = SingleSite { conv, kappa, w };
        s.validate()?;
        Ok(s)
    }

    /// Step bump with `κ = 1`.
    pub fn step(conv: ConvolutionVector) -> Self {
        SingleSite {
            conv,
            kappa: 1.0,
            w: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(precondition(format!("kappa must be positive, got {}", self.kappa)));
        }
        let a_star = self.conv.a_star();
        if a_star >= 1.0 {
            return Err(precondition(format!(
                "convolution vector not admissible: a* = {a_star} >= 1"
            )));
        }
        if let Some(w) = &self.w {
            if w.iter().any(|v| !v.is_finite() || *v < self.kappa) {
                return Err(precondition("bump samples must satisfy w >= kappa on the unit cell"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.conv.dim()
    }

    pub fn a_star(&self) -> f64 {
        self.conv.a_star()
    }

    /// True for the step bump: `w` absent or constant.
    pub fn is_step(&self) -> bool {
        match &self.w {
            None => true,
            Some(w) => w.windows(2).all(|p| p[0] == p[1]),
        }
    }

    /// Height of a step bump.
    pub fn step_height(&self) -> Option<f64> {
        match &self.w {
            None => Some(self.kappa),
            Some(w) if self.is_step() => w.first().copied(),
            _ => None,
        }
    }

    /// `u ≥ 0` everywhere.
    pub fn is_sign_definite(&self) -> bool {
        self.conv.is_nonnegative()
    }

    /// Bump values on the `r^d` sub-nodes of the unit cell.
    pub fn bump_samples(&self, nodes_per_cell: usize) -> Result<Vec<f64>> {
        match &self.w {
            None => Ok(vec![self.kappa; nodes_per_cell]),
            Some(w) if w.len() == nodes_per_cell => Ok(w.clone()),
            Some(w) => Err(LabError::Config(format!(
                "w has {} samples, expected r^d = {nodes_per_cell}",
                w.len()
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub d: usize,
    pub l: usize,
    pub bc: BoundaryCondition,
    pub r: usize,
    /// Periodic background potential on one unit cell (`r^d` values).
    pub v0: Vec<f64>,
    pub site: SingleSite,
    pub omega_plus: f64,
}

impl ModelConfig {
    /// Config with `r = 1`, zero background and the given site.
    pub fn new(d: usize, l: usize, bc: BoundaryCondition, site: SingleSite, omega_plus: f64) -> Result<Self> {
        let cfg = ModelConfig {
            d,
            l,
            bc,
            r: 1,
            v0: vec![0.0],
            site,
            omega_plus,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return Err(LabError::Config(format!("d must be 1, 2 or 3, got {}", self.d)));
        }
        if self.l < 1 {
            return Err(LabError::Config("l must be at least 1".into()));
        }
        if self.r < 1 {
            return Err(LabError::Config("r must be at least 1".into()));
        }
        if !(self.omega_plus > 0.0) || !self.omega_plus.is_finite() {
            return Err(LabError::Config(format!(
                "omega_plus must be positive, got {}",
                self.omega_plus
            )));
        }
        if self.site.dim() != self.d {
            return Err(LabError::Config(format!(
                "gamma has dimension {} but d = {}",
                self.site.dim(),
                self.d
            )));
        }
        if self.v0.len() != self.nodes_per_cell() {
            return Err(LabError::Config(format!(
                "v0 has {} samples, expected r^d = {}",
                self.v0.len(),
                self.nodes_per_cell()
            )));
        }
        if self.v0.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Config("v0 contains non-finite values".into()));
        }
        self.site.validate()?;
        self.site.bump_samples(self.nodes_per_cell())?;
        Ok(())
    }

    pub fn with_l(&self, l: usize) -> Self {
        ModelConfig { l, ..self.clone() }
    }

    pub fn with_bc(&self, bc: BoundaryCondition) -> Self {
        ModelConfig { bc, ..self.clone() }
    }

    pub fn with_omega_plus(&self, omega_plus: f64) -> Self {
        ModelConfig {
            omega_plus,
            ..self.clone()
        }
    }

    pub fn mesh_width(&self) -> f64 {
        1.0 / self.r as f64
    }

    pub fn nodes_per_side(&self) -> usize {
        self.r * self.l
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.r.pow(self.d as u32)
    }

    /// Number of grid nodes, i.e. the Hamiltonian dimension.
    pub fn dimension(&self) -> usize {
        self.nodes_per_side().pow(self.d as u32)
    }

    /// Box volume `l^d`.
    pub fn volume(&self) -> f64 {
        (self.l as f64).powi(self.d as i32)
    }

    /// Unit cells of the box, `{0, …, l−1}^d`.
    pub fn cells(&self) -> SiteSet {
        SiteSet::cube(&vec![0; self.d], &vec![self.l as i64 - 1; self.d])
    }

    /// Sites whose coupling constant influences the potential in the box:
    /// the cells shifted by the cube that encloses `Γ`.
    pub fn lambda_plus(&self) -> SiteSet {
        let g = self.site.conv.cube_side() as i64;
        SiteSet::cube(&vec![-g; self.d], &vec![self.l as i64 - 1; self.d])
    }

    pub fn node_coords(&self, node: usize) -> Vec<usize> {
        let n = self.nodes_per_side();
        let mut coords = vec![0; self.d];
        let mut rem = node;
        for c in coords.iter_mut().rev() {
            *c = rem % n;
            rem /= n;
        }
        coords
    }

    pub fn node_index(&self, coords: &[usize]) -> usize {
        let n = self.nodes_per_side();
        coords.iter().fold(0, |acc, &c| acc * n + c)
    }

    /// Unit cell containing a node.
    pub fn node_cell(&self, node: usize) -> Site {
        Site(
            self.node_coords(node)
                .iter()
                .map(|&c| (c / self.r) as i64)
                .collect(),
        )
    }

    /// Index of a node inside its cell, in `0..r^d`.
    pub fn node_sub(&self, node: usize) -> usize {
        self.node_coords(node)
            .iter()
            .fold(0, |acc, &c| acc * self.r + c % self.r)
    }

    /// Flattened indices of the `r^d` nodes of a cell (in sub-index order).
    pub fn cell_nodes(&self, cell: &Site) -> Vec<usize> {
        let subs = crate::lattice::cube_sites(&vec![0; self.d], &vec![self.r as i64 - 1; self.d]);
        subs.iter()
            .map(|s| {
                let coords: Vec<usize> = cell
                    .0
                    .iter()
                    .zip(&s.0)
                    .map(|(&c, &o)| c as usize * self.r + o as usize)
                    .collect();
                self.node_index(&coords)
            })
            .collect()
    }

    pub fn in_box(&self, cell: &Site) -> bool {
        cell.0.iter().all(|&c| c >= 0 && c < self.l as i64)
    }
}

/// One draw of the coupling constants over `Λ⁺`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderSample {
    pub lambda_plus: SiteSet,
    pub omega: Vec<f64>,
    pub seed: u64,
    pub index: u64,
}

impl DisorderSample {
    pub fn zero(config: &ModelConfig) -> Self {
        let lambda_plus = config.lambda_plus();
        DisorderSample {
            omega: vec![0.0; lambda_plus.len()],
            lambda_plus,
            seed: 0,
            index: 0,
        }
    }

    pub fn from_values(config: &ModelConfig, omega: Vec<f64>) -> Result<Self> {
        let lambda_plus = config.lambda_plus();
        if omega.len() != lambda_plus.len() {
            return Err(LabError::Config(format!(
                "omega has {} entries, lambda_plus has {}",
                omega.len(),
                lambda_plus.len()
            )));
        }
        Ok(DisorderSample {
            lambda_plus,
            omega,
            seed: 0,
            index: 0,
        })
    }

    pub fn value(&self, site: &Site) -> Option<f64> {
        self.lambda_plus.position(site).map(|i| self.omega[i])
    }

    /// Same field restricted to a smaller index set.
    pub fn restrict(&self, target: &SiteSet) -> Result<Self> {
        let omega = target
            .iter()
            .map(|s| {
                self.value(s)
                    .ok_or_else(|| LabError::Config(format!("site {s:?} not covered by the sample")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DisorderSample {
            lambda_plus: target.clone(),
            omega,
            seed: self.seed,
            index: self.index,
        })
    }
}

/// Per-sample random stream derived from `(seed, index)` only.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// I.i.d. uniform couplings on `[0, ω_+]`, one per site of `Λ⁺`.
pub fn sample_disorder(config: &ModelConfig, seed: u64, index: u64) -> Result<DisorderSample> {
    config.validate()?;
    let lambda_plus = config.lambda_plus();
    let mut rng = sample_rng(seed, index);
    let omega = (0..lambda_plus.len())
        .map(|_| rng.random::<f64>() * config.omega_plus)
        .collect();
    Ok(DisorderSample {
        lambda_plus,
        omega,
        seed,
        index,
    })
}

/// `V_ω(x) = Σ_{k∈Λ⁺} ω_k u(x − k)` on every grid node, summed directly
/// over sites and the support of the convolution vector.
pub fn assemble_potential(config: &ModelConfig, sample: &DisorderSample) -> Result<Vec<f64>> {
    config.validate()?;
    if sample.lambda_plus != config.lambda_plus() {
        return Err(LabError::Config(
            "disorder sample is not indexed by the lambda_plus of this config".into(),
        ));
    }
    let bump = config.site.bump_samples(config.nodes_per_cell())?;
    let mut v = vec![0.0; config.dimension()];
    for (k, &w_k) in sample.lambda_plus.iter().zip(&sample.omega) {
        for (gamma, a) in config.site.conv.entries() {
            let cell = k.add(gamma);
            if !config.in_box(&cell) {
                continue;
            }
            for (node, b) in config.cell_nodes(&cell).into_iter().zip(&bump) {
                v[node] += w_k * a * b;
            }
        }
    }
    Ok(v)
}

/// Sparse symmetric matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Hamiltonian {
    /// Builds the matrix from triplets, summing duplicates.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < dim && j < dim, "triplet out of range");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Hamiltonian {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map(|(_, v)| v).unwrap_or(0.0)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.dim)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `max |H_ij − H_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .into_iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Interval `[min_i (H_ii − R_i), max_i (H_ii + R_i)]` containing the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for (j, v) in self.row(i) {
                if i == j {
                    diag += v;
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        (lo, hi)
    }

    /// `H + diag(extra)`.
    pub fn add_diagonal(&self, extra: &[f64]) -> Self {
        assert_eq!(extra.len(), self.dim);
        let mut t = self.triplets();
        t.extend(extra.iter().enumerate().map(|(i, &v)| (i, i, v)));
        Self::from_triplets(self.dim, t)
    }

    /// Principal submatrix on the given indices (Dirichlet restriction for a
    /// finite-difference operator).
    pub fn principal_submatrix(&self, indices: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.dim];
        for (new, &old) in indices.iter().enumerate() {
            map[old] = new;
        }
        let mut t = Vec::new();
        for (new_i, &old_i) in indices.iter().enumerate() {
            for (old_j, v) in self.row(old_i) {
                if map[old_j] != usize::MAX {
                    t.push((new_i, map[old_j], v));
                }
            }
        }
        Self::from_triplets(indices.len(), t)
    }

    /// Coordinate triplets `row,col,value`, one per line.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# row,col,value")?;
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i},{j},{v:e}")?;
        }
        Ok(())
    }
}

fn check_dimension(config: &ModelConfig) -> Result<()> {
    let dim = config.dimension();
    let cap = max_dimension();
    if dim > cap {
        return Err(LabError::Resource(format!(
            "matrix dimension {dim} exceeds cap {cap} (set {MAX_DIM_ENV} to raise it)"
        )));
    }
    Ok(())
}

/// `−Δ_h` with the configured boundary rule.
pub fn assemble_laplacian(config: &ModelConfig) -> Result<Hamiltonian> {
    config.validate()?;
    check_dimension(config)?;
    let n = config.nodes_per_side();
    let dim = config.dimension();
    let inv_h2 = (config.r * config.r) as f64;
    let mut t = Vec::with_capacity(dim * (2 * config.d + 1));
    for node in 0..dim {
        let coords = config.node_coords(node);
        t.push((node, node, 2.0 * config.d as f64 * inv_h2));
        for axis in 0..config.d {
            for step in [-1i64, 1] {
                let c = coords[axis] as i64 + step;
                if c >= 0 && c < n as i64 {
                    let mut nb = coords.clone();
                    nb[axis] = c as usize;
                    t.push((node, config.node_index(&nb), -inv_h2));
                    continue;
                }
                match config.bc {
                    BoundaryCondition::Dirichlet => {}
                    // mirror ghost node carries the boundary value itself
                    BoundaryCondition::Neumann => t.push((node, node, -inv_h2)),
                    BoundaryCondition::Periodic => {
                        let mut nb = coords.clone();
                        nb[axis] = c.rem_euclid(n as i64) as usize;
                        t.push((node, config.node_index(&nb), -inv_h2));
                    }
                }
            }
        }
    }
    Ok(Hamiltonian::from_triplets(dim, t))
}

/// Background potential `V_0` on every node.
pub fn background_potential(config: &ModelConfig) -> Vec<f64> {
    (0..config.dimension())
        .map(|node| config.v0[config.node_sub(node)])
        .collect()
}

/// `H_0 = −Δ_h + V_0`.
pub fn assemble_free(config: &ModelConfig) -> Result<Hamiltonian> {
    let lap = assemble_laplacian(config)?;
    Ok(lap.add_diagonal(&background_potential(config)))
}

/// `H_0 + V` for an explicit grid potential `V`.
pub fn assemble_with_potential(config: &ModelConfig, v: &[f64]) -> Result<Hamiltonian> {
    if v.len() != config.dimension() {
        return Err(LabError::Config(format!(
            "potential has {} values, grid has {}",
            v.len(),
            config.dimension()
        )));
    }
    let v0 = background_potential(config);
    let total: Vec<f64> = v0.iter().zip(v).map(|(a, b)| a + b).collect();
    Ok(assemble_laplacian(config)?.add_diagonal(&total))
}

/// `H_ω = −Δ_h + V_0 + V_ω`.
pub fn assemble_hamiltonian(config: &ModelConfig, sample: &DisorderSample) -> Result<Hamiltonian> {
    check_dimension(config)?;
    let v = assemble_potential(config, sample)?;
    assemble_with_potential(config, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn bidiagonal() -> ConvolutionVector {
        ConvolutionVector::new(vec![(Site::new([0]), 1.0), (Site::new([1]), -0.5)]).unwrap()
    }

    fn cfg_1d(l: usize, bc: BoundaryCondition) -> ModelConfig {
        ModelConfig::new(1, l, bc, SingleSite::step(bidiagonal()), 1.0).unwrap()
    }

    fn sorted_eigs(h: &Hamiltonian) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(h.to_dense()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn samples_in_range_and_deterministic() {
        let cfg = cfg_1d(20, BoundaryCondition::Dirichlet);
        let a = sample_disorder(&cfg, 7, 3).unwrap();
        let b = sample_disorder(&cfg, 7, 3).unwrap();
        assert_eq!(a.omega, b.omega);
        assert!(a.omega.iter().all(|&w| (0.0..=1.0).contains(&w)));
        let c = sample_disorder(&cfg, 7, 4).unwrap();
        assert_ne!(a.omega, c.omega);
    }

    #[test]
    fn sample_mean_within_clt_band() {
        // 10^5 uniforms: sd of the mean is sqrt(1/12/1e5) ≈ 9.1e-4, the
        // ±0.005 band is more than 5 sd wide
        let cfg = cfg_1d(99_999, BoundaryCondition::Dirichlet);
        let s = sample_disorder(&cfg, 2024, 0).unwrap();
        assert_eq!(s.omega.len(), 100_000);
        let mean = s.omega.iter().sum::<f64>() / s.omega.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn zero_disorder_gives_zero_potential() {
        let cfg = cfg_1d(6, BoundaryCondition::Periodic);
        let v = assemble_potential(&cfg, &DisorderSample::zero(&cfg)).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bidiagonal_cell_values() {
        // cell j receives ω_j·a_0 from site j and ω_{j-1}·a_1 from site j−1
        let cfg = cfg_1d(5, BoundaryCondition::Dirichlet);
        let lp = cfg.lambda_plus();
        let omega: Vec<f64> = (0..lp.len()).map(|i| 0.1 * (i as f64 + 1.0)).collect();
        let s = DisorderSample::from_values(&cfg, omega).unwrap();
        let v = assemble_potential(&cfg, &s).unwrap();
        for j in 0..5i64 {
            let here = s.value(&Site::new([j])).unwrap();
            let prev = s.value(&Site::new([j - 1])).unwrap();
            assert!((v[j as usize] - (here - 0.5 * prev)).abs() < 1e-15);
        }
        let ones = DisorderSample::from_values(&cfg, vec![1.0; lp.len()]).unwrap();
        let v1 = assemble_potential(&cfg, &ones).unwrap();
        assert!(v1.iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn mismatched_sample_is_rejected() {
        let cfg = cfg_1d(5, BoundaryCondition::Dirichlet);
        let other = cfg_1d(6, BoundaryCondition::Dirichlet);
        let s = DisorderSample::zero(&other);
        assert!(matches!(assemble_potential(&cfg, &s), Err(LabError::Config(_))));
    }

    #[test]
    fn dirichlet_path_graph_spectrum() {
        let cfg = cfg_1d(3, BoundaryCondition::Dirichlet);
        let h = assemble_free(&cfg).unwrap();
        let e = sorted_eigs(&h);
        for (m, ev) in e.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((m as f64 + 1.0) * std::f64::consts::PI / 4.0).cos();
            assert!((ev - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_constant_vector_is_ground_state() {
        for d in 1..=2 {
            let conv = ConvolutionVector::delta(d);
            let cfg = ModelConfig::new(d, 4, BoundaryCondition::Periodic, SingleSite::step(conv), 1.0).unwrap();
            let h = assemble_free(&cfg).unwrap();
            let hv = h.matvec(&vec![1.0; h.dim()]);
            assert!(hv.iter().all(|x| x.abs() < 1e-14));
        }
    }

    #[test]
    fn neumann_constant_vector_is_ground_state() {
        let conv = ConvolutionVector::delta(2);
        let mut cfg = ModelConfig::new(2, 3, BoundaryCondition::Neumann, SingleSite::step(conv), 1.0).unwrap();
        cfg.r = 2;
        cfg.v0 = vec![0.0; 4];
        let h = assemble_free(&cfg).unwrap();
        let hv = h.matvec(&vec![1.0; h.dim()]);
        assert!(hv.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn constant_background_shifts_spectrum() {
        let mut cfg = cfg_1d(7, BoundaryCondition::Neumann);
        let s = sample_disorder(&cfg, 1, 0).unwrap();
        let base = sorted_eigs(&assemble_hamiltonian(&cfg, &s).unwrap());
        cfg.v0 = vec![0.75];
        let shifted = sorted_eigs(&assemble_hamiltonian(&cfg, &s).unwrap());
        for (a, b) in base.iter().zip(&shifted) {
            assert!((b - a - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_periodic_boxes() {
        let cfg = cfg_1d(1, BoundaryCondition::Periodic);
        let h = assemble_laplacian(&cfg).unwrap();
        assert_eq!(h.get(0, 0), 0.0);
        let cfg2 = cfg_1d(2, BoundaryCondition::Periodic);
        let h2 = assemble_laplacian(&cfg2).unwrap();
        assert_eq!(h2.get(0, 1), -2.0);
        assert_eq!(h2.get(1, 1), 2.0);
    }

    #[test]
    fn refined_mesh_structure() {
        let conv = ConvolutionVector::delta(2);
        let mut cfg = ModelConfig::new(2, 2, BoundaryCondition::Dirichlet, SingleSite::step(conv), 1.0).unwrap();
        cfg.r = 3;
        cfg.v0 = vec![0.0; 9];
        assert_eq!(cfg.dimension(), 36);
        let h = assemble_laplacian(&cfg).unwrap();
        assert_eq!(h.get(0, 0), 4.0 * 9.0);
        assert_eq!(cfg.node_cell(cfg.node_index(&[4, 2])), Site::new([1, 0]));
        assert_eq!(cfg.node_sub(cfg.node_index(&[4, 2])), 3 + 2);
        let nodes = cfg.cell_nodes(&Site::new([1, 1]));
        assert_eq!(nodes.len(), 9);
        assert!(nodes.iter().all(|&n| cfg.node_cell(n) == Site::new([1, 1])));
    }

    #[test]
    fn general_bump_uses_cell_samples() {
        let conv = ConvolutionVector::delta(1);
        let site = SingleSite::new(conv, 1.0, Some(vec![1.0, 2.0])).unwrap();
        let cfg = ModelConfig {
            d: 1,
            l: 3,
            bc: BoundaryCondition::Dirichlet,
            r: 2,
            v0: vec![0.0, 0.0],
            site,
            omega_plus: 1.0,
        };
        let s = DisorderSample::from_values(&cfg, vec![0.5, 1.0, 0.25]).unwrap();
        let v = assemble_potential(&cfg, &s).unwrap();
        assert_eq!(v, vec![0.5, 1.0, 1.0, 2.0, 0.25, 0.5]);
        assert!(SingleSite::new(ConvolutionVector::delta(1), 1.5, Some(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn resource_cap_is_enforced() {
        let conv = ConvolutionVector::delta(3);
        let cfg = ModelConfig::new(3, 40, BoundaryCondition::Dirichlet, SingleSite::step(conv), 1.0).unwrap();
        assert!(matches!(assemble_laplacian(&cfg), Err(LabError::Resource(_))));
    }

    #[test]
    fn restriction_keeps_values() {
        let big = cfg_1d(12, BoundaryCondition::Dirichlet);
        let small = cfg_1d(8, BoundaryCondition::Dirichlet);
        let s = sample_disorder(&big, 5, 1).unwrap();
        let r = s.restrict(&small.lambda_plus()).unwrap();
        for site in small.lambda_plus().iter() {
            assert_eq!(r.value(site), s.value(site));
        }
    }

    #[test]
    fn triplet_export() {
        let h = assemble_laplacian(&cfg_1d(2, BoundaryCondition::Dirichlet)).unwrap();
        let mut buf = Vec::new();
        h.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.contains("0,1,-1e0"));
    }
}
