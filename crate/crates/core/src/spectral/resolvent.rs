//! Resolvent blocks `χ_X (H − z)^{-1} χ_Y` and the decay diagnostics built
//! on them.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use crate::error::{numerical, precondition, Result};
use crate::lattice::Site;
use crate::model::{Hamiltonian, ModelConfig};
use crate::stats::linear_fit;

/// LU factorization of `H − z` over the complex numbers.
pub struct Resolvent {
    lu: LU<Complex64, Dyn, Dyn>,
    n: usize,
}

impl Resolvent {
    pub fn new(h: &Hamiltonian, z: Complex64) -> Result<Self> {
        let n = h.dim();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for (i, j, v) in h.triplets() {
            m[(i, j)] += Complex64::new(v, 0.0);
        }
        for i in 0..n {
            m[(i, i)] -= z;
        }
        Ok(Resolvent { lu: m.lu(), n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Column `(H − z)^{-1} e_y`.
    pub fn column(&self, y: usize) -> Result<DVector<Complex64>> {
        let mut e = DVector::<Complex64>::zeros(self.n);
        e[y] = Complex64::new(1.0, 0.0);
        self.lu
            .solve(&e)
            .ok_or_else(|| numerical("H − z is singular: z lies on the spectrum"))
    }

    /// Block of the resolvent with the given row and column node sets.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Result<DMatrix<Complex64>> {
        let mut out = DMatrix::<Complex64>::zeros(rows.len(), cols.len());
        for (c, &y) in cols.iter().enumerate() {
            let col = self.column(y)?;
            for (r, &x) in rows.iter().enumerate() {
                out[(r, c)] = col[x];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<DMatrix<Complex64>> {
        self.lu
            .try_inverse()
            .ok_or_else(|| numerical("H − z is singular: z lies on the spectrum"))
    }
}

/// Spectral norm (largest singular value) of a complex block.
pub fn operator_norm(m: &DMatrix<Complex64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 1000)
        .ok_or_else(|| numerical("singular value iteration did not converge"))?;
    Ok(svd.singular_values.iter().copied().fold(0.0, f64::max))
}

/// `‖χ_X (H − z)^{-1} χ_Y‖` for node sets `X`, `Y`.
pub fn resolvent_block_norm(h: &Hamiltonian, z: Complex64, x: &[usize], y: &[usize]) -> Result<f64> {
    let res = Resolvent::new(h, z)?;
    operator_norm(&res.block(x, y)?)
}

/// Physical layout of a box grid.
#[derive(Clone, Debug)]
pub struct BoxGeometry {
    pub d: usize,
    pub nodes_per_side: usize,
    pub mesh_width: f64,
    pub side: f64,
}

pub fn box_geometry(config: &ModelConfig) -> BoxGeometry {
    BoxGeometry {
        d: config.d,
        nodes_per_side: config.nodes_per_side(),
        mesh_width: config.mesh_width(),
        side: config.l as f64,
    }
}

impl BoxGeometry {
    pub fn dimension(&self) -> usize {
        self.nodes_per_side.pow(self.d as u32)
    }

    pub fn position(&self, node: usize) -> Vec<f64> {
        let mut pos = vec![0.0; self.d];
        let mut rem = node;
        for p in pos.iter_mut().rev() {
            *p = ((rem % self.nodes_per_side) as f64 + 0.5) * self.mesh_width;
            rem /= self.nodes_per_side;
        }
        pos
    }

    pub fn boundary_distance(&self, node: usize) -> f64 {
        self.position(node)
            .iter()
            .map(|&x| x.min(self.side - x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Nodes within `width` of the boundary.
    pub fn collar(&self, width: f64) -> Vec<usize> {
        (0..self.dimension())
            .filter(|&n| self.boundary_distance(n) < width)
            .collect()
    }

    /// Nodes with `‖x − centre‖_∞ ≤ half_width`.
    pub fn central_cube(&self, half_width: f64) -> Vec<usize> {
        let c = self.side / 2.0;
        (0..self.dimension())
            .filter(|&n| self.position(n).iter().all(|&x| (x - c).abs() <= half_width + 1e-12))
            .collect()
    }
}

/// Two node sets at a known separation.
#[derive(Clone, Debug, PartialEq)]
pub struct SitePair {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub separation: f64,
}

/// Unit cells `anchor` and `anchor + s·e_1` for `s = 1..=max_sep` (those
/// inside the box).
pub fn axis_pairs(config: &ModelConfig, anchor: &Site, max_sep: usize) -> Vec<SitePair> {
    let x = config.cell_nodes(anchor);
    (1..=max_sep)
        .filter_map(|s| {
            let mut c = anchor.clone();
            c.0[0] += s as i64;
            config.in_box(&c).then(|| SitePair {
                x: x.clone(),
                y: config.cell_nodes(&c),
                separation: s as f64,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CombesThomasFit {
    /// Decay rate `−d log‖·‖ / d|x − y|`.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(separation, log norm)` for each pair.
    pub points: Vec<(f64, f64)>,
}

impl CombesThomasFit {
    pub fn prediction(&self, separation: f64) -> f64 {
        self.intercept - self.rate * separation
    }
}

/// Least-squares fit of `log ‖χ_x R(z) χ_y‖` against `|x − y|`.
pub fn combes_thomas_fit(h: &Hamiltonian, z: Complex64, pairs: &[SitePair]) -> Result<CombesThomasFit> {
    if pairs.len() < 3 {
        return Err(precondition(format!(
            "a decay fit needs at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    let res = Resolvent::new(h, z)?;
    let needed: BTreeSet<usize> = pairs.iter().flat_map(|p| p.y.iter().copied()).collect();
    let mut columns = std::collections::HashMap::new();
    for y in needed {
        columns.insert(y, res.column(y)?);
    }
    let mut points = Vec::with_capacity(pairs.len());
    for p in pairs {
        let block = DMatrix::from_fn(p.x.len(), p.y.len(), |r, c| columns[&p.y[c]][p.x[r]]);
        let norm = operator_norm(&block)?;
        if !(norm > 0.0) {
            return Err(numerical(format!(
                "resolvent block vanishes at separation {}",
                p.separation
            )));
        }
        points.push((p.separation, norm.ln()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| precondition("pairs need at least two distinct separations"))?;
    Ok(CombesThomasFit {
        rate: -fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points,
    })
}

/// Parameters of the box regularity test.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityProbe {
    /// Box side (length units).
    pub l: f64,
    /// Decay mass per unit length.
    pub m: f64,
    /// Collar width parameter; the collar has width `2δ`.
    pub delta: f64,
    /// Imaginary shifts standing in for the supremum over `ε ≠ 0`.
    pub epsilons: Vec<f64>,
}

impl RegularityProbe {
    pub fn new(l: f64, m: f64, delta: f64) -> Self {
        RegularityProbe {
            l,
            m,
            delta,
            epsilons: vec![1e-1, 1e-2, 1e-3],
        }
    }

    pub fn threshold(&self) -> f64 {
        (-self.m * self.l).exp()
    }

    fn validate(&self, geometry: &BoxGeometry) -> Result<()> {
        if !(self.m > 0.0) {
            return Err(precondition("regularity mass must be positive"));
        }
        if self.delta < geometry.mesh_width {
            return Err(precondition("collar parameter must be at least one grid unit"));
        }
        if !(2.0 * self.delta < self.l / 3.0) {
            return Err(precondition("collar too wide: need 2δ < l/3"));
        }
        if (self.l - geometry.side).abs() > 1e-12 {
            return Err(precondition("probe side does not match the box"));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| *e == 0.0) {
            return Err(precondition("need a nonempty grid of nonzero imaginary shifts"));
        }
        Ok(())
    }
}

/// `max_ε ‖χ_collar (H − E − iε)^{-1} χ_{l/3}‖` over the probe's shifts.
pub fn regularity_norm(h: &Hamiltonian, geometry: &BoxGeometry, e: f64, probe: &RegularityProbe) -> Result<f64> {
    probe.validate(geometry)?;
    let collar = geometry.collar(2.0 * probe.delta);
    let centre = geometry.central_cube(probe.l / 6.0);
    let mut worst: f64 = 0.0;
    for &eps in &probe.epsilons {
        let res = Resolvent::new(h, Complex64::new(e, eps))?;
        worst = worst.max(operator_norm(&res.block(&collar, &centre)?)?);
    }
    Ok(worst)
}

/// Whether the box passes the regularity test at energy `E`.
pub fn m_regular(h: &Hamiltonian, geometry: &BoxGeometry, e: f64, probe: &RegularityProbe) -> Result<bool> {
    Ok(regularity_norm(h, geometry, e, probe)? <= probe.threshold())
}

/// Max-entry residual of
/// `φ (H' − z)^{-1} = (H_Λ − z)^{-1} φ + (H_Λ − z)^{-1} W(φ) (H' − z)^{-1}`
/// with `H_Λ` the Dirichlet restriction of `outer` to `inner` and
/// `W(φ) = [H', φ]`.
pub fn geometric_resolvent_residual(outer: &Hamiltonian, inner: &[usize], phi: &[f64], z: Complex64) -> Result<f64> {
    let n = outer.dim();
    if phi.len() != n {
        return Err(precondition("cutoff must be a grid function on the outer box"));
    }
    let mut in_inner = vec![false; n];
    for &i in inner {
        if i >= n {
            return Err(precondition("inner box node out of range"));
        }
        in_inner[i] = true;
    }
    for (i, &p) in phi.iter().enumerate() {
        if p != 0.0 && (!in_inner[i] || outer.row(i).any(|(j, _)| !in_inner[j])) {
            return Err(precondition(format!(
                "cutoff support must stay strictly inside the inner box (node {i})"
            )));
        }
    }

    let g_outer = Resolvent::new(outer, z)?.inverse()?;
    let inner_h = outer.principal_submatrix(inner);
    let g_inner_small = Resolvent::new(&inner_h, z)?.inverse()?;
    let mut g_inner = DMatrix::<Complex64>::zeros(n, n);
    for (a, &i) in inner.iter().enumerate() {
        for (b, &j) in inner.iter().enumerate() {
            g_inner[(i, j)] = g_inner_small[(a, b)];
        }
    }

    let h = outer.to_dense();
    let mut w = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)] * (phi[j] - phi[i]);
            w[(i, j)] = Complex64::new(v, 0.0);
        }
    }

    let mut lhs = g_outer.clone();
    for (i, mut row) in lhs.row_iter_mut().enumerate() {
        row *= Complex64::new(phi[i], 0.0);
    }
    let mut first = g_inner.clone();
    for (j, mut col) in first.column_iter_mut().enumerate() {
        col *= Complex64::new(phi[j], 0.0);
    }
    let rhs = first + &g_inner * (w * g_outer);
    Ok((lhs - rhs).iter().map(|c| c.norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_free, assemble_hamiltonian, sample_disorder, BoundaryCondition, SingleSite};
    use crate::spectral::{eigenvalues, distance_to_spectrum};
    use crate::toeplitz::ConvolutionVector;

    fn cfg(d: usize, l: usize, bc: BoundaryCondition) -> ModelConfig {
        let conv = if d == 1 {
            ConvolutionVector::from_1d(&[1.0, -0.5]).unwrap()
        } else {
            ConvolutionVector::delta(d)
        };
        ModelConfig::new(d, l, bc, SingleSite::step(conv), 1.0).unwrap()
    }

    fn random_h(c: &ModelConfig, idx: u64) -> Hamiltonian {
        assemble_hamiltonian(c, &sample_disorder(c, 77, idx).unwrap()).unwrap()
    }

    #[test]
    fn full_block_norm_is_inverse_distance() {
        let c = cfg(1, 20, BoundaryCondition::Periodic);
        let h = random_h(&c, 0);
        let spec = eigenvalues(&h);
        let all: Vec<usize> = (0..h.dim()).collect();
        for z in [Complex64::new(1.1, 0.05), Complex64::new(-1.0, 0.0), Complex64::new(2.0, 0.5)] {
            let norm = resolvent_block_norm(&h, z, &all, &all).unwrap();
            let dist = spec
                .iter()
                .map(|l| (Complex64::new(*l, 0.0) - z).norm())
                .fold(f64::INFINITY, f64::min);
            assert!((norm * dist - 1.0).abs() < 1e-6);
            if z.im != 0.0 {
                assert!(norm <= 1.0 / z.im.abs() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn diagonal_operator_blocks_are_entrywise() {
        let diag = [0.5, -1.0, 2.0, 3.5];
        let h = Hamiltonian::from_triplets(4, diag.iter().enumerate().map(|(i, v)| (i, i, *v)).collect());
        let z = Complex64::new(0.3, 0.2);
        let x = [1, 3];
        let norm = resolvent_block_norm(&h, z, &x, &x).unwrap();
        let exact = x
            .iter()
            .map(|&i| 1.0 / (Complex64::new(diag[i], 0.0) - z).norm())
            .fold(0.0, f64::max);
        assert!((norm - exact).abs() < 1e-14);
        assert_eq!(resolvent_block_norm(&h, z, &[0], &[2]).unwrap(), 0.0);
    }

    #[test]
    fn singular_shift_is_reported() {
        let h = Hamiltonian::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 2.0)]);
        assert!(resolvent_block_norm(&h, Complex64::new(1.0, 0.0), &[0], &[0]).is_err());
    }

    #[test]
    fn combes_thomas_deep_below_spectrum() {
        let c = cfg(1, 64, BoundaryCondition::Dirichlet);
        let h = random_h(&c, 3);
        let floor = eigenvalues(&h)[0];
        let pairs = axis_pairs(&c, &Site::new([8]), 40);
        let mut last_rate = 0.0;
        for gap in [0.5, 1.0, 2.0] {
            let fit = combes_thomas_fit(&h, Complex64::new(floor - gap, 0.0), &pairs).unwrap();
            assert!(fit.r_squared >= 0.9, "R² = {}", fit.r_squared);
            assert!(fit.rate > last_rate);
            last_rate = fit.rate;
        }
        assert!(combes_thomas_fit(&h, Complex64::new(-1.0, 0.0), &pairs[..2]).is_err());
    }

    #[test]
    fn free_decay_rate_matches_lattice_green_function() {
        // free 1D lattice: G(x, y) ∝ e^{−γ|x−y|} with 2cosh γ = 2 − z
        let conv = ConvolutionVector::delta(1);
        let c = ModelConfig::new(1, 80, BoundaryCondition::Dirichlet, SingleSite::step(conv), 1.0).unwrap();
        let h = assemble_free(&c).unwrap();
        let z = Complex64::new(-0.8, 1.5);
        let pairs = axis_pairs(&c, &Site::new([20]), 30);
        let fit = combes_thomas_fit(&h, z, &pairs).unwrap();
        let gamma = ((Complex64::new(2.0, 0.0) - z) / 2.0).acosh();
        assert!((fit.rate - gamma.re.abs()).abs() < 1e-3, "{} vs {}", fit.rate, gamma.re);
    }

    #[test]
    fn regularity_examples() {
        let c = cfg(1, 30, BoundaryCondition::Dirichlet);
        let geo = box_geometry(&c);
        let h = random_h(&c, 1);
        let floor = eigenvalues(&h)[0];
        let probe = RegularityProbe::new(30.0, 0.3, 1.0);
        assert!(m_regular(&h, &geo, floor - 3.0, &probe).unwrap());

        // resonance: an eigenvalue of the free operator with an extended mode
        let free = assemble_free(&c).unwrap();
        let spec = eigenvalues(&free);
        let e = spec[spec.len() / 2];
        assert!(!m_regular(&free, &geo, e, &probe).unwrap());

        // monotone in m
        let norm = regularity_norm(&h, &geo, floor - 0.5, &probe).unwrap();
        let m_star = -norm.ln() / 30.0;
        for m in [0.5 * m_star, 0.9 * m_star] {
            assert!(m_regular(&h, &geo, floor - 0.5, &RegularityProbe::new(30.0, m, 1.0)).unwrap());
        }
        assert!(!m_regular(&h, &geo, floor - 0.5, &RegularityProbe::new(30.0, 1.1 * m_star, 1.0)).unwrap());
        assert!(m_regular(&h, &geo, floor - 0.5, &RegularityProbe::new(30.0, 6.0, 1.0)).is_ok());
        assert!(m_regular(&h, &geo, 0.0, &RegularityProbe::new(30.0, 0.3, 6.0)).is_err());
        let _ = distance_to_spectrum(&spec, e);
    }

    fn plateau(geo: &BoxGeometry, lo: f64, hi: f64, ramp: f64) -> Vec<f64> {
        (0..geo.dimension())
            .map(|n| {
                geo.position(n)
                    .iter()
                    .map(|&x| {
                        let a = ((x - lo) / ramp).clamp(0.0, 1.0);
                        let b = ((hi - x) / ramp).clamp(0.0, 1.0);
                        a.min(b)
                    })
                    .fold(1.0, f64::min)
            })
            .collect()
    }

    #[test]
    fn geometric_resolvent_identity_holds() {
        let c = cfg(1, 30, BoundaryCondition::Dirichlet);
        let geo = box_geometry(&c);
        let h = random_h(&c, 5);
        let inner: Vec<usize> = (5..25).collect();
        let phi = plateau(&geo, 7.0, 23.0, 3.0);
        let z = Complex64::new(1.0, 0.1);
        let res = geometric_resolvent_residual(&h, &inner, &phi, z).unwrap();
        assert!(res <= 1e-8, "residual {res}");

        let zero = vec![0.0; h.dim()];
        assert_eq!(geometric_resolvent_residual(&h, &inner, &zero, z).unwrap(), 0.0);

        let all: Vec<usize> = (0..h.dim()).collect();
        let ones = vec![1.0; h.dim()];
        assert!(geometric_resolvent_residual(&h, &all, &ones, z).unwrap() < 1e-12);

        let leaky = plateau(&geo, 2.0, 23.0, 1.0);
        assert!(geometric_resolvent_residual(&h, &inner, &leaky, z).is_err());
    }

    #[test]
    fn geometric_resolvent_identity_in_2d() {
        let c = cfg(2, 10, BoundaryCondition::Neumann);
        let geo = box_geometry(&c);
        let h = random_h(&c, 2);
        let inner: Vec<usize> = (0..h.dim())
            .filter(|&n| geo.position(n).iter().all(|&x| (1.0..9.0).contains(&x)))
            .collect();
        let phi = plateau(&geo, 2.5, 7.5, 1.5);
        let res = geometric_resolvent_residual(&h, &inner, &phi, Complex64::new(3.0, 0.2)).unwrap();
        assert!(res <= 1e-8, "residual {res}");
    }

    #[test]
    fn collar_and_centre_sets() {
        let c = cfg(2, 12, BoundaryCondition::Dirichlet);
        let geo = box_geometry(&c);
        assert_eq!(geo.collar(2.0).len(), 144 - 64);
        assert_eq!(geo.central_cube(2.0).len(), 16);
    }
}
