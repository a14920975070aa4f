//! Volumes of sheared cube unions and the factorized integration domain
//! `M = {η | Bη ∈ [0, ω_+]^L}`, with a Monte Carlo volume oracle.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{precondition, Result};
use crate::lattice::Site;
use crate::model::sample_rng;
use crate::toeplitz::{cone_determinant, ConeToeplitzSystem};

/// Slack used by membership predicates so that boundary points count as
/// inside.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// Samples drawn per deterministic substream in [`mc_volume`].
pub const MC_CHUNK: usize = 1 << 16;

/// Axis-aligned box `∏ [lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(precondition("bounding box corners must have the same positive dimension"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(precondition("bounding box needs finite lo <= hi"));
        }
        Ok(BoundingBox { lo, hi })
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= a - MEMBERSHIP_SLACK && *v <= b + MEMBERSHIP_SLACK)
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    /// Box enclosing the image `M·box + c`, by interval arithmetic.
    pub fn affine_image(&self, m: &DMatrix<f64>, c: &[f64]) -> BoundingBox {
        let n = m.nrows();
        let mut lo = c.to_vec();
        let mut hi = c.to_vec();
        for r in 0..n {
            for k in 0..m.ncols() {
                let (a, b) = (m[(r, k)] * self.lo[k], m[(r, k)] * self.hi[k]);
                lo[r] += a.min(b);
                hi[r] += a.max(b);
            }
        }
        BoundingBox { lo, hi }
    }
}

/// Monte Carlo volume estimate with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub hits: usize,
}

impl McEstimate {
    /// `|estimate − exact| ≤ k·stderr`.
    pub fn agrees_with(&self, exact: f64, k: f64) -> bool {
        (self.estimate - exact).abs() <= k * self.stderr + 1e-12 * exact.abs().max(1.0)
    }
}

/// Uniform sampling of `bbox`; the estimate is `vol(bbox)·hits/samples`.
///
/// Samples are drawn in chunks of [`MC_CHUNK`], chunk `c` from the stream
/// `(seed, c)`, so the result does not depend on the thread count.
pub fn mc_volume<F>(membership: F, bbox: &BoundingBox, samples: usize, seed: u64) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    if samples == 0 {
        return Err(precondition("Monte Carlo volume needs at least one sample"));
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let n = bbox.dim();
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = sample_rng(seed, c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut x = vec![0.0; n];
            let mut hits = 0;
            for _ in 0..count {
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi = bbox.lo[i] + (bbox.hi[i] - bbox.lo[i]) * rng.random::<f64>();
                }
                if membership(&x) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    let vol = bbox.volume();
    Ok(McEstimate {
        estimate: vol * p,
        stderr: vol * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        hits,
    })
}

/// Feasible set of `s` with `lo_k ≤ y_k + s·t_k ≤ hi_k` for all `k`,
/// intersected with `[s0, s1]`. Returns whether it is nonempty.
fn shift_interval_nonempty(y: &[f64], t: &[f64], lo: f64, hi: f64, s0: f64, s1: f64) -> bool {
    let (mut a, mut b) = (s0, s1);
    for (&yk, &tk) in y.iter().zip(t) {
        if tk == 0.0 {
            if yk < lo - MEMBERSHIP_SLACK || yk > hi + MEMBERSHIP_SLACK {
                return false;
            }
            continue;
        }
        let (u, v) = ((lo - yk) / tk, (hi - yk) / tk);
        a = a.max(u.min(v));
        b = b.min(u.max(v));
    }
    a <= b + MEMBERSHIP_SLACK
}

/// `S = ⋃_{s∈[0,ω_+]} ([0, ω_+]^n + s·t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShearedUnion {
    pub t: Vec<f64>,
    pub omega_plus: f64,
}

/// Image `M·Q + c` of the cube `Q = [0, ω_+]^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineCube {
    pub matrix: DMatrix<f64>,
    pub offset: Vec<f64>,
    pub omega_plus: f64,
    /// `None` for `Q` itself, `Some(i)` for the piece swept by face `i`.
    pub axis: Option<usize>,
}

impl AffineCube {
    pub fn volume(&self) -> f64 {
        let n = self.offset.len();
        self.matrix.determinant().abs() * self.omega_plus.powi(n as i32)
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        let n = self.offset.len();
        let rhs = nalgebra::DVector::from_iterator(n, y.iter().zip(&self.offset).map(|(a, b)| a - b));
        match self.matrix.clone().lu().solve(&rhs) {
            Some(z) => z
                .iter()
                .all(|&v| v >= -MEMBERSHIP_SLACK && v <= self.omega_plus + MEMBERSHIP_SLACK),
            None => false,
        }
    }

    pub fn bbox(&self) -> BoundingBox {
        let n = self.offset.len();
        BoundingBox {
            lo: vec![0.0; n],
            hi: vec![self.omega_plus; n],
        }
        .affine_image(&self.matrix, &self.offset)
    }
}

impl ShearedUnion {
    pub fn new(t: Vec<f64>, omega_plus: f64) -> Result<Self> {
        if t.is_empty() {
            return Err(precondition("shear vector must have at least one component"));
        }
        if !(omega_plus > 0.0) || !omega_plus.is_finite() {
            return Err(precondition(format!("omega_plus must be positive, got {omega_plus}")));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(precondition("shear vector must be finite"));
        }
        Ok(ShearedUnion { t, omega_plus })
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        shift_interval_nonempty(
            &x.iter().map(|v| -v).collect::<Vec<_>>(),
            &self.t,
            -self.omega_plus,
            0.0,
            0.0,
            self.omega_plus,
        )
    }

    pub fn bbox(&self) -> BoundingBox {
        let w = self.omega_plus;
        BoundingBox {
            lo: self.t.iter().map(|ti| (w * ti).min(0.0)).collect(),
            hi: self.t.iter().map(|ti| w + (w * ti).max(0.0)).collect(),
        }
    }

    /// `(1 + Σ|t_i|)·ω_+^n`.
    pub fn exact_volume(&self) -> f64 {
        (1.0 + self.t.iter().map(|v| v.abs()).sum::<f64>()) * self.omega_plus.powi(self.dim() as i32)
    }

    /// `Q` followed by the pieces swept by one face each. For `t_i > 0`
    /// the face `x_i = ω_+` is swept (`T_i = T̃_i + ω_+ e_i`), for `t_i < 0`
    /// the face `x_i = 0` (`T_i = T̃_i`). Components `t_i = 0` give null
    /// pieces and are skipped.
    pub fn decomposition(&self) -> Vec<AffineCube> {
        let n = self.dim();
        let mut pieces = vec![AffineCube {
            matrix: DMatrix::identity(n, n),
            offset: vec![0.0; n],
            omega_plus: self.omega_plus,
            axis: None,
        }];
        for i in 0..n {
            if self.t[i] == 0.0 {
                log::debug!("shear component {i} vanishes; its piece has zero volume");
                continue;
            }
            let mut matrix = DMatrix::identity(n, n);
            for r in 0..n {
                matrix[(r, i)] = self.t[r];
            }
            let mut offset = vec![0.0; n];
            if self.t[i] > 0.0 {
                offset[i] = self.omega_plus;
            }
            pieces.push(AffineCube {
                matrix,
                offset,
                omega_plus: self.omega_plus,
                axis: Some(i),
            });
        }
        pieces
    }
}

pub fn sheared_union_volume(u: &ShearedUnion) -> f64 {
    u.exact_volume()
}

pub fn sheared_union_decomposition(u: &ShearedUnion) -> Vec<AffineCube> {
    u.decomposition()
}

/// Splitting of `M` around a pivot site `j`:
/// `η ∈ M ⟺ η_< ∈ M_< ∧ η_j ∈ [ξ, ξ + ω_+] ∧ η_> ∈ M_>(η_<, η_j)`.
///
/// Vectors named `eta_less` / `eta_greater` are indexed like
/// [`Self::less`] / [`Self::greater`].
#[derive(Clone, Debug)]
pub struct DomainFactorization {
    pub pivot: usize,
    pub site: Site,
    pub less: Vec<usize>,
    pub greater: Vec<usize>,
    pub omega_plus: f64,
    /// `{B_nj}_{n∈Λ_>}`.
    pub b_j: Vec<f64>,
    greater_sites: Vec<Site>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    len: usize,
}

pub fn factorize_domain(system: &ConeToeplitzSystem, j: &Site, omega_plus: f64) -> Result<DomainFactorization> {
    let pivot = system
        .sites
        .position(j)
        .ok_or_else(|| precondition(format!("site {j:?} is not in lambda_plus")))?;
    if !(omega_plus > 0.0) || !omega_plus.is_finite() {
        return Err(precondition(format!("omega_plus must be positive, got {omega_plus}")));
    }
    let split = system.split(&vec![0.0; system.len()], pivot);
    let b_j = split.greater.iter().map(|&n| system.b[(n, pivot)]).collect();
    let greater_sites = split.greater.iter().map(|&n| system.sites.get(n).clone()).collect();
    Ok(DomainFactorization {
        pivot,
        site: j.clone(),
        less: split.less,
        greater: split.greater,
        omega_plus,
        b_j,
        greater_sites,
        a: system.a.clone(),
        b: system.b.clone(),
        len: system.len(),
    })
}

impl DomainFactorization {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn in_range(&self, v: f64) -> bool {
        v >= -MEMBERSHIP_SLACK && v <= self.omega_plus + MEMBERSHIP_SLACK
    }

    fn block(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
    }

    /// `A_>`, the block of `A` over `Λ_>`.
    pub fn a_greater(&self) -> DMatrix<f64> {
        Self::block(&self.a, &self.greater, &self.greater)
    }

    /// `A_<`, the block of `A` over `Λ_<`.
    pub fn a_less(&self) -> DMatrix<f64> {
        Self::block(&self.a, &self.less, &self.less)
    }

    /// `ξ(η_<) = −Σ_{l∈Λ_<} B_jl η_l`.
    pub fn xi(&self, eta_less: &[f64]) -> f64 {
        -self
            .less
            .iter()
            .zip(eta_less)
            .map(|(&l, e)| self.b[(self.pivot, l)] * e)
            .sum::<f64>()
    }

    /// `Ξ(η_<) = −Σ_{l∈Λ_<} b_l η_l` with `b_l = {B_nl}_{n∈Λ_>}`.
    pub fn big_xi(&self, eta_less: &[f64]) -> Vec<f64> {
        self.greater
            .iter()
            .map(|&n| {
                -self
                    .less
                    .iter()
                    .zip(eta_less)
                    .map(|(&l, e)| self.b[(n, l)] * e)
                    .sum::<f64>()
            })
            .collect()
    }

    /// `Bη ∈ [0, ω_+]^L` for a full vector in `Λ⁺` order.
    pub fn in_m(&self, eta: &[f64]) -> bool {
        (0..self.len).all(|k| self.in_range((0..self.len).map(|l| self.b[(k, l)] * eta[l]).sum()))
    }

    pub fn in_m_less(&self, eta_less: &[f64]) -> bool {
        self.less.iter().all(|&k| {
            self.in_range(
                self.less
                    .iter()
                    .zip(eta_less)
                    .map(|(&l, e)| self.b[(k, l)] * e)
                    .sum(),
            )
        })
    }

    /// `η_j ∈ [ξ, ξ + ω_+]`.
    pub fn in_m_j(&self, eta_less: &[f64], eta_j: f64) -> bool {
        self.in_range(eta_j - self.xi(eta_less))
    }

    /// `Σ_{l∈Λ_>} B_nl η_l ∈ [0, ω_+] − η_j B_nj + Ξ_n` for all `n ∈ Λ_>`.
    pub fn in_m_greater(&self, eta_less: &[f64], eta_j: f64, eta_greater: &[f64]) -> bool {
        let xi = self.big_xi(eta_less);
        self.greater.iter().enumerate().all(|(r, &n)| {
            let lhs: f64 = self
                .greater
                .iter()
                .zip(eta_greater)
                .map(|(&l, e)| self.b[(n, l)] * e)
                .sum();
            self.in_range(lhs + eta_j * self.b_j[r] - xi[r])
        })
    }

    /// `η_> ∈ M_>⁺(η_<)`: some `r ∈ [ξ, ξ + ω_+]` puts `η_>` in `M_>(η_<, r)`.
    pub fn in_enlarged(&self, eta_less: &[f64], eta_greater: &[f64]) -> bool {
        let xi = self.xi(eta_less);
        let big = self.big_xi(eta_less);
        let y: Vec<f64> = self
            .greater
            .iter()
            .enumerate()
            .map(|(r, &n)| {
                self.greater
                    .iter()
                    .zip(eta_greater)
                    .map(|(&l, e)| self.b[(n, l)] * e)
                    .sum::<f64>()
                    - big[r]
            })
            .collect();
        shift_interval_nonempty(&y, &self.b_j, 0.0, self.omega_plus, xi, xi + self.omega_plus)
    }

    /// Splits a full `Λ⁺` vector into `(η_<, η_j, η_>)`.
    pub fn split(&self, eta: &[f64]) -> (Vec<f64>, f64, Vec<f64>) {
        (
            self.less.iter().map(|&i| eta[i]).collect(),
            eta[self.pivot],
            self.greater.iter().map(|&i| eta[i]).collect(),
        )
    }

    /// `|det A_>|·Σ_{n∈Λ_>∪{j}} |B_nj|·ω_+^{|Λ_>|}`.
    pub fn enlarged_volume(&self) -> Result<f64> {
        let det = cone_determinant(&self.a_greater(), &self.greater_sites)?;
        let column: f64 = 1.0 + self.b_j.iter().map(|v| v.abs()).sum::<f64>();
        Ok(det.abs() * column * self.omega_plus.powi(self.greater.len() as i32))
    }

    /// Box enclosing `M_>⁺(η_<) = A_>(Ξ − ξ b_j) + A_>[⋃_s ([0, ω_+]^m − s b_j)]`.
    pub fn enlarged_bbox(&self, eta_less: &[f64]) -> Result<BoundingBox> {
        let m = self.greater.len();
        if m == 0 {
            return Err(precondition("pivot has no strictly dominating sites"));
        }
        let xi = self.xi(eta_less);
        let big = self.big_xi(eta_less);
        let a = self.a_greater();
        let shift: Vec<f64> = big.iter().zip(&self.b_j).map(|(x, b)| x - xi * b).collect();
        let offset: Vec<f64> = (0..m).map(|r| (0..m).map(|k| a[(r, k)] * shift[k]).sum()).collect();
        let w = self.omega_plus;
        let inner = BoundingBox {
            lo: self.b_j.iter().map(|b| (-w * b).min(0.0)).collect(),
            hi: self.b_j.iter().map(|b| w + (-w * b).max(0.0)).collect(),
        };
        Ok(inner.affine_image(&a, &offset))
    }

    /// Box enclosing `M = A([0, ω_+]^L)`.
    pub fn domain_bbox(&self) -> BoundingBox {
        BoundingBox {
            lo: vec![0.0; self.len],
            hi: vec![self.omega_plus; self.len],
        }
        .affine_image(&self.a, &vec![0.0; self.len])
    }

    /// A point of `M_<`: `η_< = A_< ω_<` for uniform `ω_<`.
    pub fn sample_eta_less<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let a = self.a_less();
        let omega: Vec<f64> = self.less.iter().map(|_| rng.random::<f64>() * self.omega_plus).collect();
        (0..self.less.len())
            .map(|r| (0..self.less.len()).map(|k| a[(r, k)] * omega[k]).sum())
            .collect()
    }

    /// A point of `M_>(η_<, η_j)`: `η_> = A_>(ω_> − η_j b_j + Ξ)`.
    pub fn sample_eta_greater<R: Rng>(&self, rng: &mut R, eta_less: &[f64], eta_j: f64) -> Vec<f64> {
        let a = self.a_greater();
        let big = self.big_xi(eta_less);
        let m = self.greater.len();
        let v: Vec<f64> = (0..m)
            .map(|r| rng.random::<f64>() * self.omega_plus - eta_j * self.b_j[r] + big[r])
            .collect();
        (0..m).map(|r| (0..m).map(|k| a[(r, k)] * v[k]).sum()).collect()
    }
}

/// Draws `(η_j, η_>)` with `η_j ∈ [ξ, ξ + ω_+]` (both endpoints included)
/// and `η_> ∈ M_>(η_<, η_j)`, and checks `η_> ∈ M_>⁺(η_<)` for each.
pub fn enclosure_check(f: &DomainFactorization, eta_less: &[f64], draws: usize, seed: u64) -> Result<bool> {
    if eta_less.len() != f.less.len() {
        return Err(precondition("eta_less has the wrong length"));
    }
    if !f.in_m_less(eta_less) {
        return Err(precondition("eta_less is not in M_<"));
    }
    let xi = f.xi(eta_less);
    let mut rng = sample_rng(seed, 0);
    for k in 0..draws {
        let eta_j = match k {
            0 => xi,
            1 => xi + f.omega_plus,
            _ => xi + rng.random::<f64>() * f.omega_plus,
        };
        let eta_greater = f.sample_eta_greater(&mut rng, eta_less, eta_j);
        if !f.in_m_greater(eta_less, eta_j, &eta_greater) {
            return Err(crate::LabError::Contract(
                "sampled point escaped M_> under the forward map".into(),
            ));
        }
        if !f.in_enlarged(eta_less, &eta_greater) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn enlarged_volume(f: &DomainFactorization) -> Result<f64> {
    f.enlarged_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SiteSet;
    use crate::toeplitz::{build_system, ConvolutionVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sheared_volume_examples() {
        assert_eq!(ShearedUnion::new(vec![0.0; 3], 2.0).unwrap().exact_volume(), 8.0);
        assert_eq!(ShearedUnion::new(vec![0.5], 1.0).unwrap().exact_volume(), 1.5);
        let u = ShearedUnion::new(vec![0.5, -0.3], 1.0).unwrap();
        assert!((u.exact_volume() - 1.8).abs() < 1e-15);
        let mc = mc_volume(|x| u.contains(x), &u.bbox(), 1_000_000, 1).unwrap();
        assert!(mc.agrees_with(1.8, 3.0), "{mc:?}");
    }

    #[test]
    fn decomposition_examples() {
        let q = ShearedUnion::new(vec![0.0, 0.0], 1.0).unwrap().decomposition();
        assert_eq!(q.len(), 1);
        let pieces = ShearedUnion::new(vec![0.5], 1.0).unwrap().decomposition();
        let vols: Vec<f64> = pieces.iter().map(|p| p.volume()).collect();
        assert_eq!(vols, vec![1.0, 0.5]);
    }

    #[test]
    fn pieces_cover_and_are_disjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3 {
            let t: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
            let u = ShearedUnion::new(t, 0.8).unwrap();
            let pieces = u.decomposition();
            let total: f64 = pieces.iter().map(|p| p.volume()).sum();
            assert!((total - u.exact_volume()).abs() < 1e-12);
            let bbox = u.bbox();
            for a in 0..pieces.len() {
                for b in (a + 1)..pieces.len() {
                    let (pa, pb) = (&pieces[a], &pieces[b]);
                    let inter = |x: &[f64]| pa.contains(x) && pb.contains(x);
                    let mc = mc_volume(inter, &bbox, 200_000, 7).unwrap();
                    assert!(mc.estimate <= 3.0 * mc.stderr, "pieces {a},{b}: {mc:?}");
                }
            }
            // every point of S lies in some piece and vice versa
            let mut p = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..5000 {
                let x: Vec<f64> = (0..n).map(|i| p.random_range(bbox.lo[i]..bbox.hi[i])).collect();
                assert_eq!(u.contains(&x), pieces.iter().any(|c| c.contains(&x)));
            }
        }
    }

    #[test]
    fn mc_oracle_sanity() {
        let b = BoundingBox::cube(3, -1.0, 2.0).unwrap();
        let full = mc_volume(|_| true, &b, 1000, 3).unwrap();
        assert_eq!((full.estimate, full.stderr), (27.0, 0.0));
        let disk = BoundingBox::cube(2, -1.0, 1.0).unwrap();
        let mc = mc_volume(|x| x[0] * x[0] + x[1] * x[1] <= 1.0, &disk, 1_000_000, 4).unwrap();
        assert!(mc.agrees_with(std::f64::consts::PI, 3.0));
        assert!(mc_volume(|_| true, &disk, 0, 0).is_err());
    }

    #[test]
    fn mc_is_reproducible_across_thread_counts() {
        let b = BoundingBox::cube(2, 0.0, 1.0).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_volume(|x| x[0] < x[1], &b, 300_000, 9).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    fn system_1d(coeffs: &[f64], l: i64) -> ConeToeplitzSystem {
        build_system(&ConvolutionVector::from_1d(coeffs).unwrap(), &SiteSet::cube(&[0], &[l - 1])).unwrap()
    }

    #[test]
    fn delta_factorization_is_a_box() {
        let sys = system_1d(&[1.0], 4);
        let f = factorize_domain(&sys, &Site::new([1]), 1.0).unwrap();
        assert!(f.b_j.iter().all(|v| *v == 0.0));
        assert_eq!(f.enlarged_volume().unwrap(), 1.0f64.powi(f.greater.len() as i32));
        let eta_less = vec![0.3; f.less.len()];
        assert_eq!(f.xi(&eta_less), 0.0);
        assert!(f.in_m_greater(&eta_less, 0.5, &vec![0.9; f.greater.len()]));
        assert!(!f.in_m_greater(&eta_less, 0.5, &vec![1.1; f.greater.len()]));
        assert!(enclosure_check(&f, &eta_less, 100, 1).unwrap());
    }

    #[test]
    fn factorization_matches_membership() {
        let sys = system_1d(&[1.0, -0.5, 0.2], 4);
        let f = factorize_domain(&sys, &Site::new([1]), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let omega: Vec<f64> = (0..sys.len()).map(|_| rng.random::<f64>()).collect();
            let eta = sys.transform(&omega).unwrap();
            let (lt, j, gt) = f.split(&eta);
            assert!(f.in_m(&eta));
            assert!(f.in_m_less(&lt) && f.in_m_j(&lt, j) && f.in_m_greater(&lt, j, &gt));
        }
        // push a coordinate out of the image
        for _ in 0..1000 {
            let omega: Vec<f64> = (0..sys.len()).map(|_| rng.random::<f64>()).collect();
            let mut eta = sys.transform(&omega).unwrap();
            let k = rng.random_range(0..eta.len());
            eta[k] += 3.0;
            assert!(!f.in_m(&eta));
            let (lt, j, gt) = f.split(&eta);
            assert!(!(f.in_m_less(&lt) && f.in_m_j(&lt, j) && f.in_m_greater(&lt, j, &gt)));
        }
    }

    #[test]
    fn enlarged_volume_matches_monte_carlo() {
        let sys = system_1d(&[1.0, -0.6], 3);
        let f = factorize_domain(&sys, &Site::new([0]), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let exact = f.enlarged_volume().unwrap();
        for _ in 0..2 {
            let lt = f.sample_eta_less(&mut rng);
            let bbox = f.enlarged_bbox(&lt).unwrap();
            let mc = mc_volume(|x| f.in_enlarged(&lt, x), &bbox, 1_000_000, 3).unwrap();
            assert!(mc.agrees_with(exact, 3.0), "{mc:?} vs {exact}");
        }
        assert!(enclosure_check(&f, &f.sample_eta_less(&mut rng), 1000, 4).unwrap());
    }

    #[test]
    fn domain_volume_is_preserved() {
        let sys = system_1d(&[1.0, 0.4], 3);
        let f = factorize_domain(&sys, &Site::new([0]), 1.0).unwrap();
        assert!(sys.len() <= 8);
        let mc = mc_volume(|x| f.in_m(x), &f.domain_bbox(), 1_000_000, 5).unwrap();
        assert!(mc.agrees_with(1.0, 3.0), "{mc:?}");
    }

    #[test]
    fn rejects_foreign_pivot() {
        let sys = system_1d(&[1.0, -0.5], 3);
        assert!(factorize_domain(&sys, &Site::new([7]), 1.0).is_err());
    }
}
