//! Lattice sites, the componentwise cone order and enumerated site sets.

use std::collections::HashMap;
use std::fmt;

/// A point of the integer lattice `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(pub Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Site(coords.into())
    }

    pub fn zero(dim: usize) -> Self {
        Site(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// `self ≽ other`: every coordinate of `self` is at least the matching
    /// coordinate of `other`. Reflexive, and incomparable pairs exist for
    /// `d ≥ 2`.
    pub fn dominates(&self, other: &Site) -> bool {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    pub fn sub(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn coordinate_sum(&self) -> i64 {
        self.0.iter().sum()
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Componentwise cone order on lattice points: true iff `j_i ≥ k_i` for
/// every coordinate `i`.
pub fn cone_leq(j: &Site, k: &Site) -> bool {
    j.dominates(k)
}

/// Total order compatible with the cone order: ascending coordinate sum,
/// ties broken lexicographically. Returns a permutation of `0..sites.len()`.
pub fn linear_extension(sites: &[Site]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&x, &y| {
        let (sx, sy) = (&sites[x], &sites[y]);
        sx.coordinate_sum()
            .cmp(&sy.coordinate_sum())
            .then_with(|| sx.0.cmp(&sy.0))
    });
    order
}

/// Checks that `order` is a permutation in which every strictly smaller
/// site (in the cone order) appears before the larger one.
pub fn is_linear_extension(sites: &[Site], order: &[usize]) -> bool {
    if order.len() != sites.len() {
        return false;
    }
    let mut position = vec![usize::MAX; sites.len()];
    for (pos, &idx) in order.iter().enumerate() {
        if idx >= sites.len() || position[idx] != usize::MAX {
            return false;
        }
        position[idx] = pos;
    }
    for (i, si) in sites.iter().enumerate() {
        for (k, sk) in sites.iter().enumerate() {
            if i != k && si.dominates(sk) && position[k] > position[i] {
                return false;
            }
        }
    }
    true
}

/// All sites of the discrete cube `∏ [lo_i, hi_i]` (inclusive bounds).
pub fn cube_sites(lo: &[i64], hi: &[i64]) -> Vec<Site> {
    assert_eq!(lo.len(), hi.len());
    let dim = lo.len();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = lo.to_vec();
    loop {
        out.push(Site(cur.clone()));
        // odometer increment, last coordinate fastest
        let mut axis = dim;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if cur[axis] < hi[axis] {
                cur[axis] += 1;
                for (c, l) in cur.iter_mut().zip(lo).skip(axis + 1) {
                    *c = *l;
                }
                break;
            }
        }
    }
}

/// A finite set of sites stored in linear-extension order with an index
/// lookup. Vectors "indexed by the set" use this order.
#[derive(Clone, Debug)]
pub struct SiteSet {
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
}

impl SiteSet {
    /// Builds the set, reordering the sites along [`linear_extension`] and
    /// dropping duplicates.
    pub fn new(sites: Vec<Site>) -> Self {
        let order = linear_extension(&sites);
        let mut ordered = Vec::with_capacity(sites.len());
        let mut index = HashMap::with_capacity(sites.len());
        for i in order {
            let s = sites[i].clone();
            if !index.contains_key(&s) {
                index.insert(s.clone(), ordered.len());
                ordered.push(s);
            }
        }
        SiteSet {
            sites: ordered,
            index,
        }
    }

    pub fn cube(lo: &[i64], hi: &[i64]) -> Self {
        Self::new(cube_sites(lo, hi))
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn get(&self, i: usize) -> &Site {
        &self.sites[i]
    }

    pub fn position(&self, s: &Site) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.index.contains_key(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Site> {
        self.sites.iter()
    }
}

impl PartialEq for SiteSet {
    fn eq(&self, other: &Self) -> bool {
        self.sites == other.sites
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_order_examples() {
        assert!(cone_leq(&Site::new([2, 3]), &Site::new([1, 3])));
        assert!(!cone_leq(&Site::new([1, 0]), &Site::new([0, 1])));
        assert!(!cone_leq(&Site::new([0, 1]), &Site::new([1, 0])));
        let k = Site::new([4, -2]);
        assert!(cone_leq(&k, &k));
    }

    #[test]
    fn extension_examples() {
        let line = cube_sites(&[0], &[2]);
        assert_eq!(linear_extension(&line), vec![0, 1, 2]);

        let square = SiteSet::cube(&[0, 0], &[1, 1]);
        let got: Vec<Vec<i64>> = square.iter().map(|s| s.0.clone()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn extension_respects_order_on_3d_cube() {
        let sites = cube_sites(&[-1, 0, 0], &[2, 2, 1]);
        let order = linear_extension(&sites);
        assert!(is_linear_extension(&sites, &order));
        let reversed: Vec<usize> = order.iter().rev().copied().collect();
        assert!(!is_linear_extension(&sites, &reversed));
    }

    #[test]
    fn cube_enumeration_counts() {
        assert_eq!(cube_sites(&[-2, 0], &[3, 1]).len(), 12);
        assert!(cube_sites(&[1], &[0]).is_empty());
        let s = SiteSet::cube(&[-1], &[3]);
        assert_eq!(s.position(&Site::new([-1])), Some(0));
        assert_eq!(s.position(&Site::new([3])), Some(4));
    }
}
