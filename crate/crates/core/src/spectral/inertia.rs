//! Inertia of symmetric matrices by symmetric triangular factorization.

use nalgebra::DMatrix;

/// Counts of negative, zero and positive eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl Inertia {
    fn add_pivot(&mut self, d: f64, tol: f64) {
        if d.abs() <= tol {
            self.zero += 1;
        } else if d < 0.0 {
            self.negative += 1;
        } else {
            self.positive += 1;
        }
    }
}

/// Pivot magnitude below which a pivot is reported as zero, relative to
/// the largest entry of the matrix.
pub const ZERO_PIVOT_REL: f64 = 64.0 * f64::EPSILON;

/// Inertia of a symmetric tridiagonal matrix from its `LDLᵀ` pivots
/// (Sturm sequence).
pub fn tridiagonal_inertia(diag: &[f64], off: &[f64]) -> Inertia {
    let scale = diag
        .iter()
        .chain(off)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = ZERO_PIVOT_REL * scale;
    let mut inertia = Inertia::default();
    let mut prev: Option<f64> = None;
    for (i, &a) in diag.iter().enumerate() {
        let d = match prev {
            None => a,
            // an exactly vanishing pivot is already reported as a zero
            // eigenvalue; the continuation only has to stay finite
            Some(p) => a - off[i - 1] * off[i - 1] / if p == 0.0 { tol } else { p },
        };
        inertia.add_pivot(d, tol);
        prev = Some(d);
    }
    inertia
}

/// Inertia of a dense symmetric matrix by Bunch–Kaufman factorization
/// `P A Pᵀ = L D Lᵀ` with 1×1 and 2×2 pivots. Only the lower triangle is
/// read.
pub fn symmetric_inertia(matrix: &DMatrix<f64>) -> Inertia {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols());
    let mut a = matrix.clone();
    // mirror the lower triangle so that swaps can work on full storage
    for j in 0..n {
        for i in 0..j {
            a[(i, j)] = a[(j, i)];
        }
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = ZERO_PIVOT_REL * scale * (n.max(1) as f64);
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut inertia = Inertia::default();

    let swap = |a: &mut DMatrix<f64>, p: usize, q: usize| {
        if p != q {
            a.swap_rows(p, q);
            a.swap_columns(p, q);
        }
    };

    let mut k = 0;
    while k < n {
        let akk = a[(k, k)].abs();
        let (r, lambda) = ((k + 1)..n)
            .map(|i| (i, a[(i, k)].abs()))
            .fold((k, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });

        if akk.max(lambda) <= tol {
            // column is numerically zero: a zero pivot
            inertia.zero += 1;
            k += 1;
            continue;
        }

        let two_by_two = if akk >= alpha * lambda {
            false
        } else {
            let sigma = (k..n)
                .filter(|&j| j != r)
                .map(|j| a[(r, j)].abs())
                .fold(0.0, f64::max);
            if akk * sigma >= alpha * lambda * lambda {
                false
            } else if a[(r, r)].abs() >= alpha * sigma {
                swap(&mut a, k, r);
                false
            } else {
                swap(&mut a, k + 1, r);
                true
            }
        };

        if !two_by_two {
            let d = a[(k, k)];
            inertia.add_pivot(d, tol);
            if d.abs() > tol {
                for j in (k + 1)..n {
                    let f = a[(j, k)] / d;
                    if f == 0.0 {
                        continue;
                    }
                    for i in (k + 1)..n {
                        a[(i, j)] -= f * a[(i, k)];
                    }
                }
            }
            k += 1;
        } else {
            let (p, q, s) = (a[(k, k)], a[(k + 1, k + 1)], a[(k + 1, k)]);
            let det = p * q - s * s;
            // eigenvalues of the 2×2 block, larger magnitude first
            let trace = p + q;
            let disc = ((p - q) * (p - q) + 4.0 * s * s).sqrt();
            let mu1 = 0.5 * (trace + if trace >= 0.0 { disc } else { -disc });
            let mu2 = if mu1 != 0.0 { det / mu1 } else { 0.0 };
            inertia.add_pivot(mu1, tol);
            inertia.add_pivot(mu2, tol);
            // Schur complement A22 -= C D^{-1} Cᵀ
            let (i00, i01, i11) = (q / det, -s / det, p / det);
            for j in (k + 2)..n {
                let (cj0, cj1) = (a[(j, k)], a[(j, k + 1)]);
                let w0 = i00 * cj0 + i01 * cj1;
                let w1 = i01 * cj0 + i11 * cj1;
                for i in (k + 2)..n {
                    a[(i, j)] -= a[(i, k)] * w0 + a[(i, k + 1)] * w1;
                }
            }
            k += 2;
        }
    }
    inertia
}
