//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for
//! eigenvalues, inverse iteration for eigenvectors, modified Gram-Schmidt
//! for orthonormality within near-degenerate clusters.
//!
//! Radial Hamiltonians on a uniform grid land in exactly this class, and
//! the bound-state extraction only ever needs "all eigenvalues below a
//! bound", which bisection delivers without touching the rest of the
//! spectrum.

use crate::numerics::KahanSum;

/// Symmetric tridiagonal matrix: `diag` length n, `off` length n-1.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len(), "off must have length n-1");
        Self { diag, off }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Interval certain to contain the whole spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn pivmin(&self) -> f64 {
        let bmax = self.off.iter().fold(1.0f64, |m, &b| m.max(b * b));
        f64::MIN_POSITIVE * bmax
    }

    /// Number of eigenvalues strictly below `x` (Sturm count via the LDLᵀ
    /// pivot signs of T - xI).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0usize;
        let mut d = self.diag[0] - x;
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
        for i in 1..self.n() {
            let b = self.off[i - 1];
            let mut t = (self.diag[i] - x) - b * b / d;
            if t.abs() < pivmin {
                t = -pivmin;
            }
            if t < 0.0 {
                count += 1;
            }
            d = t;
        }
        count
    }

    /// All eigenvalues strictly below `bound`, ascending. Each is located
    /// by bisection on the Sturm count, so accuracy is limited only by
    /// the bracket-width stopping rule.
    pub fn eigenvalues_below(&self, bound: f64) -> Vec<f64> {
        let (glo, ghi) = self.gershgorin_bounds();
        let lo0 = glo - 1.0;
        let hi0 = bound.min(ghi + 1.0);
        if hi0 <= lo0 {
            return Vec::new();
        }
        let m = self.count_below(hi0);
        (0..m).map(|j| self.bisect_index(j, lo0, hi0)).collect()
    }

    /// Smallest eigenvalue, regardless of sign.
    pub fn smallest_eigenvalue(&self) -> f64 {
        let (glo, ghi) = self.gershgorin_bounds();
        self.bisect_index(0, glo - 1.0, ghi + 1.0)
    }

    // bisect for the j-th smallest eigenvalue; requires
    // count_below(lo) <= j < count_below(hi)
    fn bisect_index(&self, j: usize, mut lo: f64, mut hi: f64) -> f64 {
        loop {
            let mid = 0.5 * (lo + hi);
            let width = hi - lo;
            if width <= 1e-14 * mid.abs().max(1.0) || mid <= lo || mid >= hi {
                return mid;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    /// Solve (T - shift·I) x = rhs in place, via tridiagonal LU with
    /// partial pivoting. The extra superdiagonal from row swaps is kept in
    /// `du2`. Pivots are floored at ε·‖T‖ so the solve stays finite when
    /// the shift is an eigenvalue to machine precision; inverse iteration
    /// only needs the amplified direction, not an accurate solution.
    fn solve_shifted(&self, shift: f64, rhs: &mut [f64]) {
        let n = self.n();
        assert_eq!(rhs.len(), n);
        let anorm = self
            .diag
            .iter()
            .map(|&a| (a - shift).abs())
            .fold(0.0f64, f64::max)
            + 2.0 * self.off.iter().fold(0.0f64, |m, &b| m.max(b.abs()));
        let pivmin = (f64::EPSILON * anorm).max(f64::MIN_POSITIVE);
        let mut d: Vec<f64> = self.diag.iter().map(|&a| a - shift).collect();
        let mut du: Vec<f64> = self.off.clone();
        let mut du2 = vec![0.0f64; n.saturating_sub(2)];
        let dl: Vec<f64> = self.off.clone();
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() < pivmin {
                    d[i] = pivmin.copysign(d[i]);
                }
                let m = dl[i] / d[i];
                d[i + 1] -= m * du[i];
                rhs[i + 1] -= m * rhs[i];
                if i + 2 < n {
                    du2[i] = 0.0;
                }
            } else {
                let m = d[i] / dl[i];
                d[i] = dl[i];
                let t = du[i];
                du[i] = d[i + 1];
                d[i + 1] = t - m * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -m;
                }
                rhs.swap(i, i + 1);
                rhs[i + 1] -= m * rhs[i];
            }
        }
        if d[n - 1].abs() < pivmin {
            d[n - 1] = pivmin.copysign(if d[n - 1] == 0.0 { 1.0 } else { d[n - 1] });
        }
        rhs[n - 1] /= d[n - 1];
        if n >= 2 {
            rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
        }
    }

    /// Unit eigenvector for an eigenvalue estimate, by inverse iteration
    /// from a fixed deterministic start. Sign convention: the entry of
    /// largest magnitude is positive.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        self.eigenvector_seeded(lambda, 0)
    }

    fn eigenvector_seeded(&self, lambda: f64, seed: u64) -> Vec<f64> {
        let n = self.n();
        // fixed LCG start so results are reproducible bit for bit
        let mut state = 0x9e3779b97f4a7c15u64 ^ seed.wrapping_mul(0xd1342543de82ef95);
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
            })
            .collect();
        normalize(&mut v);
        for _ in 0..3 {
            self.solve_shifted(lambda, &mut v);
            normalize(&mut v);
        }
        canonical_sign(&mut v);
        v
    }

    /// Eigenvalues below `bound` with orthonormal eigenvectors.
    ///
    /// Inverse iteration alone leaves O(tol/gap) cross-contamination when
    /// gaps shrink (high Rydberg states sit 1e-5 apart), so the vector set
    /// is re-orthonormalized by modified Gram-Schmidt in spectral order.
    /// A candidate annihilated by the subtraction (exactly degenerate
    /// cluster) is retried from a different start vector.
    pub fn eigenpairs_below(&self, bound: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let vals = self.eigenvalues_below(bound);
        let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(vals.len());
        for (i, &lambda) in vals.iter().enumerate() {
            let mut attempt = 0u64;
            loop {
                let mut v = self.eigenvector_seeded(lambda, attempt);
                for prev in vecs.iter().take(i) {
                    let c = dot(prev, &v);
                    for (x, &y) in v.iter_mut().zip(prev.iter()) {
                        *x -= c * y;
                    }
                }
                let nrm = dot(&v, &v).sqrt();
                if nrm > 1e-6 || attempt >= 3 {
                    for x in v.iter_mut() {
                        *x /= nrm;
                    }
                    canonical_sign(&mut v);
                    vecs.push(v);
                    break;
                }
                attempt += 1;
            }
        }
        (vals, vecs)
    }

    /// T·v, for residual checks.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(v.len(), n);
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * v[i + 1];
            }
            out[i] = s;
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for (&x, &y) in a.iter().zip(b.iter()) {
        acc.add(x * y);
    }
    acc.value()
}

fn normalize(v: &mut [f64]) {
    let nrm = dot(v, v).sqrt();
    assert!(nrm > 0.0, "cannot normalize zero vector");
    for x in v.iter_mut() {
        *x /= nrm;
    }
}

fn canonical_sign(v: &mut [f64]) {
    let mut imax = 0;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > v[imax].abs() {
            imax = i;
        }
    }
    if v[imax] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}
