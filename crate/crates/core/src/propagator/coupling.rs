use crate::tridiag::SymTridiag;

/// Eigendecomposition of the m×m angular coupling matrix for cosθ at
/// m = 0: zero diagonal, off-diagonal c_ℓ = (ℓ+1)/√((2ℓ+1)(2ℓ+3)).
///
/// `u` is row-major with rows indexed by eigenvector: u[j*m + l] is
/// component ℓ of eigenvector j. One decomposition is precomputed per
/// active channel count, because truncating the channel set changes the
/// eigenbasis, not just its size.
#[derive(Debug, Clone)]
pub struct CouplingEigen {
    pub m: usize,
    pub lambda: Vec<f64>,
    pub u: Vec<f64>,
}

pub fn coupling_coefficient(ell: usize) -> f64 {
    let l = ell as f64;
    (l + 1.0) / ((2.0 * l + 1.0) * (2.0 * l + 3.0)).sqrt()
}

impl CouplingEigen {
    pub fn build(m: usize) -> Self {
        assert!(m >= 1);
        if m == 1 {
            return Self { m, lambda: vec![0.0], u: vec![1.0] };
        }
        let off: Vec<f64> = (0..m - 1).map(coupling_coefficient).collect();
        let c = SymTridiag::new(vec![0.0; m], off);
        let (lambda, vecs) = c.eigenpairs_below(f64::INFINITY);
        let mut u = vec![0.0; m * m];
        for (j, v) in vecs.iter().enumerate() {
            u[j * m..(j + 1) * m].copy_from_slice(v);
        }
        Self { m, lambda, u }
    }
}
