//! Rank-revealing linear algebra shared by the representation builders:
//! incremental linear-independence tests, the Moore-Penrose pseudoinverse,
//! and the column-space projector.

use nalgebra::{DMatrix, DVector};

/// Default independence / singular-value cutoff. Outcome entries in the
/// bundled fixtures are probabilities and rewards of order one, so an
/// absolute tolerance guarded by `max(1, |v|)` is appropriate.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// An incrementally grown set of linearly independent vectors.
///
/// Independence is decided by the orthogonal residual left after projecting
/// onto the span of the accepted vectors (modified Gram-Schmidt, run twice
/// for stability). The original vectors are kept alongside the
/// orthonormalized copies so callers can recover the accepted set verbatim.
#[derive(Debug, Clone)]
pub struct Basis {
    dim: usize,
    tolerance: f64,
    vectors: Vec<DVector<f64>>,
    ortho: Vec<DVector<f64>>,
}

impl Basis {
    pub fn new(dim: usize, tolerance: f64) -> Self {
        assert!(tolerance > 0.0);
        Basis {
            dim,
            tolerance,
            vectors: Vec::new(),
            ortho: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    /// Component of `v` orthogonal to the current span.
    pub fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        let mut r = v.clone();
        // two Gram-Schmidt passes keep the residual orthogonal even for
        // nearly dependent inputs
        for _ in 0..2 {
            for e in &self.ortho {
                let c = e.dot(&r);
                r.axpy(-c, e, 1.0);
            }
        }
        r
    }

    /// Accepts `v` iff its residual against the current span exceeds
    /// `tolerance * max(1, |v|)`; on acceptance the vector joins the basis.
    pub fn try_extend(&mut self, v: DVector<f64>) -> bool {
        let r = self.residual(&v);
        let scale = v.norm().max(1.0);
        if r.norm() <= self.tolerance * scale {
            return false;
        }
        let unit = r.normalize();
        self.ortho.push(unit);
        self.vectors.push(v);
        true
    }

    /// Whether `v` lies in the current span, without mutating the basis.
    pub fn spans(&self, v: &DVector<f64>) -> bool {
        self.residual(v).norm() <= self.tolerance * v.norm().max(1.0)
    }

    /// Stacks the accepted vectors column-wise.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.vectors)
    }
}

/// Moore-Penrose pseudoinverse via singular value decomposition. Singular
/// values below `tolerance * sigma_max` are treated as zero.
pub fn pseudoinverse(m: &DMatrix<f64>, tolerance: f64) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let sigma_max = svd.singular_values.max();
    if sigma_max <= 0.0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let cutoff = tolerance * sigma_max;
    let k = svd.singular_values.len();
    let mut sigma_inv = DMatrix::zeros(k, k);
    for i in 0..k {
        let s = svd.singular_values[i];
        if s >= cutoff {
            sigma_inv[(i, i)] = 1.0 / s;
        }
    }
    v_t.transpose() * sigma_inv * u.transpose()
}

/// Orthogonal projector onto the column space of `m`.
pub fn projector(m: &DMatrix<f64>, tolerance: f64) -> DMatrix<f64> {
    m * pseudoinverse(m, tolerance)
}
