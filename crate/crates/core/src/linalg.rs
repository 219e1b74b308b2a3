//! Blocked cross products and small dense solves shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par;

/// `X' diag(w) X`, accumulated over fixed row blocks in block order.
pub fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let k = x.ncols();
    let parts = par::map_blocks(x.nrows(), par::BLOCK_ROWS, |r| {
        let xb = x.rows(r.start, r.len());
        let mut xw = xb.clone_owned();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= w[r.start + i];
        }
        xb.tr_mul(&xw)
    });
    let mut out = DMatrix::zeros(k, k);
    for p in parts {
        out += p;
    }
    // exact symmetry
    for i in 0..k {
        for j in 0..i {
            out[(j, i)] = out[(i, j)];
        }
    }
    out
}

/// `X' v`, accumulated over fixed row blocks in block order.
pub fn xt_vec(x: &DMatrix<f64>, v: &[f64]) -> DVector<f64> {
    let parts = par::map_blocks(x.nrows(), par::BLOCK_ROWS, |r| {
        let xb = x.rows(r.start, r.len());
        xb.tr_mul(&DVector::from_column_slice(&v[r.clone()]))
    });
    let mut out = DVector::zeros(x.ncols());
    for p in parts {
        out += p;
    }
    out
}

/// `X b` row by row.
pub fn mul_vec(x: &DMatrix<f64>, b: &DVector<f64>) -> Vec<f64> {
    let parts = par::map_blocks(x.nrows(), par::BLOCK_ROWS, |r| {
        let xb = x.rows(r.start, r.len());
        (xb * b).as_slice().to_vec()
    });
    parts.concat()
}

/// Solve `A s = g` for symmetric positive definite `A`. Falls back to a
/// `ridge` on the diagonal when the Cholesky factorization fails.
pub fn solve_spd(a: &DMatrix<f64>, g: &DVector<f64>, ridge: f64, what: &'static str) -> Result<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(g));
    }
    let mut r = a.clone();
    for i in 0..r.nrows() {
        r[(i, i)] += ridge;
    }
    r.cholesky().map(|ch| ch.solve(g)).ok_or(Error::Singular(what))
}

pub fn inverse_spd(a: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let inv = match a.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => a.clone().try_inverse().ok_or(Error::Singular(what))?,
    };
    Ok(symmetrize(inv))
}

pub fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows();
    for i in 0..k {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Indices of columns that are linearly independent of the columns kept
/// before them (modified Gram-Schmidt with reorthogonalization). A column is
/// dropped when less than `tol` of its norm survives projection.
pub fn independent_columns(x: &DMatrix<f64>, tol: f64) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).clone_owned();
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            continue;
        }
        let mut v = col / norm;
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
        }
        let r = v.norm();
        if r > tol {
            keep.push(j);
            basis.push(v / r);
        }
    }
    keep
}
