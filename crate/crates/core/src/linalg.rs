//! Small dense helpers on top of nalgebra.

use nalgebra::SymmetricEigen;

use crate::{CMatrix, Cx};

/// Squared Frobenius norm.
pub fn frob_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `Re{ <a, b> } = Re{ tr(a^H b) }`.
pub fn re_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Largest entry modulus (entrywise infinity norm); 0 for empty matrices.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Moore-Penrose pseudo-inverse of a Hermitian positive semi-definite matrix.
///
/// Eigenvalues below `rel_cutoff * lambda_max` are treated as zero.
pub fn pinv_psd(m: &CMatrix, rel_cutoff: f64) -> CMatrix {
    let n = m.nrows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    // symmetrise against round-off before the eigen solve
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cutoff = rel_cutoff * lmax;
    let mut scaled = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let inv = if l > cutoff && l > 0.0 { 1.0 / l } else { 0.0 };
        scaled.column_mut(j).scale_mut(inv);
    }
    scaled * eig.eigenvectors.adjoint()
}

/// Block-diagonal matrix assembled from equally sized blocks.
pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn cx(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_of_singular_psd() {
        // rank-one: v v^H with v = [1, j]
        let v = CMatrix::from_column_slice(2, 1, &[cx(1.0, 0.0), cx(0.0, 1.0)]);
        let m = &v * v.adjoint();
        let p = pinv_psd(&m, 1e-12);
        // m p m == m
        let back = &m * &p * &m;
        assert!((back - &m).norm() < 1e-12);
    }

    #[test]
    fn block_diag_layout() {
        let a = CMatrix::from_element(2, 1, cx(1.0, 0.0));
        let b = CMatrix::from_element(2, 1, cx(2.0, 0.0));
        let d = block_diag(&[a, b]);
        assert_eq!(d.shape(), (4, 2));
        assert_eq!(d[(0, 1)], cx(0.0, 0.0));
        assert_eq!(d[(3, 1)], cx(2.0, 0.0));
    }
}
