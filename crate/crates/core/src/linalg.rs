//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Determinants below this are treated as singular.
pub const MIN_DET: f64 = 1e-300;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Inverse and log-determinant of a symmetric positive definite matrix.
pub fn spd_inverse_logdet(k: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let chol = k.clone().cholesky().ok_or(Error::SingularCovariance)?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    if !logdet.is_finite() || logdet < MIN_DET.ln() {
        return Err(Error::SingularCovariance);
    }
    Ok((symmetrize(&chol.inverse()), logdet))
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in descending
/// order and each eigenvector's largest-magnitude entry made positive.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let lead = v
            .iter()
            .cloned()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            v = -v;
        }
        vectors.set_column(c, &v);
    }
    (values, vectors)
}

/// Sum of outer products `Σ c cᵀ`.
pub fn scatter(coords: &[DVector<f64>]) -> DMatrix<f64> {
    let d = coords.first().map_or(0, |c| c.len());
    let mut s = DMatrix::zeros(d, d);
    for c in coords {
        s.ger(1.0, c, c, 1.0);
    }
    s
}

/// Principal angles (radians, ascending) between the column spans of `a` and `b`.
///
/// Cosines and sines come from separate decompositions and are paired, which
/// keeps small angles accurate.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let k = a.ncols().min(b.ncols());
    let proj = qa.transpose() * &qb;
    let mut cos: Vec<f64> = proj.clone().svd(false, false).singular_values.iter().cloned().collect();
    cos.sort_by(|x, y| y.total_cmp(x));
    let resid = &qb - &qa * proj;
    let mut sin: Vec<f64> = resid.svd(false, false).singular_values.iter().cloned().collect();
    sin.sort_by(|x, y| x.total_cmp(y));
    (0..k)
        .map(|i| {
            sin.get(i)
                .copied()
                .unwrap_or(0.0)
                .atan2(cos.get(i).copied().unwrap_or(0.0))
        })
        .collect()
}

/// Row-major nested-array (de)serialization for dynamic matrices.
pub mod serde_matrix {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().cloned().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let n = rows.len();
        let c = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != c) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_row_iterator(n, c, rows.into_iter().flatten()))
    }
}
