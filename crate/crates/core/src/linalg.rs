//! Small dense helpers shared by the filters.

use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenvalues below this are treated as genuine loss of definiteness and
/// clamped; anything between this and zero is floating-point noise.
pub const PSD_CLAMP_TOLERANCE: f64 = 1e-9;

/// Outcome of [`symmetrize_psd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdCheck {
    /// Smallest eigenvalue of the symmetrized matrix before any clamping.
    pub min_eigenvalue: f64,
    pub clamped: bool,
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Returns `(C + C^T)/2`, with negative eigenvalues reset to zero when the
/// smallest one is below `-PSD_CLAMP_TOLERANCE`.
pub fn symmetrize_psd(m: &DMatrix<f64>) -> (DMatrix<f64>, PsdCheck) {
    let sym = symmetrize(m);
    if sym.is_empty() {
        return (
            sym,
            PsdCheck {
                min_eigenvalue: 0.0,
                clamped: false,
            },
        );
    }
    let eig = SymmetricEigen::new(sym.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= -PSD_CLAMP_TOLERANCE {
        return (
            sym,
            PsdCheck {
                min_eigenvalue: min,
                clamped: false,
            },
        );
    }
    log::warn!("covariance lost definiteness (min eigenvalue {min:e}); clamping");
    let mut values = eig.eigenvalues.clone();
    values.iter_mut().for_each(|v| *v = v.max(0.0));
    let fixed = &eig.eigenvectors * DMatrix::from_diagonal(&values) * eig.eigenvectors.transpose();
    (
        symmetrize(&fixed),
        PsdCheck {
            min_eigenvalue: min,
            clamped: true,
        },
    )
}

/// Symmetric square root factor `L` with `L L^T = m` for a PSD matrix,
/// tolerating singular inputs (e.g. a zero process-noise covariance).
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return m.clone();
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots)
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * (1.0 + m.amax())
}

pub fn is_diagonal(m: &DMatrix<f64>) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Serializes a `DVector` as a plain JSON array.
pub mod serde_vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Vec::<f64>::deserialize(d).map(DVector::from_vec)
    }
}

/// Serializes a sequence of vectors as an array of arrays.
pub mod serde_vectors {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[DVector<f64>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.as_slice()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DVector<f64>>, D::Error> {
        Ok(Vec::<Vec<f64>>::deserialize(d)?
            .into_iter()
            .map(DVector::from_vec)
            .collect())
    }
}

/// Serializes a `DMatrix` as an array of rows.
pub mod serde_matrix {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::matrix_from_rows(&rows).map_err(D::Error::custom)
    }
}

/// Builds a matrix from row vectors, rejecting ragged input.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, String> {
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("matrix rows have different lengths".into());
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}
