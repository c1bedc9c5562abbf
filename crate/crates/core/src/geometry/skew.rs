//! Skew-symmetric matrix algebra: the spin representation.
//!
//! Tangential spins and angular velocities live in so(m), represented here as
//! ambient m×m matrices. The two workhorse operations are the cross-product
//! `wedge`, (a ∧ b)v = (a·v)b − (b·v)a, and the orthogonal decomposition of a
//! skew map into its tangential block and normal column relative to a unit
//! vector.

use nalgebra::{DMatrix, DVector};

use super::GeometryError;

/// Componentwise skewness tolerance for validated construction.
pub const SKEW_TOL: f64 = 1e-12;

/// An m×m skew-symmetric matrix (spin or angular velocity).
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMap {
    mat: DMatrix<f64>,
}

impl SkewMap {
    /// Validating constructor: rejects matrices that are not square or not
    /// skew to within [`SKEW_TOL`] componentwise.
    pub fn new(mat: DMatrix<f64>) -> Result<Self, GeometryError> {
        if mat.nrows() != mat.ncols() {
            return Err(GeometryError::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        let defect = (&mat + mat.transpose()).amax();
        if defect > SKEW_TOL {
            return Err(GeometryError::NotSkew { defect });
        }
        Ok(Self { mat })
    }

    /// Antisymmetrizes the input, (M − Mᵀ)/2, instead of rejecting it.
    pub fn projected(mat: &DMatrix<f64>) -> Self {
        let skew = (mat - mat.transpose()) * 0.5;
        Self { mat: skew }
    }

    pub(crate) fn from_raw_unchecked(mat: DMatrix<f64>) -> Self {
        Self { mat }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.mat * v
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Entries above the diagonal in row-major order: S12, S13, ..., S(m-1)m.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let m = self.dim();
        let mut out = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                out.push(self.mat[(i, j)]);
            }
        }
        out
    }
}

impl std::ops::Neg for SkewMap {
    type Output = SkewMap;
    fn neg(self) -> SkewMap {
        SkewMap { mat: -self.mat }
    }
}

/// The cross-product a ∧ b ∈ so(m), defined by (a ∧ b)v = (a·v)b − (b·v)a.
///
/// Bilinear and antisymmetric in (a, b); as a matrix it is b aᵀ − a bᵀ.
pub fn wedge(a: &DVector<f64>, b: &DVector<f64>) -> Result<SkewMap, GeometryError> {
    if a.len() != b.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(SkewMap {
        mat: wedge_raw(a, b),
    })
}

/// Unchecked matrix form of `wedge`, for hot paths with known-equal dims.
pub(crate) fn wedge_raw(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    b * a.transpose() - a * b.transpose()
}

/// Orthogonal projector onto the hyperplane normal to the unit vector `nu`.
pub fn tangential_projector(nu: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::identity(nu.len(), nu.len()) - nu * nu.transpose()
}

/// Splits a skew map V into (ΠVΠ, Vν) with Π = I − ννᵀ.
///
/// The two parts reconstruct V as ΠVΠ + ν ∧ (Vν) and are orthogonal in the
/// trace inner product, so Frobenius norms satisfy
/// ‖V‖² = ‖ΠVΠ‖² + ‖ν ∧ Vν‖².
pub fn skew_decompose(
    v: &SkewMap,
    nu: &DVector<f64>,
) -> Result<(SkewMap, DVector<f64>), GeometryError> {
    if nu.len() != v.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: v.dim(),
            got: nu.len(),
        });
    }
    let norm = nu.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(GeometryError::NotUnit { norm });
    }
    let pi = tangential_projector(nu);
    let tangential = &pi * v.matrix() * &pi;
    let w = v.apply(nu);
    Ok((SkewMap { mat: tangential }, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn e(i: usize, n: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn wedge_maps_e1_to_e2() {
        let w = wedge(&e(0, 3), &e(1, 3)).unwrap();
        let out = w.apply(&e(0, 3));
        assert_abs_diff_eq!((out - e(1, 3)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn wedge_of_vector_with_itself_is_zero() {
        let a = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        assert_eq!(wedge(&a, &a).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn wedge_is_antisymmetric() {
        let a = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let b = DVector::from_vec(vec![0.3, 4.0, -1.0]);
        let sum = wedge(&a, &b).unwrap().into_matrix() + wedge(&b, &a).unwrap().into_matrix();
        assert_abs_diff_eq!(sum.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn wedge_rejects_dimension_mismatch() {
        let a = DVector::from_vec(vec![1.0, 2.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(wedge(&a, &b).is_err());
    }

    #[test]
    fn decompose_of_normal_wedge_is_pure_column() {
        // V = nu ∧ w with w ⟂ nu splits as (0, w).
        let nu = e(2, 4);
        let w = DVector::from_vec(vec![0.7, -1.3, 0.0, 2.1]);
        let v = wedge(&nu, &w).unwrap();
        let (tang, col) = skew_decompose(&v, &nu).unwrap();
        assert_abs_diff_eq!(tang.frobenius_norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((col - w).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn decompose_of_tangential_map_keeps_it() {
        // V with V nu = 0 splits as (V, 0).
        let nu = e(0, 3);
        let v = wedge(&e(1, 3), &e(2, 3)).unwrap();
        let (tang, col) = skew_decompose(&v, &nu).unwrap();
        assert_abs_diff_eq!((tang.matrix() - v.matrix()).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(col.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn decompose_rejects_non_unit_normal() {
        let v = SkewMap::zeros(3);
        let nu = DVector::from_vec(vec![0.0, 0.0, 2.0]);
        assert!(matches!(
            skew_decompose(&v, &nu),
            Err(GeometryError::NotUnit { .. })
        ));
    }

    #[test]
    fn skew_constructor_rejects_symmetric_part() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = -1.0 + 1e-6;
        assert!(SkewMap::new(m).is_err());
    }

    fn arb_skew4() -> impl Strategy<Value = SkewMap> {
        proptest::collection::vec(-10.0f64..10.0, 6).prop_map(|v| {
            let mut m = DMatrix::zeros(4, 4);
            let mut it = v.into_iter();
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let x = it.next().unwrap();
                    m[(i, j)] = x;
                    m[(j, i)] = -x;
                }
            }
            SkewMap::from_raw_unchecked(m)
        })
    }

    fn arb_unit4() -> impl Strategy<Value = DVector<f64>> {
        proptest::collection::vec(-1.0f64..1.0, 4)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
            .prop_map(|v| {
                let d = DVector::from_vec(v);
                let n = d.norm();
                d / n
            })
    }

    proptest! {
        #[test]
        fn decompose_reconstructs(v in arb_skew4(), nu in arb_unit4()) {
            let (tang, col) = skew_decompose(&v, &nu).unwrap();
            let rebuilt = tang.matrix() + wedge(&nu, &col).unwrap().into_matrix();
            prop_assert!((rebuilt - v.matrix()).amax() < 1e-12);
        }

        #[test]
        fn decompose_is_an_isometry_split(v in arb_skew4(), nu in arb_unit4()) {
            let (tang, col) = skew_decompose(&v, &nu).unwrap();
            let total = v.frobenius_norm().powi(2);
            let parts = tang.frobenius_norm().powi(2)
                + wedge(&nu, &col).unwrap().frobenius_norm().powi(2);
            prop_assert!((total - parts).abs() < 1e-12 * (1.0 + total));
        }
    }
}
