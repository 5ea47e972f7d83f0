//! Small-dimension algebra of SO(3).
//!
//! Rotations are stored as full 3x3 direction-cosine matrices `Q` acting on
//! the right of the inertial basis, so that the body basis is `i Q = e`. The
//! hat map identifies a vector with the skew matrix
//!
//! ```text
//!        |  0   -w3   w2 |
//! w  ->  |  w3   0   -w1 |
//!        | -w2   w1   0  |
//! ```
//!
//! and turns the matrix commutator into the cross product. Angular velocity in
//! the body ("spin") is `vee(Q^T Qdot)`; the symmetry group rotates about the
//! first inertial axis, so the Poisson vector is the first row of `Q`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `|Q^T Q - Id|_inf` for a matrix to count as a rotation.
pub const ORTHO_TOL: f64 = 1e-9;
/// Tolerance on `|m + m^T|_inf` for a matrix to count as skew.
pub const SKEW_TOL: f64 = 1e-9;
/// Tolerance on `| |v| - 1 |` for unit vectors on the Poisson sphere.
pub const UNIT_TOL: f64 = 1e-9;
/// Default step for finite-difference exterior derivatives.
pub const DEFAULT_FD_EPS: f64 = 1e-3;

pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`] on skew-symmetric matrices.
pub fn vee(m: &Mat3) -> Result<Vec3> {
    let residual = (m + m.transpose()).amax();
    if residual > SKEW_TOL * m.amax().max(1.0) {
        return Err(Error::NotSkew { residual });
    }
    // average the two copies of each entry so the skew part is recovered
    Ok(Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    ))
}

pub fn infinity_norm(m: &Mat3) -> f64 {
    m.amax()
}

/// `|Q^T Q - Id|_inf`.
pub fn ortho_residual(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).amax()
}

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    /// Checks orthogonality and orientation.
    pub fn new(m: Mat3) -> Result<Self> {
        let residual = ortho_residual(&m);
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::Degenerate("non-finite entries".into()));
        }
        if residual > ORTHO_TOL {
            return Err(Error::Degenerate(format!(
                "orthogonality residual {residual:e} above {ORTHO_TOL:e}"
            )));
        }
        if m.determinant() <= 0.0 {
            return Err(Error::Degenerate("determinant is not positive".into()));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix without checking it. Used inside integrators where the
    /// residual is tracked separately.
    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Right-handed rotation by `angle` about inertial axis `axis` (0, 1 or 2).
    pub fn about_axis(axis: usize, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let m = match axis {
            0 => Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
            1 => Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
            2 => Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            _ => panic!("axis index {axis} out of range"),
        };
        Self(m)
    }

    /// Matrix exponential of `hat(v)` (Rodrigues).
    pub fn exp(v: &Vec3) -> Self {
        let theta = v.norm();
        let k = hat(v);
        let (a, b) = if theta < 1e-6 {
            let t2 = theta * theta;
            (1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0)
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
        };
        Self(Mat3::identity() + k * a + k * k * b)
    }

    /// Some rotation whose first row is the unit vector `nu`.
    pub fn with_poisson_vector(nu: &Vec3) -> Result<Self> {
        check_unit(nu)?;
        let n = nu.normalize();
        let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let b = n.cross(&helper).normalize();
        let c = n.cross(&b);
        Self::new(Mat3::from_rows(&[n.transpose(), b.transpose(), c.transpose()]))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat3 {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation) -> Self {
        Self(self.0 * other.0)
    }

    pub fn ortho_residual(&self) -> f64 {
        ortho_residual(&self.0)
    }
}

/// A tangent vector to SO(3) in the left trivialization `(Q, spin)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentSO3 {
    pub q: Rotation,
    pub omega: Vec3,
}

impl TangentSO3 {
    pub fn new(q: Rotation, omega: Vec3) -> Self {
        Self { q, omega }
    }

    /// The matrix velocity `Q hat(omega)`.
    pub fn velocity(&self) -> Mat3 {
        self.q.matrix() * hat(&self.omega)
    }
}

/// Angular velocity in the body, `vee(Q^{-1} qdot)`.
pub fn spin(q: &Rotation, qdot: &Mat3) -> Result<Vec3> {
    let body = q.matrix().transpose() * qdot;
    vee(&body).map_err(|e| match e {
        Error::NotSkew { residual } => Error::NotTangent { residual },
        other => other,
    })
}

/// Projection of a configuration onto the Poisson sphere: the first row of `Q`.
pub fn poisson_projection(q: &Rotation) -> Vec3 {
    let m = q.matrix();
    Vec3::new(m[(0, 0)], m[(0, 1)], m[(0, 2)])
}

pub(crate) fn check_unit(nu: &Vec3) -> Result<()> {
    let residual = (nu.norm() - 1.0).abs();
    if residual > UNIT_TOL || !residual.is_finite() {
        return Err(Error::NotUnit { residual });
    }
    Ok(())
}

/// Differential of the Poisson projection in the left trivialization: `nu x omega`.
pub fn tangent_projection(nu: &Vec3, omega: &Vec3) -> Result<Vec3> {
    check_unit(nu)?;
    Ok(nu.cross(omega))
}

/// Closest rotation in Frobenius norm (orthogonal polar factor).
pub fn reorthonormalize(m: &Mat3) -> Result<Rotation> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::Degenerate("non-finite entries".into()));
    }
    if m.determinant() <= 0.0 {
        return Err(Error::Degenerate("determinant is not positive".into()));
    }
    let residual = ortho_residual(m);
    if residual >= 0.5 {
        return Err(Error::Degenerate(format!(
            "too far from SO(3): orthogonality residual {residual}"
        )));
    }
    if residual < 4.0 * f64::EPSILON {
        // already orthogonal to working precision
        return Ok(Rotation(*m));
    }
    let svd = m.svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(Rotation(u * v_t)),
        _ => Err(Error::Degenerate("SVD failed".into())),
    }
}

/// Finite-difference value of `d eta(X_u, X_v)` at `q`, where `X_u`, `X_v` are
/// the left-invariant fields with spins `u`, `v`.
///
/// Uses `d eta(X, Y) = X eta(Y) - Y eta(X) - eta([X, Y])` with the bracket of
/// left-invariant fields `[X_u, X_v] = X_{u x v}`. The directional derivatives
/// are central differences along `t -> Q exp(t hat(u))`, so the error is
/// `O(eps^2)`.
pub fn fd_exterior_derivative_1form<F>(eta: F, q: &Rotation, u: &Vec3, v: &Vec3, eps: f64) -> f64
where
    F: Fn(&TangentSO3) -> f64,
{
    assert!(eps > 0.0, "finite-difference step must be positive");
    let along = |dir: &Vec3, field: &Vec3| {
        let fwd = q.compose(&Rotation::exp(&(dir * eps)));
        let bwd = q.compose(&Rotation::exp(&(dir * -eps)));
        (eta(&TangentSO3::new(fwd, *field)) - eta(&TangentSO3::new(bwd, *field))) / (2.0 * eps)
    };
    let bracket = eta(&TangentSO3::new(*q, u.cross(v)));
    along(u, v) - along(v, u) - bracket
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn hat_examples() {
        assert_eq!(hat(&Vec3::zeros()), Mat3::zeros());
        let m = hat(&Vec3::x());
        assert_eq!(m, Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn commutator_is_cross_product() {
        let a = Vec3::new(1.0, 2.0, 3.0);
        let b = Vec3::new(4.0, 5.0, 6.0);
        let (ha, hb) = (hat(&a), hat(&b));
        // explicit triple loop, independent of nalgebra's product
        let mut comm = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    comm[(i, j)] += ha[(i, k)] * hb[(k, j)] - hb[(i, k)] * ha[(k, j)];
                }
            }
        }
        assert_abs_diff_eq!(comm, hat(&Vec3::new(-3.0, 6.0, -3.0)), epsilon = 1e-14);
    }

    #[test]
    fn vee_examples() {
        assert_eq!(vee(&Mat3::zeros()).unwrap(), Vec3::zeros());
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(vee(&hat(&v)).unwrap(), v);
        let m = Mat3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0);
        assert_eq!(vee(&m).unwrap(), v);
    }

    #[test]
    fn vee_rejects_symmetric_part() {
        let m = Mat3::identity();
        assert!(matches!(vee(&m), Err(Error::NotSkew { .. })));
    }

    #[test]
    fn spin_examples() {
        let w = Vec3::new(1.0, 2.0, 3.0);
        assert_abs_diff_eq!(spin(&Rotation::identity(), &hat(&w)).unwrap(), w, epsilon = 1e-15);

        let q = Rotation::exp(&Vec3::new(0.3, -1.1, 0.7));
        let qdot = q.matrix() * hat(&w);
        assert_abs_diff_eq!(spin(&q, &qdot).unwrap(), w, epsilon = 1e-12);

        let q = Rotation::about_axis(2, FRAC_PI_2);
        let qdot = hat(&Vec3::z()) * q.matrix();
        assert_abs_diff_eq!(spin(&q, &qdot).unwrap(), Vec3::z(), epsilon = 1e-15);
    }

    #[test]
    fn spin_rejects_non_tangent() {
        let err = spin(&Rotation::identity(), &Mat3::identity()).unwrap_err();
        assert!(matches!(err, Error::NotTangent { .. }));
    }

    #[test]
    fn poisson_projection_examples() {
        assert_eq!(poisson_projection(&Rotation::identity()), Vec3::x());
        let nu = poisson_projection(&Rotation::about_axis(0, 0.83));
        assert_abs_diff_eq!(nu, Vec3::x(), epsilon = 1e-15);
        let nu = poisson_projection(&Rotation::about_axis(2, FRAC_PI_2));
        assert_abs_diff_eq!(nu, Vec3::new(0.0, -1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn tangent_projection_examples() {
        let x = Vec3::x();
        assert_eq!(tangent_projection(&x, &x).unwrap(), Vec3::zeros());
        assert_eq!(
            tangent_projection(&x, &Vec3::new(0.0, 0.0, -1.0)).unwrap(),
            Vec3::new(0.0, 1.0, 0.0)
        );
        assert_eq!(
            tangent_projection(&Vec3::y(), &Vec3::new(3.0, 4.0, 5.0)).unwrap(),
            Vec3::new(5.0, 0.0, -3.0)
        );
        assert!(matches!(
            tangent_projection(&Vec3::new(2.0, 0.0, 0.0), &x),
            Err(Error::NotUnit { .. })
        ));
    }

    /// Polar factor by the averaging iteration `Q <- (Q + Q^{-T}) / 2`.
    fn polar_by_averaging(m: &Mat3) -> Mat3 {
        let mut q = *m;
        for _ in 0..100 {
            q = 0.5 * (q + q.try_inverse().unwrap().transpose());
        }
        q
    }

    #[test]
    fn reorthonormalize_examples() {
        let mut m = Mat3::identity();
        m[(0, 1)] += 1e-8;
        m[(2, 0)] -= 1e-8;
        assert!(reorthonormalize(&m).unwrap().ortho_residual() <= 1e-12);

        let r = Rotation::exp(&Vec3::new(0.4, 0.2, -2.5));
        assert_abs_diff_eq!(*reorthonormalize(r.matrix()).unwrap().matrix(), *r.matrix(), epsilon = 1e-14);

        let scaled = Mat3::identity() * 1.01;
        let oracle = polar_by_averaging(&scaled);
        assert_abs_diff_eq!(oracle, Mat3::identity(), epsilon = 1e-15);
        assert_abs_diff_eq!(*reorthonormalize(&scaled).unwrap().matrix(), oracle, epsilon = 1e-14);
    }

    #[test]
    fn reorthonormalize_matches_averaging_oracle_off_identity() {
        let r = Rotation::exp(&Vec3::new(1.0, -0.5, 0.25));
        let mut m = *r.matrix();
        m[(0, 0)] += 0.03;
        m[(1, 2)] -= 0.02;
        let oracle = polar_by_averaging(&m);
        assert_abs_diff_eq!(*reorthonormalize(&m).unwrap().matrix(), oracle, epsilon = 1e-13);
    }

    #[test]
    fn reorthonormalize_rejects_degenerate() {
        assert!(reorthonormalize(&(-Mat3::identity())).is_err());
        assert!(reorthonormalize(&(Mat3::identity() * 2.0)).is_err());
    }

    #[test]
    fn exterior_derivative_of_first_spin_component() {
        let eps = DEFAULT_FD_EPS;
        let omega1 = |t: &TangentSO3| t.omega.x;
        let q = Rotation::exp(&Vec3::new(0.2, 0.9, -0.4));
        let val = fd_exterior_derivative_1form(omega1, &q, &Vec3::y(), &Vec3::z(), eps);
        assert!((val + 1.0).abs() <= 5.0 * eps * eps);
    }

    #[test]
    fn exterior_derivative_of_exact_form_vanishes() {
        let eps = DEFAULT_FD_EPS;
        // eta = d(f o p) with f(nu) = nu_1 nu_2 + nu_3^3
        let eta = |t: &TangentSO3| {
            let nu = poisson_projection(&t.q);
            let grad = Vec3::new(nu.y, nu.x, 3.0 * nu.z * nu.z);
            grad.dot(&nu.cross(&t.omega))
        };
        let q = Rotation::exp(&Vec3::new(-0.7, 0.1, 1.3));
        for (u, v) in [
            (Vec3::x(), Vec3::y()),
            (Vec3::new(0.3, -1.0, 0.5), Vec3::new(1.2, 0.4, 0.1)),
        ] {
            let val = fd_exterior_derivative_1form(eta, &q, &u, &v, eps);
            assert!(val.abs() <= 5.0 * eps * eps, "d^2 != 0: {val}");
        }
    }
}
