//! Closed-form solutions and conserved quantities for rolling on flat factors.
//!
//! Rolling on ℝ^k inside ℝ^m has surface ℝ^k × S^{m−k−1}(r) and shape
//! operator −(1/r)Π⊥, which makes the equations solvable in codimensions 1–3.
//! These solutions are the ground truth for the integrator tests and supply
//! the straight-edge traversal map the billiard-limit experiment converges to.

use nalgebra::{DMatrix, DVector, Matrix2, Vector3};
use thiserror::Error;

use crate::dynamics::RollingState;
use crate::geometry::{wedge, PancakeSurface, PlateSpec, SkewMap};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("rotation rate omega vanishes (mu = 0 or eta = 0): motion is straight")]
    ZeroRate,
    #[error("point is not on the sphere factor (|x1| = {got}, expected {expected})")]
    OffSphere { got: f64, expected: f64 },
    #[error("surface is not the required product family")]
    WrongSurface,
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// c_β = (1−γ²)/(1+γ²), s_β = 2γ/(1+γ²); c² + s² = 1.
pub fn cbeta_sbeta(gamma: f64) -> (f64, f64) {
    let g2 = gamma * gamma;
    ((1.0 - g2) / (1.0 + g2), 2.0 * gamma / (1.0 + g2))
}

/// Mass-distribution adjustment between a billiard ball with parameter γ_b
/// and the rolling ball reproducing its collision map in the r → 0 limit:
/// η_r = arccos(c_β(γ_b))/π, γ_r = η_r/√(1−η_r²).
pub fn gamma_correspondence(gamma_b: f64) -> (f64, f64) {
    let (c, _) = cbeta_sbeta(gamma_b);
    let eta_r = c.acos() / std::f64::consts::PI;
    let gamma_r = eta_r / (1.0 - eta_r * eta_r).sqrt();
    (eta_r, gamma_r)
}

/// Inverse of [`gamma_correspondence`]: the billiard γ whose collision angle
/// matches a rolling ball of parameter η_r. γ_b = tan(πη_r/2).
pub fn reverse_correspondence(eta_r: f64) -> f64 {
    (std::f64::consts::PI * eta_r / 2.0).tan()
}

/// Traversal map of a full roll around a straight edge, in the boundary-frame
/// variables (ū, W): [[cos πη, sin πη], [sin πη, −cos πη]] acting blockwise.
///
/// W here is the spin-vector coordinate measured with the outward co-normal
/// of the plate at the boundary point; in these variables the map depends on
/// neither the approach side σ nor the radius r. The same 2×2 algebra is the
/// no-slip collision map with θ = πη.
pub fn edge_roll_matrix(eta: f64, _sigma: f64) -> Matrix2<f64> {
    let (c, s) = ((std::f64::consts::PI * eta).cos(), (std::f64::consts::PI * eta).sin());
    Matrix2::new(c, s, s, -c)
}

/// The same traversal in the co-moving (u₀, w) variables, w_i = (𝒮E)·E_i with
/// E the meridian tangent in the direction of motion: a rotation by σπη.
pub fn edge_roll_rotation(eta: f64, sigma: f64) -> Matrix2<f64> {
    let th = sigma.signum() * std::f64::consts::PI * eta;
    Matrix2::new(th.cos(), th.sin(), -th.sin(), th.cos())
}

/// Time for the ball to roll all the way around a straight edge: T = πr/|μ|.
pub fn edge_roll_duration(r: f64, mu: f64) -> Result<f64, OracleError> {
    if mu == 0.0 {
        return Err(OracleError::ZeroRate);
    }
    Ok(std::f64::consts::PI * r / mu.abs())
}

/// Maximum displacement along a semi-infinite line, starting on the cap
/// equator with velocity into the cylinder: (√(u₀² + 𝓈₀²) − 𝓈₀)/ω.
pub fn semi_infinite_max_displacement(
    u0_0: f64,
    s_0: f64,
    omega: f64,
) -> Result<f64, OracleError> {
    if omega == 0.0 {
        return Err(OracleError::ZeroRate);
    }
    Ok(((u0_0 * u0_0 + s_0 * s_0).sqrt() - s_0) / omega.abs())
}

/// Closed-form rolling trajectory on ℝ^k × S¹(r), flat-factor projection.
///
/// Solves u̇₀ = ω w, ẇ = −ω u₀ with ω = ημ/r, giving
/// x(t) = c + cos(ωt)·a + sin(ωt)·b where a = −w₀/ω, b = u₀₀/ω,
/// c = x₀ + w₀/ω. (Circles/ellipses traversed at rate ω.)
#[derive(Debug, Clone)]
pub struct Codim2Solution {
    pub omega: f64,
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    u00: DVector<f64>,
    w0: DVector<f64>,
}

impl Codim2Solution {
    /// Flat-factor position, velocity, and spin vector at time t.
    pub fn at(&self, t: f64) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let (cos, sin) = ((self.omega * t).cos(), (self.omega * t).sin());
        let x = &self.c + &self.a * cos + &self.b * sin;
        let u0 = &self.u00 * cos + &self.w0 * sin;
        let w = &self.w0 * cos - &self.u00 * sin;
        (x, u0, w)
    }
}

pub fn codim2_solution(
    w0: &DVector<f64>,
    u00: &DVector<f64>,
    x0: &DVector<f64>,
    mu: f64,
    eta: f64,
    r: f64,
) -> Result<Codim2Solution, OracleError> {
    let omega = eta * mu / r;
    if omega == 0.0 {
        return Err(OracleError::ZeroRate);
    }
    Ok(Codim2Solution {
        omega,
        a: -w0 / omega,
        b: u00 / omega,
        c: x0 + w0 / omega,
        u00: u00.clone(),
        w0: w0.clone(),
    })
}

/// The codimension-3 constant of motion ℐ = η𝓈 x₁ + x₁ × u₁ on S²(r).
/// Along solutions ℐ is constant and ℐ·x₁ = η𝓈r², so sphere trajectories run
/// on circles (sphere ∩ cone) at uniform speed.
pub fn codim3_invariant(
    x1: &Vector3<f64>,
    u1: &Vector3<f64>,
    s: f64,
    eta: f64,
    r: f64,
) -> Result<Vector3<f64>, OracleError> {
    if (x1.norm() - r).abs() > 1e-9 * r.max(1.0) {
        return Err(OracleError::OffSphere {
            got: x1.norm(),
            expected: r,
        });
    }
    Ok(x1 * (eta * s) + x1.cross(u1))
}

/// Decomposition of a product-surface state into the flat/sphere observables
/// used by the codimension-2/3 solutions.
#[derive(Debug, Clone)]
pub struct ProductSplit {
    pub flat_dim: usize,
    pub x_flat: DVector<f64>,
    pub u_flat: DVector<f64>,
    /// sphere-factor coordinates (length d+1)
    pub x_sphere: DVector<f64>,
    pub u_sphere: DVector<f64>,
    /// μ or |u₁|: speed in the sphere factor (signed by E for d = 1)
    pub mu: f64,
    /// w_i = (𝒮E)·e_i on the cylinder (d = 1); empty for d = 2
    pub w: DVector<f64>,
    /// scalar spin 𝓈 of the sphere block (d = 2); 0 for d = 1
    pub s_scalar: f64,
    /// 𝒮₀₀ = Π𝒮Π, the flat-flat spin block
    pub block: DMatrix<f64>,
}

fn product_dims(surface: &PancakeSurface) -> Result<(usize, usize), OracleError> {
    match surface.plate() {
        PlateSpec::CylinderFactor { flat_dim } => Ok((*flat_dim, 1)),
        PlateSpec::SphereFactor { flat_dim } => Ok((*flat_dim, 2)),
        _ => Err(OracleError::WrongSurface),
    }
}

/// Circle tangent E(θ) on ℝ^k × S¹(r), counterclockwise in the circle plane.
fn circle_tangent(m: usize, k: usize, x: &DVector<f64>) -> DVector<f64> {
    let s = x.rows(k, 2).norm();
    let mut e = DVector::zeros(m);
    e[k] = -x[k + 1] / s;
    e[k + 1] = x[k] / s;
    e
}

pub fn split_product_state(
    surface: &PancakeSurface,
    state: &RollingState,
) -> Result<ProductSplit, OracleError> {
    let (k, d) = product_dims(surface)?;
    let m = surface.ambient_dim();
    let x_flat = DVector::from(state.x.rows(0, k));
    let u_flat = DVector::from(state.u.rows(0, k));
    let x_sphere = DVector::from(state.x.rows(k, d + 1));
    let u_sphere = DVector::from(state.u.rows(k, d + 1));
    let block = DMatrix::from(state.spin.matrix().view((0, 0), (k, k)));
    if d == 1 {
        let e = circle_tangent(m, k, &state.x);
        let mu = state.u.dot(&e);
        let se = state.spin.apply(&e);
        let w = DVector::from_fn(k, |i, _| se[i]);
        Ok(ProductSplit {
            flat_dim: k,
            x_flat,
            u_flat,
            x_sphere,
            u_sphere,
            mu,
            w,
            s_scalar: 0.0,
            block,
        })
    } else {
        let mu = u_sphere.norm();
        // 𝓈 = ⟨𝒮₁₁, J⟩/2 with J = [ν₁]× on the sphere block
        let r = surface.radius();
        let nu1 = Vector3::new(state.x[k], state.x[k + 1], state.x[k + 2]) / r;
        let s11 = state.spin.matrix().view((k, k), (3, 3));
        let j = skew3(&nu1);
        let s_scalar = 0.5 * s11.dot(&j);
        Ok(ProductSplit {
            flat_dim: k,
            x_flat,
            u_flat,
            x_sphere,
            u_sphere,
            mu,
            w: DVector::zeros(k),
            s_scalar,
            block,
        })
    }
}

/// Builds a full rolling state on ℝ^k × S¹(r) from cylinder observables.
pub fn codim2_state(
    surface: &PancakeSurface,
    x_flat: &DVector<f64>,
    theta: f64,
    u_flat: &DVector<f64>,
    w: &DVector<f64>,
    mu: f64,
) -> Result<RollingState, OracleError> {
    let (k, d) = product_dims(surface)?;
    if d != 1 {
        return Err(OracleError::WrongSurface);
    }
    if x_flat.len() != k || u_flat.len() != k || w.len() != k {
        return Err(OracleError::Invalid("flat-factor dimension mismatch".into()));
    }
    let m = surface.ambient_dim();
    let r = surface.radius();
    let mut x = DVector::zeros(m);
    for i in 0..k {
        x[i] = x_flat[i];
    }
    x[k] = r * theta.cos();
    x[k + 1] = r * theta.sin();
    let e = circle_tangent(m, k, &x);
    let mut u = &e * mu;
    for i in 0..k {
        u[i] += u_flat[i];
    }
    // 𝒮 = Σ w_i (E ∧ e_i): gives (𝒮E)·e_i = w_i, tangential by construction
    let mut s = DMatrix::zeros(m, m);
    for i in 0..k {
        let mut ei = DVector::zeros(m);
        ei[i] = 1.0;
        s += wedge(&e, &ei).expect("dims agree").into_matrix() * w[i];
    }
    Ok(RollingState {
        x,
        u,
        spin: SkewMap::projected(&s),
    })
}

fn skew3(v: &Vector3<f64>) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Exact rolling trajectory on the bare sphere S²(r): the center runs on the
/// circle cut by the cone ℐ·x = η𝓈r², at uniform angular rate |ℐ|/r².
#[derive(Debug, Clone)]
pub struct SphereRollingSolution {
    pub invariant: Vector3<f64>,
    pub rate: f64,
    axis: Vector3<f64>,
    x0: Vector3<f64>,
    pub s_scalar: f64,
    pub eta: f64,
    pub r: f64,
}

impl SphereRollingSolution {
    /// Position, velocity, and (constant) scalar spin at time t.
    pub fn at(&self, t: f64) -> (DVector<f64>, DVector<f64>, f64) {
        let rot = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(self.axis),
            self.rate * t,
        );
        let x = rot * self.x0;
        let u = self.axis.cross(&x) * self.rate;
        (
            DVector::from_vec(vec![x.x, x.y, x.z]),
            DVector::from_vec(vec![u.x, u.y, u.z]),
            self.s_scalar,
        )
    }
}

/// Builds the closed-form solution matching a state on S²(r) (flat_dim = 0).
pub fn sphere_rolling_solution_with_eta(
    surface: &PancakeSurface,
    state: &RollingState,
    eta: f64,
) -> Result<SphereRollingSolution, OracleError> {
    let (k, d) = product_dims(surface)?;
    if k != 0 || d != 2 {
        return Err(OracleError::WrongSurface);
    }
    let split = split_product_state(surface, state)?;
    let r = surface.radius();
    let x0 = Vector3::new(state.x[0], state.x[1], state.x[2]);
    let u0 = Vector3::new(state.u[0], state.u[1], state.u[2]);
    let inv = codim3_invariant(&x0, &u0, split.s_scalar, eta, r)?;
    let rate = inv.norm() / (r * r);
    let axis = if inv.norm() > 1e-300 {
        inv / inv.norm()
    } else {
        Vector3::z()
    };
    Ok(SphereRollingSolution {
        invariant: inv,
        rate,
        axis,
        x0,
        s_scalar: split.s_scalar,
        eta,
        r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{self, InertiaParams, RollingState};
    use crate::geometry::{wedge, SkewMap};
    use crate::geometry::build_pancake;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cbeta_sbeta_examples() {
        assert_eq!(cbeta_sbeta(0.0), (1.0, 0.0));
        let (c, s) = cbeta_sbeta(1.0);
        assert_abs_diff_eq!(c, 0.0);
        assert_abs_diff_eq!(s, 1.0);
        let (c, s) = cbeta_sbeta((2.0f64 / 5.0).sqrt());
        assert_abs_diff_eq!(c, 3.0 / 7.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 0.9035079029052513, epsilon = 1e-12);
        assert_abs_diff_eq!(c * c + s * s, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn correspondence_examples() {
        let (eta0, gamma0) = gamma_correspondence(0.0);
        assert_eq!(eta0, 0.0);
        assert_eq!(gamma0, 0.0);
        // uniform ball in dimension 3: γ_b = √(2/5), c_β = 3/7
        let (eta, gamma_r) = gamma_correspondence((2.0f64 / 5.0).sqrt());
        assert_abs_diff_eq!(eta, (3.0f64 / 7.0).acos() / std::f64::consts::PI, epsilon = 1e-15);
        assert_abs_diff_eq!(eta, 0.3590170359713761, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma_r, 0.3846620689040935, epsilon = 1e-12);
        // γ_b → ∞ pushes η → 1⁻
        let (eta_inf, _) = gamma_correspondence(1e6);
        assert!(eta_inf > 0.999999 && eta_inf < 1.0);
    }

    #[test]
    fn correspondence_round_trips() {
        for gb in [0.1, 0.5, (2.0f64 / 5.0).sqrt(), 2.0, 10.0] {
            let (eta, _) = gamma_correspondence(gb);
            assert_abs_diff_eq!(reverse_correspondence(eta), gb, epsilon = 1e-12);
        }
    }

    #[test]
    fn edge_roll_matrix_examples() {
        let m0 = edge_roll_matrix(0.0, 1.0);
        assert_eq!((m0 - Matrix2::new(1.0, 0.0, 0.0, -1.0)).abs().max(), 0.0);
        let mh = edge_roll_matrix(0.5, -1.0);
        assert!((mh - Matrix2::new(0.0, 1.0, 1.0, 0.0)).abs().max() < 1e-15);
        for eta in [0.0, 0.17, 0.5, 0.83] {
            let m = edge_roll_matrix(eta, 1.0);
            assert!(((m * m) - Matrix2::identity()).abs().max() < 1e-15);
            // σ-independence of the W-form
            assert_eq!(m, edge_roll_matrix(eta, -1.0));
        }
    }

    #[test]
    fn edge_roll_duration_examples() {
        let t = edge_roll_duration(0.1, 0.5).unwrap();
        assert_abs_diff_eq!(t, 0.2 * std::f64::consts::PI, epsilon = 1e-15);
        assert!(edge_roll_duration(0.1, 0.0).is_err());
        // linear in r
        assert_abs_diff_eq!(
            edge_roll_duration(0.01, 0.5).unwrap(),
            t / 10.0,
            epsilon = 1e-16
        );
    }

    #[test]
    fn semi_infinite_displacement_examples() {
        assert_abs_diff_eq!(
            semi_infinite_max_displacement(0.8, 0.0, 2.0).unwrap(),
            0.4,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            semi_infinite_max_displacement(0.0, 0.3, 2.0).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert!(semi_infinite_max_displacement(1.0, 0.0, 0.0).is_err());
        // linear in 1/η at fixed initial data: ω = ημ/r
        let (mu, r) = (0.7, 0.05);
        let md = |eta: f64| {
            semi_infinite_max_displacement(0.9, 0.2, eta * mu / r).unwrap()
        };
        assert_abs_diff_eq!(md(0.2) / md(0.4), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn codim2_example_is_a_unit_circle() {
        // ω = 2, w0 = (2,0), u00 = (0,2), x0 = (1,0): the solution of the
        // displayed ODE system is the unit circle centered at (2,0)
        let w0 = DVector::from_vec(vec![2.0, 0.0]);
        let u00 = DVector::from_vec(vec![0.0, 2.0]);
        let x0 = DVector::from_vec(vec![1.0, 0.0]);
        // ω = ημ/r = 2 via η=0.5, μ=0.4, r=0.1
        let sol = codim2_solution(&w0, &u00, &x0, 0.4, 0.5, 0.1).unwrap();
        assert_abs_diff_eq!(sol.omega, 2.0, epsilon = 1e-15);
        let center = DVector::from_vec(vec![2.0, 0.0]);
        for i in 0..20 {
            let t = i as f64 * 0.3;
            let (x, u0, w) = sol.at(t);
            assert_abs_diff_eq!((x - &center).norm(), 1.0, epsilon = 1e-12);
            // the ODE system itself
            let eps = 1e-6;
            let (_, u0p, wp) = sol.at(t + eps);
            let (_, u0m, wm) = sol.at(t - eps);
            let du0 = (u0p - u0m) / (2.0 * eps);
            let dw = (wp - wm) / (2.0 * eps);
            assert!((du0 - &w * sol.omega).norm() < 1e-7);
            assert!((dw + &u0 * sol.omega).norm() < 1e-7);
        }
    }

    #[test]
    fn codim2_degenerate_segment_when_w0_vanishes() {
        let w0 = DVector::zeros(1);
        let u00 = DVector::from_vec(vec![1.5]);
        let x0 = DVector::from_vec(vec![0.3]);
        let sol = codim2_solution(&w0, &u00, &x0, 1.0, 0.5, 0.25).unwrap();
        for i in 0..10 {
            let t = i as f64 * 0.2;
            let (x, _, _) = sol.at(t);
            let expect = &x0 + &u00 * ((sol.omega * t).sin() / sol.omega);
            assert_abs_diff_eq!((x - expect).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn codim2_closed_form_satisfies_the_rolling_rhs() {
        // plug the closed form into the ambient RHS at 100 times
        let r = 0.25;
        let surface = build_pancake(PlateSpec::CylinderFactor { flat_dim: 1 }, r).unwrap();
        let (mu, eta) = (0.8, 0.47);
        let w0 = DVector::from_vec(vec![0.6]);
        let u00 = DVector::from_vec(vec![-0.4]);
        let x0 = DVector::from_vec(vec![0.2]);
        let sol = codim2_solution(&w0, &u00, &x0, mu, eta, r).unwrap();
        let inertia = InertiaParams::from_eta(eta).unwrap();
        let theta0 = 0.3;
        for i in 0..100 {
            let t = i as f64 * 0.05;
            let (xf, u0, w) = sol.at(t);
            let theta = theta0 + mu / r * t;
            let state = codim2_state(&surface, &xf, theta, &u0, &w, mu).unwrap();
            let d = dynamics::rhs(&surface, &state, inertia).unwrap();
            // analytic derivatives
            let e = DVector::from_vec(vec![0.0, -theta.sin(), theta.cos()]);
            let nu = DVector::from_vec(vec![0.0, theta.cos(), theta.sin()]);
            let du_expect = DVector::from_vec(vec![
                sol.omega * w[0],
                -mu * mu / r * nu[1],
                -mu * mu / r * nu[2],
            ]);
            assert!((d.du - du_expect).norm() < 1e-9, "du residual at t={t}");
            let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
            let ds_expect = wedge(&e, &e1).unwrap().into_matrix() * (-sol.omega * u0[0])
                + wedge(&nu, &e1).unwrap().into_matrix() * (-mu / r * w[0]);
            assert!(
                (d.dspin.matrix() - ds_expect).norm() < 1e-9,
                "dspin residual at t={t}"
            );
        }
    }


    #[test]
    fn semi_infinite_excursion_depth_matches_the_formula() {
        // start on the seam circle heading into the cylinder; the deepest
        // point of the excursion obeys m_d = (sqrt(u0^2 + s^2) - s)/omega,
        // where s is the cylinder spin coordinate w = (S E).e1 (equal to the
        // cap scalar spin at the seam)
        let r = 0.2;
        let surface = build_pancake(PlateSpec::SemiInfiniteLine, r).unwrap();
        let eta = 0.45;
        let inertia = InertiaParams::from_eta(eta).unwrap();
        let (u0, w, mu) = (-0.8, 0.25, 0.6);
        let omega = eta * mu / r;
        let m_d = semi_infinite_max_displacement(u0, w, omega).unwrap();

        // seam point at theta = 0 on the circle: x = (0, r, 0), E = e3
        let x = DVector::from_vec(vec![0.0, r, 0.0]);
        let e_axis = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let e_circ = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let u = &e_axis * u0 + &e_circ * mu;
        let spin = wedge(&e_circ, &e_axis).unwrap().into_matrix() * w;
        let state = RollingState::new(&surface, x, u, SkewMap::projected(&spin)).unwrap();
        let period = std::f64::consts::TAU / omega;
        let traj = dynamics::integrate(
            &surface,
            &state,
            inertia,
            1.2 * period,
            1e-4,
            &crate::dynamics::IntegrateOptions {
                record_stride: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let deepest = traj
            .states
            .iter()
            .map(|s| -s.x[0])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            (deepest - m_d).abs() < 1e-5,
            "excursion depth {deepest:.8} vs formula {m_d:.8}"
        );
        // the ball leaves the cylinder onto the cap and comes back
        assert!(traj.events.len() >= 2);
    }

    #[test]
    fn codim3_invariant_examples() {
        let r = 0.5;
        let x1 = Vector3::new(0.0, 0.0, r);
        // stationary: u1 = 0 gives ℐ = η𝓈 x1 and ℐ·x1 = η𝓈 r²
        let inv = codim3_invariant(&x1, &Vector3::zeros(), 0.8, 0.3, r).unwrap();
        assert!((inv - x1 * (0.3 * 0.8)).norm() < 1e-15);
        assert_abs_diff_eq!(inv.dot(&x1), 0.3 * 0.8 * r * r, epsilon = 1e-15);
        // geodesic limit: η𝓈 = 0 gives plain angular momentum
        let u1 = Vector3::new(0.2, -0.1, 0.0);
        let inv = codim3_invariant(&x1, &u1, 0.8, 0.0, r).unwrap();
        assert!((inv - x1.cross(&u1)).norm() < 1e-15);
        // off-sphere points are rejected
        assert!(codim3_invariant(&(x1 * 1.1), &u1, 0.0, 0.0, r).is_err());
    }


    #[test]
    fn codim3_coupling_components_satisfy_their_linear_system() {
        // along trajectories on R x S2(r), the quantities w1 = S01 u1,
        // w2 = S01 J u1, u0 close into the linear system
        //   dw1 = -(eta |u1|^2 / r) u0 + (eta s / r) w2
        //   dw2 = -(eta s / r) w1
        //   du0 = +(eta / r) w1
        // (note the spin factor s in dw2; verified by finite differences)
        let r = 0.5;
        let eta = 0.37;
        let surface = build_pancake(PlateSpec::SphereFactor { flat_dim: 1 }, r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let st = dynamics::random_tangent_state(&surface, &mut rng, 1.0, 0.8);
        let inertia = InertiaParams::from_eta(eta).unwrap();
        let h = 1e-4;
        let traj = dynamics::integrate(
            &surface,
            &st,
            inertia,
            1.0,
            h,
            &crate::dynamics::IntegrateOptions::default(),
        )
        .unwrap();

        let quantities = |state: &RollingState| -> (f64, f64, f64, f64, f64) {
            let split = split_product_state(&surface, state).unwrap();
            let x1 = Vector3::new(state.x[1], state.x[2], state.x[3]);
            let u1 = Vector3::new(state.u[1], state.u[2], state.u[3]);
            let ju1 = (x1 / r).cross(&u1);
            let smat = state.spin.matrix();
            let s01 = Vector3::new(smat[(0, 1)], smat[(0, 2)], smat[(0, 3)]);
            (
                s01.dot(&u1),
                s01.dot(&ju1),
                state.u[0],
                split.s_scalar,
                u1.norm_squared(),
            )
        };

        for i0 in [500usize, 2000, 5000, 8000] {
            let (w1m, w2m, u0m, _, _) = quantities(&traj.states[i0 - 1]);
            let (w1, w2, u0, sc, u1sq) = quantities(&traj.states[i0]);
            let (w1p, w2p, u0p, _, _) = quantities(&traj.states[i0 + 1]);
            let dt = traj.times[i0 + 1] - traj.times[i0 - 1];
            let dw1 = (w1p - w1m) / dt;
            let dw2 = (w2p - w2m) / dt;
            let du0 = (u0p - u0m) / dt;
            assert!((dw1 - (-eta * u1sq / r * u0 + eta * sc / r * w2)).abs() < 1e-6);
            assert!((dw2 - (-eta * sc / r * w1)).abs() < 1e-6);
            assert!((du0 - (eta / r * w1)).abs() < 1e-6);
        }
    }

    #[test]
    fn sphere_solution_satisfies_the_rolling_rhs() {
        let r = 0.5;
        let surface = build_pancake(PlateSpec::SphereFactor { flat_dim: 0 }, r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eta = 0.42;
        let inertia = InertiaParams::from_eta(eta).unwrap();
        let st = dynamics::random_tangent_state(&surface, &mut rng, 1.1, 0.8);
        let sol = sphere_rolling_solution_with_eta(&surface, &st, eta).unwrap();
        let split0 = split_product_state(&surface, &st).unwrap();
        for i in 0..100 {
            let t = i as f64 * 0.07;
            let (x, u, s) = sol.at(t);
            // rebuild the spin 𝒮 = 𝓈[ν]× and compare the RHS
            let nu = Vector3::new(x[0], x[1], x[2]) / r;
            let smat = skew3(&nu) * s;
            let state = RollingState {
                x: x.clone(),
                u: u.clone(),
                spin: SkewMap::projected(&DMatrix::from_fn(3, 3, |i, j| smat[(i, j)])),
            };
            let d = dynamics::rhs(&surface, &state, inertia).unwrap();
            // analytic: u̇ = (η𝓈/r) ν×u − (|u|²/r²) x, 𝒮̇ = (𝓈/r)[u]×
            let uv = Vector3::new(u[0], u[1], u[2]);
            let du_expect = nu.cross(&uv) * (eta * s / r)
                - Vector3::new(x[0], x[1], x[2]) * (uv.norm_squared() / (r * r));
            let got = Vector3::new(d.du[0], d.du[1], d.du[2]);
            assert!((got - du_expect).norm() < 1e-9, "du residual at t={t}");
            let ds_expect = skew3(&uv) * (s / r);
            let ds = d.dspin.matrix();
            let mut worst: f64 = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    worst = worst.max((ds[(a, b)] - ds_expect[(a, b)]).abs());
                }
            }
            assert!(worst < 1e-9, "dspin residual {worst:.2e} at t={t}");
            // scalar spin constant
            assert_abs_diff_eq!(s, split0.s_scalar, epsilon = 1e-13);
        }
    }
}
