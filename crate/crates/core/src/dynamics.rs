//! The rolling flow on T𝒩 ⊕ so(𝒩), integrated in ambient coordinates.
//!
//! State: ball center x on the surface, center velocity u ∈ T_x𝒩, and the
//! tangential spin 𝒮 (scaled angular velocity, 𝒮 = rηS). The equations of
//! motion in ambient form are
//!
//!   dx = u
//!   du = −η 𝒮 𝕊u + ⟨𝕊u, u⟩ ν          (normal term keeps u tangent)
//!   d𝒮 = η (𝕊u) ∧ u + ν ∧ (𝒮 𝕊u)      (correction keeps 𝒮 tangential)
//!
//! with 𝕊 the shape operator. At η = 0 the center follows geodesics and 𝒮 is
//! parallel transported. The integrator is fixed-step RK4 with post-step
//! constraint renormalization; seam crossings are located by bisection on
//! region classification and the state passes through continuously (ν is
//! continuous across seams, 𝕊 is not).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::geometry::{
    skew_decompose, tangential_projector, GeometryError, PancakeSurface, RegionId, RegionKind,
    SkewMap,
};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid integration parameters: {0}")]
    InvalidParams(String),
    #[error("step crossed a region seam (from {from:?} to {to:?}); use integrate()")]
    SeamCrossed { from: RegionKind, to: RegionKind },
    #[error("angular velocity scale undefined at eta = 0")]
    EtaZero,
    #[error("trajectory aborted at t = {t}: {reason}")]
    Aborted { t: f64, reason: String },
}

/// Moment-of-inertia parameters, η = γ/√(1+γ²) ∈ [0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaParams {
    pub gamma: f64,
    pub eta: f64,
}

impl InertiaParams {
    pub fn from_gamma(gamma: f64) -> Result<Self, DynamicsError> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(DynamicsError::InvalidParams(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(Self {
            gamma,
            eta: gamma / (1.0 + gamma * gamma).sqrt(),
        })
    }

    pub fn from_eta(eta: f64) -> Result<Self, DynamicsError> {
        if !(0.0..1.0).contains(&eta) {
            return Err(DynamicsError::InvalidParams(format!(
                "eta must lie in [0, 1), got {eta}"
            )));
        }
        Ok(Self {
            gamma: eta / (1.0 - eta * eta).sqrt(),
            eta,
        })
    }
}

/// State of the rolling ball: center, center velocity, tangential spin.
#[derive(Debug, Clone)]
pub struct RollingState {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub spin: SkewMap,
}

impl RollingState {
    /// Validating constructor: u must be tangent and the spin tangential,
    /// both to 1e-9.
    pub fn new(
        surface: &PancakeSurface,
        x: DVector<f64>,
        u: DVector<f64>,
        spin: SkewMap,
    ) -> Result<Self, DynamicsError> {
        let state = Self { x, u, spin };
        let res = state.constraint_residual(surface)?;
        if res > 1e-9 {
            return Err(DynamicsError::InvalidState(format!(
                "constraint residual {res:.3e} exceeds 1e-9"
            )));
        }
        Ok(state)
    }

    /// Builds a valid state by projecting x to the surface, u to the tangent
    /// space, and the spin to its tangential block.
    pub fn projected(
        surface: &PancakeSurface,
        x: &DVector<f64>,
        u: &DVector<f64>,
        spin: &SkewMap,
    ) -> Result<Self, DynamicsError> {
        let (x, nu) = project_with_normal(surface, x)?;
        let pi = tangential_projector(&nu);
        let u = &pi * u;
        let s = &pi * spin.matrix() * &pi;
        Ok(Self {
            x,
            u,
            spin: SkewMap::projected(&s),
        })
    }

    /// Time-reversed companion state: same position, negated velocities.
    pub fn reversed(&self) -> Self {
        Self {
            x: self.x.clone(),
            u: -self.u.clone(),
            spin: -self.spin.clone(),
        }
    }

    /// max(|u·ν|, ‖𝒮 − Π𝒮Π‖) — zero for an exactly admissible state.
    pub fn constraint_residual(&self, surface: &PancakeSurface) -> Result<f64, DynamicsError> {
        let nu = surface.normal(&self.x)?;
        let (tang, _) = skew_decompose(&self.spin, &nu)?;
        let spin_defect = (tang.matrix() - self.spin.matrix()).norm();
        Ok(self.u.dot(&nu).abs().max(spin_defect))
    }
}

/// Kinetic energy ℰ = ½|u|² + ¼ Tr(𝒮𝒮ᵀ).
pub fn energy(state: &RollingState) -> f64 {
    energy_parts(&state.u, state.spin.matrix())
}

pub(crate) fn energy_parts(u: &DVector<f64>, s: &DMatrix<f64>) -> f64 {
    0.5 * u.norm_squared() + 0.25 * s.norm_squared()
}

/// Right-hand side of the rolling equations at a state.
#[derive(Debug, Clone)]
pub struct Derivative {
    pub dx: DVector<f64>,
    pub du: DVector<f64>,
    pub dspin: SkewMap,
}

/// Evaluates the rolling RHS. Errors on seam points, where 𝕊 is undefined.
pub fn rhs(
    surface: &PancakeSurface,
    state: &RollingState,
    inertia: InertiaParams,
) -> Result<Derivative, DynamicsError> {
    let class = surface.classify(&state.x)?;
    if class.kind == RegionKind::Seam {
        return Err(GeometryError::SeamPoint.into());
    }
    let (dx, du, ds) = rhs_pinned(
        surface,
        class.region,
        &state.x,
        &state.u,
        state.spin.matrix(),
        inertia.eta,
    )?;
    Ok(Derivative {
        dx,
        du,
        dspin: SkewMap::from_raw_unchecked(ds),
    })
}

fn rhs_pinned(
    surface: &PancakeSurface,
    region: RegionId,
    x: &DVector<f64>,
    u: &DVector<f64>,
    s: &DMatrix<f64>,
    eta: f64,
) -> Result<(DVector<f64>, DVector<f64>, DMatrix<f64>), DynamicsError> {
    let nu = surface.normal_in(region, x)?;
    let sh = surface.shape_operator_in(region, x)?;
    let shu = &sh * u;
    let s_shu = s * &shu;
    let du = -&s_shu * eta + &nu * shu.dot(u);
    // d𝒮 = η (𝕊u) ∧ u + ν ∧ (𝒮𝕊u); (a ∧ b) = b aᵀ − a bᵀ
    let ds = (u * shu.transpose() - &shu * u.transpose()) * eta
        + (&s_shu * nu.transpose() - &nu * s_shu.transpose());
    Ok((u.clone(), du, ds))
}

/// ⟨e, f(e)⟩: the force term is orthogonal to the state in the bundle metric,
/// so this must vanish (to roundoff) at every admissible state.
pub fn orthogonality_residual(
    surface: &PancakeSurface,
    state: &RollingState,
    inertia: InertiaParams,
) -> Result<f64, DynamicsError> {
    let class = surface.classify(&state.x)?;
    if class.kind == RegionKind::Seam {
        return Err(GeometryError::SeamPoint.into());
    }
    let sh = surface.shape_operator_in(class.region, &state.x)?;
    let shu = &sh * &state.u;
    let s_shu = state.spin.matrix() * &shu;
    let force_u = -state.u.dot(&s_shu) * inertia.eta;
    let wedge = &state.u * shu.transpose() - &shu * state.u.transpose();
    let force_s = 0.5 * inertia.eta * wedge.dot(state.spin.matrix());
    Ok(force_u + force_s)
}

struct Raw {
    x: DVector<f64>,
    u: DVector<f64>,
    s: DMatrix<f64>,
}

impl Raw {
    fn from_state(st: &RollingState) -> Self {
        Self {
            x: st.x.clone(),
            u: st.u.clone(),
            s: st.spin.matrix().clone(),
        }
    }

    fn to_state(&self) -> RollingState {
        RollingState {
            x: self.x.clone(),
            u: self.u.clone(),
            spin: SkewMap::from_raw_unchecked(self.s.clone()),
        }
    }

    fn add_scaled(&self, k: &(DVector<f64>, DVector<f64>, DMatrix<f64>), c: f64) -> Self {
        Self {
            x: &self.x + &k.0 * c,
            u: &self.u + &k.1 * c,
            s: &self.s + &k.2 * c,
        }
    }
}

fn rk4_raw(
    surface: &PancakeSurface,
    region: RegionId,
    st: &Raw,
    eta: f64,
    h: f64,
) -> Result<Raw, DynamicsError> {
    let f = |r: &Raw| rhs_pinned(surface, region, &r.x, &r.u, &r.s, eta);
    let k1 = f(st)?;
    let k2 = f(&st.add_scaled(&k1, 0.5 * h))?;
    let k3 = f(&st.add_scaled(&k2, 0.5 * h))?;
    let k4 = f(&st.add_scaled(&k3, h))?;
    let x = &st.x
        + (&k1.0 + &k2.0 * 2.0 + &k3.0 * 2.0 + &k4.0) * (h / 6.0);
    let u = &st.u
        + (&k1.1 + &k2.1 * 2.0 + &k3.1 * 2.0 + &k4.1) * (h / 6.0);
    let s = &st.s
        + (&k1.2 + &k2.2 * 2.0 + &k3.2 * 2.0 + &k4.2) * (h / 6.0);
    Ok(Raw { x, u, s })
}

fn project_with_normal(
    surface: &PancakeSurface,
    x: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), DynamicsError> {
    let xp = surface.project_to_surface(x)?;
    let nu = surface.normal(&xp)?;
    Ok((xp, nu))
}

/// Post-step renormalization: project x, retangent u and 𝒮 preserving their
/// norms, then rescale both jointly so the energy equals `e0` exactly.
fn renormalize(surface: &PancakeSurface, raw: Raw, e0: f64) -> Result<Raw, DynamicsError> {
    let (x, nu) = project_with_normal(surface, &raw.x)?;
    let pi = tangential_projector(&nu);
    let u_norm = raw.u.norm();
    let mut u = &pi * &raw.u;
    let pu = u.norm();
    if pu > 1e-300 {
        u *= u_norm / pu;
    }
    let s_norm = raw.s.norm();
    let sp = &pi * &raw.s * &pi;
    let mut s = (&sp - sp.transpose()) * 0.5;
    let ps = s.norm();
    if ps > 1e-300 {
        s *= s_norm / ps;
    }
    let e = energy_parts(&u, &s);
    if e > 1e-300 && e0 > 0.0 {
        let factor = (e0 / e).sqrt();
        u *= factor;
        s *= factor;
    }
    Ok(Raw { x, u, s })
}

fn pin_region(
    surface: &PancakeSurface,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<RegionId, DynamicsError> {
    let class = surface.classify(x)?;
    if class.kind != RegionKind::Seam {
        return Ok(class.region);
    }
    let speed = u.norm();
    if speed < 1e-300 {
        return Err(DynamicsError::InvalidState(
            "stationary state on a seam has no defined region".into(),
        ));
    }
    // probe just past the seam band in the direction of motion
    let probe = x + u * (16.0 * crate::geometry::SEAM_BAND / speed);
    Ok(surface.classify(&probe)?.region)
}

/// One RK4 step plus renormalization. Refuses to straddle a seam.
pub fn step(
    surface: &PancakeSurface,
    state: &RollingState,
    inertia: InertiaParams,
    h: f64,
) -> Result<RollingState, DynamicsError> {
    if !(h > 0.0) {
        return Err(DynamicsError::InvalidParams("step size must be > 0".into()));
    }
    let region = pin_region(surface, &state.x, &state.u)?;
    let e0 = energy(state);
    let raw = rk4_raw(surface, region, &Raw::from_state(state), inertia.eta, h)?;
    let raw = renormalize(surface, raw, e0)?;
    let after = surface.classify(&raw.x)?;
    if after.region != region && after.kind != RegionKind::Seam {
        return Err(DynamicsError::SeamCrossed {
            from: surface.region_kind(region),
            to: after.kind,
        });
    }
    Ok(raw.to_state())
}

/// A recorded region change.
#[derive(Debug, Clone)]
pub struct RegionChange {
    pub t: f64,
    pub from: RegionId,
    pub to: RegionId,
    pub from_kind: RegionKind,
    pub to_kind: RegionKind,
}

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    /// Apply post-step projection/renormalization (normal mode). Disabling it
    /// exposes the raw RK4 drift; the conservation tests run both ways so the
    /// renormalization cannot mask an RHS bug.
    pub renormalize: bool,
    /// Record every k-th step (events and the final state are always kept).
    pub record_stride: usize,
    /// Stop the integration once this many region-change events occurred.
    pub stop_after_events: Option<usize>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            renormalize: true,
            record_stride: 1,
            stop_after_events: None,
        }
    }
}

/// An integrated trajectory with its event log and health diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<RollingState>,
    pub regions: Vec<RegionId>,
    pub events: Vec<RegionChange>,
    pub eta: f64,
    pub h: f64,
    /// max over recorded samples of max(|u·ν|, ‖𝒮 − Π𝒮Π‖)
    pub max_constraint_residual: f64,
    /// max over steps of |ℰ(t) − ℰ(0)|/ℰ(0)
    pub max_energy_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &RollingState {
        self.states.last().expect("trajectory has samples")
    }
}

/// Integrates the rolling equations with fixed step h; seam crossings are
/// located by bisection to time tolerance 1e-12·T and recorded as events.
pub fn integrate(
    surface: &PancakeSurface,
    state0: &RollingState,
    inertia: InertiaParams,
    t_end: f64,
    h: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory, DynamicsError> {
    if !(h > 0.0) || !(t_end > 0.0) {
        return Err(DynamicsError::InvalidParams(
            "need t_end > 0 and h > 0".into(),
        ));
    }
    let stride = opts.record_stride.max(1);
    let e0 = energy(state0);
    let mut region = pin_region(surface, &state0.x, &state0.u)?;
    let mut current = Raw::from_state(state0);
    let mut t = 0.0;
    let mut step_index = 0usize;

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![state0.clone()],
        regions: vec![region],
        events: Vec::new(),
        eta: inertia.eta,
        h,
        max_constraint_residual: 0.0,
        max_energy_drift: 0.0,
    };

    let time_tol = 1e-12 * t_end;
    let abort = |t: f64, e: GeometryError| DynamicsError::Aborted {
        t,
        reason: e.to_string(),
    };

    while t_end - t > time_tol {
        let h_step = h.min(t_end - t);
        let mut trial = rk4_raw(surface, region, &current, inertia.eta, h_step)?;
        if opts.renormalize {
            trial = renormalize(surface, trial, e0).map_err(|e| DynamicsError::Aborted {
                t,
                reason: e.to_string(),
            })?;
        }
        let class = surface.classify(&trial.x).map_err(|e| abort(t, e))?;
        // the bisection keys on the geometric region assignment itself (not
        // the seam-banded kind), so the committed point sits within the time
        // tolerance of the true crossing
        let crossed = class.region != region;

        let (tau, committed, new_region) = if !crossed {
            (h_step, trial, None)
        } else {
            // bisect the crossing time; lo stays in the old region
            let mut lo = 0.0f64;
            let mut hi = h_step;
            let mut at_hi = None;
            for _ in 0..100 {
                if hi - lo <= time_tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let probe = rk4_raw(surface, region, &current, inertia.eta, mid)?;
                let c = surface.classify(&probe.x).map_err(|e| abort(t, e))?;
                if c.region != region {
                    hi = mid;
                    at_hi = Some((probe, c.region));
                } else {
                    lo = mid;
                }
            }
            let (probe, reg) = match at_hi {
                Some(v) => v,
                None => {
                    let probe = rk4_raw(surface, region, &current, inertia.eta, hi)?;
                    let c = surface.classify(&probe.x).map_err(|e| abort(t, e))?;
                    (probe, c.region)
                }
            };
            let mut committed = probe;
            if opts.renormalize {
                committed = renormalize(surface, committed, e0).map_err(|e| DynamicsError::Aborted {
                    t,
                    reason: e.to_string(),
                })?;
            }
            (hi, committed, Some(reg))
        };

        t += tau;
        current = committed;
        step_index += 1;

        let drift = if e0 > 0.0 {
            (energy_parts(&current.u, &current.s) - e0).abs() / e0
        } else {
            0.0
        };
        traj.max_energy_drift = traj.max_energy_drift.max(drift);

        let record = if let Some(new_reg) = new_region {
            traj.events.push(RegionChange {
                t,
                from: region,
                to: new_reg,
                from_kind: surface.region_kind(region),
                to_kind: surface.region_kind(new_reg),
            });
            region = new_reg;
            true
        } else {
            step_index.is_multiple_of(stride) || t >= t_end - time_tol
        };

        if record {
            let st = current.to_state();
            if opts.renormalize {
                if let Ok(res) = st.constraint_residual(surface) {
                    traj.max_constraint_residual = traj.max_constraint_residual.max(res);
                }
            }
            traj.times.push(t);
            traj.states.push(st);
            traj.regions.push(region);
        }

        if let Some(n) = opts.stop_after_events {
            if traj.events.len() >= n {
                break;
            }
        }
    }

    Ok(traj)
}

/// Max finite-difference rate of change of the tangential spin components in
/// a parallel-propagated tangent frame, along an η = 0 trajectory. Zero (to
/// integration accuracy) because the rolling flow at η = 0 parallel
/// transports 𝒮.
pub fn parallel_transport_residual(
    surface: &PancakeSurface,
    trajectory: &Trajectory,
) -> Result<f64, DynamicsError> {
    if trajectory.eta != 0.0 {
        return Err(DynamicsError::InvalidParams(
            "parallel-transport residual is defined for eta = 0 trajectories".into(),
        ));
    }
    let state0 = &trajectory.states[0];
    let t_end = *trajectory.times.last().unwrap();
    let h = trajectory.h;
    let m = surface.ambient_dim();

    // orthonormal tangent frame at the start
    let nu0 = surface.normal(&state0.x)?;
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(m - 1);
    for i in 0..m {
        let mut e = DVector::zeros(m);
        e[i] = 1.0;
        let mut v = &e - &nu0 * nu0.dot(&e);
        for f in &frame {
            let c = f.dot(&v);
            v -= f * c;
        }
        let n = v.norm();
        if n > 1e-8 {
            frame.push(v / n);
        }
        if frame.len() == m - 1 {
            break;
        }
    }

    // jointly integrate state + frame: dF = ⟨𝕊u, F⟩ ν
    let mut region = pin_region(surface, &state0.x, &state0.u)?;
    let mut cur = Raw::from_state(state0);
    let mut t = 0.0;
    let mut components: Vec<(f64, Vec<f64>)> = Vec::new();
    let comps = |s: &DMatrix<f64>, fr: &[DVector<f64>]| -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..fr.len() {
            for j in (i + 1)..fr.len() {
                out.push((s * &fr[j]).dot(&fr[i]));
            }
        }
        out
    };
    components.push((0.0, comps(&cur.s, &frame)));

    let e0 = energy(state0);
    while t < t_end - 0.5 * h {
        let h_step = h.min(t_end - t);
        // frame RK4 shares the state stages
        let f_state = |r: &Raw| rhs_pinned(surface, region, &r.x, &r.u, &r.s, 0.0);
        let k1 = f_state(&cur)?;
        let s1 = cur.add_scaled(&k1, 0.5 * h_step);
        let k2 = f_state(&s1)?;
        let s2 = cur.add_scaled(&k2, 0.5 * h_step);
        let k3 = f_state(&s2)?;
        let s3 = cur.add_scaled(&k3, h_step);
        let k4 = f_state(&s3)?;

        let frame_rhs = |r: &Raw, f: &[DVector<f64>]| -> Result<Vec<DVector<f64>>, DynamicsError> {
            let nu = surface.normal_in(region, &r.x)?;
            let sh = surface.shape_operator_in(region, &r.x)?;
            let shu = &sh * &r.u;
            Ok(f.iter().map(|fi| &nu * shu.dot(fi)).collect())
        };
        let fk1 = frame_rhs(&cur, &frame)?;
        let fa: Vec<_> = frame
            .iter()
            .zip(&fk1)
            .map(|(f, k)| f + k * (0.5 * h_step))
            .collect();
        let fk2 = frame_rhs(&s1, &fa)?;
        let fb: Vec<_> = frame
            .iter()
            .zip(&fk2)
            .map(|(f, k)| f + k * (0.5 * h_step))
            .collect();
        let fk3 = frame_rhs(&s2, &fb)?;
        let fc: Vec<_> = frame
            .iter()
            .zip(&fk3)
            .map(|(f, k)| f + k * h_step)
            .collect();
        let fk4 = frame_rhs(&s3, &fc)?;

        let next = Raw {
            x: &cur.x + (&k1.0 + &k2.0 * 2.0 + &k3.0 * 2.0 + &k4.0) * (h_step / 6.0),
            u: &cur.u + (&k1.1 + &k2.1 * 2.0 + &k3.1 * 2.0 + &k4.1) * (h_step / 6.0),
            s: &cur.s + (&k1.2 + &k2.2 * 2.0 + &k3.2 * 2.0 + &k4.2) * (h_step / 6.0),
        };
        for (i, f) in frame.iter_mut().enumerate() {
            *f += (&fk1[i] + &fk2[i] * 2.0 + &fk3[i] * 2.0 + &fk4[i]) * (h_step / 6.0);
        }
        cur = renormalize(surface, next, e0)?;
        // keep the frame orthonormal and tangent
        let nu = surface.normal(&cur.x)?;
        for i in 0..frame.len() {
            let mut v = &frame[i] - &nu * nu.dot(&frame[i]);
            for j in 0..i {
                let c = frame[j].dot(&v);
                v -= &frame[j] * c;
            }
            frame[i] = &v / v.norm();
        }
        t += h_step;
        let class = surface.classify(&cur.x)?;
        if class.kind != RegionKind::Seam {
            region = class.region;
        }
        components.push((t, comps(&cur.s, &frame)));
    }

    // finite differences over a fixed 0.1 time window
    let stride = ((0.1 / h).round() as usize).max(1);
    let mut worst: f64 = 0.0;
    for i in stride..components.len() {
        let (t1, ref c1) = components[i];
        let (t0, ref c0) = components[i - stride];
        let dt = t1 - t0;
        for (a, b) in c1.iter().zip(c0) {
            worst = worst.max(((a - b) / dt).abs());
        }
    }
    Ok(worst)
}

/// Output of the full-angular-velocity cross-check.
#[derive(Debug)]
pub struct UCrosscheck {
    /// U = S + ν ∧ (u/r), the reconstructed full angular velocity.
    pub u_matrix: SkewMap,
    /// Sup-norm difference between one RK4 step of the U-form equations
    /// (pulled back through u = rUν) and one RK4 step of the (u, 𝒮) form.
    pub step_difference: f64,
}

/// Reconstructs U from the state and advances one step of the alternative
/// equation U̇ = −(r/(1+γ²)) (U𝕊Uν) ∧ ν, comparing against the (u, 𝒮) form.
/// The two formulations are algebraically equivalent; this exercises that.
pub fn full_u_crosscheck(
    surface: &PancakeSurface,
    state: &RollingState,
    inertia: InertiaParams,
    h: f64,
) -> Result<UCrosscheck, DynamicsError> {
    if inertia.eta == 0.0 {
        return Err(DynamicsError::EtaZero);
    }
    let r = surface.radius();
    let region = pin_region(surface, &state.x, &state.u)?;
    let nu = surface.normal_in(region, &state.x)?;
    let s_big = state.spin.matrix() / (r * inertia.eta);
    let u_over_r = &state.u / r;
    let u_mat = &s_big + (&u_over_r * nu.transpose() - &nu * u_over_r.transpose());

    // RK4 on (x, U)
    let gamma2 = inertia.gamma * inertia.gamma;
    let f = |x: &DVector<f64>, umat: &DMatrix<f64>| -> Result<(DVector<f64>, DMatrix<f64>), DynamicsError> {
        let nu = surface.normal_in(region, x)?;
        let sh = surface.shape_operator_in(region, x)?;
        let u_vec = umat * &nu * r;
        let a = umat * (&sh * (umat * &nu));
        let du_mat = (&nu * a.transpose() - &a * nu.transpose()) * (-(r / (1.0 + gamma2)));
        Ok((u_vec, du_mat))
    };
    let k1 = f(&state.x, &u_mat)?;
    let k2 = f(&(&state.x + &k1.0 * (0.5 * h)), &(&u_mat + &k1.1 * (0.5 * h)))?;
    let k3 = f(&(&state.x + &k2.0 * (0.5 * h)), &(&u_mat + &k2.1 * (0.5 * h)))?;
    let k4 = f(&(&state.x + &k3.0 * h), &(&u_mat + &k3.1 * h))?;
    let x1 = &state.x + (&k1.0 + &k2.0 * 2.0 + &k3.0 * 2.0 + &k4.0) * (h / 6.0);
    let u1 = &u_mat + (&k1.1 + &k2.1 * 2.0 + &k3.1 * 2.0 + &k4.1) * (h / 6.0);

    // map back: u = rUν, 𝒮 = rη ΠUΠ
    let nu1 = surface.normal_in(region, &x1)?;
    let u_vec1 = &u1 * &nu1 * r;
    let pi1 = tangential_projector(&nu1);
    let s1 = &pi1 * &u1 * &pi1 * (r * inertia.eta);

    // reference: raw RK4 step of the (u, 𝒮) form (no renormalization)
    let reference = rk4_raw(surface, region, &Raw::from_state(state), inertia.eta, h)?;
    let diff = (&x1 - &reference.x)
        .amax()
        .max((&u_vec1 - &reference.u).amax())
        .max((&s1 - &reference.s).amax());

    Ok(UCrosscheck {
        u_matrix: SkewMap::projected(&u_mat),
        step_difference: diff,
    })
}

/// Random admissible state on a surface: uniform-ish position, tangent
/// velocity of the requested speed, bounded tangential spin.
pub fn random_tangent_state<R: Rng>(
    surface: &PancakeSurface,
    rng: &mut R,
    speed: f64,
    spin_scale: f64,
) -> RollingState {
    let m = surface.ambient_dim();
    loop {
        let x = surface.sample_point(rng);
        let class = surface.classify(&x).expect("sampled point classifies");
        if class.kind == RegionKind::Seam || class.seam_distance < 1e-6 {
            continue;
        }
        let nu = surface.normal(&x).expect("sampled point has a normal");
        let pi = tangential_projector(&nu);
        let mut u = DVector::from_fn(m, |_, _| rng.gen_range(-1.0f64..1.0));
        u = &pi * u;
        let n = u.norm();
        if n < 1e-6 {
            continue;
        }
        u *= speed / n;
        let raw = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0f64..1.0));
        let mut s = &pi * raw * &pi;
        s = (&s - s.transpose()) * 0.5;
        let ns = s.norm();
        if ns > 1e-12 {
            s *= spin_scale / ns;
        }
        return RollingState {
            x,
            u,
            spin: SkewMap::from_raw_unchecked(s),
        };
    }
}
