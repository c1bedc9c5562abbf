//! No-slip billiards: straight free flight in a plate with collisions that
//! exchange tangential velocity and tangential spin.
//!
//! Between collisions u and 𝒮 are constant. At a boundary point with inward
//! normal 𝕟 the full map is
//!
//!   u' = c_β u − (s_β/γ)(u·𝕟)𝕟 + s_β γ r S𝕟
//!   S' = S + (s_β/(γr)) 𝕟 ∧ [u − r S𝕟]
//!
//! which in the boundary-frame variables (ū, W = 𝒮𝕟, u⊥) is u⊥ → −u⊥ and
//! (ū, W) → [[cos θ, sin θ], [sin θ, −cos θ]](ū, W) with θ = β(γ); the block
//! Π𝒮Π is a spectator. γ = 0 decouples into specular reflection with a
//! W sign flip.

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::spline::{cross2, rot90, ClosedCurve};
use crate::geometry::{tangential_projector, GeometryError, SkewMap};

#[derive(Debug, Error)]
pub enum BilliardError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("boundary normal is not unit length")]
    BadNormal,
    #[error("ray hits a polygon vertex; orbit terminated")]
    VertexHit,
    #[error("orbit leaves the unbounded domain")]
    LeftDomain,
    #[error("flight found no boundary within the time budget")]
    NoHit,
    #[error("velocity is tangent to the boundary; no transversal flight")]
    Tangential,
    #[error("orbit has {got} segments; need at least {needed}")]
    TooFewSegments { needed: usize, got: usize },
    #[error("caustic statistics are defined for disc domains")]
    NotADisc,
}

/// Billiard table descriptions; serialized with the same `family` tag scheme
/// as the plate specs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disc { radius: f64 },
    HalfPlane,
    ConvexPolygon { vertices: Vec<[f64; 2]> },
    SmoothCurve { samples: Vec<[f64; 2]> },
    SinaiTorus { period: f64, hole_radius: f64 },
}

#[derive(Debug, Clone)]
pub struct BilliardDomain {
    spec: DomainSpec,
    curve: Option<ClosedCurve>,
}

impl BilliardDomain {
    pub fn new(spec: DomainSpec) -> Result<Self, BilliardError> {
        let curve = match &spec {
            DomainSpec::Disc { radius } => {
                if !(*radius > 0.0) {
                    return Err(BilliardError::InvalidDomain("disc radius must be > 0".into()));
                }
                None
            }
            DomainSpec::HalfPlane => None,
            DomainSpec::ConvexPolygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(BilliardError::InvalidDomain(
                        "polygon needs at least 3 vertices".into(),
                    ));
                }
                let pts: Vec<Vector2<f64>> =
                    vertices.iter().map(|v| Vector2::new(v[0], v[1])).collect();
                let n = pts.len();
                let mut area = 0.0;
                for i in 0..n {
                    area += cross2(pts[i], pts[(i + 1) % n]);
                }
                if area <= 0.0 {
                    return Err(BilliardError::InvalidDomain(
                        "polygon vertices must be counterclockwise".into(),
                    ));
                }
                for i in 0..n {
                    let a = pts[(i + 1) % n] - pts[i];
                    let b = pts[(i + 2) % n] - pts[(i + 1) % n];
                    if cross2(a, b) <= 0.0 {
                        return Err(BilliardError::InvalidDomain(
                            "polygon must be strictly convex".into(),
                        ));
                    }
                }
                None
            }
            DomainSpec::SmoothCurve { samples } => {
                let pts = samples.iter().map(|v| Vector2::new(v[0], v[1])).collect();
                Some(ClosedCurve::new(pts).map_err(BilliardError::Geometry)?)
            }
            DomainSpec::SinaiTorus {
                period,
                hole_radius,
            } => {
                if !(*period > 0.0 && *hole_radius > 0.0 && *hole_radius < period / 2.0) {
                    return Err(BilliardError::InvalidDomain(
                        "sinai torus needs 0 < hole_radius < period/2".into(),
                    ));
                }
                None
            }
        };
        Ok(Self { spec, curve })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        2
    }

    /// Reference center for chord-distance statistics.
    pub fn center(&self) -> Vector2<f64> {
        match &self.spec {
            DomainSpec::SinaiTorus { period, .. } => Vector2::new(period / 2.0, period / 2.0),
            _ => Vector2::zeros(),
        }
    }

    pub fn wrap(&self, x: Vector2<f64>) -> Vector2<f64> {
        match &self.spec {
            DomainSpec::SinaiTorus { period, .. } => {
                Vector2::new(x.x.rem_euclid(*period), x.y.rem_euclid(*period))
            }
            _ => x,
        }
    }
}

/// Collision angle θ = β(γ) of the full map: cos β = c_β, sin β = s_β.
pub fn beta_angle(gamma: f64) -> f64 {
    let (c, s) = crate::oracles::cbeta_sbeta(gamma);
    s.atan2(c)
}

/// The full no-slip collision map C_q(u, S) at a boundary point with inward
/// unit normal `n`; `s_angular` is the unscaled angular velocity matrix and
/// `r` the ball radius (the physics depends on r only through 𝒮 = rγS).
/// γ = 0 uses the decoupled limit: specular u, W sign-flipped.
pub fn collision_full(
    u: &DVector<f64>,
    s_angular: &SkewMap,
    n: &DVector<f64>,
    r: f64,
    gamma: f64,
) -> Result<(DVector<f64>, SkewMap), BilliardError> {
    let k = u.len();
    if s_angular.dim() != k || n.len() != k {
        return Err(BilliardError::DimensionMismatch {
            expected: k,
            got: s_angular.dim().min(n.len()),
        });
    }
    if (n.norm() - 1.0).abs() > 1e-9 {
        return Err(BilliardError::BadNormal);
    }
    let s = s_angular.matrix();
    if gamma == 0.0 {
        let u_out = u - n * (2.0 * u.dot(n));
        let sn = s * n;
        let wedge_nsn = &sn * n.transpose() - n * sn.transpose();
        let s_out = s - wedge_nsn * 2.0;
        return Ok((u_out, SkewMap::from_raw_unchecked(s_out)));
    }
    let (cb, sb) = crate::oracles::cbeta_sbeta(gamma);
    let sn = s * n;
    let u_out = u * cb - n * (sb / gamma * u.dot(n)) + &sn * (sb * gamma * r);
    let arg = u - &sn * r;
    let wedge_n_arg = &arg * n.transpose() - n * arg.transpose();
    let s_out = s + wedge_n_arg * (sb / (gamma * r));
    Ok((u_out, SkewMap::from_raw_unchecked(s_out)))
}

/// The reduced map on boundary-frame components: u⊥ flips and
/// (ū, W) → [[cos θ, sin θ], [sin θ, −cos θ]](ū, W).
pub fn collision_reduced(
    u_bar: &DVector<f64>,
    w: &DVector<f64>,
    u_perp: f64,
    theta: f64,
) -> (DVector<f64>, DVector<f64>, f64) {
    let (c, s) = (theta.cos(), theta.sin());
    (u_bar * c + w * s, u_bar * s - w * c, -u_perp)
}

/// Outcome of a free flight: boundary hit point, flight time, inward normal.
#[derive(Debug, Clone)]
pub struct FlightHit {
    pub point: Vector2<f64>,
    pub time: f64,
    pub normal_in: Vector2<f64>,
}

/// Exact (or safeguarded) first intersection of the ray x + t u with the
/// domain boundary.
pub fn flight_to_boundary(
    domain: &BilliardDomain,
    x: Vector2<f64>,
    u: Vector2<f64>,
) -> Result<FlightHit, BilliardError> {
    let speed = u.norm();
    if speed < 1e-300 {
        return Err(BilliardError::Tangential);
    }
    match &domain.spec {
        DomainSpec::Disc { radius } => {
            let a = u.norm_squared();
            let b = x.dot(&u);
            let mut c = x.norm_squared() - radius * radius;
            if c > 0.0 && c < 1e-12 * radius * radius {
                c = 0.0;
            }
            if c > 0.0 {
                return Err(BilliardError::LeftDomain);
            }
            let disc = (b * b - a * c).max(0.0).sqrt();
            let t = (-b + disc) / a;
            let t_min = 1e-12 * radius / speed;
            if t <= t_min {
                return Err(BilliardError::Tangential);
            }
            let point = x + u * t;
            Ok(FlightHit {
                normal_in: -point / point.norm(),
                point,
                time: t,
            })
        }
        DomainSpec::HalfPlane => {
            // plate {y >= 0}, boundary y = 0, inward normal +e_y
            if u.y >= 0.0 {
                return Err(BilliardError::LeftDomain);
            }
            let t = -x.y / u.y;
            Ok(FlightHit {
                point: Vector2::new(x.x + t * u.x, 0.0),
                time: t,
                normal_in: Vector2::new(0.0, 1.0),
            })
        }
        DomainSpec::ConvexPolygon { vertices } => {
            let pts: Vec<Vector2<f64>> =
                vertices.iter().map(|v| Vector2::new(v[0], v[1])).collect();
            let n = pts.len();
            let diam = pts
                .iter()
                .flat_map(|p| pts.iter().map(move |q| (p - q).norm()))
                .fold(0.0, f64::max);
            let t_min = 1e-12 * diam / speed;
            let mut best: Option<(f64, usize, f64)> = None;
            for i in 0..n {
                let a = pts[i];
                let d = pts[(i + 1) % n] - a;
                let denom = cross2(u, d);
                if denom.abs() < 1e-300 {
                    continue;
                }
                // solve x + t u = a + s d
                let t = cross2(a - x, d) / denom;
                let s = cross2(a - x, u) / denom;
                if t > t_min
                    && (-1e-12..=1.0 + 1e-12).contains(&s)
                    && best.is_none_or(|(bt, _, _)| t < bt)
                {
                    best = Some((t, i, s));
                }
            }
            let (t, i, s) = best.ok_or(BilliardError::LeftDomain)?;
            let vertex_tol = 1e-9;
            if s < vertex_tol || s > 1.0 - vertex_tol {
                return Err(BilliardError::VertexHit);
            }
            let a = pts[i];
            let d = pts[(i + 1) % n] - a;
            let normal_in = rot90(d / d.norm()); // interior is left of CCW edges
            Ok(FlightHit {
                point: x + u * t,
                time: t,
                normal_in,
            })
        }
        DomainSpec::SmoothCurve { .. } => {
            let curve = domain.curve.as_ref().expect("smooth domain has a curve");
            flight_to_smooth_curve(curve, x, u)
        }
        DomainSpec::SinaiTorus {
            period,
            hole_radius,
        } => flight_in_sinai(*period, *hole_radius, domain.center(), x, u),
    }
}

fn flight_to_smooth_curve(
    curve: &ClosedCurve,
    x: Vector2<f64>,
    u: Vector2<f64>,
) -> Result<FlightHit, BilliardError> {
    let speed = u.norm();
    let n = curve.n();
    let samples_per = 24usize;
    let t_min = 1e-9 * (1.0 + x.norm()) / speed;
    let mut best: Option<(f64, f64)> = None; // (time, parameter)
    let g = |s: f64| cross2(curve.eval(s) - x, u);
    for i in 0..n * samples_per {
        let s0 = i as f64 / samples_per as f64;
        let s1 = (i + 1) as f64 / samples_per as f64;
        let (g0, g1) = (g(s0), g(s1));
        if g0 == 0.0 || g0 * g1 < 0.0 {
            let (mut lo, mut hi) = (s0, s1);
            let mut glo = g0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if glo * gm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
            }
            let s_star = 0.5 * (lo + hi);
            let t = (curve.eval(s_star) - x).dot(&u) / (speed * speed);
            if t > t_min && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, s_star));
            }
        }
    }
    let (t, s_star) = best.ok_or(BilliardError::NoHit)?;
    Ok(FlightHit {
        point: x + u * t,
        time: t,
        normal_in: curve.normal_in(s_star),
    })
}

fn flight_in_sinai(
    period: f64,
    hole_radius: f64,
    center: Vector2<f64>,
    x: Vector2<f64>,
    u: Vector2<f64>,
) -> Result<FlightHit, BilliardError> {
    let speed = u.norm();
    let mut pos = Vector2::new(x.x.rem_euclid(period), x.y.rem_euclid(period));
    let mut elapsed = 0.0;
    let advance = period / (2.0 * speed);
    let budget = 2e4 * period / speed;
    let t_min = 1e-12 * period / speed;
    while elapsed < budget {
        // candidate hole images near the current cell
        let mut best: Option<(f64, Vector2<f64>)> = None;
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let c = center + Vector2::new(di as f64 * period, dj as f64 * period);
                let rel = pos - c;
                let b = rel.dot(&u);
                let cq = rel.norm_squared() - hole_radius * hole_radius;
                let disc = b * b - speed * speed * cq;
                if disc <= 0.0 {
                    continue;
                }
                let t = (-b - disc.sqrt()) / (speed * speed);
                if t > t_min && t <= advance && best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, c));
                }
            }
        }
        if let Some((t, c)) = best {
            let hit = pos + u * t;
            let normal_in = (hit - c) / hole_radius;
            return Ok(FlightHit {
                point: Vector2::new(hit.x.rem_euclid(period), hit.y.rem_euclid(period)),
                time: elapsed + t,
                normal_in,
            });
        }
        pos = Vector2::new(
            (pos.x + u.x * advance).rem_euclid(period),
            (pos.y + u.y * advance).rem_euclid(period),
        );
        elapsed += advance;
    }
    Err(BilliardError::NoHit)
}

/// State of the no-slip billiard ball in plate coordinates.
#[derive(Debug, Clone)]
pub struct BilliardState {
    pub x: Vector2<f64>,
    pub u: Vector2<f64>,
    /// full k×k tangential spin (k = 2 here); only W = 𝒮𝕟 participates in
    /// collisions, the tangential block rides along
    pub spin: SkewMap,
}

impl BilliardState {
    pub fn new(x: Vector2<f64>, u: Vector2<f64>, spin_scalar: f64) -> Self {
        // k = 2: 𝒮 = s·(e1∧e2)
        let mut s = DMatrix::zeros(2, 2);
        s[(1, 0)] = spin_scalar;
        s[(0, 1)] = -spin_scalar;
        Self {
            x,
            u,
            spin: SkewMap::from_raw_unchecked(s),
        }
    }

    pub fn spin_scalar(&self) -> f64 {
        self.spin.matrix()[(1, 0)]
    }

    pub fn reversed(&self) -> Self {
        Self {
            x: self.x,
            u: -self.u,
            spin: -self.spin.clone(),
        }
    }
}

/// Kinetic energy in the billiard normalization: |u|² + ½Tr(𝒮𝒮ᵀ).
pub fn billiard_energy(state: &BilliardState) -> f64 {
    state.u.norm_squared() + 0.5 * state.spin.frobenius_norm().powi(2)
}

/// One collision record of an orbit.
#[derive(Debug, Clone)]
pub struct CollisionRecord {
    pub index: usize,
    pub point: Vector2<f64>,
    pub time: f64,
    pub normal_in: Vector2<f64>,
    /// outgoing velocity
    pub u_out: Vector2<f64>,
    /// outgoing spin-vector components in the boundary tangent basis
    pub w_out: Vec<f64>,
    /// distance from the domain center to the incoming chord line
    pub chord_dist: f64,
}

#[derive(Debug, Clone)]
pub struct Orbit {
    pub initial: BilliardState,
    pub states: Vec<BilliardState>,
    pub records: Vec<CollisionRecord>,
    pub max_energy_drift: f64,
}

/// Applies the reduced collision map to a billiard state at a wall point
/// with inward normal `n2` (position unchanged).
pub fn collide_at(state: &BilliardState, n2: Vector2<f64>, theta: f64) -> BilliardState {
    let n = DVector::from_vec(vec![n2.x, n2.y]);
    let u = DVector::from_vec(vec![state.u.x, state.u.y]);
    let u_perp = u.dot(&n);
    let u_bar = &u - &n * u_perp;
    let w = state.spin.apply(&n);
    let (u_bar_out, w_out, u_perp_out) = collision_reduced(&u_bar, &w, u_perp, theta);
    let u_out = &u_bar_out + &n * u_perp_out;
    let pi = tangential_projector(&n);
    let block = &pi * state.spin.matrix() * &pi;
    let spin_out = &block + (&w_out * n.transpose() - &n * w_out.transpose());
    BilliardState {
        x: state.x,
        u: Vector2::new(u_out[0], u_out[1]),
        spin: SkewMap::projected(&spin_out),
    }
}

/// Runs a no-slip billiard orbit: alternating exact flights and reduced
/// collisions with angle θ. Energy and the spectator block are conserved
/// collision by collision.
pub fn billiard_orbit(
    domain: &BilliardDomain,
    state0: &BilliardState,
    theta: f64,
    n_collisions: usize,
) -> Result<Orbit, BilliardError> {
    let mut state = state0.clone();
    let mut orbit = Orbit {
        initial: state0.clone(),
        states: Vec::with_capacity(n_collisions),
        records: Vec::with_capacity(n_collisions),
        max_energy_drift: 0.0,
    };
    let e0 = billiard_energy(state0);
    let center = domain.center();
    let mut clock = 0.0;
    for index in 1..=n_collisions {
        let hit = flight_to_boundary(domain, state.x, state.u)?;
        clock += hit.time;

        // chord distance of the incoming segment
        let a = state.x - center;
        let b = hit.point - center;
        let chord = (b - a).norm();
        let chord_dist = if chord > 1e-300 {
            cross2(a, b).abs() / chord
        } else {
            a.norm()
        };

        let arrived = BilliardState {
            x: hit.point,
            u: state.u,
            spin: state.spin.clone(),
        };
        state = collide_at(&arrived, hit.normal_in, theta);
        let drift = (billiard_energy(&state) - e0).abs() / e0.max(1e-300);
        orbit.max_energy_drift = orbit.max_energy_drift.max(drift);
        let tangent = rot90(hit.normal_in);
        let w_out_vec = state.spin.apply(&DVector::from_vec(vec![
            hit.normal_in.x,
            hit.normal_in.y,
        ]));
        orbit.records.push(CollisionRecord {
            index,
            point: hit.point,
            time: clock,
            normal_in: hit.normal_in,
            u_out: state.u,
            w_out: vec![Vector2::new(w_out_vec[0], w_out_vec[1]).dot(&tangent)],
            chord_dist,
        });
        orbit.states.push(state.clone());
    }
    Ok(orbit)
}

/// Clusters the per-segment chord distances of a disc orbit. Returns the
/// cluster centers with multiplicities, separated by gaps > 1e-6·R.
pub fn caustic_radii(
    domain: &BilliardDomain,
    orbit: &Orbit,
) -> Result<Vec<(f64, usize)>, BilliardError> {
    let radius = match domain.spec() {
        DomainSpec::Disc { radius } => *radius,
        _ => return Err(BilliardError::NotADisc),
    };
    if orbit.records.len() < 50 {
        return Err(BilliardError::TooFewSegments {
            needed: 50,
            got: orbit.records.len(),
        });
    }
    let mut dists: Vec<f64> = orbit.records.iter().map(|r| r.chord_dist).collect();
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gap = 1e-6 * radius;
    let mut clusters = Vec::new();
    let mut start = 0usize;
    for i in 1..=dists.len() {
        if i == dists.len() || dists[i] - dists[i - 1] > gap {
            let slice = &dists[start..i];
            let mean = slice.iter().sum::<f64>() / slice.len() as f64;
            clusters.push((mean, slice.len()));
            start = i;
        }
    }
    Ok(clusters)
}
