//! The billiard-limit laboratory: roll a ball across a rounded plate edge at
//! decreasing radii and measure the induced velocity map.
//!
//! An edge crossing starts on a seam with the velocity pointing into the
//! tube, integrates until the trajectory exits to a flat sheet (either one —
//! the ball may turn around midway), and reports the outgoing velocities in
//! the plate frame of the entry boundary point. As r → 0 the measured map
//! converges to the non-holonomic collision map: u⊥ flips and
//! (ū, W) → [[cos πη, sin πη], [sin πη, −cos πη]](ū, W).
//!
//! Frame conventions: ū and u⊥ use the edge tangent basis and the inward
//! plate normal 𝕟; the spin-vector coordinate is measured with the outward
//! co-normal, w = 𝒮·(−𝕟), which is the coordinate in which the straight-edge
//! map takes the displayed form for finite r already. The plate is flat, so
//! the frame parallel-transported along the edge from the entry point is the
//! entry frame itself.

use nalgebra::{DMatrix, DVector, Vector2};
use thiserror::Error;

use crate::billiard::{self, BilliardDomain, BilliardError, BilliardState, DomainSpec};
use crate::dynamics::{
    self, energy, DynamicsError, InertiaParams, IntegrateOptions, RollingState,
};
use crate::geometry::{
    build_pancake, GeometryError, PancakeSurface, PlateFrame, PlateSpec, RegionKind, SkewMap,
};

#[derive(Debug, Error)]
pub enum LimitError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Billiard(#[from] BilliardError),
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("ball did not exit the edge tube within the time budget ({budget:.3e})")]
    NonExit { budget: f64 },
}

/// Velocity data in the plate frame at a boundary point: edge-tangent
/// components ū, normal component u⊥, outward spin-vector coordinates w, and
/// the spectator spin block on the edge tangent space.
#[derive(Debug, Clone)]
pub struct SplitVelocity {
    pub u_bar: DVector<f64>,
    pub u_perp: f64,
    pub w: DVector<f64>,
    pub block: DMatrix<f64>,
}

impl SplitVelocity {
    pub fn speed(&self) -> f64 {
        (self.u_bar.norm_squared() + self.u_perp * self.u_perp).sqrt()
    }

    /// Sup-norm distance over the (ū, w, u⊥) components.
    pub fn sup_distance(&self, other: &SplitVelocity) -> f64 {
        let mut worst = (self.u_perp - other.u_perp).abs();
        worst = worst.max((&self.u_bar - &other.u_bar).amax());
        worst.max((&self.w - &other.w).amax())
    }

    /// The non-holonomic collision map with angle θ = πη: u⊥ flips,
    /// (ū, w) rotate by the reflection block, the spectator is untouched.
    pub fn noslip_image(&self, eta: f64) -> SplitVelocity {
        let theta = std::f64::consts::PI * eta;
        let (u_bar, w, u_perp) =
            billiard::collision_reduced(&self.u_bar, &self.w, self.u_perp, theta);
        SplitVelocity {
            u_bar,
            w,
            u_perp,
            block: self.block.clone(),
        }
    }

    pub fn reversed(&self) -> SplitVelocity {
        SplitVelocity {
            u_bar: -&self.u_bar,
            u_perp: -self.u_perp,
            w: -&self.w,
            block: -&self.block,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitSide {
    Opposite,
    Same,
}

impl ExitSide {
    pub fn label(self) -> &'static str {
        match self {
            ExitSide::Opposite => "opposite",
            ExitSide::Same => "same",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CrossingOutcome {
    pub outgoing: SplitVelocity,
    pub exit_side: ExitSide,
    pub traversal_time: f64,
    /// τ-duration c·t/r of the crossing (c = bundle-norm of the initial
    /// state); approaches π·c/|μ| — the straight-edge value — as r → 0.
    pub rescaled_duration: f64,
    /// range of μ = u·E over the crossing (E the meridian tangent)
    pub mu_drift: f64,
    pub energy_drift: f64,
    /// plate point below the exit state (ambient coordinates, vertical 0)
    pub exit_contact: DVector<f64>,
    /// in-plate distance between entry and exit contact points
    pub exit_point_shift: f64,
}

/// Lifts split velocity data to a rolling state at the seam above (side > 0)
/// or below (side < 0) the frame's boundary point.
pub fn lift_state(
    surface: &PancakeSurface,
    frame: &PlateFrame,
    incoming: &SplitVelocity,
    side: f64,
) -> Result<RollingState, LimitError> {
    let m = surface.ambient_dim();
    let k_edge = frame.edge_tangents.len();
    if incoming.u_bar.len() != k_edge || incoming.w.len() != k_edge {
        return Err(LimitError::InvalidExperiment(format!(
            "split data has {} edge components, plate edge has {}",
            incoming.u_bar.len(),
            k_edge
        )));
    }
    let x = surface.seam_point(frame, side);
    let mut u = &frame.normal_in * incoming.u_perp;
    let mut w_vec = DVector::zeros(m);
    for (i, t) in frame.edge_tangents.iter().enumerate() {
        u += t * incoming.u_bar[i];
        w_vec += t * incoming.w[i];
    }
    // w is the outward-co-normal coordinate: 𝒮𝕟 = −w_vec
    let mut s = -(&w_vec * frame.normal_in.transpose() - &frame.normal_in * w_vec.transpose());
    for i in 0..k_edge {
        for j in 0..k_edge {
            // (𝒮 t̂_j)·t̂_i = block[(i, j)]
            if incoming.block[(i, j)] != 0.0 {
                s += frame.edge_tangents[i].clone() * frame.edge_tangents[j].transpose()
                    * incoming.block[(i, j)];
            }
        }
    }
    let s = (&s - s.transpose()) * 0.5;
    Ok(RollingState::new(
        surface,
        x,
        u,
        SkewMap::projected(&s),
    )?)
}

/// Measures the plate-frame split of a rolling state near a seam, in the
/// given (entry) frame.
pub fn split_state(frame: &PlateFrame, state: &RollingState) -> SplitVelocity {
    let k_edge = frame.edge_tangents.len();
    let u_bar = DVector::from_fn(k_edge, |i, _| state.u.dot(&frame.edge_tangents[i]));
    let u_perp = state.u.dot(&frame.normal_in);
    let sn = state.spin.apply(&frame.normal_in);
    let w = DVector::from_fn(k_edge, |i, _| -sn.dot(&frame.edge_tangents[i]));
    let block = DMatrix::from_fn(k_edge, k_edge, |i, j| {
        (state.spin.matrix() * &frame.edge_tangents[j]).dot(&frame.edge_tangents[i])
    });
    SplitVelocity {
        u_bar,
        u_perp,
        w,
        block,
    }
}

/// Integrates one edge crossing: from the seam into the tube until the
/// trajectory exits to a flat sheet. `steps_per_crossing` sets h = πr/(|μ|N).
pub fn run_edge_crossing(
    surface: &PancakeSurface,
    frame: &PlateFrame,
    incoming: &SplitVelocity,
    side: f64,
    eta: f64,
    steps_per_crossing: usize,
) -> Result<CrossingOutcome, LimitError> {
    if incoming.u_perp >= 0.0 {
        return Err(LimitError::InvalidExperiment(
            "incoming state must head into the edge (u_perp < 0)".into(),
        ));
    }
    let inertia = InertiaParams::from_eta(eta)?;
    let r = surface.radius();
    let speed = incoming.speed();
    let mu0 = incoming.u_perp.abs();
    let nominal = std::f64::consts::PI * r / mu0;
    let budget = 1e3 * std::f64::consts::PI * r / speed;
    let h = nominal / steps_per_crossing as f64;

    let state0 = lift_state(surface, frame, incoming, side)?;
    let e0 = energy(&state0);
    let c_norm = (2.0 * e0).sqrt();
    let entry_kind = if side > 0.0 {
        RegionKind::FlatSheetPlus
    } else {
        RegionKind::FlatSheetMinus
    };

    let opts = IntegrateOptions {
        renormalize: true,
        record_stride: 1,
        stop_after_events: Some(1),
    };
    let mut state = state0;
    let mut elapsed = 0.0;
    let chunk = 4.0 * nominal;
    let mut mu_min = f64::INFINITY;
    let mut mu_max = f64::NEG_INFINITY;
    loop {
        if elapsed >= budget {
            return Err(LimitError::NonExit { budget });
        }
        let t_end = chunk.min(budget - elapsed).max(h);
        let traj = dynamics::integrate(surface, &state, inertia, t_end, h, &opts)?;
        for (st, region) in traj.states.iter().zip(&traj.regions) {
            if surface.region_kind(*region) == RegionKind::EdgeTube {
                if let Ok(e_m) = surface.meridian_direction(&st.x) {
                    let mu = st.u.dot(&e_m);
                    mu_min = mu_min.min(mu);
                    mu_max = mu_max.max(mu);
                }
            }
        }
        if let Some(event) = traj.events.first() {
            let t_exit = elapsed + event.t;
            let exit_state = traj.last();
            let exit_side = if event.to_kind == entry_kind {
                ExitSide::Same
            } else {
                ExitSide::Opposite
            };
            let outgoing = split_state(frame, exit_state);
            let e1 = energy(exit_state);
            let exit_contact = {
                let mut p = exit_state.x.clone();
                p[surface.ambient_dim() - 1] = 0.0;
                p
            };
            let exit_point_shift = surface.position_delta(&frame.point, &exit_contact).norm();
            return Ok(CrossingOutcome {
                outgoing,
                exit_side,
                traversal_time: t_exit,
                rescaled_duration: c_norm * t_exit / r,
                mu_drift: if mu_min.is_finite() { mu_max - mu_min } else { 0.0 },
                energy_drift: (e1 - e0).abs() / e0.max(1e-300),
                exit_contact,
                exit_point_shift,
            });
        }
        elapsed += *traj.times.last().unwrap();
        state = traj.last().clone();
    }
}

/// One edge-crossing experiment over a family of radii.
#[derive(Debug, Clone)]
pub struct EdgeExperiment {
    pub plate: PlateSpec,
    /// a point on (or near) the plate boundary, ambient coordinates
    pub boundary_point: DVector<f64>,
    pub incoming: SplitVelocity,
    pub eta: f64,
    /// strictly decreasing ball radii
    pub radii: Vec<f64>,
    pub steps_per_crossing: usize,
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub r: f64,
    pub map_error: f64,
    pub traversal_time: f64,
    pub rescaled_duration: f64,
    pub exit_side: Option<ExitSide>,
    pub non_exit: bool,
    pub mu_drift: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// least-squares slope of log(error) vs log(r); `None` when the errors sit
    /// at measurement precision (the exact straight-edge case)
    pub fitted_rate: Option<f64>,
}

/// Runs the crossing at every radius and compares the measured map with the
/// non-holonomic collision map.
pub fn convergence_study(experiment: &EdgeExperiment) -> Result<ConvergenceReport, LimitError> {
    if experiment.radii.len() < 4 {
        return Err(LimitError::InvalidExperiment(
            "need at least 4 radii".into(),
        ));
    }
    let span = experiment.radii.first().unwrap() / experiment.radii.last().unwrap();
    if span < 99.0 {
        return Err(LimitError::InvalidExperiment(
            "radii must span at least two decades".into(),
        ));
    }
    if experiment
        .radii
        .windows(2)
        .any(|pair| pair[1] >= pair[0])
    {
        return Err(LimitError::InvalidExperiment(
            "radii must be strictly decreasing".into(),
        ));
    }
    let expected = experiment.incoming.noslip_image(experiment.eta);
    let mut rows = Vec::with_capacity(experiment.radii.len());
    for &r in &experiment.radii {
        let surface = build_pancake(experiment.plate.clone(), r)?;
        let frame = surface.edge_frame(&experiment.boundary_point)?;
        match run_edge_crossing(
            &surface,
            &frame,
            &experiment.incoming,
            1.0,
            experiment.eta,
            experiment.steps_per_crossing,
        ) {
            Ok(outcome) => rows.push(ConvergenceRow {
                r,
                map_error: outcome.outgoing.sup_distance(&expected),
                traversal_time: outcome.traversal_time,
                rescaled_duration: outcome.rescaled_duration,
                exit_side: Some(outcome.exit_side),
                non_exit: false,
                mu_drift: outcome.mu_drift,
            }),
            Err(LimitError::NonExit { .. }) => rows.push(ConvergenceRow {
                r,
                map_error: f64::NAN,
                traversal_time: f64::NAN,
                rescaled_duration: f64::NAN,
                exit_side: None,
                non_exit: true,
                mu_drift: f64::NAN,
            }),
            Err(other) => return Err(other),
        }
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| !row.non_exit && row.map_error > 1e-10)
        .map(|row| (row.r.ln(), row.map_error.ln()))
        .collect();
    let fitted_rate = if pts.len() >= 2 {
        Some(least_squares_slope(&pts))
    } else {
        None
    };
    Ok(ConvergenceReport { rows, fitted_rate })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Paired rolling/billiard runs from the same initial data.
#[derive(Debug, Clone)]
pub struct PairedOrbits {
    pub rolling_hits: Vec<Vector2<f64>>,
    pub billiard_hits: Vec<Vector2<f64>>,
    /// per-collision distance between the two hit points
    pub divergence: Vec<f64>,
    pub rolling_chord_dists: Vec<f64>,
    pub billiard_chord_dists: Vec<f64>,
    pub rolling_exit_sides: Vec<ExitSide>,
}

/// Runs the rolling system (exact sheet flights + integrated tube crossings)
/// against the no-slip billiard with θ = πη from the same initial data.
///
/// `spin_scalar` is the rolling sheet-spin scalar c in 𝒮 = c(e₁∧e₂); the
/// matching billiard ball carries the opposite spin sign, which is exactly
/// the outward-co-normal identification of the spin-vector coordinate.
pub fn rolling_vs_billiard_orbit(
    plate: &PlateSpec,
    r: f64,
    eta: f64,
    x0: Vector2<f64>,
    u0: Vector2<f64>,
    spin_scalar: f64,
    n_crossings: usize,
    steps_per_crossing: usize,
) -> Result<PairedOrbits, LimitError> {
    let domain_spec = match plate {
        PlateSpec::Disc { radius } => DomainSpec::Disc { radius: *radius },
        PlateSpec::SinaiTorus {
            period,
            hole_radius,
        } => DomainSpec::SinaiTorus {
            period: *period,
            hole_radius: *hole_radius,
        },
        _ => {
            return Err(LimitError::InvalidExperiment(
                "paired orbits support disc and sinai plates".into(),
            ))
        }
    };
    let domain = BilliardDomain::new(domain_spec)?;
    let surface = build_pancake(plate.clone(), r)?;
    let center = domain.center();

    // billiard side
    let billiard_state = BilliardState::new(x0, u0, -spin_scalar);
    let theta = std::f64::consts::PI * eta;
    let orbit = billiard::billiard_orbit(&domain, &billiard_state, theta, n_crossings)?;

    // rolling side: planar position p, planar velocity v, sheet spin c, side σ
    let mut p = x0;
    let mut v = u0;
    let mut c = spin_scalar;
    let mut side = 1.0f64;
    let mut rolling_hits = Vec::with_capacity(n_crossings);
    let mut rolling_chord_dists = Vec::with_capacity(n_crossings);
    let mut rolling_exit_sides = Vec::with_capacity(n_crossings);
    for _ in 0..n_crossings {
        let hit = billiard::flight_to_boundary(&domain, p, v)?;
        // chord distance of this sheet segment
        let a = p - center;
        let b = hit.point - center;
        let chord = (b - a).norm();
        rolling_chord_dists.push(if chord > 1e-300 {
            crate::geometry::spline::cross2(a, b).abs() / chord
        } else {
            a.norm()
        });
        rolling_hits.push(hit.point);

        let hit_ambient = DVector::from_vec(vec![hit.point.x, hit.point.y, 0.0]);
        let frame = surface.edge_frame(&hit_ambient)?;
        let t_hat = &frame.edge_tangents[0];
        let u_bar = DVector::from_vec(vec![
            t_hat[0] * v.x + t_hat[1] * v.y,
        ]);
        let u_perp = frame.normal_in[0] * v.x + frame.normal_in[1] * v.y;
        // sheet spin 𝒮 = c(e₁∧e₂): outward coordinate w = (𝒮(−𝕟))·t̂ = −c
        let incoming = SplitVelocity {
            u_bar,
            u_perp,
            w: DVector::from_vec(vec![-c]),
            block: DMatrix::zeros(1, 1),
        };
        let outcome =
            run_edge_crossing(&surface, &frame, &incoming, side, eta, steps_per_crossing)?;
        rolling_exit_sides.push(outcome.exit_side);
        if outcome.exit_side == ExitSide::Opposite {
            side = -side;
        }
        let out = &outcome.outgoing;
        v = Vector2::new(
            t_hat[0] * out.u_bar[0] + frame.normal_in[0] * out.u_perp,
            t_hat[1] * out.u_bar[0] + frame.normal_in[1] * out.u_perp,
        );
        c = -out.w[0];
        // the next sheet flight starts at the actual exit contact point
        p = domain.wrap(Vector2::new(outcome.exit_contact[0], outcome.exit_contact[1]));
    }

    let billiard_hits: Vec<Vector2<f64>> = orbit.records.iter().map(|r| r.point).collect();
    let divergence = rolling_hits
        .iter()
        .zip(&billiard_hits)
        .map(|(a, b)| {
            let d = surface.position_delta(
                &DVector::from_vec(vec![a.x, a.y, 0.0]),
                &DVector::from_vec(vec![b.x, b.y, 0.0]),
            );
            (d[0] * d[0] + d[1] * d[1]).sqrt()
        })
        .collect();
    Ok(PairedOrbits {
        rolling_hits,
        billiard_hits,
        divergence,
        rolling_chord_dists,
        billiard_chord_dists: orbit.records.iter().map(|r| r.chord_dist).collect(),
        rolling_exit_sides,
    })
}
