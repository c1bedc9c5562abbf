//! Scenario dispatch and file output.
//!
//! Every run writes its data files plus a manifest (config echo, version,
//! wall time). Outputs are deterministic for a fixed config: all sampling is
//! seeded and floats are printed with 17 significant digits, so identical
//! configs produce byte-identical CSV/JSON data files.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::billiard::{self, BilliardDomain, BilliardError, BilliardState, DomainSpec};
use crate::config::{ConfigError, InitialState, ScenarioConfig, ScenarioKind};
use crate::dynamics::{
    self, DynamicsError, InertiaParams, IntegrateOptions, RollingState, Trajectory,
};
use crate::geometry::{build_pancake, GeometryError, PancakeSurface, PlateSpec, SkewMap};
use crate::limit::{self, ConvergenceReport, EdgeExperiment, LimitError, SplitVelocity};
use crate::oracles;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Billiard(#[from] BilliardError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scenario `{scenario:?}`: {message}")]
    Scenario {
        scenario: ScenarioKind,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Files written by a run.
#[derive(Debug)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// 17 significant digits, enough to round-trip f64 exactly.
fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

const CRLF: &str = "\r\n";

struct CsvWriter {
    buf: String,
}

impl CsvWriter {
    fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push_str(CRLF);
        Self { buf }
    }

    fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push_str(CRLF);
    }

    fn write(self, path: &Path) -> Result<(), ScenarioError> {
        fs::write(path, self.buf).map_err(io_err(path))
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), ScenarioError> {
    let mut text = serde_json::to_string_pretty(value).expect("json serializes");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Runs a validated config, writing outputs under `out_dir`.
pub fn run(
    config: &ScenarioConfig,
    out_dir: &Path,
    quiet: bool,
) -> Result<RunSummary, ScenarioError> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let started = std::time::Instant::now();
    let outputs = match config.scenario {
        ScenarioKind::RollTrajectory => run_roll_trajectory(config, out_dir)?,
        ScenarioKind::BilliardOrbit => run_billiard_orbit(config, out_dir)?,
        ScenarioKind::EdgeConvergence => run_edge_convergence(config, out_dir)?,
        ScenarioKind::OracleCheck => run_oracle_check(config, out_dir)?,
        ScenarioKind::FigureSinai => run_figure_sinai(config, out_dir)?,
        ScenarioKind::FigureDiscCaustics => run_figure_disc_caustics(config, out_dir)?,
    };
    let manifest = out_dir.join(format!("{}_manifest.json", output_stem(config)));
    let manifest_value = serde_json::json!({
        "config": serde_json::to_value(config).expect("config serializes"),
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "outputs": outputs.iter().map(|p| p.file_name().unwrap().to_string_lossy()).collect::<Vec<_>>(),
    });
    write_json(&manifest, &manifest_value)?;
    if !quiet {
        for path in &outputs {
            println!("wrote {}", path.display());
        }
        println!("wrote {}", manifest.display());
    }
    Ok(RunSummary {
        outputs,
        manifest,
    })
}

fn output_stem(config: &ScenarioConfig) -> String {
    config.output.clone().unwrap_or_else(|| {
        match config.scenario {
            ScenarioKind::RollTrajectory => "trajectory",
            ScenarioKind::BilliardOrbit => "orbit",
            ScenarioKind::EdgeConvergence => "convergence",
            ScenarioKind::OracleCheck => "oracle_report",
            ScenarioKind::FigureSinai => "sinai",
            ScenarioKind::FigureDiscCaustics => "disc_caustics",
        }
        .to_string()
    })
}

fn scenario_err(config: &ScenarioConfig, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Scenario {
        scenario: config.scenario,
        message: message.into(),
    }
}

/// Builds the initial rolling state from config data.
fn initial_rolling_state(
    surface: &PancakeSurface,
    init: &InitialState,
) -> Result<RollingState, ScenarioError> {
    let m = surface.ambient_dim();
    if init.x.len() != m || init.u.len() != m {
        return Err(ScenarioError::Config(ConfigError::Field {
            field: "initial",
            message: format!("x and u must have the ambient dimension {m}"),
        }));
    }
    let x = DVector::from_vec(init.x.clone());
    let u = DVector::from_vec(init.u.clone());
    let spin = match (&init.spin_matrix, init.spin_scalar) {
        (Some(rows), None) => {
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(ScenarioError::Config(ConfigError::Field {
                    field: "initial.spin_matrix",
                    message: format!("must be {m}x{m}"),
                }));
            }
            let mat = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
            SkewMap::projected(&mat)
        }
        (None, scalar) => {
            let s = scalar.unwrap_or(0.0);
            if m != 3 && s != 0.0 {
                return Err(ScenarioError::Config(ConfigError::Field {
                    field: "initial.spin_scalar",
                    message: "scalar spin needs ambient dimension 3 (use spin_matrix)".into(),
                }));
            }
            if m == 3 {
                // 𝒮 = s·[ν]× at the start point: the tangential rotation
                let nu = surface.normal(&surface.project_to_surface(&x)?)?;
                let mat = DMatrix::from_vec(
                    3,
                    3,
                    vec![
                        0.0, nu[2], -nu[1], -nu[2], 0.0, nu[0], nu[1], -nu[0], 0.0,
                    ],
                ) * s;
                SkewMap::projected(&mat)
            } else {
                SkewMap::zeros(m)
            }
        }
        (Some(_), Some(_)) => {
            return Err(ScenarioError::Config(ConfigError::Field {
                field: "initial",
                message: "give spin_scalar or spin_matrix, not both".into(),
            }))
        }
    };
    Ok(RollingState::projected(surface, &x, &u, &spin)?)
}

fn write_trajectory_csv(
    path: &Path,
    surface: &PancakeSurface,
    traj: &Trajectory,
) -> Result<(), ScenarioError> {
    let m = surface.ambient_dim();
    let mut header: Vec<String> = vec!["t".into()];
    for i in 1..=m {
        header.push(format!("x{i}"));
    }
    for i in 1..=m {
        header.push(format!("u{i}"));
    }
    for i in 1..=m {
        for j in (i + 1)..=m {
            header.push(format!("S{i}{j}"));
        }
    }
    header.push("energy".into());
    header.push("region".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = CsvWriter::new(&header_refs);
    for ((t, state), region) in traj
        .times
        .iter()
        .zip(&traj.states)
        .zip(&traj.regions)
    {
        let mut row = Vec::with_capacity(2 * m + m * (m - 1) / 2 + 3);
        row.push(fmt_f(*t));
        for i in 0..m {
            row.push(fmt_f(state.x[i]));
        }
        for i in 0..m {
            row.push(fmt_f(state.u[i]));
        }
        for v in state.spin.upper_triangle() {
            row.push(fmt_f(v));
        }
        row.push(fmt_f(dynamics::energy(state)));
        row.push(surface.region_kind(*region).label().to_string());
        csv.row(&row);
    }
    csv.write(path)
}

fn write_events_jsonl(path: &Path, surface: &PancakeSurface, traj: &Trajectory) -> Result<(), ScenarioError> {
    let mut buf = String::new();
    for ev in &traj.events {
        let line = serde_json::json!({
            "t": ev.t,
            "from": surface.region_kind(ev.from).label(),
            "to": surface.region_kind(ev.to).label(),
        });
        buf.push_str(&line.to_string());
        buf.push('\n');
    }
    fs::write(path, buf).map_err(io_err(path))
}

fn run_roll_trajectory(
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ScenarioError> {
    let plate = config.plate.clone().expect("validated");
    let surface = build_pancake(plate, config.r.expect("validated"))?;
    let init = config.initial.as_ref().expect("validated");
    let state0 = initial_rolling_state(&surface, init)?;
    let eta = config.resolved_eta()?;
    let inertia = InertiaParams::from_eta(eta)?;
    let (t_end, h) = (config.t_end.expect("validated"), config.h.expect("validated"));
    let steps = (t_end / h).ceil() as usize;
    let stride = config
        .record_stride
        .unwrap_or_else(|| (steps / 200_000).max(1));
    let opts = IntegrateOptions {
        record_stride: stride,
        ..IntegrateOptions::default()
    };
    let traj = dynamics::integrate(&surface, &state0, inertia, t_end, h, &opts)?;
    let stem = output_stem(config);
    let csv_path = out_dir.join(format!("{stem}.csv"));
    write_trajectory_csv(&csv_path, &surface, &traj)?;
    let events_path = out_dir.join(format!("{stem}_events.jsonl"));
    write_events_jsonl(&events_path, &surface, &traj)?;
    Ok(vec![csv_path, events_path])
}

fn billiard_initial(config: &ScenarioConfig) -> Result<BilliardState, ScenarioError> {
    let init = config.initial.as_ref().expect("validated");
    if init.x.len() != 2 || init.u.len() != 2 {
        return Err(ScenarioError::Config(ConfigError::Field {
            field: "initial",
            message: "billiard states are planar: x and u need 2 components".into(),
        }));
    }
    Ok(BilliardState::new(
        Vector2::new(init.x[0], init.x[1]),
        Vector2::new(init.u[0], init.u[1]),
        init.spin_scalar.unwrap_or(0.0),
    ))
}

fn write_orbit_csv(path: &Path, orbit: &billiard::Orbit) -> Result<(), ScenarioError> {
    let mut csv = CsvWriter::new(&["n", "x1", "x2", "u1", "u2", "W1", "chord_dist"]);
    for rec in &orbit.records {
        csv.row(&[
            rec.index.to_string(),
            fmt_f(rec.point.x),
            fmt_f(rec.point.y),
            fmt_f(rec.u_out.x),
            fmt_f(rec.u_out.y),
            fmt_f(rec.w_out[0]),
            fmt_f(rec.chord_dist),
        ]);
    }
    csv.write(path)
}

fn caustics_json(domain: &BilliardDomain, orbit: &billiard::Orbit) -> Option<serde_json::Value> {
    billiard::caustic_radii(domain, orbit).ok().map(|clusters| {
        serde_json::json!({
            "clusters": clusters
                .iter()
                .map(|(radius, mult)| serde_json::json!({"radius": radius, "multiplicity": mult}))
                .collect::<Vec<_>>(),
        })
    })
}

fn run_billiard_orbit(
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ScenarioError> {
    let domain = BilliardDomain::new(config.domain.clone().expect("validated"))?;
    let state0 = billiard_initial(config)?;
    let theta = std::f64::consts::PI * config.resolved_eta()?;
    let n = config.n_collisions.expect("validated");
    let orbit = billiard::billiard_orbit(&domain, &state0, theta, n)?;
    let stem = output_stem(config);
    let csv_path = out_dir.join(format!("{stem}.csv"));
    write_orbit_csv(&csv_path, &orbit)?;
    let mut outputs = vec![csv_path];
    if let Some(value) = caustics_json(&domain, &orbit) {
        let path = out_dir.join(format!("{stem}_caustics.json"));
        write_json(&path, &value)?;
        outputs.push(path);
    }
    Ok(outputs)
}

fn default_boundary_point(plate: &PlateSpec) -> Option<DVector<f64>> {
    match plate {
        PlateSpec::HalfPlane { ambient_dim } => Some(DVector::zeros(*ambient_dim)),
        PlateSpec::Disc { radius } => Some(DVector::from_vec(vec![*radius, 0.0, 0.0])),
        PlateSpec::SinaiTorus {
            period,
            hole_radius,
        } => Some(DVector::from_vec(vec![
            period / 2.0 + hole_radius,
            period / 2.0,
            0.0,
        ])),
        PlateSpec::SmoothPlanarPlate { samples } => {
            Some(DVector::from_vec(vec![samples[0].point[0], samples[0].point[1], 0.0]))
        }
        _ => None,
    }
}

/// Seeded random transversal incoming state: unit speed, |u⊥|/|u| ≥ 0.35.
pub fn sample_incoming<R: Rng>(rng: &mut R, edge_dim: usize) -> SplitVelocity {
    let u_perp_frac: f64 = rng.gen_range(0.35..1.0);
    let tang_mag = (1.0 - u_perp_frac * u_perp_frac).sqrt();
    let mut u_bar = DVector::from_fn(edge_dim, |_, _| rng.gen_range(-1.0f64..1.0));
    let n = u_bar.norm();
    if n > 1e-12 {
        u_bar *= tang_mag / n;
    }
    let w = DVector::from_fn(edge_dim, |_, _| rng.gen_range(-0.8f64..0.8));
    SplitVelocity {
        u_bar,
        u_perp: -u_perp_frac,
        w,
        block: DMatrix::zeros(edge_dim, edge_dim),
    }
}

fn write_convergence_csv(path: &Path, report: &ConvergenceReport) -> Result<(), ScenarioError> {
    let mut csv = CsvWriter::new(&["r", "error", "traversal_time", "exit_side"]);
    for row in &report.rows {
        csv.row(&[
            fmt_f(row.r),
            if row.non_exit { "non_exit".into() } else { fmt_f(row.map_error) },
            if row.non_exit { String::new() } else { fmt_f(row.traversal_time) },
            row.exit_side.map_or("none".into(), |s| s.label().to_string()),
        ]);
    }
    csv.write(path)
}

fn convergence_summary(reports: &[(usize, ConvergenceReport)]) -> serde_json::Value {
    serde_json::json!({
        "states": reports
            .iter()
            .map(|(i, rep)| {
                serde_json::json!({
                    "state": i,
                    "fitted_rate": rep.fitted_rate,
                    "rows": rep.rows.iter().map(|row| serde_json::json!({
                        "r": row.r,
                        "error": if row.non_exit { None } else { Some(row.map_error) },
                        "traversal_time": if row.non_exit { None } else { Some(row.traversal_time) },
                        "rescaled_duration": if row.non_exit { None } else { Some(row.rescaled_duration) },
                        "exit_side": row.exit_side.map(|s| s.label()),
                        "non_exit": row.non_exit,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect::<Vec<_>>(),
    })
}

fn run_edge_convergence(
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ScenarioError> {
    let plate = config.plate.clone().expect("validated");
    let eta = config.resolved_eta()?;
    let radii = config.radii.clone().expect("validated");
    let boundary_point = match &config.boundary_point {
        Some(v) => DVector::from_vec(v.clone()),
        None => default_boundary_point(&plate)
            .ok_or_else(|| scenario_err(config, "plate family has no edge"))?,
    };
    let edge_dim = plate.ambient_dim() - 2;
    let steps = config.steps_per_crossing.unwrap_or(2000);

    let incomings: Vec<SplitVelocity> = if let Some(inc) = &config.incoming {
        vec![SplitVelocity {
            u_bar: DVector::from_vec(inc.u_bar.clone()),
            u_perp: inc.u_perp,
            w: DVector::from_vec(inc.w.clone()),
            block: DMatrix::zeros(edge_dim, edge_dim),
        }]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0));
        (0..config.n_states.unwrap_or(1))
            .map(|_| sample_incoming(&mut rng, edge_dim))
            .collect()
    };

    let stem = output_stem(config);
    let mut outputs = Vec::new();
    let mut reports = Vec::new();
    for (i, incoming) in incomings.iter().enumerate() {
        let experiment = EdgeExperiment {
            plate: plate.clone(),
            boundary_point: boundary_point.clone(),
            incoming: incoming.clone(),
            eta,
            radii: radii.clone(),
            steps_per_crossing: steps,
        };
        let report = limit::convergence_study(&experiment)?;
        let path = if incomings.len() == 1 {
            out_dir.join(format!("{stem}.csv"))
        } else {
            out_dir.join(format!("{stem}_state{i}.csv"))
        };
        write_convergence_csv(&path, &report)?;
        outputs.push(path);
        reports.push((i, report));
    }
    let summary_path = out_dir.join(format!("{stem}_summary.json"));
    write_json(&summary_path, &convergence_summary(&reports))?;
    outputs.push(summary_path);
    Ok(outputs)
}

fn run_oracle_check(
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ScenarioError> {
    let r = config.r.unwrap_or(0.25);
    let eta = match (config.eta, config.gamma_b) {
        (None, None) => 0.47,
        _ => config.resolved_eta()?,
    };
    let inertia = InertiaParams::from_eta(eta)?;

    // cylinder trajectory vs the closed-form solution over one period
    let cyl = build_pancake(PlateSpec::CylinderFactor { flat_dim: 1 }, r)?;
    let mu = 0.8;
    let w0 = DVector::from_vec(vec![0.5]);
    let u00 = DVector::from_vec(vec![-0.3]);
    let x0 = DVector::from_vec(vec![0.0]);
    let sol = oracles::codim2_solution(&w0, &u00, &x0, mu, eta, r)
        .map_err(|e| scenario_err(config, e.to_string()))?;
    let period = std::f64::consts::TAU / sol.omega.abs();
    let state0 = oracles::codim2_state(&cyl, &x0, 0.0, &u00, &w0, mu)
        .map_err(|e| scenario_err(config, e.to_string()))?;
    let h = period / 40_000.0;
    let traj = dynamics::integrate(&cyl, &state0, inertia, period, h, &IntegrateOptions::default())?;
    let mut cod2_err: f64 = 0.0;
    for (t, st) in traj.times.iter().zip(&traj.states) {
        let (xf, u0f, wf) = sol.at(*t);
        let split = oracles::split_product_state(&cyl, st)
            .map_err(|e| scenario_err(config, e.to_string()))?;
        cod2_err = cod2_err
            .max((split.x_flat[0] - xf[0]).abs())
            .max((split.u_flat[0] - u0f[0]).abs())
            .max((split.w[0] - wf[0]).abs());
    }

    // sphere invariant drift over T = 20
    let sph = build_pancake(PlateSpec::SphereFactor { flat_dim: 0 }, r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0));
    let st = dynamics::random_tangent_state(&sph, &mut rng, 1.0, 0.7);
    let sol = oracles::sphere_rolling_solution_with_eta(&sph, &st, eta)
        .map_err(|e| scenario_err(config, e.to_string()))?;
    let traj = dynamics::integrate(&sph, &st, inertia, 20.0, 1e-3, &IntegrateOptions::default())?;
    let mut inv_drift: f64 = 0.0;
    for st in &traj.states {
        let split = oracles::split_product_state(&sph, st)
            .map_err(|e| scenario_err(config, e.to_string()))?;
        let x1 = nalgebra::Vector3::new(st.x[0], st.x[1], st.x[2]);
        let u1 = nalgebra::Vector3::new(st.u[0], st.u[1], st.u[2]);
        let inv = oracles::codim3_invariant(&x1, &u1, split.s_scalar, eta, r)
            .map_err(|e| scenario_err(config, e.to_string()))?;
        inv_drift = inv_drift.max((inv - sol.invariant).norm());
    }

    // straight-edge crossing vs the analytic matrix
    let hp = build_pancake(PlateSpec::HalfPlane { ambient_dim: 3 }, r)?;
    let frame = hp.edge_frame(&DVector::zeros(3))?;
    let incoming = SplitVelocity {
        u_bar: DVector::from_vec(vec![0.55]),
        u_perp: -0.8,
        w: DVector::from_vec(vec![0.35]),
        block: DMatrix::zeros(1, 1),
    };
    let outcome = limit::run_edge_crossing(&hp, &frame, &incoming, 1.0, eta, 4000)?;
    let expected = incoming.noslip_image(eta);
    let edge_err = outcome.outgoing.sup_distance(&expected);
    let duration_err = (outcome.traversal_time
        - oracles::edge_roll_duration(r, incoming.u_perp).map_err(|e| scenario_err(config, e.to_string()))?)
    .abs();

    // correspondence identity
    let gb = (2.0f64 / 5.0).sqrt();
    let (eta_r, _) = oracles::gamma_correspondence(gb);
    let corr_err = (crate::billiard::beta_angle(gb) - std::f64::consts::PI * eta_r).abs();

    let report = serde_json::json!({
        "eta": eta,
        "r": r,
        "cod2_max_error": cod2_err,
        "cod2_pass": cod2_err < 1e-6,
        "sphere_invariant_drift": inv_drift,
        "sphere_invariant_pass": inv_drift < 1e-8,
        "edge_map_error": edge_err,
        "edge_map_pass": edge_err < 1e-8,
        "edge_duration_error": duration_err,
        "edge_duration_pass": duration_err < 1e-6,
        "correspondence_identity_error": corr_err,
        "correspondence_pass": corr_err < 1e-12,
    });
    let stem = output_stem(config);
    let path = out_dir.join(format!("{stem}.json"));
    write_json(&path, &report)?;
    Ok(vec![path])
}

fn run_figure_sinai(
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ScenarioError> {
    let plate = config.plate.clone().unwrap_or(PlateSpec::SinaiTorus {
        period: 1.0,
        hole_radius: 0.25,
    });
    let r = config.r.unwrap_or(0.02);
    let surface = build_pancake(plate, r)?;
    let t_end = config.t_end.unwrap_or(200.0);
    let h = config.h.unwrap_or(1e-3);
    let state0 = match &config.initial {
        Some(init) => initial_rolling_state(&surface, init)?,
        None => {
            let x = DVector::from_vec(vec![0.1, 0.1, r]);
            let dir = 0.7f64;
            let u = DVector::from_vec(vec![dir.cos(), dir.sin(), 0.0]);
            let spin = SkewMap::zeros(3);
            RollingState::projected(&surface, &x, &u, &spin)?
        }
    };
    let steps = (t_end / h).ceil() as usize;
    let stride = config
        .record_stride
        .unwrap_or_else(|| (steps / 50_000).max(1));
    let opts = IntegrateOptions {
        record_stride: stride,
        ..IntegrateOptions::default()
    };
    let stem = output_stem(config);
    let mut outputs = Vec::new();
    for eta in [0.05, 0.62] {
        let inertia = InertiaParams::from_eta(eta)?;
        let traj = dynamics::integrate(&surface, &state0, inertia, t_end, h, &opts)?;
        let path = out_dir.join(format!("{stem}_eta{eta}.csv"));
        write_trajectory_csv(&path, &surface, &traj)?;
        outputs.push(path);
    }
    Ok(outputs)
}

fn run_figure_disc_caustics(
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ScenarioError> {
    let domain_spec = config
        .domain
        .clone()
        .unwrap_or(DomainSpec::Disc { radius: 1.0 });
    let domain = BilliardDomain::new(domain_spec)?;
    let theta = match (config.eta, config.gamma_b) {
        (None, None) => billiard::beta_angle((2.0f64 / 5.0).sqrt()),
        _ => std::f64::consts::PI * config.resolved_eta()?,
    };
    let n = config.n_collisions.unwrap_or(500);
    let state0 = match &config.initial {
        Some(_) => billiard_initial(config)?,
        None => BilliardState::new(Vector2::new(0.3, 0.0), Vector2::new(0.6, 0.8), 0.5),
    };
    let orbit = billiard::billiard_orbit(&domain, &state0, theta, n)?;
    let stem = output_stem(config);
    let csv_path = out_dir.join(format!("{stem}.csv"));
    write_orbit_csv(&csv_path, &orbit)?;
    let mut outputs = vec![csv_path];
    if let Some(value) = caustics_json(&domain, &orbit) {
        let path = out_dir.join(format!("{stem}_caustics.json"));
        write_json(&path, &value)?;
        outputs.push(path);
    }
    Ok(outputs)
}
