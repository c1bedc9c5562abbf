//! Pancake surfaces: plates, their r-neighborhood boundaries, and the
//! differential-geometric queries every other module consumes.
//!
//! Everything is expressed in ambient coordinates. A pancake surface around a
//! codimension-1 plate consists of two flat sheets at offset ±r joined by a
//! half-tube of meridian radius r around the plate edge; tangency and
//! curvature data come from analytic formulas per region, never from meshes.
//! The normal field ν (pointing from the contact point to the ball center) is
//! continuous across the seams where sheets meet tubes; the shape operator
//! jumps there, which is why seam classification is a first-class query.

mod skew;
pub mod spline;

pub use skew::{skew_decompose, tangential_projector, wedge, SkewMap, SKEW_TOL};

use nalgebra::{DMatrix, DVector, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use spline::ClosedCurve;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not skew-symmetric (defect {defect:.3e})")]
    NotSkew { defect: f64 },
    #[error("vector is not unit length (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("invalid plate: {0}")]
    InvalidPlate(String),
    #[error("ball radius {radius} too large: bound {bound} violated for this plate")]
    RadiusTooLarge { radius: f64, bound: f64 },
    #[error("point is not on the surface (distance defect {defect:.3e})")]
    NotOnSurface { defect: f64 },
    #[error("shape operator undefined on a seam")]
    SeamPoint,
    #[error("projection ambiguous: point too far from the surface")]
    AmbiguousProjection,
    #[error("plate family has no boundary edge")]
    NoEdge,
}

/// One (point, curvature) sample of a smooth plate boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySample {
    pub point: [f64; 2],
    pub curvature: f64,
}

/// Built-in plate families.
///
/// The first four live in ambient dimension 3 (the half-plane generalizes to
/// any m ≥ 3); `SphereFactor` and `CylinderFactor` are the flat plates ℝ^k
/// whose pancake surfaces are the products ℝ^k × S²(r) and ℝ^k × S¹(r) used
/// as analytically solvable test beds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlateSpec {
    HalfPlane {
        #[serde(default = "default_ambient_dim")]
        ambient_dim: usize,
    },
    Disc {
        radius: f64,
    },
    SinaiTorus {
        period: f64,
        hole_radius: f64,
    },
    SemiInfiniteLine,
    SphereFactor {
        flat_dim: usize,
    },
    CylinderFactor {
        flat_dim: usize,
    },
    SmoothPlanarPlate {
        samples: Vec<BoundarySample>,
    },
}

fn default_ambient_dim() -> usize {
    3
}

impl PlateSpec {
    pub fn ambient_dim(&self) -> usize {
        match self {
            PlateSpec::HalfPlane { ambient_dim } => *ambient_dim,
            PlateSpec::Disc { .. }
            | PlateSpec::SinaiTorus { .. }
            | PlateSpec::SemiInfiniteLine
            | PlateSpec::SmoothPlanarPlate { .. } => 3,
            PlateSpec::SphereFactor { flat_dim } => flat_dim + 3,
            PlateSpec::CylinderFactor { flat_dim } => flat_dim + 2,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            PlateSpec::HalfPlane { ambient_dim } => {
                if *ambient_dim < 3 {
                    return Err(GeometryError::InvalidPlate(
                        "half-plane pancake needs ambient dimension >= 3".into(),
                    ));
                }
            }
            PlateSpec::Disc { radius } => {
                if !(*radius > 0.0) {
                    return Err(GeometryError::InvalidPlate("disc radius must be > 0".into()));
                }
            }
            PlateSpec::SinaiTorus {
                period,
                hole_radius,
            } => {
                if !(*period > 0.0 && *hole_radius > 0.0 && *hole_radius < period / 2.0) {
                    return Err(GeometryError::InvalidPlate(
                        "sinai torus needs 0 < hole_radius < period/2".into(),
                    ));
                }
            }
            PlateSpec::SemiInfiniteLine => {}
            PlateSpec::SphereFactor { flat_dim } | PlateSpec::CylinderFactor { flat_dim } => {
                if *flat_dim > 8 {
                    return Err(GeometryError::InvalidPlate(
                        "flat factor dimension capped at 8".into(),
                    ));
                }
            }
            PlateSpec::SmoothPlanarPlate { samples } => {
                if samples.len() < 4 {
                    return Err(GeometryError::InvalidPlate(
                        "smooth plate needs at least 4 boundary samples".into(),
                    ));
                }
                if samples.iter().any(|s| !s.curvature.is_finite()) {
                    return Err(GeometryError::InvalidPlate(
                        "smooth plate curvatures must be finite (bounded)".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    FlatSheetPlus,
    FlatSheetMinus,
    EdgeTube,
    Cap,
    Seam,
}

impl RegionKind {
    pub fn label(self) -> &'static str {
        match self {
            RegionKind::FlatSheetPlus => "flat_plus",
            RegionKind::FlatSheetMinus => "flat_minus",
            RegionKind::EdgeTube => "edge_tube",
            RegionKind::Cap => "cap",
            RegionKind::Seam => "seam",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionId(pub usize);

#[derive(Debug, Clone)]
pub struct SurfaceRegion {
    pub kind: RegionKind,
}

/// Where a point sits on the surface: the 2-d region it belongs to plus its
/// distance to the nearest seam. `kind` is `Seam` inside the tolerance band.
#[derive(Debug, Clone)]
pub struct Classification {
    pub region: RegionId,
    pub kind: RegionKind,
    pub seam_distance: f64,
}

/// Width of the band around seam curves inside which classification reports
/// `Seam` and the shape operator refuses to evaluate.
pub const SEAM_BAND: f64 = 1e-9;

/// Frame of the plate at a boundary point: the edge tangent basis, the inward
/// plate normal, and the vertical direction. All ambient vectors.
#[derive(Debug, Clone)]
pub struct PlateFrame {
    pub point: DVector<f64>,
    pub edge_tangents: Vec<DVector<f64>>,
    pub normal_in: DVector<f64>,
    pub vertical: DVector<f64>,
}

#[derive(Debug, Clone)]
enum Shape {
    HalfPlane,
    Disc {
        plate_radius: f64,
    },
    SinaiTorus {
        period: f64,
        hole_radius: f64,
        center: Vector2<f64>,
    },
    SemiInfiniteLine,
    /// N = ℝ^k × S^d(r) in ℝ^{k+d+1}.
    Product {
        flat_dim: usize,
        sphere_dim: usize,
    },
    Smooth {
        curve: ClosedCurve,
    },
}

/// The boundary of the r-neighborhood of a plate: the locus of centers of a
/// radius-r ball rolling on it.
#[derive(Debug, Clone)]
pub struct PancakeSurface {
    plate: PlateSpec,
    r: f64,
    m: usize,
    shape: Shape,
    regions: Vec<SurfaceRegion>,
}

/// Contact of an ambient point with the plate: nearest plate point plus what
/// kind of plate feature carries it.
struct Contact {
    point: DVector<f64>,
    dist: f64,
    feature: Feature,
}

enum Feature {
    /// Nearest plate point is interior; `edge_distance` is the in-plate
    /// distance from the foot to the plate boundary.
    Interior { edge_distance: f64 },
    Edge(EdgeData),
    Vertex,
}

struct EdgeData {
    normal_in: DVector<f64>,
    tangents: Vec<DVector<f64>>,
    kappa: f64,
}

pub fn build_pancake(plate: PlateSpec, r: f64) -> Result<PancakeSurface, GeometryError> {
    plate.validate()?;
    if !(r > 0.0) {
        return Err(GeometryError::InvalidPlate("ball radius must be > 0".into()));
    }
    let bound = match &plate {
        PlateSpec::Disc { radius } => *radius,
        PlateSpec::SinaiTorus { hole_radius, .. } => *hole_radius,
        PlateSpec::SmoothPlanarPlate { samples } => {
            let curve = ClosedCurve::new(
                samples
                    .iter()
                    .map(|s| Vector2::new(s.point[0], s.point[1]))
                    .collect(),
            )?;
            let k_max = curve
                .max_abs_curvature()
                .max(samples.iter().fold(0.0, |a, s| s.curvature.abs().max(a)));
            if k_max > 0.0 {
                0.95 / k_max
            } else {
                f64::INFINITY
            }
        }
        _ => f64::INFINITY,
    };
    if r >= bound {
        return Err(GeometryError::RadiusTooLarge { radius: r, bound });
    }

    let m = plate.ambient_dim();
    let (shape, regions) = match &plate {
        PlateSpec::HalfPlane { .. } => (Shape::HalfPlane, sheet_tube_regions()),
        PlateSpec::Disc { radius } => (
            Shape::Disc {
                plate_radius: *radius,
            },
            sheet_tube_regions(),
        ),
        PlateSpec::SinaiTorus {
            period,
            hole_radius,
        } => (
            Shape::SinaiTorus {
                period: *period,
                hole_radius: *hole_radius,
                center: Vector2::new(period / 2.0, period / 2.0),
            },
            sheet_tube_regions(),
        ),
        PlateSpec::SemiInfiniteLine => (
            Shape::SemiInfiniteLine,
            vec![
                SurfaceRegion {
                    kind: RegionKind::EdgeTube,
                },
                SurfaceRegion {
                    kind: RegionKind::Cap,
                },
            ],
        ),
        PlateSpec::SphereFactor { flat_dim } => (
            Shape::Product {
                flat_dim: *flat_dim,
                sphere_dim: 2,
            },
            vec![SurfaceRegion {
                kind: RegionKind::Cap,
            }],
        ),
        PlateSpec::CylinderFactor { flat_dim } => (
            Shape::Product {
                flat_dim: *flat_dim,
                sphere_dim: 1,
            },
            vec![SurfaceRegion {
                kind: RegionKind::EdgeTube,
            }],
        ),
        PlateSpec::SmoothPlanarPlate { samples } => {
            let curve = ClosedCurve::new(
                samples
                    .iter()
                    .map(|s| Vector2::new(s.point[0], s.point[1]))
                    .collect(),
            )?;
            (Shape::Smooth { curve }, sheet_tube_regions())
        }
    };

    Ok(PancakeSurface {
        plate,
        r,
        m,
        shape,
        regions,
    })
}

fn sheet_tube_regions() -> Vec<SurfaceRegion> {
    vec![
        SurfaceRegion {
            kind: RegionKind::FlatSheetPlus,
        },
        SurfaceRegion {
            kind: RegionKind::FlatSheetMinus,
        },
        SurfaceRegion {
            kind: RegionKind::EdgeTube,
        },
    ]
}

impl PancakeSurface {
    pub fn plate(&self) -> &PlateSpec {
        &self.plate
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn ambient_dim(&self) -> usize {
        self.m
    }

    pub fn regions(&self) -> &[SurfaceRegion] {
        &self.regions
    }

    pub fn region_kind(&self, id: RegionId) -> RegionKind {
        self.regions[id.0].kind
    }

    /// Index of the vertical coordinate (offset direction of the sheets).
    fn vi(&self) -> usize {
        self.m - 1
    }

    /// True for the sheet+tube families (codimension-1 plates with an edge).
    fn has_sheets(&self) -> bool {
        matches!(
            self.shape,
            Shape::HalfPlane | Shape::Disc { .. } | Shape::SinaiTorus { .. } | Shape::Smooth { .. }
        )
    }

    /// Wraps torus coordinates into the fundamental cell; identity elsewhere.
    pub fn wrap_position(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = x.clone();
        if let Shape::SinaiTorus { period, .. } = &self.shape {
            out[0] = out[0].rem_euclid(*period);
            out[1] = out[1].rem_euclid(*period);
        }
        out
    }

    /// Difference b − a using the nearest periodic image on the torus.
    pub fn position_delta(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut d = b - a;
        if let Shape::SinaiTorus { period, .. } = &self.shape {
            for i in 0..2 {
                d[i] -= (d[i] / period).round() * period;
            }
        }
        d
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<(), GeometryError> {
        if x.len() != self.m {
            return Err(GeometryError::DimensionMismatch {
                expected: self.m,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Distance from an ambient point to the plate (not the surface).
    pub fn distance_to_plate(&self, x: &DVector<f64>) -> Result<f64, GeometryError> {
        self.check_dim(x)?;
        Ok(self.contact(x)?.dist)
    }

    fn contact(&self, x: &DVector<f64>) -> Result<Contact, GeometryError> {
        let vi = self.vi();
        match &self.shape {
            Shape::HalfPlane => {
                let ni = self.m - 2;
                if x[ni] >= 0.0 {
                    let mut p = x.clone();
                    p[vi] = 0.0;
                    Ok(Contact {
                        dist: x[vi].abs(),
                        feature: Feature::Interior {
                            edge_distance: x[ni],
                        },
                        point: p,
                    })
                } else {
                    let mut p = x.clone();
                    p[ni] = 0.0;
                    p[vi] = 0.0;
                    let dist = x[ni].hypot(x[vi]);
                    Ok(Contact {
                        dist,
                        feature: Feature::Edge(self.halfplane_edge_data()),
                        point: p,
                    })
                }
            }
            Shape::Disc { plate_radius } => {
                let rho = x[0].hypot(x[1]);
                if rho <= *plate_radius {
                    Ok(Contact {
                        point: DVector::from_vec(vec![x[0], x[1], 0.0]),
                        dist: x[2].abs(),
                        feature: Feature::Interior {
                            edge_distance: plate_radius - rho,
                        },
                    })
                } else {
                    let dir = Vector2::new(x[0] / rho, x[1] / rho);
                    let c = dir * *plate_radius;
                    let dist = (rho - plate_radius).hypot(x[2]);
                    Ok(Contact {
                        point: DVector::from_vec(vec![c.x, c.y, 0.0]),
                        dist,
                        feature: Feature::Edge(planar_edge_data(-dir, 1.0 / plate_radius)),
                    })
                }
            }
            Shape::SinaiTorus {
                period,
                hole_radius,
                center,
            } => {
                let xw = self.wrap_position(x);
                let mut delta = Vector2::new(xw[0] - center.x, xw[1] - center.y);
                delta.x -= (delta.x / period).round() * period;
                delta.y -= (delta.y / period).round() * period;
                let d = delta.norm();
                if d >= *hole_radius {
                    Ok(Contact {
                        point: DVector::from_vec(vec![xw[0], xw[1], 0.0]),
                        dist: x[2].abs(),
                        feature: Feature::Interior {
                            edge_distance: d - hole_radius,
                        },
                    })
                } else if d < 1e-12 * hole_radius {
                    Err(GeometryError::AmbiguousProjection)
                } else {
                    let dir = delta / d;
                    let c = center + dir * *hole_radius;
                    let dist = (hole_radius - d).hypot(x[2]);
                    Ok(Contact {
                        point: DVector::from_vec(vec![c.x, c.y, 0.0]),
                        dist,
                        feature: Feature::Edge(planar_edge_data(dir, -1.0 / hole_radius)),
                    })
                }
            }
            Shape::SemiInfiniteLine => {
                if x[0] <= 0.0 {
                    let p = DVector::from_vec(vec![x[0], 0.0, 0.0]);
                    Ok(Contact {
                        dist: x[1].hypot(x[2]),
                        point: p,
                        feature: Feature::Edge(EdgeData {
                            normal_in: DVector::from_vec(vec![-1.0, 0.0, 0.0]),
                            tangents: vec![],
                            kappa: 0.0,
                        }),
                    })
                } else {
                    let p = DVector::zeros(3);
                    Ok(Contact {
                        dist: x.norm(),
                        point: p,
                        feature: Feature::Vertex,
                    })
                }
            }
            Shape::Product { flat_dim, .. } => {
                let k = *flat_dim;
                let mut p = DVector::zeros(self.m);
                for i in 0..k {
                    p[i] = x[i];
                }
                let dist = x.rows(k, self.m - k).norm();
                Ok(Contact {
                    point: p,
                    dist,
                    feature: Feature::Vertex,
                })
            }
            Shape::Smooth { curve } => {
                let planar = Vector2::new(x[0], x[1]);
                let sd = curve.signed_distance(planar);
                if sd >= 0.0 {
                    Ok(Contact {
                        point: DVector::from_vec(vec![x[0], x[1], 0.0]),
                        dist: x[2].abs(),
                        feature: Feature::Interior { edge_distance: sd },
                    })
                } else {
                    let (t, foot) = curve.nearest(planar);
                    let n_in = curve.normal_in(t);
                    let dist = sd.hypot(x[2]);
                    Ok(Contact {
                        point: DVector::from_vec(vec![foot.x, foot.y, 0.0]),
                        dist,
                        feature: Feature::Edge(planar_edge_data(n_in, curve.curvature(t))),
                    })
                }
            }
        }
    }

    /// Edge contact regardless of which side of the seam the point is on:
    /// nearest plate-boundary point plus its frame. Supports the analytic
    /// continuation of tube formulas slightly past the seams.
    fn edge_contact(&self, x: &DVector<f64>) -> Result<(DVector<f64>, EdgeData), GeometryError> {
        match &self.shape {
            Shape::HalfPlane => {
                let mut p = x.clone();
                p[self.m - 2] = 0.0;
                p[self.vi()] = 0.0;
                Ok((p, self.halfplane_edge_data()))
            }
            Shape::Disc { plate_radius } => {
                let rho = x[0].hypot(x[1]);
                if rho < 1e-12 {
                    return Err(GeometryError::AmbiguousProjection);
                }
                let dir = Vector2::new(x[0] / rho, x[1] / rho);
                let c = dir * *plate_radius;
                Ok((
                    DVector::from_vec(vec![c.x, c.y, 0.0]),
                    planar_edge_data(-dir, 1.0 / plate_radius),
                ))
            }
            Shape::SinaiTorus {
                period,
                hole_radius,
                center,
            } => {
                let xw = self.wrap_position(x);
                let mut delta = Vector2::new(xw[0] - center.x, xw[1] - center.y);
                delta.x -= (delta.x / period).round() * period;
                delta.y -= (delta.y / period).round() * period;
                let d = delta.norm();
                if d < 1e-12 * hole_radius {
                    return Err(GeometryError::AmbiguousProjection);
                }
                let dir = delta / d;
                let c = center + dir * *hole_radius;
                Ok((
                    DVector::from_vec(vec![c.x, c.y, 0.0]),
                    planar_edge_data(dir, -1.0 / hole_radius),
                ))
            }
            Shape::SemiInfiniteLine => {
                let p = DVector::from_vec(vec![x[0].min(0.0), 0.0, 0.0]);
                Ok((
                    p,
                    EdgeData {
                        normal_in: DVector::from_vec(vec![-1.0, 0.0, 0.0]),
                        tangents: vec![],
                        kappa: 0.0,
                    },
                ))
            }
            Shape::Smooth { curve } => {
                let planar = Vector2::new(x[0], x[1]);
                let (t, foot) = curve.nearest(planar);
                Ok((
                    DVector::from_vec(vec![foot.x, foot.y, 0.0]),
                    planar_edge_data(curve.normal_in(t), curve.curvature(t)),
                ))
            }
            Shape::Product { .. } => Err(GeometryError::NoEdge),
        }
    }

    fn halfplane_edge_data(&self) -> EdgeData {
        let m = self.m;
        let mut normal_in = DVector::zeros(m);
        normal_in[m - 2] = 1.0;
        let tangents = (0..m - 2)
            .map(|i| {
                let mut t = DVector::zeros(m);
                t[i] = 1.0;
                t
            })
            .collect();
        EdgeData {
            normal_in,
            tangents,
            kappa: 0.0,
        }
    }

    /// Unit outward normal ν at a surface point (pointing to the rolling side).
    pub fn normal(&self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        self.check_dim(x)?;
        let c = self.contact(x)?;
        let defect = (c.dist - self.r).abs();
        if defect > 1e-6 * self.r.max(1.0) {
            return Err(GeometryError::NotOnSurface { defect });
        }
        Ok((x - &c.point) / c.dist)
    }

    /// Normal field of one region, evaluated without an on-surface check.
    /// Valid for points near the region (including slightly past its seams).
    pub fn normal_in(&self, region: RegionId, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        match self.region_kind(region) {
            RegionKind::FlatSheetPlus | RegionKind::FlatSheetMinus => {
                let mut nu = DVector::zeros(self.m);
                nu[self.vi()] = if self.region_kind(region) == RegionKind::FlatSheetPlus {
                    1.0
                } else {
                    -1.0
                };
                Ok(nu)
            }
            RegionKind::EdgeTube | RegionKind::Cap => match &self.shape {
                Shape::Product { flat_dim, .. } => {
                    let k = *flat_dim;
                    let mut nu = DVector::zeros(self.m);
                    let s = x.rows(k, self.m - k).norm();
                    for i in k..self.m {
                        nu[i] = x[i] / s;
                    }
                    Ok(nu)
                }
                Shape::SemiInfiniteLine => {
                    let p = if self.region_kind(region) == RegionKind::Cap {
                        DVector::zeros(3)
                    } else {
                        DVector::from_vec(vec![x[0], 0.0, 0.0])
                    };
                    let d = x - &p;
                    Ok(&d / d.norm())
                }
                _ => {
                    let (p, _) = self.edge_contact(x)?;
                    let d = self.position_delta(&p, &self.wrap_position(x));
                    Ok(&d / d.norm())
                }
            },
            RegionKind::Seam => Err(GeometryError::SeamPoint),
        }
    }

    /// The shape operator 𝕊 at a surface point, as an ambient matrix
    /// annihilating ν, with the sign convention 𝕊v = −D_v ν.
    ///
    /// Errors with `SeamPoint` inside the seam band, where 𝕊 jumps.
    pub fn shape_operator(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, GeometryError> {
        let class = self.classify(x)?;
        if class.kind == RegionKind::Seam {
            return Err(GeometryError::SeamPoint);
        }
        self.shape_operator_in(class.region, x)
    }

    /// Region-pinned shape operator; evaluates the region's analytic formula
    /// even slightly beyond its seams (used by the integrator's substeps).
    pub fn shape_operator_in(
        &self,
        region: RegionId,
        x: &DVector<f64>,
    ) -> Result<DMatrix<f64>, GeometryError> {
        match self.region_kind(region) {
            RegionKind::FlatSheetPlus | RegionKind::FlatSheetMinus => {
                Ok(DMatrix::zeros(self.m, self.m))
            }
            RegionKind::Cap => {
                // sphere of radius r around a point (or a flat factor)
                let nu = self.normal_in(region, x)?;
                let mut pi_perp = -tangential_projector(&nu) / self.r;
                if let Shape::Product { flat_dim, .. } = &self.shape {
                    // curvature only in the sphere factor
                    let k = *flat_dim;
                    let nu_s = &nu;
                    let mut mat = DMatrix::zeros(self.m, self.m);
                    for i in k..self.m {
                        for j in k..self.m {
                            let id = if i == j { 1.0 } else { 0.0 };
                            mat[(i, j)] = -(id - nu_s[i] * nu_s[j]) / self.r;
                        }
                    }
                    pi_perp = mat;
                }
                Ok(pi_perp)
            }
            RegionKind::EdgeTube => match &self.shape {
                Shape::Product { flat_dim, .. } => {
                    // cylinder ℝ^k × S¹(r): 𝕊 = −(1/r) ê_θ ê_θᵀ
                    let k = *flat_dim;
                    let s = x.rows(k, self.m - k).norm();
                    let (c0, c1) = (x[k] / s, x[k + 1] / s);
                    let mut e_th = DVector::zeros(self.m);
                    e_th[k] = -c1;
                    e_th[k + 1] = c0;
                    Ok(-(&e_th * e_th.transpose()) / self.r)
                }
                Shape::SemiInfiniteLine => {
                    let s = x[1].hypot(x[2]);
                    let (c1, c2) = (x[1] / s, x[2] / s);
                    let e_th = DVector::from_vec(vec![0.0, -c2, c1]);
                    Ok(-(&e_th * e_th.transpose()) / self.r)
                }
                _ => {
                    let (p, data) = self.edge_contact(x)?;
                    let d = self.position_delta(&p, &self.wrap_position(x));
                    let d = &d / d.norm();
                    let vi = self.vi();
                    let cos_phi = d[vi];
                    let sin_phi = -d.dot(&data.normal_in);
                    // meridian tangent: −cosφ 𝕟 − sinφ e_vert
                    let mut e_m = -&data.normal_in * cos_phi;
                    e_m[vi] -= sin_phi;
                    let mut mat = -(&e_m * e_m.transpose()) / self.r;
                    let lam_t = -data.kappa * sin_phi / (1.0 + self.r * data.kappa * sin_phi);
                    if lam_t != 0.0 {
                        for t in &data.tangents {
                            mat += t * t.transpose() * lam_t;
                        }
                    }
                    Ok(mat)
                }
            },
            RegionKind::Seam => Err(GeometryError::SeamPoint),
        }
    }

    /// Nearest surface point. Requires the input within r/2 of the surface.
    pub fn project_to_surface(&self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        self.check_dim(x)?;
        let xw = self.wrap_position(x);
        let c = self.contact(&xw)?;
        if c.dist < 1e-300 || (c.dist - self.r).abs() > 0.5 * self.r {
            return Err(GeometryError::AmbiguousProjection);
        }
        let d = self.position_delta(&c.point, &xw);
        Ok(self.wrap_position(&(&c.point + d * (self.r / c.dist))))
    }

    /// Region classification with seam detection.
    pub fn classify(&self, x: &DVector<f64>) -> Result<Classification, GeometryError> {
        self.check_dim(x)?;
        let vi = self.vi();
        match &self.shape {
            Shape::Product { sphere_dim, .. } => Ok(Classification {
                region: RegionId(0),
                kind: if *sphere_dim == 1 {
                    RegionKind::EdgeTube
                } else {
                    RegionKind::Cap
                },
                seam_distance: f64::INFINITY,
            }),
            Shape::SemiInfiniteLine => {
                let seam_distance = x[0].abs();
                let (region, kind) = if x[0] <= 0.0 {
                    (RegionId(0), RegionKind::EdgeTube)
                } else {
                    (RegionId(1), RegionKind::Cap)
                };
                Ok(Classification {
                    region,
                    kind: if seam_distance < SEAM_BAND {
                        RegionKind::Seam
                    } else {
                        kind
                    },
                    seam_distance,
                })
            }
            _ => {
                let c = self.contact(&self.wrap_position(x))?;
                match c.feature {
                    Feature::Interior { edge_distance } => {
                        let region = if x[vi] >= 0.0 {
                            RegionId(0)
                        } else {
                            RegionId(1)
                        };
                        Ok(Classification {
                            region,
                            kind: if edge_distance < SEAM_BAND {
                                RegionKind::Seam
                            } else {
                                self.region_kind(region)
                            },
                            seam_distance: edge_distance,
                        })
                    }
                    Feature::Edge(data) => {
                        let d = self.position_delta(&c.point, &self.wrap_position(x));
                        let d = &d / d.norm();
                        let cos_phi = d[vi];
                        let sin_phi = -d.dot(&data.normal_in);
                        let phi = sin_phi.atan2(cos_phi); // ∈ (−π, π]; tube interior is (0, π)
                        let seam_distance = self.r * phi.min(std::f64::consts::PI - phi).abs();
                        Ok(Classification {
                            region: RegionId(2),
                            kind: if seam_distance < SEAM_BAND {
                                RegionKind::Seam
                            } else {
                                RegionKind::EdgeTube
                            },
                            seam_distance,
                        })
                    }
                    Feature::Vertex => unreachable!("vertex feature only on semi-infinite line"),
                }
            }
        }
    }

    /// Unit tangent of the meridian circle through a tube point, oriented so
    /// that it equals −𝕟 at the top seam and +𝕟 at the bottom one.
    pub fn meridian_direction(&self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        if !self.has_sheets() {
            return Err(GeometryError::NoEdge);
        }
        let (p, data) = self.edge_contact(x)?;
        let d = self.position_delta(&p, &self.wrap_position(x));
        let d = &d / d.norm();
        let vi = self.vi();
        let cos_phi = d[vi];
        let sin_phi = -d.dot(&data.normal_in);
        let mut e_m = -&data.normal_in * cos_phi;
        e_m[vi] -= sin_phi;
        Ok(e_m)
    }

    /// Plate frame at the boundary point nearest to `x` (plates with an edge).
    pub fn edge_frame(&self, x: &DVector<f64>) -> Result<PlateFrame, GeometryError> {
        if !self.has_sheets() {
            return Err(GeometryError::NoEdge);
        }
        let (point, data) = self.edge_contact(x)?;
        let mut vertical = DVector::zeros(self.m);
        vertical[self.vi()] = 1.0;
        Ok(PlateFrame {
            point,
            edge_tangents: data.tangents,
            normal_in: data.normal_in,
            vertical,
        })
    }

    /// The entry seam point above (side = +1) or below (side = −1) a plate
    /// boundary point.
    pub fn seam_point(&self, frame: &PlateFrame, side: f64) -> DVector<f64> {
        let mut x = frame.point.clone();
        x[self.vi()] += side.signum() * self.r;
        self.wrap_position(&x)
    }

    /// Random surface point, for sampling-based diagnostics.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let vi = self.vi();
        match &self.shape {
            Shape::HalfPlane => {
                let mut x = DVector::zeros(self.m);
                for i in 0..self.m - 2 {
                    x[i] = rng.gen_range(-2.0..2.0);
                }
                if rng.gen_bool(0.5) {
                    x[self.m - 2] = rng.gen_range(0.0..2.0);
                    x[vi] = if rng.gen_bool(0.5) { self.r } else { -self.r };
                } else {
                    let phi = rng.gen_range(0.0..std::f64::consts::PI);
                    x[self.m - 2] = -self.r * phi.sin();
                    x[vi] = self.r * phi.cos();
                }
                x
            }
            Shape::Disc { plate_radius } => {
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                if rng.gen_bool(0.5) {
                    let rho = plate_radius * rng.gen_range(0.0f64..1.0).sqrt();
                    DVector::from_vec(vec![
                        rho * th.cos(),
                        rho * th.sin(),
                        if rng.gen_bool(0.5) { self.r } else { -self.r },
                    ])
                } else {
                    let phi = rng.gen_range(0.0..std::f64::consts::PI);
                    let rho = plate_radius + self.r * phi.sin();
                    DVector::from_vec(vec![rho * th.cos(), rho * th.sin(), self.r * phi.cos()])
                }
            }
            Shape::SinaiTorus {
                period,
                hole_radius,
                center,
            } => {
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                if rng.gen_bool(0.5) {
                    let d = rng.gen_range(*hole_radius..period * 0.49);
                    let p = center + Vector2::new(th.cos(), th.sin()) * d;
                    self.wrap_position(&DVector::from_vec(vec![
                        p.x,
                        p.y,
                        if rng.gen_bool(0.5) { self.r } else { -self.r },
                    ]))
                } else {
                    let phi = rng.gen_range(0.0..std::f64::consts::PI);
                    let d = hole_radius - self.r * phi.sin();
                    let p = center + Vector2::new(th.cos(), th.sin()) * d;
                    self.wrap_position(&DVector::from_vec(vec![p.x, p.y, self.r * phi.cos()]))
                }
            }
            Shape::SemiInfiniteLine => {
                if rng.gen_bool(0.5) {
                    let th = rng.gen_range(0.0..std::f64::consts::TAU);
                    DVector::from_vec(vec![
                        rng.gen_range(-2.0..0.0),
                        self.r * th.cos(),
                        self.r * th.sin(),
                    ])
                } else {
                    loop {
                        let v = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                        let n = v.norm();
                        if n > 1e-3 && v[0] > 0.0 {
                            return &v * (self.r / n);
                        }
                    }
                }
            }
            Shape::Product { flat_dim, .. } => {
                let k = *flat_dim;
                let mut x = DVector::zeros(self.m);
                for i in 0..k {
                    x[i] = rng.gen_range(-2.0..2.0);
                }
                loop {
                    let v = DVector::from_fn(self.m - k, |_, _| rng.gen_range(-1.0..1.0));
                    let n = v.norm();
                    if n > 1e-3 {
                        for i in k..self.m {
                            x[i] = v[i - k] * self.r / n;
                        }
                        return x;
                    }
                }
            }
            Shape::Smooth { curve } => {
                let t = rng.gen_range(0.0..curve.period());
                let b = curve.eval(t);
                let n_in = curve.normal_in(t);
                if rng.gen_bool(0.5) {
                    let k_max = curve.max_abs_curvature().max(1e-9);
                    let off = rng.gen_range(0.0..(0.5 / k_max));
                    let p = b + n_in * off;
                    DVector::from_vec(vec![
                        p.x,
                        p.y,
                        if rng.gen_bool(0.5) { self.r } else { -self.r },
                    ])
                } else {
                    let phi = rng.gen_range(0.0..std::f64::consts::PI);
                    let p = b - n_in * (self.r * phi.sin());
                    DVector::from_vec(vec![p.x, p.y, self.r * phi.cos()])
                }
            }
        }
    }
}

fn planar_edge_data(normal_in_planar: Vector2<f64>, kappa: f64) -> EdgeData {
    let normal_in = DVector::from_vec(vec![normal_in_planar.x, normal_in_planar.y, 0.0]);
    let t = spline::rot90(normal_in_planar);
    EdgeData {
        normal_in,
        tangents: vec![DVector::from_vec(vec![t.x, t.y, 0.0])],
        kappa,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn halfplane(r: f64) -> PancakeSurface {
        build_pancake(PlateSpec::HalfPlane { ambient_dim: 3 }, r).unwrap()
    }

    fn disc(plate_r: f64, r: f64) -> PancakeSurface {
        build_pancake(PlateSpec::Disc { radius: plate_r }, r).unwrap()
    }

    fn smooth_circle_plate(plate_r: f64, n: usize) -> PlateSpec {
        let samples = (0..n)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / n as f64;
                BoundarySample {
                    point: [plate_r * th.cos(), plate_r * th.sin()],
                    curvature: 1.0 / plate_r,
                }
            })
            .collect();
        PlateSpec::SmoothPlanarPlate { samples }
    }

    #[test]
    fn rejects_radius_beyond_curvature_bound() {
        assert!(matches!(
            build_pancake(PlateSpec::Disc { radius: 1.0 }, 1.5),
            Err(GeometryError::RadiusTooLarge { bound, .. }) if bound == 1.0
        ));
        assert!(matches!(
            build_pancake(
                PlateSpec::SinaiTorus {
                    period: 1.0,
                    hole_radius: 0.25
                },
                0.3
            ),
            Err(GeometryError::RadiusTooLarge { .. })
        ));
    }

    #[test]
    fn halfplane_sheet_normal_is_constant_vertical() {
        let s = halfplane(0.1);
        let x = DVector::from_vec(vec![0.3, 1.2, 0.1]);
        let nu = s.normal(&x).unwrap();
        assert_abs_diff_eq!((nu - DVector::from_vec(vec![0.0, 0.0, 1.0])).norm(), 0.0);
    }

    #[test]
    fn halfplane_tube_normal_is_meridian_radial() {
        let s = halfplane(0.1);
        let phi: f64 = 1.1;
        let x = DVector::from_vec(vec![0.5, -0.1 * phi.sin(), 0.1 * phi.cos()]);
        let nu = s.normal(&x).unwrap();
        let expect = DVector::from_vec(vec![0.0, -phi.sin(), phi.cos()]);
        assert_abs_diff_eq!((nu - expect).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn normal_agrees_across_seam_from_both_regions() {
        for surface in [halfplane(0.05), disc(1.0, 0.05)] {
            // a point exactly on the top seam
            let x = match surface.plate() {
                PlateSpec::HalfPlane { .. } => DVector::from_vec(vec![0.7, 0.0, 0.05]),
                _ => DVector::from_vec(vec![1.0, 0.0, 0.05]),
            };
            let from_sheet = surface.normal_in(RegionId(0), &x).unwrap();
            let from_tube = surface.normal_in(RegionId(2), &x).unwrap();
            assert!((from_sheet - from_tube).norm() < 1e-10);
        }
    }

    #[test]
    fn flat_sheet_shape_operator_vanishes() {
        let s = disc(1.0, 0.05);
        let x = DVector::from_vec(vec![0.2, -0.3, 0.05]);
        assert_eq!(s.shape_operator(&x).unwrap().norm(), 0.0);
    }

    #[test]
    fn tube_meridian_eigenvalue_is_minus_one_over_r() {
        let r = 0.07;
        for surface in [
            halfplane(r),
            disc(1.0, r),
            build_pancake(
                PlateSpec::SinaiTorus {
                    period: 1.0,
                    hole_radius: 0.25,
                },
                r,
            )
            .unwrap(),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            // find a tube sample
            let x = loop {
                let x = surface.sample_point(&mut rng);
                let c = surface.classify(&x).unwrap();
                if c.kind == RegionKind::EdgeTube && c.seam_distance > 1e-3 {
                    break x;
                }
            };
            let sh = surface.shape_operator(&x).unwrap();
            let nu = surface.normal(&x).unwrap();
            // S nu = 0 and symmetric
            assert!((&sh * &nu).norm() < 1e-10);
            assert!((&sh - sh.transpose()).norm() < 1e-12);
            // meridian direction: eigenvalue −1/r
            let vi = surface.ambient_dim() - 1;
            let frame = surface.edge_frame(&x).unwrap();
            let d = surface.position_delta(&frame.point, &x);
            let d = &d / d.norm();
            let cos_phi = d[vi];
            let sin_phi = -d.dot(&frame.normal_in);
            let mut e_m = -&frame.normal_in * cos_phi;
            e_m[vi] -= sin_phi;
            let lam = (&sh * &e_m).dot(&e_m);
            assert_abs_diff_eq!(lam, -1.0 / r, epsilon = 1e-9);
        }
    }

    #[test]
    fn product_shape_operator_is_projector_scaled() {
        // 𝕊 = −(1/r) Π⊥ on ℝ^k × S^d(r)
        let r = 0.4;
        for plate in [
            PlateSpec::CylinderFactor { flat_dim: 1 },
            PlateSpec::SphereFactor { flat_dim: 1 },
        ] {
            let s = build_pancake(plate, r).unwrap();
            let m = s.ambient_dim();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let x = s.sample_point(&mut rng);
            let sh = s.shape_operator(&x).unwrap();
            let nu = s.normal(&x).unwrap();
            // expected: −(1/r)(diag(0,I) − ννᵀ)
            let mut expect = DMatrix::zeros(m, m);
            for i in 1..m {
                expect[(i, i)] = 1.0;
            }
            expect -= &nu * nu.transpose();
            expect /= -r;
            assert!((sh - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn shape_operator_refuses_seam_points() {
        let s = halfplane(0.1);
        let x = DVector::from_vec(vec![0.0, 0.0, 0.1]); // on the top seam
        assert!(matches!(
            s.shape_operator(&x),
            Err(GeometryError::SeamPoint)
        ));
    }

    #[test]
    fn projection_is_idempotent_and_drops_to_sheet() {
        let s = disc(1.0, 0.05);
        let on = DVector::from_vec(vec![0.4, 0.1, 0.05]);
        assert_abs_diff_eq!((s.project_to_surface(&on).unwrap() - &on).norm(), 0.0);
        let above = DVector::from_vec(vec![0.4, 0.1, 0.05 + 1e-3]);
        let p = s.project_to_surface(&above).unwrap();
        assert_abs_diff_eq!((p - on).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn projection_of_perturbed_tube_point_stays_close() {
        let s = disc(1.0, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = loop {
                let x = s.sample_point(&mut rng);
                if s.classify(&x).unwrap().kind == RegionKind::EdgeTube {
                    break x;
                }
            };
            let eps = 1e-6;
            let noise = DVector::from_fn(3, |_, _| rng.gen_range(-1.0f64..1.0)) * eps;
            let p = s.project_to_surface(&(&x + &noise)).unwrap();
            assert!((p - &x).norm() <= 2.0 * eps);
        }
    }

    #[test]
    fn projection_rejects_far_points() {
        let s = disc(1.0, 0.05);
        let far = DVector::from_vec(vec![0.0, 0.0, 0.5]);
        assert!(matches!(
            s.project_to_surface(&far),
            Err(GeometryError::AmbiguousProjection)
        ));
    }

    #[test]
    fn classification_examples() {
        let s = halfplane(0.1);
        let top = DVector::from_vec(vec![0.0, 1.0, 0.1]);
        assert_eq!(s.classify(&top).unwrap().kind, RegionKind::FlatSheetPlus);
        let mid = DVector::from_vec(vec![0.0, -0.1, 0.0]); // meridian midpoint
        assert_eq!(s.classify(&mid).unwrap().kind, RegionKind::EdgeTube);

        let semi = build_pancake(PlateSpec::SemiInfiniteLine, 0.2).unwrap();
        let on_cap = DVector::from_vec(vec![0.15, 0.1, (0.04f64 - 0.0225 - 0.01).sqrt()]);
        assert_eq!(semi.classify(&on_cap).unwrap().kind, RegionKind::Cap);
        let on_cyl = DVector::from_vec(vec![-0.5, 0.2, 0.0]);
        assert_eq!(semi.classify(&on_cyl).unwrap().kind, RegionKind::EdgeTube);
    }

    #[test]
    fn sampled_points_lie_at_distance_r_from_plate() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let surfaces = vec![
            halfplane(0.1),
            disc(1.0, 0.05),
            build_pancake(
                PlateSpec::SinaiTorus {
                    period: 1.0,
                    hole_radius: 0.25,
                },
                0.01,
            )
            .unwrap(),
            build_pancake(PlateSpec::SemiInfiniteLine, 0.2).unwrap(),
            build_pancake(PlateSpec::CylinderFactor { flat_dim: 1 }, 0.3).unwrap(),
            build_pancake(PlateSpec::SphereFactor { flat_dim: 0 }, 0.5).unwrap(),
        ];
        for s in &surfaces {
            for _ in 0..2000 {
                let x = s.sample_point(&mut rng);
                let d = s.distance_to_plate(&x).unwrap();
                assert!(
                    (d - s.radius()).abs() < 1e-10,
                    "distance defect {:?} on {:?}",
                    d - s.radius(),
                    s.plate()
                );
            }
        }
        // smooth plates interpolate the boundary, so the sheet samples are
        // exact and tube samples are exact relative to the spline edge
        let smooth = build_pancake(smooth_circle_plate(1.0, 48), 0.05).unwrap();
        for _ in 0..500 {
            let x = smooth.sample_point(&mut rng);
            let d = smooth.distance_to_plate(&x).unwrap();
            assert!((d - smooth.radius()).abs() < 1e-9);
        }
    }

    #[test]
    fn shape_operator_symmetry_and_kernel_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let surfaces = vec![
            halfplane(0.1),
            disc(1.0, 0.05),
            build_pancake(PlateSpec::SemiInfiniteLine, 0.2).unwrap(),
            build_pancake(PlateSpec::SphereFactor { flat_dim: 1 }, 0.5).unwrap(),
        ];
        for s in &surfaces {
            let mut tested = 0;
            while tested < 10_000 {
                let x = s.sample_point(&mut rng);
                let c = s.classify(&x).unwrap();
                if c.kind == RegionKind::Seam {
                    continue;
                }
                let sh = s.shape_operator_in(c.region, &x).unwrap();
                let nu = s.normal_in(c.region, &x).unwrap();
                assert!((&sh - sh.transpose()).amax() < 1e-12);
                assert!((&sh * nu).amax() < 1e-10);
                tested += 1;
            }
        }
    }

    #[test]
    fn shape_operator_matches_normal_finite_differences() {
        // ‖𝕊v + (ν(x+hv) − ν(x−hv))/2h‖ = O(h²), observed order ≥ 1.9
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let surfaces = vec![
            disc(1.0, 0.05),
            build_pancake(
                PlateSpec::SinaiTorus {
                    period: 1.0,
                    hole_radius: 0.25,
                },
                0.02,
            )
            .unwrap(),
            build_pancake(PlateSpec::SphereFactor { flat_dim: 0 }, 0.5).unwrap(),
        ];
        for s in &surfaces {
            let (x, region) = loop {
                let x = s.sample_point(&mut rng);
                let c = s.classify(&x).unwrap();
                if matches!(c.kind, RegionKind::EdgeTube | RegionKind::Cap)
                    && c.seam_distance > 0.2 * s.radius()
                {
                    break (x, c.region);
                }
            };
            let nu = s.normal_in(region, &x).unwrap();
            let sh = s.shape_operator_in(region, &x).unwrap();
            // random tangent direction
            let mut v = DVector::from_fn(s.ambient_dim(), |_, _| rng.gen_range(-1.0f64..1.0));
            v -= &nu * nu.dot(&v);
            v /= v.norm();
            let err = |h: f64| {
                let np = s.normal_in(region, &(&x + &v * h)).unwrap();
                let nm = s.normal_in(region, &(&x - &v * h)).unwrap();
                ((&sh * &v) + (np - nm) / (2.0 * h)).norm()
            };
            let e3 = err(1e-3);
            let e4 = err(1e-4);
            let order = (e3 / e4).log10();
            assert!(
                order >= 1.9,
                "FD order {order} (e3={e3:.3e}, e4={e4:.3e}) on {:?}",
                s.plate()
            );
        }
    }

    #[test]
    fn smooth_plate_agrees_with_analytic_disc() {
        // a circle plate built from spline samples should reproduce the disc
        let r = 0.05;
        let analytic = disc(1.0, r);
        let smooth = build_pancake(smooth_circle_plate(1.0, 96), r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..60 {
            let x = analytic.sample_point(&mut rng);
            let class_a = analytic.classify(&x).unwrap();
            if class_a.kind == RegionKind::Seam || class_a.seam_distance < 1e-3 {
                continue;
            }
            let class_s = smooth.classify(&x).unwrap();
            assert_eq!(class_a.kind, class_s.kind);
            let nu_a = analytic.normal_in(class_a.region, &x).unwrap();
            let nu_s = smooth.normal_in(class_s.region, &x).unwrap();
            assert!((nu_a - nu_s).norm() < 1e-4);
            let sh_a = analytic.shape_operator_in(class_a.region, &x).unwrap();
            let sh_s = smooth.shape_operator_in(class_s.region, &x).unwrap();
            assert!((sh_a - sh_s).norm() < 2e-3);
        }
    }


    #[test]
    fn region_lists_match_the_surface_topology() {
        use RegionKind::*;
        let kinds = |s: &PancakeSurface| -> Vec<RegionKind> {
            s.regions().iter().map(|r| r.kind).collect()
        };
        // two flat sheets joined by a half-tube around the edge
        assert_eq!(kinds(&disc(1.0, 0.05)), vec![FlatSheetPlus, FlatSheetMinus, EdgeTube]);
        assert_eq!(kinds(&halfplane(0.1)), vec![FlatSheetPlus, FlatSheetMinus, EdgeTube]);
        // cylinder plus spherical cap around the endpoint
        let semi = build_pancake(PlateSpec::SemiInfiniteLine, 0.2).unwrap();
        assert_eq!(kinds(&semi), vec![EdgeTube, Cap]);
        // single-region products
        let cyl = build_pancake(PlateSpec::CylinderFactor { flat_dim: 1 }, 0.3).unwrap();
        assert_eq!(kinds(&cyl), vec![EdgeTube]);
        let sph = build_pancake(PlateSpec::SphereFactor { flat_dim: 0 }, 0.5).unwrap();
        assert_eq!(kinds(&sph), vec![Cap]);
    }

    #[test]
    fn normal_rejects_points_off_the_surface() {
        let s = disc(1.0, 0.05);
        let off = DVector::from_vec(vec![0.3, 0.0, 0.08]);
        assert!(matches!(
            s.normal(&off),
            Err(GeometryError::NotOnSurface { .. })
        ));
    }

    #[test]
    fn surfaces_are_shareable_between_threads() {
        fn assert_sync_send<T: Sync + Send>() {}
        assert_sync_send::<PancakeSurface>();
        assert_sync_send::<SkewMap>();
        assert_sync_send::<PlateSpec>();
    }

    #[test]
    fn plate_spec_json_round_trip() {
        let spec = PlateSpec::SinaiTorus {
            period: 1.0,
            hole_radius: 0.25,
        };
        let js = serde_json::to_string(&spec).unwrap();
        assert!(js.contains("\"family\":\"sinai_torus\""));
        let back: PlateSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), js);
        // unknown keys rejected
        assert!(serde_json::from_str::<PlateSpec>(
            "{\"family\":\"disc\",\"radius\":1.0,\"bogus\":2}"
        )
        .is_err());
    }
}
