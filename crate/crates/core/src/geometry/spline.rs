//! Closed planar curves as periodic cubic splines.
//!
//! Used for smooth plate boundaries and smooth billiard walls. The curve is
//! interpolated through the sample points with a periodic natural cubic
//! spline on a uniform parameter grid; Frenet data (tangent, inward normal,
//! signed curvature) comes from the spline derivatives.

use nalgebra::{DMatrix, DVector, Vector2};

use super::GeometryError;

/// Rotation by +90 degrees; for a counterclockwise curve this turns the
/// tangent into the inward normal.
pub fn rot90(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

pub fn cross2(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Periodic cubic spline through n points, parametrized by t ∈ [0, n).
#[derive(Debug, Clone)]
pub struct ClosedCurve {
    points: Vec<Vector2<f64>>,
    second: Vec<Vector2<f64>>,
    /// Coarse (t, position) samples for projection bootstrapping.
    cache: Vec<(f64, Vector2<f64>)>,
}

const CACHE_PER_SEGMENT: usize = 16;

impl ClosedCurve {
    pub fn new(points: Vec<Vector2<f64>>) -> Result<Self, GeometryError> {
        if points.len() < 4 {
            return Err(GeometryError::InvalidPlate(
                "smooth boundary needs at least 4 sample points".into(),
            ));
        }
        let mut points = points;
        if signed_area(&points) < 0.0 {
            points.reverse();
        }
        let second = periodic_second_derivatives(&points)?;
        let mut curve = Self {
            points,
            second,
            cache: Vec::new(),
        };
        let n = curve.n();
        let mut cache = Vec::with_capacity(n * CACHE_PER_SEGMENT);
        for i in 0..n * CACHE_PER_SEGMENT {
            let t = i as f64 / CACHE_PER_SEGMENT as f64;
            cache.push((t, curve.eval(t)));
        }
        curve.cache = cache;
        Ok(curve)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn period(&self) -> f64 {
        self.n() as f64
    }

    fn wrap_t(&self, t: f64) -> f64 {
        let p = self.period();
        t.rem_euclid(p)
    }

    fn segment(&self, t: f64) -> (usize, usize, f64) {
        let t = self.wrap_t(t);
        let i = (t.floor() as usize).min(self.n() - 1);
        (i, (i + 1) % self.n(), t - i as f64)
    }

    pub fn eval(&self, t: f64) -> Vector2<f64> {
        let (i, j, s) = self.segment(t);
        let (p0, p1) = (self.points[i], self.points[j]);
        let (m0, m1) = (self.second[i], self.second[j]);
        let a = 1.0 - s;
        m0 * (a * a * a - a) / 6.0 + m1 * (s * s * s - s) / 6.0 + p0 * a + p1 * s
    }

    pub fn deriv(&self, t: f64) -> Vector2<f64> {
        let (i, j, s) = self.segment(t);
        let (p0, p1) = (self.points[i], self.points[j]);
        let (m0, m1) = (self.second[i], self.second[j]);
        let a = 1.0 - s;
        (p1 - p0) + m0 * (1.0 - 3.0 * a * a) / 6.0 + m1 * (3.0 * s * s - 1.0) / 6.0
    }

    pub fn second_deriv(&self, t: f64) -> Vector2<f64> {
        let (i, j, s) = self.segment(t);
        self.second[i] * (1.0 - s) + self.second[j] * s
    }

    pub fn tangent(&self, t: f64) -> Vector2<f64> {
        let d = self.deriv(t);
        d / d.norm()
    }

    /// Inward normal for the (counterclockwise) boundary of the plate.
    pub fn normal_in(&self, t: f64) -> Vector2<f64> {
        rot90(self.tangent(t))
    }

    /// Signed curvature with respect to the inward normal; positive where the
    /// plate is convex.
    pub fn curvature(&self, t: f64) -> f64 {
        let d = self.deriv(t);
        let dd = self.second_deriv(t);
        cross2(d, dd) / d.norm().powi(3)
    }

    pub fn max_abs_curvature(&self) -> f64 {
        let n = self.n() * CACHE_PER_SEGMENT;
        (0..n)
            .map(|i| self.curvature(i as f64 / CACHE_PER_SEGMENT as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Parameter and foot of the curve point nearest to `p`.
    ///
    /// Coarse scan over cached samples, then safeguarded Newton on
    /// g(t) = (p − c(t))·c'(t).
    pub fn nearest(&self, p: Vector2<f64>) -> (f64, Vector2<f64>) {
        let mut best_t = 0.0;
        let mut best_d = f64::INFINITY;
        for &(t, c) in &self.cache {
            let d = (p - c).norm_squared();
            if d < best_d {
                best_d = d;
                best_t = t;
            }
        }
        let half = 0.5 / CACHE_PER_SEGMENT as f64;
        let (mut lo, mut hi) = (best_t - 2.0 * half, best_t + 2.0 * half);
        let mut t = best_t;
        for _ in 0..60 {
            let c = self.eval(t);
            let d = self.deriv(t);
            let g = (p - c).dot(&d);
            let gp = -d.norm_squared() + (p - c).dot(&self.second_deriv(t));
            let step = if gp.abs() > 1e-300 { g / gp } else { 0.0 };
            let mut tn = t - step;
            if !(lo..=hi).contains(&tn) || step == 0.0 {
                // fall back to bisection on g's sign
                let glo = (p - self.eval(lo)).dot(&self.deriv(lo));
                tn = if glo * g < 0.0 {
                    0.5 * (lo + t)
                } else {
                    0.5 * (t + hi)
                };
            }
            if (p - self.eval(tn)).norm_squared() <= (p - self.eval(t)).norm_squared() {
                if tn < t {
                    hi = t;
                } else {
                    lo = t;
                }
                if (tn - t).abs() < 1e-14 {
                    t = tn;
                    break;
                }
                t = tn;
            } else {
                break;
            }
        }
        (self.wrap_t(t), self.eval(t))
    }

    /// Signed distance to the curve: positive on the plate side (interior).
    pub fn signed_distance(&self, p: Vector2<f64>) -> f64 {
        let (t, c) = self.nearest(p);
        let off = p - c;
        let side = off.dot(&self.normal_in(t));
        off.norm() * side.signum()
    }
}

fn signed_area(points: &[Vector2<f64>]) -> f64 {
    let n = points.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        a += cross2(p, q);
    }
    0.5 * a
}

/// Second derivatives of the periodic natural cubic spline on a uniform grid:
/// M_{i−1} + 4 M_i + M_{i+1} = 6 (p_{i−1} − 2 p_i + p_{i+1}), cyclically.
fn periodic_second_derivatives(
    points: &[Vector2<f64>],
) -> Result<Vec<Vector2<f64>>, GeometryError> {
    let n = points.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 4.0;
        a[(i, (i + 1) % n)] = 1.0;
        a[(i, (i + n - 1) % n)] = 1.0;
    }
    let lu = a.lu();
    let mut rhs_x = DVector::zeros(n);
    let mut rhs_y = DVector::zeros(n);
    for i in 0..n {
        let d = points[(i + n - 1) % n] - points[i] * 2.0 + points[(i + 1) % n];
        rhs_x[i] = 6.0 * d.x;
        rhs_y[i] = 6.0 * d.y;
    }
    let mx = lu
        .solve(&rhs_x)
        .ok_or_else(|| GeometryError::InvalidPlate("degenerate boundary spline".into()))?;
    let my = lu
        .solve(&rhs_y)
        .ok_or_else(|| GeometryError::InvalidPlate("degenerate boundary spline".into()))?;
    Ok((0..n).map(|i| Vector2::new(mx[i], my[i])).collect())
}
