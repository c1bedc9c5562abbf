use nalgebra::{DMatrix, DVector};
use rolling_billiards::geometry::PlateSpec;
use rolling_billiards::limit::*;

fn main() {
    // concave (hole) edge convergence on the sinai plate
    let incoming = SplitVelocity {
        u_bar: DVector::from_vec(vec![0.45]),
        u_perp: -0.8,
        w: DVector::from_vec(vec![0.3]),
        block: DMatrix::zeros(1, 1),
    };
    let exp = EdgeExperiment {
        plate: PlateSpec::SinaiTorus { period: 1.0, hole_radius: 0.25 },
        boundary_point: DVector::from_vec(vec![0.75, 0.5, 0.0]),
        incoming,
        eta: 0.358752,
        radii: vec![3e-2, 1e-2, 3e-3, 1e-3, 3e-4],
        steps_per_crossing: 1500,
    };
    let report = convergence_study(&exp).unwrap();
    for row in &report.rows {
        println!("sinai r={:.0e}: err={:.4e} side={:?}", row.r, row.map_error, row.exit_side);
    }
    println!("rate {:?}", report.fitted_rate);
}
