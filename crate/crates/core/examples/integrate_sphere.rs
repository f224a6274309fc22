//! Integrate one nonlinear field on `S²` with each built-in method and
//! compare the endpoint with the reference flow.
//!
//! ```bash
//! cargo run -p homflow --example integrate_sphere
//! ```

use homflow::integrators::{integrate, reference_flow, uniform_grid, MethodSpec, REFERENCE_TOL};
use homflow::space::{geodesic_distance, sample_field, sample_point, FieldParams, Space};

fn main() -> homflow::Result<()> {
    let space = Space::Sphere(3);
    let v = sample_field(space, "sphere-nonlinear", &FieldParams::default())?;
    let x0 = sample_point(space, 11);
    let exact = reference_flow(&v, &x0, 1.0, REFERENCE_TOL)?;

    for id in ["lie-euler", "rkmk4", "cf4"] {
        let spec = MethodSpec::from_id(id)?;
        for n in [8, 16, 32] {
            let traj = integrate(&spec, &v, &x0, &uniform_grid(0.0, 1.0, n))?;
            println!(
                "{id:>9} n={n:<3} error {:.3e}  |x|-1 drift {:.1e}",
                geodesic_distance(traj.last(), &exact)?,
                traj.max_invariant_defect()
            );
        }
    }
    Ok(())
}
