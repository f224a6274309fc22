//! Points, the transitive action, geodesic distance and the lift back to
//! the group, on both `S²` and `SO(3)`.
//!
//! ```bash
//! cargo run -p homflow --example homogeneous_spaces
//! ```

use homflow::kernels::{hat3, mat_exp};
use homflow::space::{act, geodesic_distance, lift_to_group, sample_point, Space};

fn main() -> homflow::Result<()> {
    let g = mat_exp(&hat3([0.2, 0.5, -0.1]))?;
    for space in [Space::Sphere(3), Space::Group(3)] {
        let x = sample_point(space, 1);
        let y = sample_point(space, 2);
        let d = geodesic_distance(&x, &y)?;
        let d_moved = geodesic_distance(&act(&g, &x)?, &act(&g, &y)?)?;
        println!("{}", space.name());
        println!("  d(x, y)       = {d:.12}");
        println!("  d(g.x, g.y)   = {d_moved:.12}");

        // The lift sends the base point to x.
        let lifted = act(&lift_to_group(&x), &space.base_point())?;
        println!("  lift residual = {:.2e}", geodesic_distance(&lifted, &x)?);
    }
    Ok(())
}
