//! The comparison family near the base point: chart, cutoff and the
//! largest member against the distance.
//!
//! ```bash
//! cargo run -p homflow --example comparison_family
//! ```

use homflow::analysis::{ball_samples, comparison_family};
use homflow::space::{geodesic_distance, Space};

fn main() -> homflow::Result<()> {
    for space in [Space::Sphere(3), Space::Group(3)] {
        let fam = comparison_family(space, 0.3)?;
        let (inner, outer) = fam.cutoff_radii();
        println!(
            "{}: {} members, cutoff radii {inner:.4}/{outer:.4}, Lipschitz {:.3}",
            space.name(),
            fam.len(),
            fam.lipschitz()
        );
        let o = space.base_point();
        for x in ball_samples(space, 0.3, 5, 7) {
            println!(
                "  d = {:.4}  max f_n = {:.4}  cutoff {:.3}",
                geodesic_distance(&x, &o)?,
                fam.max_member(&x),
                fam.cutoff(&x)
            );
        }
    }
    Ok(())
}
