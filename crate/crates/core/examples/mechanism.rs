//! The comparison-function argument along `[0, h]` for a ladder of steps.
//!
//! ```bash
//! cargo run -p homflow --example mechanism
//! ```

use homflow::analysis::{comparison_family, dyadic_steps, mechanism_ladder};
use homflow::integrators::MethodSpec;
use homflow::space::{sample_field, sample_point, FieldParams, Space};

fn main() -> homflow::Result<()> {
    let space = Space::Sphere(3);
    let v = sample_field(space, "sphere-nonlinear", &FieldParams::default())?;
    let x0 = sample_point(space, 11);
    let fam = comparison_family(space, 0.3)?;
    let ladder = mechanism_ladder(&MethodSpec::rkmk4(), &v, &x0, &dyadic_steps(3..=7), &fam)?;
    for r in &ladder.reports {
        println!(
            "h {:<9} invariance {:.1e}  dominated {}  sup ω / h^5 = {:.4}",
            r.h, r.max_invariance_defect, r.domination, r.ratio
        );
    }
    println!("ratio spread {:.3}", ladder.spread);
    Ok(())
}
