//! Separation of two nearby exact solutions against `e^{C_T t} d₀`.
//!
//! ```bash
//! cargo run -p homflow --example gronwall_separation
//! ```

use homflow::analysis::gronwall_check;
use homflow::space::{sample_field, sample_nearby, sample_point, FieldParams, Space};

fn main() -> homflow::Result<()> {
    let space = Space::Group(3);
    let v = sample_field(space, "group-nonlinear", &FieldParams::default())?;
    for k in 0..4 {
        let p = sample_point(space, k);
        let q = sample_nearby(&p, 0.1, 100 + k);
        let c = gronwall_check(&v, &p, &q, 1.0, 8)?;
        println!(
            "pair {k}: d0 {:.3e}  C_T {:.3}  max ratio {:.3}  {}",
            c.report.initial_distance,
            c.report.c_t,
            c.report.max_ratio,
            if c.pass { "ok" } else { "VIOLATED" }
        );
    }
    Ok(())
}
