//! `Σ_{|ω|=k} α(ω) F(ω)f = V^k f / k!` checked numerically: elementary
//! differentials summed over planar forests against the iterated Lie
//! derivative.
//!
//! ```bash
//! cargo run -p homflow --example coefficient_identity
//! ```

use homflow::lie_butcher::{
    elementary_differential, generate_forests, iterated_lie_derivative, sigma_factorial_character,
};
use homflow::space::{sample_field, sample_point, test_suite, FieldParams, Space};

fn main() -> homflow::Result<()> {
    for (space, family) in [(Space::Sphere(3), "sphere-nonlinear"), (Space::Group(3), "group-nonlinear")] {
        let v = sample_field(space, family, &FieldParams::default())?;
        let x = sample_point(space, 5);
        let f = &test_suite(space)[1];
        let mut fact = 1.0;
        for k in 1..=4u32 {
            fact *= k as f64;
            let mut lhs = 0.0;
            for w in generate_forests(k as usize)? {
                let (_, _, alpha) = sigma_factorial_character(&w)?;
                lhs += alpha * elementary_differential(&w, &v, f, &x)?;
            }
            let rhs = iterated_lie_derivative(&v, f, &x, k)? / fact;
            println!("{} k={k}: forests {lhs:+.12e}  series {rhs:+.12e}", space.name());
        }
    }
    Ok(())
}
