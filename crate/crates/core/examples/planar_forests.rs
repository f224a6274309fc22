//! Enumerate planar forests, print their factorials, and parse one back.
//!
//! ```bash
//! cargo run -p homflow --example planar_forests
//! ```

use homflow::lie_butcher::{generate_forests, planar_factorial, PlanarForest};

fn main() -> homflow::Result<()> {
    for n in 0..=6 {
        println!("order {n}: {} forests", generate_forests(n)?.len());
    }
    println!();
    for w in generate_forests(3)? {
        println!("{w:<10} factorial {}", planar_factorial(&w));
    }

    let w: PlanarForest = "•[•[•]]•".parse()?;
    println!("\nparsed {w} of order {}", w.order());
    Ok(())
}
