//! Exponential, logarithm, commutators and the truncated `dexp⁻¹` series on
//! `so(3)`, checked against each other.
//!
//! ```bash
//! cargo run -p homflow --example matrix_kernels
//! ```

use homflow::kernels::{commutator, dexp_series, dexpinv, hat3, mat_exp, mat_log, rotation_angles, vee3};

fn main() -> homflow::Result<()> {
    let a = hat3([0.3, -1.1, 0.7]);
    let r = mat_exp(&a)?;
    println!("exp(a) orthogonality defect  {:.2e}", r.orthogonality_defect());
    println!("rotation angles              {:?}", rotation_angles(r.matrix()));

    let back = mat_log(&r)?;
    println!("log(exp(a)) = {:?}", vee3(&back));

    let b = hat3([0.0, 0.2, -0.4]);
    println!("[a, b] = {:?}", vee3(&commutator(&a, &b)?));

    // dexp⁻¹ truncated at q inverts dexp up to O(|u|^{q+1}).
    let u = a.scaled(0.1);
    let w = dexp_series(&u, &b, 30);
    for q in [0, 2, 4, 6] {
        let err = (dexpinv(&u, &w, q)?.matrix() - b.matrix()).norm();
        println!("q = {q}: |dexpinv(u, dexp(u, b)) - b| = {err:.3e}");
    }
    Ok(())
}
