//! Descriptor field of the linear saddle, checked against its closed form.
//!
//! ```text
//! cargo run --release --example linear_saddle_field
//! ```

use ldkit::systems::oracle_descriptor;
use ldkit::{compute_field, GridSpec, LDConfig, VectorFieldSpec};

fn main() -> ldkit::Result<()> {
    let saddle = VectorFieldSpec::linear_saddle(1.0)?;
    let cfg = LDConfig::mp(0.5, 15.0)?.with_step(0.01);
    let grid = GridSpec::square(-1.0, 1.0, 101)?;

    let field = compute_field(&saddle, &grid, &cfg)?;
    let worst = (0..grid.len())
        .map(|k| {
            let exact = oracle_descriptor(&saddle, &grid.node(k), &cfg).unwrap();
            ((field.values[k] - exact) / exact).abs()
        })
        .fold(0.0, f64::max);

    let (lo, hi) = field
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    println!("{} nodes, M_0.5 in [{lo:.3e}, {hi:.3e}]", field.len());
    println!("max relative error against the closed form: {worst:.2e}");
    // the minimum sits on the stable and unstable manifolds, the coordinate axes
    let centre = field.at(&[50, 50]);
    println!("value at the saddle point: {centre}");
    Ok(())
}
