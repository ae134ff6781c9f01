//! Picking the exponent `p` so that both terms of `M_p` stay comparable on
//! a saddle with unequal rates, and the derivative fields that sharpen the
//! manifolds.

use ldkit::{
    compute_field, descriptor_at, partial_derivative, select_p, GridSpec, LDConfig, ScalarField, VectorFieldSpec,
};

fn main() -> ldkit::Result<()> {
    let (lambda, mu, tau) = (2.0, 1.0, 15.0);
    let saddle = VectorFieldSpec::nonham_saddle(lambda, mu)?;
    let grid = GridSpec::square(-1.0, 1.0, 81)?;

    let choice = select_p(lambda, mu, tau)?;
    println!("selected p = {:.5} (clamped: {})", choice.p, choice.clamped);

    for p in [0.5, choice.p] {
        let cfg = LDConfig::mp(p, tau)?.with_step(0.01);
        let field = compute_field(&saddle, &grid, &cfg)?;
        let along_x = descriptor_at(&saddle, &[1.0, 0.0], &cfg)?.value;
        let along_y = descriptor_at(&saddle, &[0.0, 1.0], &cfg)?.value;
        println!("p = {p:.4}: M(1, 0) / M(0, 1) = {:.3e}", along_x / along_y);
        let dx = partial_derivative(&field, 0)?;
        let dy = partial_derivative(&field, 1)?;
        let steepest = |f: &ScalarField| f.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        println!("          max |dM/dx0| = {:.3e}, max |dM/dy0| = {:.3e}", steepest(&dx), steepest(&dy));
    }
    Ok(())
}
