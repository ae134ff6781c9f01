//! Any type implementing `VectorField` works with the descriptor machinery.
//! Here: the Duffing oscillator. On the line y = 0, `M_0.5` is singular at
//! the saddle, at both centres and where the separatrix loops cross.

use ldkit::analysis::{detect_singularities, transect, DEFAULT_KAPPA};
use ldkit::{compute_field, GridSpec, LDConfig, VectorField};

struct Duffing;

impl VectorField for Duffing {
    fn dim(&self) -> usize {
        2
    }

    fn velocity(&self, x: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = x[1];
        out[1] = x[0] - x[0] * x[0] * x[0];
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        "duffing".into()
    }
}

fn main() -> ldkit::Result<()> {
    let cfg = LDConfig::mp(0.5, 20.0)?.with_step(0.01);
    let field = compute_field(&Duffing, &GridSpec::square(-1.5, 1.5, 61)?, &cfg)?;
    println!("{} nodes, {} truncated", field.len(), field.partial_count());

    let profile = transect(&Duffing, &cfg, &[0.0, 0.0], &[1.0, 0.0], 1.6, 321)?;
    let report = detect_singularities(&profile, DEFAULT_KAPPA)?;
    let flags: Vec<String> = report.flagged_offsets.iter().map(|x| format!("{x:+.2}")).collect();
    println!("flags on y = 0: {} (saddle 0, centres +-1, separatrix +-{:.4})", flags.join(" "), 2f64.sqrt());
    Ok(())
}
