//! Convergence of time averages along a line through the ABC flow, and an
//! invariance check against a coarse three-dimensional average field.
//!
//! ```text
//! cargo run --release --example abc_convergence
//! ```

use std::f64::consts::TAU;

use rayon::prelude::*;

use ldkit::analysis::{assess_series, invariance_check, neighbor_variation};
use ldkit::{compute_field, time_average, GridSpec, LDConfig, VectorFieldSpec};

fn main() -> ldkit::Result<()> {
    let abc = VectorFieldSpec::abc(1.0, (2.0f64 / 3.0).sqrt(), 3f64.sqrt() / 3.0)?;
    let cfg = LDConfig::mp(1.0, 500.0)?.with_step(0.05);
    let taus: Vec<f64> = (1..=5000).map(|k| 0.1 * k as f64).collect();

    let verdicts = (0..24)
        .into_par_iter()
        .map(|k| {
            let z = 3.6 + 0.1 * k as f64;
            let series = time_average(&abc, &[0.0, 3.2, z], &cfg, &taus)?;
            Ok((z, assess_series(&series, 10.0, 1e-3)?))
        })
        .collect::<ldkit::Result<Vec<_>>>()?;
    for (z, s) in &verdicts {
        match s.tau_converged {
            Some(t) => println!("z0 = {z:.1}: converged at tau = {t:.1}, average {:.5}", s.averages.last().unwrap()),
            None => println!("z0 = {z:.1}: no plateau by tau = 500"),
        }
    }

    let grid = GridSpec::uniform(&[0.0; 3], &[TAU; 3], &[21, 21, 21])?;
    let average = compute_field(&abc, &grid, &LDConfig::mp(1.0, 200.0)?.with_step(0.1))?.to_average()?;
    let tol = 3.0 * neighbor_variation(&average);
    for seed in [[0.0, 3.2, 4.1], [0.0, 3.2, 3.6]] {
        let report = invariance_check(&abc, &seed, 200.0, &average, tol)?;
        println!(
            "seed {seed:?}: deviation {:.3e} (tolerance {tol:.3e}) -> {}",
            report.deviation,
            if report.within_tol { "invariant" } else { "not invariant" }
        );
    }
    Ok(())
}
