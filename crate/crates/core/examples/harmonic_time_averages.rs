//! Time averages of descriptors on the harmonic oscillator: the arc-length
//! average is the orbit radius at every horizon, the `M_1` average tends to
//! `4 rho / pi`.

use std::f64::consts::PI;

use ldkit::analysis::{assess_series, DEFAULT_EPS, DEFAULT_WINDOW};
use ldkit::systems::SystemId;
use ldkit::{time_average, LDConfig, VectorFieldSpec};

fn main() -> ldkit::Result<()> {
    let oscillator = VectorFieldSpec::builtin(SystemId::HarmonicOscillator);
    let x0 = [0.6, 0.8];
    let taus: Vec<f64> = (1..=2000).map(|k| 0.1 * k as f64).collect();

    let arc = time_average(&oscillator, &x0, &LDConfig::arclength(200.0)?.with_step(0.01), &taus)?;
    let drift = arc.averages.iter().map(|a| (a - 1.0).abs()).fold(0.0, f64::max);
    println!("arc-length average: max |avg - rho| = {drift:.2e}");

    let m1 = time_average(&oscillator, &x0, &LDConfig::mp(1.0, 200.0)?.with_step(0.01), &taus)?;
    let verdict = assess_series(&m1, DEFAULT_WINDOW, DEFAULT_EPS)?;
    for tau in [10.0, 50.0, 100.0, 200.0] {
        let i = m1.taus.iter().position(|t| (t - tau).abs() < 1e-9).unwrap();
        println!("tau = {tau:>5}: M_1/(2 tau) = {:.6}", m1.averages[i]);
    }
    println!(
        "converged: {} (from tau = {:?}), limit 4/pi = {:.6}",
        verdict.converged,
        verdict.tau_converged,
        4.0 / PI
    );
    Ok(())
}
