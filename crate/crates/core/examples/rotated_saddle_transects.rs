//! Singular features on a transect of the rotated saddle migrate as the
//! integration time grows: short times see the coordinate axes, long times
//! the true invariant manifolds.

use ldkit::analysis::{detect_singularities, transect, DEFAULT_KAPPA};
use ldkit::systems::SystemId;
use ldkit::{LDConfig, VectorFieldSpec};

fn main() -> ldkit::Result<()> {
    let saddle = VectorFieldSpec::builtin(SystemId::RotatedSaddle);
    for tau in [0.005, 1.0, 2.5, 5.0] {
        let step = f64::min(tau / 10.0, 0.005);
        let cfg = LDConfig::mp(0.5, tau)?.with_step(step);
        let profile = transect(&saddle, &cfg, &[0.0, 0.5], &[1.0, 0.0], 1.0, 401)?;
        let report = detect_singularities(&profile, DEFAULT_KAPPA)?;
        let flags: Vec<String> = report
            .flagged_offsets
            .iter()
            .zip(&report.jump_ratios)
            .map(|(x, r)| format!("x = {x:+.3} (jump ratio {r:.0})"))
            .collect();
        println!("tau = {tau:<5}  {}", flags.join(", "));
    }
    Ok(())
}
