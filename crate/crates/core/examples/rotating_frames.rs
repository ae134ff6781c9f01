//! Observing flows from a rotating frame. Arc-length changes with the
//! observer, LAVD does not.

use ldkit::frames::{transform_field, RotatingFrame};
use ldkit::systems::SystemId;
use ldkit::{descriptor_at, LDConfig, VectorFieldSpec};

fn main() -> ldkit::Result<()> {
    let rest = VectorFieldSpec::builtin(SystemId::Rest);
    let spun = transform_field(&rest, RotatingFrame::new(1.0, 1)?)?;
    println!(
        "fluid at rest seen from a frame turning at unit rate: {}",
        spun.as_builtin().map_or("composed field".to_string(), |s| s.id().to_string())
    );

    let x0 = [0.5, 0.0];
    for kind in ["arclength", "lavd"] {
        let cfg = match kind {
            "arclength" => LDConfig::arclength(10.0)?,
            _ => LDConfig::lavd(10.0)?,
        }
        .with_step(0.01);
        let a = descriptor_at(&rest, &x0, &cfg)?.value;
        let b = descriptor_at(&spun, &x0, &cfg)?.value;
        println!("{kind:>9}: at rest {a:.6}, rotating frame {b:.6}");
    }

    let rotating = VectorFieldSpec::rotating_saddle(2.0)?;
    let frozen = transform_field(&rotating, RotatingFrame::new(2.0, -1)?)?;
    println!(
        "rotating saddle seen co-rotating: {}",
        frozen.as_builtin().map_or("composed field".to_string(), |s| s.id().to_string())
    );

    let generic = transform_field(&VectorFieldSpec::linear_saddle(1.0)?, RotatingFrame::new(0.3, 1)?)?;
    let cfg = LDConfig::mp(0.5, 5.0)?.with_step(0.01);
    println!(
        "linear saddle in a slowly rotating frame, M_0.5 at {x0:?}: {:.6}",
        descriptor_at(&generic, &x0, &cfg)?.value
    );
    Ok(())
}
