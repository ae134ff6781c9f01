//! Writing a field to the self-describing CSV format, reading it back, and
//! exporting a gnuplot matrix.

use ldkit::io::{read_field, write_field, write_matrix};
use ldkit::systems::SystemId;
use ldkit::{compute_field, GridSpec, LDConfig, VectorFieldSpec};

fn main() -> ldkit::Result<()> {
    let dir = std::env::temp_dir().join("ldkit-field-io");
    std::fs::create_dir_all(&dir)?;
    let csv = dir.join("attractor.csv");
    let dat = dir.join("attractor.dat");

    let attractor = VectorFieldSpec::builtin(SystemId::GlobalAttractor);
    let cfg = LDConfig::arclength(5.0)?.with_step(0.01);
    let mut field = compute_field(&attractor, &GridSpec::square(-1.0, 1.0, 41)?, &cfg)?;
    field.meta.created = Some("2024-01-01T00:00:00Z".into());

    write_field(&field, &csv)?;
    write_matrix(&field, &dat)?;
    let back = read_field(&csv)?;
    assert_eq!(back.values, field.values);
    assert_eq!(back.grid, field.grid);

    let text = std::fs::read_to_string(&csv)?;
    for line in text.lines().take(8) {
        println!("{line}");
    }
    println!("round trip exact; matrix at {}", dat.display());
    Ok(())
}
