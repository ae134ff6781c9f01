//! Text formats for fields, transects and convergence series.
//!
//! Field files are long-form CSV preceded by `# key=value` header lines:
//!
//! ```text
//! # format_version=ldfield/1
//! # system=linear-saddle
//! # param.lambda=1
//! # kind=mp
//! # p=0.5
//! # tau=15
//! # t0=0
//! # h=0.1
//! # safety_box=1000000000000000
//! # max_steps=100000000
//! # quantity=descriptor
//! # axis.0=free:-1:1:401
//! # axis.1=free:-1:1:401
//! x,y,value,flag
//! -1.0000000000000000e0,-1.0000000000000000e0,2.2e6,ok
//! ```
//!
//! Rows follow the grid order (first free axis fastest) and every real in a
//! row carries 17 significant digits, so files round-trip bit-exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{assess_convergence, ConvergenceSeries, SingularFeatureReport, TransectProfile};
use crate::descriptor::{Axis, DescriptorKind, FieldMeta, GridSpec, LDConfig, ScalarField};
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;

pub const FIELD_FORMAT: &str = "ldfield/1";
pub const SERIES_FORMAT: &str = "ldseries/1";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn coordinate_names(dim: usize) -> Vec<String> {
    if dim <= 3 {
        ["x", "y", "z"][..dim].iter().map(|s| s.to_string()).collect()
    } else {
        (0..dim).map(|i| format!("x{i}")).collect()
    }
}

fn write_config(out: &mut String, system: &str, params: &BTreeMap<String, f64>, cfg: &LDConfig) {
    let _ = writeln!(out, "# system={system}");
    for (k, v) in params {
        let _ = writeln!(out, "# param.{k}={v}");
    }
    let _ = writeln!(out, "# kind={}", cfg.kind.name());
    if let Some(p) = cfg.kind.p() {
        let _ = writeln!(out, "# p={p}");
    }
    let _ = writeln!(out, "# tau={}", cfg.tau);
    let _ = writeln!(out, "# t0={}", cfg.t0);
    let _ = writeln!(out, "# h={}", cfg.integrator.step);
    let _ = writeln!(out, "# safety_box={}", cfg.integrator.safety_box);
    let _ = writeln!(out, "# max_steps={}", cfg.integrator.max_steps);
}

/// Header lines of a text file, in order, with their line numbers.
struct Header {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
    /// Line number of the first non-comment line.
    body_start: usize,
}

impl Header {
    fn parse(path: &Path, lines: &[&str]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut body_start = lines.len();
        for (i, line) in lines.iter().enumerate() {
            let Some(rest) = line.strip_prefix('#') else {
                body_start = i;
                break;
            };
            let rest = rest.trim();
            if rest.is_empty() {
                continue;
            }
            let (k, v) = rest.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected key=value, got `{rest}`"),
            })?;
            if entries.insert(k.trim().to_string(), (i + 1, v.trim().to_string())).is_some() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("duplicate header key `{}`", k.trim()),
                });
            }
        }
        Ok(Header {
            path: path.to_path_buf(),
            entries,
            body_start,
        })
    }

    fn error(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| self.error(self.body_start + 1, format!("missing header key `{key}`")))
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| self.error(self.entries[key].0, format!("bad value for `{key}`: `{raw}`")))
    }

    fn check_version(&self, expected: &str) -> Result<()> {
        let found = self.require("format_version")?;
        if found != expected {
            return Err(Error::Version {
                expected: expected.into(),
                found: found.into(),
            });
        }
        Ok(())
    }

    fn params(&self) -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        for (k, (line, v)) in &self.entries {
            if let Some(name) = k.strip_prefix("param.") {
                let value = v
                    .parse()
                    .map_err(|_| self.error(*line, format!("bad parameter value `{v}`")))?;
                out.insert(name.to_string(), value);
            }
        }
        Ok(out)
    }

    fn config(&self) -> Result<LDConfig> {
        let p = match self.get("p") {
            Some(_) => Some(self.number("p")?),
            None => None,
        };
        let kind = DescriptorKind::from_parts(self.require("kind")?, p)?;
        let integrator = IntegratorConfig {
            step: self.number("h")?,
            max_steps: self.number("max_steps")?,
            safety_box: self.number("safety_box")?,
        };
        let cfg = LDConfig {
            kind,
            tau: self.number("tau")?,
            t0: self.number("t0")?,
            integrator,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn format_axis(axis: &Axis) -> String {
    match axis {
        Axis::Free { lo, hi, n } => format!("free:{lo}:{hi}:{n}"),
        Axis::Fixed(v) => format!("fixed:{v}"),
    }
}

fn parse_axis(raw: &str) -> Option<Axis> {
    let parts: Vec<&str> = raw.split(':').collect();
    match parts.as_slice() {
        ["free", lo, hi, n] => Some(Axis::Free {
            lo: lo.parse().ok()?,
            hi: hi.parse().ok()?,
            n: n.parse().ok()?,
        }),
        ["fixed", v] => Some(Axis::Fixed(v.parse().ok()?)),
        _ => None,
    }
}

/// Serializes a field to the `ldfield/1` text format.
pub fn field_to_string(field: &ScalarField) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# format_version={FIELD_FORMAT}");
    write_config(&mut out, &field.meta.system, &field.meta.params, &field.meta.config);
    let _ = writeln!(out, "# quantity={}", field.meta.quantity);
    for (i, axis) in field.grid.axes().iter().enumerate() {
        let _ = writeln!(out, "# axis.{i}={}", format_axis(axis));
    }
    if let Some(created) = &field.meta.created {
        let _ = writeln!(out, "# created={created}");
    }
    let names = coordinate_names(field.grid.dim());
    let _ = writeln!(out, "{},value,flag", names.join(","));
    for k in 0..field.len() {
        for c in field.grid.node(k) {
            out.push_str(&real(c));
            out.push(',');
        }
        out.push_str(&real(field.values[k]));
        out.push_str(if field.partial[k] { ",partial\n" } else { ",ok\n" });
    }
    out
}

pub fn write_field(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, field_to_string(field))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_field(path, &text)
}

/// Parses `ldfield/1` text; `path` is only used in error messages.
pub fn parse_field(path: &Path, text: &str) -> Result<ScalarField> {
    let lines: Vec<&str> = text.lines().collect();
    let header = Header::parse(path, &lines)?;
    header.check_version(FIELD_FORMAT)?;

    let mut axes = Vec::new();
    while let Some(raw) = header.get(&format!("axis.{}", axes.len())) {
        let axis = parse_axis(raw).ok_or_else(|| {
            header.error(header.entries[&format!("axis.{}", axes.len())].0, format!("bad axis `{raw}`"))
        })?;
        axes.push(axis);
    }
    let grid = GridSpec::new(axes)?;
    let meta = FieldMeta {
        system: header.require("system")?.to_string(),
        params: header.params()?,
        config: header.config()?,
        quantity: header.require("quantity")?.parse()?,
        created: header.get("created").map(str::to_string),
    };

    let dim = grid.dim();
    let expected_columns = format!("{},value,flag", coordinate_names(dim).join(","));
    let column_line = header.body_start;
    match lines.get(column_line) {
        Some(l) if l.trim() == expected_columns => {}
        Some(l) => {
            return Err(header.error(column_line + 1, format!("expected column row `{expected_columns}`, got `{l}`")))
        }
        None => return Err(header.error(column_line + 1, "missing column row")),
    }

    let rows: Vec<(usize, &str)> = lines
        .iter()
        .enumerate()
        .skip(column_line + 1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, *l))
        .collect();
    if rows.len() != grid.len() {
        return Err(Error::RowCount {
            expected: grid.len(),
            found: rows.len(),
        });
    }
    let mut values = Vec::with_capacity(rows.len());
    let mut partial = Vec::with_capacity(rows.len());
    for (k, (line, row)) in rows.into_iter().enumerate() {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if cells.len() != dim + 2 {
            return Err(header.error(line, format!("expected {} columns, got {}", dim + 2, cells.len())));
        }
        let node = grid.node(k);
        for (c, expect) in cells[..dim].iter().zip(&node) {
            let got: f64 = c.parse().map_err(|_| header.error(line, format!("bad coordinate `{c}`")))?;
            if got != *expect {
                return Err(header.error(line, format!("coordinate {got} does not match grid node {expect}")));
            }
        }
        values.push(
            cells[dim]
                .parse()
                .map_err(|_| header.error(line, format!("bad value `{}`", cells[dim])))?,
        );
        partial.push(match cells[dim + 1] {
            "ok" => false,
            "partial" => true,
            other => return Err(header.error(line, format!("bad flag `{other}`"))),
        });
    }
    Ok(ScalarField {
        grid,
        values,
        partial,
        meta,
    })
}

/// Writes a planar field as a gnuplot nonuniform matrix: the first row holds
/// the column count followed by the x coordinates, every further row a y
/// coordinate followed by the values along x.
pub fn write_matrix(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let free = field.grid.free_axes();
    if free.len() != 2 {
        return Err(Error::Unsupported(format!(
            "matrix export needs exactly two free axes, got {}",
            free.len()
        )));
    }
    let xs = field.grid.coords(free[0]);
    let ys = field.grid.coords(free[1]);
    let mut out = String::new();
    out.push_str(&xs.len().to_string());
    for x in &xs {
        out.push(' ');
        out.push_str(&real(*x));
    }
    out.push('\n');
    for (j, y) in ys.iter().enumerate() {
        out.push_str(&real(*y));
        for i in 0..xs.len() {
            out.push(' ');
            out.push_str(&real(field.at(&[i, j])));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Metadata stored alongside a convergence series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMeta {
    pub system: String,
    pub params: BTreeMap<String, f64>,
    pub config: LDConfig,
}

pub fn write_series(series: &ConvergenceSeries, meta: &SeriesMeta, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# format_version={SERIES_FORMAT}");
    write_config(&mut out, &meta.system, &meta.params, &meta.config);
    let x0: Vec<String> = series.x0.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "# x0={}", x0.join(","));
    let _ = writeln!(out, "# window={}", series.window);
    let _ = writeln!(out, "# eps={}", series.tolerance);
    let _ = writeln!(out, "# converged={}", series.converged);
    if let Some(t) = series.tau_converged {
        let _ = writeln!(out, "# tau_converged={t}");
    }
    out.push_str("tau,average,converged_flag\n");
    for (tau, avg) in series.taus.iter().zip(&series.averages) {
        let flag = series.tau_converged.is_some_and(|t| *tau >= t) as u8;
        let _ = writeln!(out, "{},{},{flag}", real(*tau), real(*avg));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_series(path: impl AsRef<Path>) -> Result<(ConvergenceSeries, SeriesMeta)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let lines: Vec<&str> = text.lines().collect();
    let header = Header::parse(path, &lines)?;
    header.check_version(SERIES_FORMAT)?;
    let meta = SeriesMeta {
        system: header.require("system")?.to_string(),
        params: header.params()?,
        config: header.config()?,
    };
    let x0 = header
        .require("x0")?
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| header.error(header.entries["x0"].0, "bad x0"))?;
    let window: f64 = header.number("window")?;
    let eps: f64 = header.number("eps")?;
    let converged: bool = header.number("converged")?;
    let tau_converged: Option<f64> = match header.get("tau_converged") {
        Some(_) => Some(header.number("tau_converged")?),
        None => None,
    };

    if lines.get(header.body_start).map(|l| l.trim()) != Some("tau,average,converged_flag") {
        return Err(header.error(header.body_start + 1, "expected column row `tau,average,converged_flag`"));
    }
    let mut samples = Vec::new();
    for (i, row) in lines.iter().enumerate().skip(header.body_start + 1) {
        if row.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        let parsed = match cells.as_slice() {
            [t, a, f] if *f == "0" || *f == "1" => t.parse::<f64>().ok().zip(a.parse::<f64>().ok()),
            _ => None,
        };
        samples.push(parsed.ok_or_else(|| header.error(i + 1, format!("bad series row `{row}`")))?);
    }
    let mut series = assess_convergence(&samples, window, eps)?;
    series.x0 = x0;
    series.converged = converged;
    series.tau_converged = tau_converged;
    Ok((series, meta))
}

/// Writes a transect with its slopes and flags as CSV.
pub fn write_transect(profile: &TransectProfile, report: &SingularFeatureReport, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# kappa={}", report.threshold);
    let _ = writeln!(out, "# baseline={}", report.baseline);
    let _ = writeln!(out, "# degenerate={}", report.degenerate);
    let flagged: Vec<String> = report.flagged_offsets.iter().map(|o| o.to_string()).collect();
    let _ = writeln!(out, "# flagged_offsets={}", flagged.join(","));
    let names = coordinate_names(profile.anchor.len());
    let _ = writeln!(out, "offset,{},value,flag,left_slope,right_slope,singular", names.join(","));
    let slope = |s: Option<f64>| s.map(real).unwrap_or_default();
    for i in 0..profile.len() {
        out.push_str(&real(profile.offsets[i]));
        for c in profile.point(i) {
            out.push(',');
            out.push_str(&real(c));
        }
        let interior = i > 0 && i + 1 < profile.len();
        let (l, r) = if interior {
            (slope(profile.left_slope[i - 1]), slope(profile.right_slope[i - 1]))
        } else {
            (String::new(), String::new())
        };
        let _ = writeln!(
            out,
            ",{},{},{l},{r},{}",
            real(profile.values[i]),
            if profile.partial[i] { "partial" } else { "ok" },
            report.flagged_indices.contains(&i) as u8
        );
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{assess_series, detect_singularities, transect};
    use crate::descriptor::{compute_field, compute_field_with, time_average};
    use crate::systems::{SystemId, VectorFieldSpec};

    fn saddle_field() -> ScalarField {
        let spec = VectorFieldSpec::linear_saddle(1.0).unwrap();
        let grid = GridSpec::square(-1.0, 1.0, 3).unwrap();
        let mut f = compute_field_with(&spec, &grid, &LDConfig::mp(0.5, 1.0).unwrap(), spec.params().clone()).unwrap();
        f.meta.created = Some("2024-01-01T00:00:00Z".into());
        f
    }

    #[test]
    fn field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let field = saddle_field();
        write_field(&field, &path).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back, field);
        assert!(back.values.iter().zip(&field.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn sliced_three_dimensional_round_trip() {
        let abc = VectorFieldSpec::builtin(SystemId::Abc);
        let grid = GridSpec::uniform(&[0.0; 3], &[1.0; 3], &[3, 4, 2]).unwrap().with_slice(0, 0.1).unwrap();
        let field = compute_field(&abc, &grid, &LDConfig::arclength(0.5).unwrap()).unwrap();
        let text = field_to_string(&field);
        assert!(text.contains("x,y,z,value,flag"));
        assert_eq!(parse_field(Path::new("mem"), &text).unwrap(), field);
    }

    #[test]
    fn missing_row_is_a_count_error() {
        let text = field_to_string(&saddle_field());
        let cut: Vec<&str> = text.lines().collect();
        let cut = cut[..cut.len() - 1].join("\n");
        assert!(matches!(
            parse_field(Path::new("mem"), &cut),
            Err(Error::RowCount { expected: 9, found: 8 })
        ));
    }

    #[test]
    fn version_and_header_errors() {
        let text = field_to_string(&saddle_field());
        let bad = text.replace("ldfield/1", "ldfield/9");
        assert!(matches!(parse_field(Path::new("mem"), &bad), Err(Error::Version { .. })));
        let bad = text.replace("# kind=mp\n", "");
        assert!(matches!(parse_field(Path::new("mem"), &bad), Err(Error::Parse { .. })));
        let bad = text.replace(",ok\n", ",maybe\n");
        assert!(matches!(parse_field(Path::new("mem"), &bad), Err(Error::Parse { .. })));
        let bad = text.replace("x,y,value,flag", "x,value,flag");
        assert!(matches!(parse_field(Path::new("mem"), &bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn partial_nodes_keep_their_finite_value() {
        let spec = VectorFieldSpec::nonham_saddle(2.0, 1.0).unwrap();
        let grid = GridSpec::square(-1.0, 1.0, 3).unwrap();
        let cfg = LDConfig::mp(0.5, 40.0).unwrap();
        let field = compute_field(&spec, &grid, &cfg).unwrap();
        assert!(field.partial_count() > 0);
        let text = field_to_string(&field);
        assert!(text.contains(",partial\n"));
        let back = parse_field(Path::new("mem"), &text).unwrap();
        assert!(back.values.iter().all(|v| v.is_finite()));
        assert_eq!(back.partial, field.partial);
    }

    #[test]
    fn serialization_is_deterministic() {
        assert_eq!(field_to_string(&saddle_field()), field_to_string(&saddle_field()));
    }

    #[test]
    fn matrix_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.dat");
        let field = saddle_field();
        write_matrix(&field, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(|l| l.split_whitespace().map(|c| c.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0], vec![3.0, -1.0, 0.0, 1.0]);
        assert_eq!(rows[2][0], 0.0);
        assert_eq!(rows[2][1..], [field.at(&[0, 1]), field.at(&[1, 1]), field.at(&[2, 1])]);
    }

    #[test]
    fn series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let ho = VectorFieldSpec::builtin(SystemId::HarmonicOscillator);
        let cfg = LDConfig::arclength(1.0).unwrap().with_step(0.05);
        let taus: Vec<f64> = (1..=50).map(|i| i as f64 * 0.5).collect();
        let series = assess_series(&time_average(&ho, &[1.0, 0.0], &cfg, &taus).unwrap(), 10.0, 1e-3).unwrap();
        let meta = SeriesMeta {
            system: "harmonic-oscillator".into(),
            params: BTreeMap::new(),
            config: cfg,
        };
        write_series(&series, &meta, &path).unwrap();
        let (back, back_meta) = read_series(&path).unwrap();
        assert_eq!(back, series);
        assert_eq!(back_meta, meta);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("tau,average,converged_flag"));
    }

    #[test]
    fn transect_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let saddle = VectorFieldSpec::linear_saddle(1.0).unwrap();
        let p = transect(&saddle, &LDConfig::mp(0.5, 1.0).unwrap(), &[0.0, 0.5], &[1.0, 0.0], 0.5, 11).unwrap();
        let r = detect_singularities(&p, 10.0).unwrap();
        write_transect(&p, &r, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 12);
        assert_eq!(text.lines().filter(|l| l.ends_with(",1")).count(), r.flagged_indices.len());
    }
}
