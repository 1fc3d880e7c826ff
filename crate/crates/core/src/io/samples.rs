use std::fs;
use std::io::Write;
use std::path::Path;

use super::io_error;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::samples::{GridSpec, SampleKind, SdfSampleSet};

fn kind_token(kind: SampleKind) -> String {
    match kind {
        SampleKind::Signed => "signed".into(),
        SampleKind::Unsigned => "unsigned".into(),
        SampleKind::Clamped(sigma) => format!("clamped:{sigma:.16e}"),
        SampleKind::ConservativeInterior => "conservative".into(),
    }
}

fn parse_kind(token: &str) -> Option<SampleKind> {
    match token {
        "signed" => Some(SampleKind::Signed),
        "unsigned" => Some(SampleKind::Unsigned),
        "conservative" => Some(SampleKind::ConservativeInterior),
        _ => token.strip_prefix("clamped:").and_then(|s| s.parse().ok()).map(SampleKind::Clamped),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank, non-comment line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (k, raw) in self.inner.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                return Some((k + 1, line));
            }
        }
        None
    }
}

/// Parse a sample file. Layout:
///
/// ```text
/// sdfsamples <d> <n> <kind>
/// grid <dims...> <origin...> <spacing...>      (optional)
/// <x> <y> [<z>] <value>                        (n lines)
/// ```
pub fn parse_samples<const D: usize>(text: &str, path: &str) -> Result<SdfSampleSet<D>> {
    let err = |line: usize, message: String| Error::Parse { path: path.to_string(), line, message };
    let mut lines = Lines { inner: text.lines().enumerate() };
    let (hl, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "sdfsamples" {
        return Err(err(hl, "expected `sdfsamples <d> <n> <kind>`".into()));
    }
    let d: usize = h[1].parse().map_err(|_| err(hl, format!("bad dimension {:?}", h[1])))?;
    if d != D {
        return Err(err(hl, format!("expected dimension {D}, file has {d}")));
    }
    let n: usize = h[2].parse().map_err(|_| err(hl, format!("bad sample count {:?}", h[2])))?;
    let kind = parse_kind(h[3]).ok_or_else(|| err(hl, format!("unknown kind {:?}", h[3])))?;
    let num = |line: usize, t: &str| t.parse::<f64>().map_err(|_| err(line, format!("bad number {t:?}")));
    let mut grid = None;
    let mut points = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    while let Some((ln, line)) = lines.next() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens[0] == "grid" {
            if grid.is_some() || !points.is_empty() {
                return Err(err(ln, "grid line must directly follow the header".into()));
            }
            if tokens.len() != 1 + 3 * D {
                return Err(err(ln, format!("grid line needs {} numbers", 3 * D)));
            }
            let mut dims = [0usize; D];
            for k in 0..D {
                dims[k] = tokens[1 + k].parse().map_err(|_| err(ln, format!("bad grid size {:?}", tokens[1 + k])))?;
            }
            let origin = Point::<D>::from_iterator((0..D).map(|k| num(ln, tokens[1 + D + k])).collect::<Result<Vec<_>>>()?);
            let mut spacing = [0.0; D];
            for k in 0..D {
                spacing[k] = num(ln, tokens[1 + 2 * D + k])?;
            }
            grid = Some(GridSpec::new(dims, origin, spacing).map_err(|e| err(ln, e.to_string()))?);
            continue;
        }
        if tokens.len() != D + 1 {
            return Err(err(ln, format!("expected {} numbers, got {}", D + 1, tokens.len())));
        }
        let coords = tokens[..D].iter().map(|t| num(ln, t)).collect::<Result<Vec<_>>>()?;
        points.push(Point::<D>::from_iterator(coords));
        values.push(num(ln, tokens[D])?);
    }
    if points.len() != n {
        return Err(err(0, format!("header announces {n} samples, found {}", points.len())));
    }
    match grid {
        Some(spec) => {
            if spec.len() != n {
                return Err(err(0, format!("grid has {} points but the file has {n}", spec.len())));
            }
            let set = SdfSampleSet::new(points, values, kind).map_err(|e| err(0, e.to_string()))?;
            set.with_grid(spec).map_err(|e| err(0, e.to_string()))
        }
        None => SdfSampleSet::new(points, values, kind).map_err(|e| err(0, e.to_string())),
    }
}

pub fn read_samples<const D: usize>(path: &Path) -> Result<SdfSampleSet<D>> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_samples(&text, &path.display().to_string())
}

/// Dimension announced in a sample file's header.
pub fn sample_file_dimension(path: &Path) -> Result<usize> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let mut lines = Lines { inner: text.lines().enumerate() };
    let bad = || Error::Parse { path: path.display().to_string(), line: 1, message: "missing `sdfsamples` header".into() };
    let (_, header) = lines.next().ok_or_else(bad)?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("sdfsamples") {
        return Err(bad());
    }
    match tokens.next().and_then(|t| t.parse::<usize>().ok()) {
        Some(d @ (2 | 3)) => Ok(d),
        _ => Err(bad()),
    }
}

/// Values are written with 17 significant digits, enough to round-trip.
pub fn write_samples_to<const D: usize>(out: &mut impl Write, set: &SdfSampleSet<D>) -> std::io::Result<()> {
    writeln!(out, "sdfsamples {D} {} {}", set.len(), kind_token(set.kind()))?;
    if let Some(g) = set.grid() {
        write!(out, "grid")?;
        for k in 0..D {
            write!(out, " {}", g.dims[k])?;
        }
        for k in 0..D {
            write!(out, " {:.16e}", g.origin[k])?;
        }
        for k in 0..D {
            write!(out, " {:.16e}", g.spacing[k])?;
        }
        writeln!(out)?;
    }
    for (p, s) in set.points().iter().zip(set.values()) {
        for x in p.iter() {
            write!(out, "{x:.16e} ")?;
        }
        writeln!(out, "{s:.16e}")?;
    }
    Ok(())
}

pub fn write_samples<const D: usize>(path: &Path, set: &SdfSampleSet<D>) -> Result<()> {
    let mut buf = Vec::new();
    write_samples_to(&mut buf, set).map_err(|e| io_error(path, e))?;
    fs::write(path, buf).map_err(|e| io_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_file_round_trips_bit_exactly() {
        let spec = GridSpec::<3>::unit_cube(3).unwrap();
        let values: Vec<f64> = (0..27).map(|i| (i as f64 * 0.731).sin() / 3.0).collect();
        let set = SdfSampleSet::on_grid(spec, values, SampleKind::Clamped(0.1 + 0.2)).unwrap();
        let mut buf = Vec::new();
        write_samples_to(&mut buf, &set).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sdfsamples 3 27 clamped:"));
        assert!(text.lines().nth(1).unwrap().starts_with("grid 3 3 3 "));
        let back: SdfSampleSet<3> = parse_samples(&text, "mem").unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn scattered_file_round_trips() {
        let pts = vec![Point::<2>::new(0.1, 1.0 / 7.0), Point::<2>::new(-3.0e-9, 2.5)];
        let set = SdfSampleSet::new(pts, vec![0.25, std::f64::consts::PI], SampleKind::Unsigned).unwrap();
        let mut buf = Vec::new();
        write_samples_to(&mut buf, &set).unwrap();
        let back: SdfSampleSet<2> = parse_samples(std::str::from_utf8(&buf).unwrap(), "mem").unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn malformed_files() {
        assert!(parse_samples::<2>("sdfsamples 3 1 signed\n0 0 0 1\n", "m").is_err());
        assert!(parse_samples::<2>("sdfsamples 2 2 signed\n0 0 1\n", "m").is_err());
        assert!(parse_samples::<2>("sdfsamples 2 1 weird\n0 0 1\n", "m").is_err());
        assert!(parse_samples::<2>("sdfsamples 2 1 unsigned\n0 0 -1\n", "m").is_err());
        let e = parse_samples::<2>("sdfsamples 2 2 signed\n0 0 1\n0 x 1\n", "f.txt").unwrap_err();
        assert!(e.to_string().starts_with("f.txt:3:"), "{e}");
    }
}
