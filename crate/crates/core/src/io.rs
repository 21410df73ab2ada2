//! Text formats: mask files, shape descriptors, polygon CSVs, frame files,
//! window and weight lists, and CSV float formatting.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;

use crate::gabor::WindowSpec;
use crate::geometry::{ContinuousDomain, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("{source_name}:{line}: {message}")]
    Parse { source_name: String, line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn parse_err(source_name: &str, line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { source_name: source_name.to_string(), line, message: message.into() }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::Read { path: path.display().to_string(), message: e.to_string() })
}

/// Resolves `@path` (or a bare path) against `base`.
pub fn resolve(base: &Path, reference: &str) -> PathBuf {
    let p = Path::new(reference.strip_prefix('@').unwrap_or(reference));
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// 17 significant digits; parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Non-empty lines with 1-based line numbers, comments (`#`) stripped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_num<T: std::str::FromStr>(tok: &str, src: &str, line: usize) -> Result<T, IoError> {
    tok.parse().map_err(|_| parse_err(src, line, format!("cannot parse '{tok}'")))
}

/// A mask file: header `d W H`, then one point per line.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskFile {
    pub dim: usize,
    pub extents: Vec<i64>,
    pub points: Vec<Point>,
}

pub fn parse_mask(text: &str, src: &str) -> Result<MaskFile, IoError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(src, 1, "missing header 'd W H'"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 {
        return Err(parse_err(src, hl, "header must be 'd W H'"));
    }
    let dim: usize = parse_num(h[0], src, hl)?;
    if !(dim == 1 || dim == 2) {
        return Err(parse_err(src, hl, format!("dimension {dim} is not 1 or 2")));
    }
    let extents: Vec<i64> = vec![parse_num(h[1], src, hl)?, parse_num(h[2], src, hl)?];
    if extents.iter().any(|&e| e <= 0) {
        return Err(parse_err(src, hl, "extents must be positive"));
    }
    let mut points = Vec::new();
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != dim {
            return Err(parse_err(src, ln, format!("expected {dim} coordinates")));
        }
        let p: Point = toks.iter().map(|t| parse_num(t, src, ln)).collect::<Result<_, _>>()?;
        if p.iter().zip(&extents).any(|(k, e)| *k < 0 || k >= e) {
            return Err(parse_err(src, ln, format!("point {p:?} outside the {}×{} box", extents[0], extents[1])));
        }
        points.push(p);
    }
    Ok(MaskFile { dim, extents, points })
}

pub fn format_mask(mask: &MaskFile) -> String {
    let mut s = format!("{} {} {}\n", mask.dim, mask.extents[0], mask.extents[1]);
    for p in &mask.points {
        let parts: Vec<String> = p.iter().map(|k| k.to_string()).collect();
        s.push_str(&parts.join(" "));
        s.push('\n');
    }
    s
}

/// `x,y` per line; a non-numeric first line is taken as a header.
pub fn parse_polygon_csv(text: &str, src: &str) -> Result<Vec<[f64; 2]>, IoError> {
    let mut out = Vec::new();
    for (idx, (ln, line)) in content_lines(text).enumerate() {
        let toks: Vec<&str> = line.split(',').map(str::trim).collect();
        if toks.len() != 2 {
            return Err(parse_err(src, ln, "expected 'x,y'"));
        }
        match (toks[0].parse::<f64>(), toks[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => out.push([x, y]),
            _ if idx == 0 => continue,
            _ => return Err(parse_err(src, ln, "cannot parse vertex")),
        }
    }
    Ok(out)
}

fn numbers(body: &str, what: &str) -> Result<Vec<f64>, IoError> {
    body.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| IoError::Invalid(format!("{what}: cannot parse '{t}'"))))
        .collect()
}

/// `rect:x0,y0,x1,y1` (or `rect:x0,x1`), `disk:cx,cy,r` (or `disk:c,r`), `poly:@file.csv`.
pub fn parse_shape(spec: &str, base: &Path) -> Result<ContinuousDomain, IoError> {
    let (kind, body) = spec.split_once(':').ok_or_else(|| IoError::Invalid(format!("shape '{spec}' lacks a kind prefix")))?;
    let shape = match kind {
        "rect" => {
            let v = numbers(body, "rect")?;
            match v.len() {
                2 => ContinuousDomain::rect(vec![v[0]], vec![v[1]]),
                4 => ContinuousDomain::rect(vec![v[0], v[1]], vec![v[2], v[3]]),
                _ => return Err(IoError::Invalid("rect needs 2 or 4 numbers".into())),
            }
        }
        "disk" => {
            let v = numbers(body, "disk")?;
            match v.len() {
                2 => ContinuousDomain::disk(vec![v[0]], v[1]),
                3 => ContinuousDomain::disk(vec![v[0], v[1]], v[2]),
                _ => return Err(IoError::Invalid("disk needs 2 or 3 numbers".into())),
            }
        }
        "poly" => {
            if !body.starts_with('@') {
                return Err(IoError::Invalid("poly expects '@file.csv'".into()));
            }
            let path = resolve(base, body);
            let verts = parse_polygon_csv(&read_text(&path)?, &path.display().to_string())?;
            ContinuousDomain::polygon(verts)
        }
        other => return Err(IoError::Invalid(format!("unknown shape kind '{other}'"))),
    };
    shape.map_err(|e| IoError::Invalid(e.to_string()))
}

/// Header `M n`, then per vector: index coordinates followed by `M` pairs `re im`.
pub fn parse_frame(text: &str, src: &str) -> Result<Vec<(Point, Vec<Complex64>)>, IoError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(src, 1, "missing header 'M n_vectors'"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 2 {
        return Err(parse_err(src, hl, "header must be 'M n_vectors'"));
    }
    let m: usize = parse_num(h[0], src, hl)?;
    let n: usize = parse_num(h[1], src, hl)?;
    if m == 0 {
        return Err(parse_err(src, hl, "M must be positive"));
    }
    let mut out = Vec::with_capacity(n);
    let mut dim = None;
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() <= 2 * m {
            return Err(parse_err(src, ln, format!("expected index coordinates and {} numbers", 2 * m)));
        }
        let d = toks.len() - 2 * m;
        if *dim.get_or_insert(d) != d {
            return Err(parse_err(src, ln, "index dimension changes between lines"));
        }
        let idx: Point = toks[..d].iter().map(|t| parse_num(t, src, ln)).collect::<Result<_, _>>()?;
        let vals: Vec<f64> = toks[d..].iter().map(|t| parse_num(t, src, ln)).collect::<Result<_, _>>()?;
        out.push((idx, vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()));
    }
    if out.len() != n {
        return Err(parse_err(src, hl, format!("header announces {n} vectors, found {}", out.len())));
    }
    Ok(out)
}

pub fn format_frame(pairs: &[(Point, Vec<Complex64>)]) -> String {
    let m = pairs.first().map_or(0, |p| p.1.len());
    let mut s = format!("{m} {}\n", pairs.len());
    for (idx, v) in pairs {
        let mut toks: Vec<String> = idx.iter().map(|k| k.to_string()).collect();
        for z in v {
            toks.push(format_f64(z.re));
            toks.push(format_f64(z.im));
        }
        s.push_str(&toks.join(" "));
        s.push('\n');
    }
    s
}

/// One window per line as `re im` pairs.
pub fn parse_windows(text: &str, src: &str) -> Result<Vec<Vec<Complex64>>, IoError> {
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    for (ln, line) in content_lines(text) {
        let vals: Vec<f64> = line.split_whitespace().map(|t| parse_num(t, src, ln)).collect::<Result<_, _>>()?;
        if !vals.len().is_multiple_of(2) {
            return Err(parse_err(src, ln, "odd number of values; expected 're im' pairs"));
        }
        if let Some(first) = out.first() {
            if first.len() != vals.len() / 2 {
                return Err(parse_err(src, ln, "windows have different lengths"));
            }
        }
        out.push(vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
    }
    if out.is_empty() {
        return Err(parse_err(src, 1, "no windows"));
    }
    Ok(out)
}

/// One real weight per line.
pub fn parse_weights(text: &str, src: &str) -> Result<Vec<f64>, IoError> {
    let w: Vec<f64> = content_lines(text).map(|(ln, l)| parse_num(l, src, ln)).collect::<Result<_, _>>()?;
    if w.is_empty() {
        return Err(parse_err(src, 1, "no weights"));
    }
    Ok(w)
}

/// One sample per line: `re` or `re im`.
pub fn parse_samples(text: &str, src: &str) -> Result<Vec<Complex64>, IoError> {
    content_lines(text)
        .map(|(ln, line)| {
            let v: Vec<f64> = line.split_whitespace().map(|t| parse_num(t, src, ln)).collect::<Result<_, _>>()?;
            match v.len() {
                1 => Ok(Complex64::new(v[0], 0.0)),
                2 => Ok(Complex64::new(v[0], v[1])),
                _ => Err(parse_err(src, ln, "expected 're' or 're im'")),
            }
        })
        .collect()
}

/// `gauss`, `boxcar:w`, `file:@path`.
pub fn parse_window_spec(spec: &str, base: &Path) -> Result<WindowSpec, IoError> {
    if spec == "gauss" {
        return Ok(WindowSpec::Gauss);
    }
    if let Some(w) = spec.strip_prefix("boxcar:") {
        let w: usize = w.trim().parse().map_err(|_| IoError::Invalid(format!("bad boxcar width '{w}'")))?;
        return Ok(WindowSpec::Boxcar(w));
    }
    if let Some(p) = spec.strip_prefix("file:") {
        if !p.starts_with('@') {
            return Err(IoError::Invalid("file window expects 'file:@path'".into()));
        }
        let path = resolve(base, p);
        return Ok(WindowSpec::Samples(parse_samples(&read_text(&path)?, &path.display().to_string())?));
    }
    Err(IoError::Invalid(format!("unknown window '{spec}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_round_trip() {
        let text = "2 4 3\n0 0\n3 2\n# comment\n1 1\n";
        let m = parse_mask(text, "m").unwrap();
        assert_eq!(m.points, vec![vec![0, 0], vec![3, 2], vec![1, 1]]);
        assert_eq!(parse_mask(&format_mask(&m), "m").unwrap(), m);
        assert!(matches!(parse_mask("2 4 3\n4 0\n", "m"), Err(IoError::Parse { line: 2, .. })));
        assert!(parse_mask("2 4\n", "m").is_err());
    }

    #[test]
    fn shapes() {
        let base = Path::new(".");
        let d = parse_shape("disk:32,32,12", base).unwrap();
        assert!(d.contains(&[32.0, 44.0]) && !d.contains(&[32.0, 44.5]));
        let r = parse_shape("rect:0,0,3,2", base).unwrap();
        assert_eq!(r.dim(), 2);
        assert_eq!(parse_shape("rect:1,5", base).unwrap().dim(), 1);
        assert!(parse_shape("blob:1", base).is_err());
        assert!(parse_shape("disk:0,0,-1", base).is_err());
    }

    #[test]
    fn polygon_from_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("tri.csv"), "x,y\n0,0\n3,0\n0,4\n").unwrap();
        let p = parse_shape("poly:@tri.csv", dir.path()).unwrap();
        assert!((p.perimeter() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn frame_round_trip() {
        let pairs = vec![
            (vec![0], vec![Complex64::new(1.0, 0.5), Complex64::new(0.0, -1.0)]),
            (vec![1], vec![Complex64::new(0.1, 0.0), Complex64::new(2.0, 0.0)]),
        ];
        let text = format_frame(&pairs);
        assert_eq!(parse_frame(&text, "f").unwrap(), pairs);
        assert!(parse_frame("2 3\n0 1 0 0 1\n", "f").is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.12345679, 0.0] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn window_specs() {
        let base = Path::new(".");
        assert_eq!(parse_window_spec("gauss", base).unwrap(), WindowSpec::Gauss);
        assert_eq!(parse_window_spec("boxcar:5", base).unwrap(), WindowSpec::Boxcar(5));
        assert!(parse_window_spec("hann", base).is_err());
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("w.txt"), "1\n0 1\n").unwrap();
        let w = parse_window_spec("file:@w.txt", dir.path()).unwrap();
        assert_eq!(w, WindowSpec::Samples(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]));
    }

    #[test]
    fn windows_and_weights() {
        let w = parse_windows("1 0 0 0\n0 0 1 0\n", "w").unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].len(), 2);
        assert!(parse_windows("1 0 0\n", "w").is_err());
        assert_eq!(parse_weights("0.6\n0.8\n", "v").unwrap(), vec![0.6, 0.8]);
    }
}
