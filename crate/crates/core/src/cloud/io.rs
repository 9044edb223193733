use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Landmark, LandmarkTarget, PointCloud};
use crate::error::{Error, Result};

/// Supported point file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CloudFormat {
    /// One point per line, whitespace separated, 2 or 3 columns.
    Xyz,
    /// ASCII PLY with `x`, `y`, `z` vertex properties.
    PlyAscii,
    /// Comma separated, optional header row.
    Csv,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "xyz" | "txt" => Some(Self::Xyz),
            "ply" => Some(Self::PlyAscii),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_row(path: &Path, line: usize, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("not a number: {f:?}")))
        })
        .collect()
}

/// Reads a point file and any sidecar annotations next to it
/// (`<stem>.boundary.txt`, `<stem>.corners.txt`, `<stem>.landmarks.csv`).
pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let text = read(path)?;
    let rows = match format {
        CloudFormat::Xyz => parse_delimited(path, &text, None)?,
        CloudFormat::Csv => parse_delimited(path, &text, Some(','))?,
        CloudFormat::PlyAscii => parse_ply(path, &text)?,
    };
    let planar = rows.iter().all(|r| r.len() == 2);
    let points: Vec<[f64; 3]> = rows
        .iter()
        .map(|r| [r[0], r[1], r.get(2).copied().unwrap_or(0.0)])
        .collect();
    let mut cloud = if planar {
        PointCloud::planar(&points.iter().map(|p| [p[0], p[1]]).collect::<Vec<_>>())?
    } else {
        PointCloud::new(points)?
    };

    let b = sidecar(path, "boundary.txt");
    if b.exists() {
        cloud = cloud.with_boundary(load_index_list(&b)?)?;
    }
    let c = sidecar(path, "corners.txt");
    if c.exists() {
        let idx = load_index_list(&c)?;
        let corners: [usize; 4] = idx
            .try_into()
            .map_err(|_| parse_err(&c, 1, "expected exactly 4 corner indices"))?;
        cloud = cloud.with_corners(corners)?;
    }
    let l = sidecar(path, "landmarks.csv");
    if l.exists() {
        cloud = cloud.with_landmarks(load_landmarks(&l)?)?;
    }
    Ok(cloud)
}

fn parse_delimited(path: &Path, text: &str, delim: Option<char>) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = match delim {
            Some(d) => line.split(d).collect(),
            None => line.split_whitespace().collect(),
        };
        // A leading non-numeric row in csv is a header.
        if delim.is_some() && rows.is_empty() && fields[0].trim().parse::<f64>().is_err() {
            continue;
        }
        let row = parse_row(path, n + 1, &fields)?;
        if row.len() != 2 && row.len() != 3 {
            return Err(parse_err(
                path,
                n + 1,
                format!("expected 2 or 3 coordinates, found {}", row.len()),
            ));
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(path, n + 1, "inconsistent column count"));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no points"));
    }
    Ok(rows)
}

fn parse_ply(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(path, 1, "missing 'ply' magic")),
    }
    let mut vertex_count = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    let mut elements_before_vertex = false;
    for (n, raw) in lines.by_ref() {
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(parse_err(path, n + 1, "only ascii PLY is supported"))
            }
            ["element", "vertex", count] => {
                vertex_count = Some(
                    count
                        .parse::<usize>()
                        .map_err(|_| parse_err(path, n + 1, "bad vertex count"))?,
                );
                in_vertex = true;
            }
            ["element", ..] => {
                if vertex_count.is_none() {
                    elements_before_vertex = true;
                }
                in_vertex = false;
            }
            ["property", "list", ..] => {}
            ["property", _, name] if in_vertex => props.push(name.to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    if elements_before_vertex {
        return Err(parse_err(path, 1, "vertex element must come first"));
    }
    let count = vertex_count.ok_or_else(|| parse_err(path, 1, "no vertex element"))?;
    let col = |name: &str| props.iter().position(|p| p == name);
    let (ix, iy) = match (col("x"), col("y")) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(parse_err(path, 1, "vertex element lacks x/y")),
    };
    let iz = col("z");
    let mut rows = Vec::with_capacity(count);
    for (n, raw) in lines {
        if rows.len() == count {
            break;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let vals = parse_row(path, n + 1, &toks)?;
        if vals.len() < props.len() {
            return Err(parse_err(path, n + 1, "too few vertex properties"));
        }
        let mut row = vec![vals[ix], vals[iy]];
        if let Some(z) = iz {
            row.push(vals[z]);
        }
        rows.push(row);
    }
    if rows.len() != count {
        return Err(parse_err(
            path,
            text.lines().count(),
            format!("expected {count} vertices, found {}", rows.len()),
        ));
    }
    Ok(rows)
}

/// One index per line.
pub fn load_index_list(path: &Path) -> Result<Vec<usize>> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for tok in line.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
            out.push(
                tok.parse::<usize>()
                    .map_err(|_| parse_err(path, n + 1, format!("not an index: {tok:?}")))?,
            );
        }
    }
    Ok(out)
}

/// Rows `index,u,v` (target positions) or `index_src,index_dst` (partners).
pub fn load_landmarks(path: &Path) -> Result<Vec<Landmark>> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Ok(index) = fields[0].parse::<usize>() else {
            if out.is_empty() {
                continue; // header
            }
            return Err(parse_err(path, n + 1, "bad landmark index"));
        };
        let target = match fields.len() {
            2 => LandmarkTarget::Partner(
                fields[1]
                    .parse()
                    .map_err(|_| parse_err(path, n + 1, "bad partner index"))?,
            ),
            3 => {
                let v = parse_row(path, n + 1, &fields[1..])?;
                LandmarkTarget::Position([v[0], v[1]])
            }
            _ => return Err(parse_err(path, n + 1, "expected 2 or 3 fields")),
        };
        out.push(Landmark { index, target });
    }
    Ok(out)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn fmt_f(x: f64) -> String {
    // 17 significant digits round-trips every f64.
    format!("{x:.16e}")
}

/// Writes the points, plus sidecar files for any annotations present.
pub fn save_cloud(cloud: &PointCloud, path: &Path, format: CloudFormat) -> Result<()> {
    let planar = cloud.is_planar();
    let mut s = String::new();
    match format {
        CloudFormat::Xyz | CloudFormat::Csv => {
            let sep = if format == CloudFormat::Csv { "," } else { " " };
            if format == CloudFormat::Csv {
                s.push_str(if planar { "x,y\n" } else { "x,y,z\n" });
            }
            for p in cloud.points() {
                let cols = if planar { &p[..2] } else { &p[..] };
                let line: Vec<String> = cols.iter().map(|&c| fmt_f(c)).collect();
                s.push_str(&line.join(sep));
                s.push('\n');
            }
        }
        CloudFormat::PlyAscii => {
            let _ = write!(
                s,
                "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
                cloud.len()
            );
            for p in cloud.points() {
                let _ = writeln!(s, "{} {} {}", fmt_f(p[0]), fmt_f(p[1]), fmt_f(p[2]));
            }
        }
    }
    write(path, &s)?;
    if let Some(b) = cloud.boundary() {
        save_index_list(&sidecar(path, "boundary.txt"), b)?;
    }
    if let Some(c) = cloud.corners() {
        save_index_list(&sidecar(path, "corners.txt"), &c)?;
    }
    if !cloud.landmarks().is_empty() {
        save_landmarks(&sidecar(path, "landmarks.csv"), cloud.landmarks())?;
    }
    Ok(())
}

pub fn save_index_list(path: &Path, idx: &[usize]) -> Result<()> {
    let mut s = String::new();
    for i in idx {
        let _ = writeln!(s, "{i}");
    }
    write(path, &s)
}

pub fn save_landmarks(path: &Path, landmarks: &[Landmark]) -> Result<()> {
    let mut s = String::new();
    for l in landmarks {
        match l.target {
            LandmarkTarget::Position([u, v]) => {
                let _ = writeln!(s, "{},{},{}", l.index, fmt_f(u), fmt_f(v));
            }
            LandmarkTarget::Partner(j) => {
                let _ = writeln!(s, "{},{}", l.index, j);
            }
        }
    }
    write(path, &s)
}
