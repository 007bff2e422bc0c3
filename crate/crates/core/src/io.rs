// SPDX-License-Identifier: Apache-2.0

//! CSV tables and flat binary snapshots.
//!
//! Floats are written with 17 significant digits so a read-back is
//! bit-exact. Files are written to a temporary sibling and renamed, so a
//! failed run never leaves a partial file behind.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dynamics::semiclassical::SemiclassicalState;
use crate::error::{Error, Result};
use crate::visibility::VisibilityCurve;

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A header block of `# ` comment lines, one column-name row, and data rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            comments: vec![],
            columns: columns.into_iter().map(Into::into).collect(),
            rows: vec![],
        }
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| format_float(x)).collect());
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = Table::default();
        let mut lines = text.lines();
        let mut header = None;
        for line in lines.by_ref() {
            if let Some(c) = line.strip_prefix('#') {
                table.comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
            } else {
                header = Some(line);
                break;
            }
        }
        let header = header.ok_or_else(|| Error::Io("missing column header".into()))?;
        table.columns = header.split(',').map(str::to_string).collect();
        for (k, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(str::to_string).collect();
            if row.len() != table.columns.len() {
                return Err(Error::Io(format!("row {k} has {} fields, expected {}", row.len(), table.columns.len())));
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Table::parse(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Io(format!("no column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| r[idx].parse::<f64>().map_err(|e| Error::Io(format!("column `{name}`: {e}"))))
            .collect()
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

/// Visibility curve as `(t | p, V, formula, far_field_margin)`, with `V`
/// clipped to `[0, 1]` for presentation.
pub fn curve_table(curve: &VisibilityCurve) -> Table {
    let mut t = Table::new([curve.abscissa.as_str(), "V", "formula", "far_field_margin"]);
    let margin = curve.far_field.map_or(f64::NAN, |f| f.margin);
    for (x, v) in curve.x.iter().zip(&curve.v) {
        t.push_row(vec![
            format_float(*x),
            format_float(v.clamp(0.0, 1.0)),
            curve.formula.as_str().to_string(),
            format_float(margin),
        ]);
    }
    t
}

const SNAPSHOT_MAGIC: &str = "qbb-snapshot 1";

/// Text header of a binary snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub p_min: f64,
    pub dp: f64,
    pub bins: usize,
    pub channels: usize,
    pub seed: u64,
    pub t: f64,
}

/// Header lines, a blank line, then `bins * channels^2 * 2` little-endian
/// doubles: real and imaginary parts of every `rho_b`, bins outermost and
/// matrix entries row-major.
pub fn write_snapshot(path: &Path, state: &SemiclassicalState, seed: u64) -> Result<()> {
    let n = state.rho.first().map_or(0, |r| r.nrows());
    let g = state.grid;
    let mut bytes = format!(
        "{SNAPSHOT_MAGIC}\np_min {}\ndp {}\nbins {}\nchannels {n}\nseed {seed}\nt {}\n\n",
        format_float(g.p_min),
        format_float(g.dp),
        g.bins,
        format_float(state.t)
    )
    .into_bytes();
    for r in &state.rho {
        for i in 0..n {
            for j in 0..n {
                bytes.extend_from_slice(&r[(i, j)].re.to_le_bytes());
                bytes.extend_from_slice(&r[(i, j)].im.to_le_bytes());
            }
        }
    }
    write_atomic(path, &bytes)
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, Vec<f64>)> {
    let bytes = fs::read(path)?;
    let split = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| Error::Io("snapshot header is not terminated".into()))?;
    let text = std::str::from_utf8(&bytes[..split]).map_err(|e| Error::Io(e.to_string()))?;
    let mut lines = text.lines();
    if lines.next() != Some(SNAPSHOT_MAGIC) {
        return Err(Error::Io("not a snapshot file".into()));
    }
    let mut fields = std::collections::HashMap::new();
    for line in lines {
        let (k, v) = line.split_once(' ').ok_or_else(|| Error::Io(format!("bad header line `{line}`")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Io(format!("missing `{k}`")));
    let bad = |e: &dyn std::fmt::Display| Error::Io(e.to_string());
    let header = SnapshotHeader {
        p_min: get("p_min")?.parse().map_err(|e| bad(&e))?,
        dp: get("dp")?.parse().map_err(|e| bad(&e))?,
        bins: get("bins")?.parse().map_err(|e| bad(&e))?,
        channels: get("channels")?.parse().map_err(|e| bad(&e))?,
        seed: get("seed")?.parse().map_err(|e| bad(&e))?,
        t: get("t")?.parse().map_err(|e| bad(&e))?,
    };
    let body = &bytes[split + 2..];
    if body.len() != header.bins * header.channels * header.channels * 16 {
        return Err(Error::Io("snapshot body length does not match the header".into()));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, data))
}
