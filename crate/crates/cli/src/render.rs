//! Field CSV → PGM (P2) image and terminal preview.

use std::fmt::Write as _;
use std::path::Path;

use qaheat::TemperatureField;

use crate::error::HarnessError;

pub const FIELD_HEADER: [&str; 5] = ["i", "j", "x", "y", "T"];

/// Darkest to brightest.
pub const GLYPHS: &[u8; 10] = b" .:-=+*#%@";

/// Temperatures on an `(m+1) x (m+1)` node grid, row `j`, column `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub side: usize,
    /// `values[j * side + i]`.
    pub values: Vec<f64>,
}

impl FieldGrid {
    pub fn from_field(field: &TemperatureField) -> Self {
        let side = field.side();
        let mut values = vec![0.0; side * side];
        for (i, j, _, _, t) in field.nodes() {
            values[j * side + i] = t;
        }
        Self { side, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.side + i]
    }

    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Reads a field CSV; the node count must be a perfect square and every
    /// node must appear exactly once.
    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let mut reader = csv::Reader::from_path(path)?;
        let header: Vec<String> = reader.headers()?.iter().map(str::trim).map(String::from).collect();
        if header != FIELD_HEADER {
            return Err(HarnessError::MalformedField(format!(
                "expected header {:?}, got {header:?}",
                FIELD_HEADER.join(",")
            )));
        }
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let bad = |what: &str| HarnessError::MalformedField(format!("row {}: bad {what}", line + 1));
            let i: usize = record[0].trim().parse().map_err(|_| bad("i"))?;
            let j: usize = record[1].trim().parse().map_err(|_| bad("j"))?;
            let t: f64 = record[4].trim().parse().map_err(|_| bad("T"))?;
            if !t.is_finite() {
                return Err(bad("T"));
            }
            rows.push((i, j, t));
        }
        let side = (rows.len() as f64).sqrt().round() as usize;
        if side < 2 || side * side != rows.len() {
            return Err(HarnessError::MalformedField(format!(
                "{} nodes do not form a square grid",
                rows.len()
            )));
        }
        let mut values = vec![f64::NAN; side * side];
        for (i, j, t) in rows {
            if i >= side || j >= side || !values[j * side + i].is_nan() {
                return Err(HarnessError::MalformedField(format!(
                    "node ({i}, {j}) out of range or repeated"
                )));
            }
            values[j * side + i] = t;
        }
        Ok(Self { side, values })
    }

    /// Linear map of `[min, max]` onto `0..=levels-1`; a flat field maps to 0.
    fn level(&self, v: f64, levels: usize) -> usize {
        let (lo, hi) = self.range();
        if hi <= lo {
            return 0;
        }
        let t = (v - lo) / (hi - lo);
        ((t * (levels - 1) as f64).round() as usize).min(levels - 1)
    }
}

/// Plain-text graymap, top row is `j = m`.
pub fn pgm(grid: &FieldGrid) -> String {
    let mut out = format!("P2\n{} {}\n255\n", grid.side, grid.side);
    for j in (0..grid.side).rev() {
        let row: Vec<String> = (0..grid.side)
            .map(|i| grid.level(grid.get(i, j), 256).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn ascii_preview(grid: &FieldGrid) -> String {
    let mut out = String::new();
    for j in (0..grid.side).rev() {
        for i in 0..grid.side {
            let g = GLYPHS[grid.level(grid.get(i, j), GLYPHS.len())] as char;
            // Doubled so the aspect ratio looks square in a terminal.
            let _ = write!(out, "{g}{g}");
        }
        out.push('\n');
    }
    out
}

pub fn render_field(field_csv: &Path, out_pgm: &Path) -> Result<String, HarnessError> {
    let grid = FieldGrid::read(field_csv)?;
    std::fs::write(out_pgm, pgm(&grid))?;
    Ok(ascii_preview(&grid))
}
