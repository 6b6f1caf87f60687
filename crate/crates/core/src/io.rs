//! Polygon and trajectory files.
//!
//! A polygon is written as `<stem>.csv` (`j,X,Y1..`) for plotting and
//! `<stem>.json`, which carries the frame and the integer lattice and reads
//! back bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polygon::{GridSpacing, LocalFrame, Polygon};
use crate::reparam::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonSidecar {
    pub frame: LocalFrame,
    #[serde(rename = "M")]
    pub m: usize,
    pub eps: f64,
    pub zeta: f64,
    pub zeta_spacing: GridSpacing,
    /// Row-major `(2M+1) × (n-1)` lattice coordinates.
    pub lattice: Vec<i64>,
}

impl PolygonSidecar {
    pub fn from_polygon(p: &Polygon) -> Self {
        PolygonSidecar {
            frame: p.frame().clone(),
            m: p.m(),
            eps: p.eps(),
            zeta: p.zeta(),
            zeta_spacing: p.spacing(),
            lattice: p.lattice().to_vec(),
        }
    }

    pub fn into_polygon(self) -> Result<Polygon> {
        Polygon::from_lattice(self.frame, self.m, self.zeta_spacing, self.lattice)
    }
}

pub fn polygon_csv(p: &Polygon) -> String {
    let mut out = String::from("j,X");
    for c in 1..=p.normals() {
        let _ = write!(out, ",Y{c}");
    }
    out.push('\n');
    for i in 0..p.vertex_count() {
        let _ = write!(out, "{},{}", i as i64 - p.m() as i64, p.x(i));
        for y in p.y(i) {
            let _ = write!(out, ",{y}");
        }
        out.push('\n');
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.json`; returns the sidecar path.
pub fn write_polygon(dir: &Path, stem: &str, p: &Polygon) -> Result<PathBuf> {
    fs::write(dir.join(format!("{stem}.csv")), polygon_csv(p))?;
    let json = dir.join(format!("{stem}.json"));
    fs::write(
        &json,
        serde_json::to_string_pretty(&PolygonSidecar::from_polygon(p))?,
    )?;
    Ok(json)
}

pub fn read_polygon(sidecar: &Path) -> Result<Polygon> {
    let text = fs::read_to_string(sidecar)?;
    let side: PolygonSidecar = serde_json::from_str(&text)?;
    let p = side.clone().into_polygon()?;
    if p.zeta() != side.zeta || p.eps() != side.eps {
        return Err(Error::Format(format!(
            "{}: stored spacings disagree with the lattice description",
            sidecar.display()
        )));
    }
    Ok(p)
}

pub fn trajectory_csv(t: &Trajectory) -> String {
    let n = t.samples.first().map_or(0, |s| s.q.len());
    let mut out = String::from("t");
    for c in 1..=n {
        let _ = write!(out, ",q{c}");
    }
    for c in 1..=n {
        let _ = write!(out, ",qdot{c}");
    }
    out.push('\n');
    for s in &t.samples {
        let _ = write!(out, "{}", s.t);
        for v in s.q.iter().chain(&s.qdot) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
