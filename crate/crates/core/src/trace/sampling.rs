//! Five equidistant probe lines per orientation, ten probes per line.
//!
//! Parallel lines run along the wall (horizontal) through the liquid
//! reservoir at heights `H·k/6`; perpendicular lines cross the wall
//! (vertical) at `W·k/6` and span the full domain height. Labels run `a..e`
//! bottom to top and left to right. Probes sit at `L·(k+1)/11` along each line.

use serde::{Deserialize, Serialize};

use super::interpolate::VelocityField;
use crate::error::Result;
use crate::field::Snapshot;
use crate::geometry::DomainSpec;

pub const LINES: usize = 5;
pub const PROBES: usize = 10;
pub const LABELS: [char; LINES] = ['a', 'b', 'c', 'd', 'e'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Orientation {
    Parallel,
    Perpendicular,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Parallel => "PARALLEL",
            Orientation::Perpendicular => "PERPENDICULAR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "PARALLEL" => Some(Orientation::Parallel),
            "PERPENDICULAR" => Some(Orientation::Perpendicular),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub index: usize,
    pub position: [f64; 2],
    pub speed: f64,
    pub velocity: [f64; 2],
    /// The probe lies in a solid cell; its velocity is zero by no-slip.
    pub in_solid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLine {
    pub label: char,
    /// `y` of a parallel line or `x` of a perpendicular line [m].
    pub position: f64,
    pub probes: Vec<Probe>,
}

impl SampleLine {
    /// Mean speed over probes outside solids; `None` if every probe is solid.
    pub fn mean_speed(&self) -> Option<f64> {
        let fluid: Vec<f64> = self.probes.iter().filter(|p| !p.in_solid).map(|p| p.speed).collect();
        (!fluid.is_empty()).then(|| fluid.iter().sum::<f64>() / fluid.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTable {
    pub orientation: Orientation,
    pub lines: Vec<SampleLine>,
}

impl SampleTable {
    pub fn probes(&self) -> impl Iterator<Item = &Probe> {
        self.lines.iter().flat_map(|l| l.probes.iter())
    }

    /// Lines `a` and `e`.
    pub fn boundary_lines(&self) -> impl Iterator<Item = &SampleLine> {
        let n = self.lines.len();
        self.lines
            .iter()
            .enumerate()
            .filter(move |(k, _)| *k == 0 || *k + 1 == n)
            .map(|(_, l)| l)
    }

    /// Lines `b` to `d`.
    pub fn central_lines(&self) -> impl Iterator<Item = &SampleLine> {
        let n = self.lines.len();
        self.lines
            .iter()
            .enumerate()
            .filter(move |(k, _)| *k != 0 && *k + 1 != n)
            .map(|(_, l)| l)
    }
}

fn probe(field: &impl VelocityField, index: usize, x: f64, y: f64) -> Result<Probe> {
    let in_solid = field.is_solid(x, y);
    let velocity = if in_solid { [0.0, 0.0] } else { field.velocity(x, y)? };
    Ok(Probe {
        index,
        position: [x, y],
        speed: velocity[0].hypot(velocity[1]),
        velocity,
        in_solid,
    })
}

/// Samples the parallel and perpendicular line families.
pub fn sample_lines(snap: &Snapshot, domain: &DomainSpec) -> Result<(SampleTable, SampleTable)> {
    sample_field(snap, domain)
}

/// [`sample_lines`] over any velocity field.
pub fn sample_field(field: &impl VelocityField, domain: &DomainSpec) -> Result<(SampleTable, SampleTable)> {
    let (w, h_liquid, h_total) = (domain.width, domain.liquid_height(), domain.height);
    let frac = |k: usize, n: usize| k as f64 / n as f64;
    let mut parallel = Vec::with_capacity(LINES);
    let mut perpendicular = Vec::with_capacity(LINES);
    for (k, &label) in LABELS.iter().enumerate() {
        let y = h_liquid * frac(k + 1, LINES + 1);
        let probes = (0..PROBES)
            .map(|p| probe(field, p, w * frac(p + 1, PROBES + 1), y))
            .collect::<Result<_>>()?;
        parallel.push(SampleLine { label, position: y, probes });

        let x = w * frac(k + 1, LINES + 1);
        let probes = (0..PROBES)
            .map(|p| probe(field, p, x, h_total * frac(p + 1, PROBES + 1)))
            .collect::<Result<_>>()?;
        perpendicular.push(SampleLine { label, position: x, probes });
    }
    Ok((
        SampleTable {
            orientation: Orientation::Parallel,
            lines: parallel,
        },
        SampleTable {
            orientation: Orientation::Perpendicular,
            lines: perpendicular,
        },
    ))
}
