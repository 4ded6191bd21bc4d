//! Streamlines as integral curves of the velocity direction field.

use serde::{Deserialize, Serialize};

use super::interpolate::VelocityField;
use crate::error::{Error, Result};
use crate::geometry::Region;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    MaxLength,
    LeftDomain,
    Stagnation,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::MaxLength => "MAX_LENGTH",
            Termination::LeftDomain => "LEFT_DOMAIN",
            Termination::Stagnation => "STAGNATION",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "MAX_LENGTH" => Some(Termination::MaxLength),
            "LEFT_DOMAIN" => Some(Termination::LeftDomain),
            "STAGNATION" => Some(Termination::Stagnation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Streamline {
    pub seed: [f64; 2],
    pub vertices: Vec<[f64; 2]>,
    pub terminal_reason: Termination,
}

impl Streamline {
    pub fn arc_length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }
}

fn inside(b: &Region, p: [f64; 2]) -> bool {
    p[0] >= b.x0 && p[0] <= b.x1 && p[1] >= b.y0 && p[1] <= b.y1
}

/// Unit direction at `p`, or `None` where the speed is below `min_speed` or
/// the point is unusable.
fn direction(field: &impl VelocityField, p: [f64; 2], min_speed: f64) -> Option<[f64; 2]> {
    if !inside(&field.bounds(), p) || field.is_solid(p[0], p[1]) {
        return None;
    }
    let v = field.velocity(p[0], p[1]).ok()?;
    let s = v[0].hypot(v[1]);
    if s < min_speed || s == 0.0 {
        None
    } else {
        Some([v[0] / s, v[1] / s])
    }
}

/// Traces a streamline from `seed` with classical fourth-order Runge–Kutta
/// steps of fixed arc length.
///
/// Tracing stops at `max_arc_length` (the last step is shortened to land on
/// it), when the next vertex would leave the domain or enter a solid, or
/// where the speed drops below `min_speed`.
pub fn trace_streamline(
    field: &impl VelocityField,
    seed: [f64; 2],
    step_length: f64,
    max_arc_length: f64,
    min_speed: f64,
) -> Result<Streamline> {
    let bounds = field.bounds();
    if !inside(&bounds, seed) {
        return Err(Error::OutOfDomain { x: seed[0], y: seed[1] });
    }
    if !(step_length > 0.0) {
        return Err(Error::Domain(format!("streamline step must be positive, got {step_length}")));
    }
    let mut vertices = vec![seed];
    let mut p = seed;
    let mut arc = 0.0;
    let reason = loop {
        let remaining = max_arc_length - arc;
        if remaining <= 0.0 {
            break Termination::MaxLength;
        }
        let h = step_length.min(remaining);
        let Some(k1) = direction(field, p, min_speed) else {
            break Termination::Stagnation;
        };
        let at = |k: [f64; 2], s: f64| [p[0] + s * k[0], p[1] + s * k[1]];
        let stage = |q: [f64; 2]| direction(field, q, min_speed);
        let next = (|| {
            let k2 = stage(at(k1, 0.5 * h))?;
            let k3 = stage(at(k2, 0.5 * h))?;
            let k4 = stage(at(k3, h))?;
            Some([
                p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ])
        })();
        let Some(q) = next else {
            // an intermediate stage left the fluid or hit a stagnant point
            let probe = at(k1, h);
            if !inside(&bounds, probe) || field.is_solid(probe[0], probe[1]) {
                break Termination::LeftDomain;
            }
            break Termination::Stagnation;
        };
        if !inside(&bounds, q) || field.is_solid(q[0], q[1]) {
            break Termination::LeftDomain;
        }
        p = q;
        vertices.push(p);
        arc += h;
    };
    Ok(Streamline {
        seed,
        vertices,
        terminal_reason: reason,
    })
}

/// `n` seeds on the most nearly square lattice `a × b = n` covering `region`,
/// each at the centre of its lattice cell.
pub fn seed_equidistant(region: &Region, n: usize) -> Vec<[f64; 2]> {
    if n == 0 {
        return Vec::new();
    }
    let (w, h) = (region.width(), region.height());
    let mut best = (n, 1);
    let mut best_score = f64::INFINITY;
    for a in 1..=n {
        if n % a != 0 {
            continue;
        }
        let b = n / a;
        let score = ((w / a as f64) / (h / b as f64)).ln().abs();
        // ties go to more columns
        if score <= best_score {
            best_score = score;
            best = (a, b);
        }
    }
    let (a, b) = best;
    let mut seeds = Vec::with_capacity(n);
    for j in 0..b {
        for i in 0..a {
            seeds.push([
                region.x0 + w * (i as f64 + 0.5) / a as f64,
                region.y0 + h * (j as f64 + 0.5) / b as f64,
            ]);
        }
    }
    seeds
}
