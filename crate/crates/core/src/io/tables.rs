//! CSV tables: probe samples, histograms, streamlines, criterion rows and
//! sweeps. Column orders are fixed and documented in the README.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landau::CriterionResult;
use crate::trace::{CriticalEstimate, Orientation, Probe, SampleLine, SampleTable, Streamline};

fn csv_err(e: csv::Error) -> Error {
    Error::format("CSV", e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SampleRow {
    orientation: String,
    line_label: char,
    line_position_m: f64,
    point_index: usize,
    x_m: f64,
    y_m: f64,
    speed_m_per_s: f64,
    ux: f64,
    uy: f64,
    in_solid: bool,
}

pub fn write_samples(tables: &[SampleTable], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for t in tables {
        for line in &t.lines {
            for p in &line.probes {
                out.serialize(SampleRow {
                    orientation: t.orientation.as_str().to_string(),
                    line_label: line.label,
                    line_position_m: line.position,
                    point_index: p.index,
                    x_m: p.position[0],
                    y_m: p.position[1],
                    speed_m_per_s: p.speed,
                    ux: p.velocity[0],
                    uy: p.velocity[1],
                    in_solid: p.in_solid,
                })
                .map_err(csv_err)?;
            }
        }
    }
    out.flush().map_err(|e| Error::format("CSV", e.to_string()))
}

/// Reads tables back, grouping rows by orientation and line label in the
/// order they first appear.
pub fn read_samples(r: impl Read) -> Result<Vec<SampleTable>> {
    let mut tables: Vec<SampleTable> = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize::<SampleRow>() {
        let row = row.map_err(csv_err)?;
        let orientation = Orientation::parse(&row.orientation)
            .ok_or_else(|| Error::format("CSV", format!("unknown orientation `{}`", row.orientation)))?;
        let table = match tables.iter_mut().position(|t| t.orientation == orientation) {
            Some(k) => &mut tables[k],
            None => {
                tables.push(SampleTable {
                    orientation,
                    lines: Vec::new(),
                });
                tables.last_mut().unwrap()
            }
        };
        let line = match table.lines.iter_mut().position(|l| l.label == row.line_label) {
            Some(k) => &mut table.lines[k],
            None => {
                table.lines.push(SampleLine {
                    label: row.line_label,
                    position: row.line_position_m,
                    probes: Vec::new(),
                });
                table.lines.last_mut().unwrap()
            }
        };
        line.probes.push(Probe {
            index: row.point_index,
            position: [row.x_m, row.y_m],
            speed: row.speed_m_per_s,
            velocity: [row.ux, row.uy],
            in_solid: row.in_solid,
        });
    }
    Ok(tables)
}

/// One row per occupied bin; `is_mode` marks the bin that set the estimate.
pub fn write_histogram(estimate: &CriticalEstimate, w: impl Write) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        bin_lower_m_per_s: f64,
        bin_upper_m_per_s: f64,
        count: usize,
        is_mode: bool,
    }
    let mut out = csv::Writer::from_writer(w);
    for b in &estimate.histogram {
        let is_mode = estimate.degenerate || (b.lower < estimate.speed && estimate.speed < b.upper);
        out.serialize(Row {
            bin_lower_m_per_s: b.lower,
            bin_upper_m_per_s: b.upper,
            count: b.count,
            is_mode,
        })
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::format("CSV", e.to_string()))
}

pub fn write_streamlines_csv(lines: &[Streamline], w: impl Write) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        streamline: usize,
        vertex: usize,
        x_m: f64,
        y_m: f64,
        terminal_reason: &'a str,
    }
    let mut out = csv::Writer::from_writer(w);
    for (k, l) in lines.iter().enumerate() {
        for (n, [x, y]) in l.vertices.iter().enumerate() {
            out.serialize(Row {
                streamline: k,
                vertex: n,
                x_m: *x,
                y_m: *y,
                terminal_reason: l.terminal_reason.as_str(),
            })
            .map_err(csv_err)?;
        }
    }
    out.flush().map_err(|e| Error::format("CSV", e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub config_id: String,
    pub q: f64,
    pub q_squared: f64,
    pub threshold: f64,
    pub satisfied: bool,
    pub margin: f64,
}

impl CriterionRow {
    pub fn new(config_id: impl Into<String>, r: &CriterionResult) -> Self {
        Self {
            config_id: config_id.into(),
            q: r.q,
            q_squared: r.q * r.q,
            threshold: r.threshold,
            satisfied: r.satisfied,
            margin: r.margin,
        }
    }
}

pub fn write_criterion_rows(rows: &[CriterionRow], w: impl Write) -> Result<()> {
    write_rows(rows, w)
}

pub fn write_sweep(curve: &[(f64, f64)], w: impl Write) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        g: f64,
        v_c: f64,
    }
    let rows: Vec<Row> = curve.iter().map(|&(g, v_c)| Row { g, v_c }).collect();
    write_rows(&rows, w)
}

/// Any serialisable rows with a header taken from the field names.
pub fn write_rows<T: Serialize>(rows: &[T], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::format("CSV", e.to_string()))
}

/// Two numeric columns with a header, e.g. `(k, v_p)` or `(lambda, v_p)`.
/// Returns the header names and the rows.
pub fn read_pairs(r: impl Read) -> Result<([String; 2], Vec<(f64, f64)>)> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers().map_err(csv_err)?.clone();
    if headers.len() != 2 {
        return Err(Error::format("CSV", format!("expected 2 columns, found {}", headers.len())));
    }
    let names = [headers[0].trim().to_string(), headers[1].trim().to_string()];
    let mut rows = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |k: usize| {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::format("CSV", format!("row {}: bad number `{}`", n + 2, &rec[k])))
        };
        rows.push((num(0)?, num(1)?));
    }
    Ok((names, rows))
}
