//! CSV tables and SVG plots of sweep results.
//!
//! Columns, in order: the primary swept variable, the secondary one when
//! present, then [`FIXED_COLUMNS`]. Floats carry 17 significant digits;
//! absent values are empty cells. `stable` is empty when no fixed point was
//! found.

use std::io::{Read, Write};
use std::path::Path;

use plotters::prelude::*;

use crate::entanglement::EntanglementVerdict;
use crate::error::{Error, Result};
use crate::sweep::{ResultRow, Stage, Status, SweepVar, FIXED_COLUMNS};

/// Result rows together with the variables that label them.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub primary: SweepVar,
    pub secondary: Option<SweepVar>,
    pub rows: Vec<ResultRow>,
}

impl Table {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec![self.primary.name().to_string()];
        h.extend(self.secondary.map(|s| s.name().to_string()));
        h.extend(FIXED_COLUMNS.iter().map(|s| s.to_string()));
        h
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn record(table: &Table, row: &ResultRow) -> Vec<String> {
    let mut r = vec![fmt_f64(row.primary)];
    if table.secondary.is_some() {
        r.push(fmt_opt(row.secondary));
    }
    r.push(fmt_opt(row.abs_a_s));
    r.push(fmt_opt(row.abs_c_s));
    r.push(row.stable.map(|b| b.to_string()).unwrap_or_default());
    r.push(row.status.as_str().to_string());
    for stage in Stage::ALL {
        r.push(fmt_opt(row.two_eta(stage)));
        r.push(fmt_opt(row.log_negativity(stage)));
    }
    r
}

pub fn write_csv<W: Write>(table: &Table, out: W) -> Result<()> {
    let err = |e: csv::Error| Error::Config(format!("CSV encoding: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.header()).map_err(err)?;
    for row in &table.rows {
        w.write_record(record(table, row)).map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Config(format!("CSV encoding: {e}")))
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(table, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Config(m) => Error::Io {
            path: path.into(),
            message: m,
        },
        e => e,
    })
}

fn parse_f64(s: &str, col: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Config(format!("column `{col}`: bad number `{s}`")))
}

/// Parse a table written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Table> {
    let err = |e: csv::Error| Error::Config(format!("CSV decoding: {e}"));
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(err)?.iter().map(String::from).collect();
    let n_vars = header
        .len()
        .checked_sub(FIXED_COLUMNS.len())
        .filter(|n| (1..=2).contains(n));
    let n_vars =
        n_vars.ok_or_else(|| Error::Config(format!("unexpected column count {}", header.len())))?;
    if header[n_vars..] != FIXED_COLUMNS {
        return Err(Error::Config("unexpected column names".into()));
    }
    let primary: SweepVar = header[0].parse()?;
    let secondary = if n_vars == 2 {
        Some(header[1].parse::<SweepVar>()?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(err)?;
        let f = |i: usize| parse_f64(&rec[i], &header[i]);
        let primary = f(0)?.ok_or_else(|| Error::Config("missing primary value".into()))?;
        let secondary = if n_vars == 2 { f(1)? } else { None };
        let k = n_vars;
        let stable = match &rec[k + 2] {
            "" => None,
            "true" => Some(true),
            "false" => Some(false),
            s => return Err(Error::Config(format!("bad `stable` value `{s}`"))),
        };
        let status: Status = rec[k + 3].parse()?;
        let mut verdicts = [None; 4];
        for (j, v) in verdicts.iter_mut().enumerate() {
            let i = k + 4 + 2 * j;
            if let (Some(two_eta), Some(log_negativity)) = (f(i)?, f(i + 1)?) {
                *v = Some(EntanglementVerdict {
                    two_eta,
                    entangled: two_eta < 1.0,
                    log_negativity,
                });
            }
        }
        rows.push(ResultRow {
            primary,
            secondary,
            abs_a_s: f(k)?,
            abs_c_s: f(k + 1)?,
            stable,
            status,
            verdicts,
        });
    }
    Ok(Table {
        primary,
        secondary,
        rows,
    })
}

/// One curve of a plot: consecutive points, broken where values are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub segments: Vec<Vec<(f64, f64)>>,
}

/// Curves of `2 eta` against the primary variable, one per secondary value
/// and stage.
pub fn curves(table: &Table, stages: &[Stage]) -> Vec<Curve> {
    let mut keys: Vec<Option<f64>> = Vec::new();
    for row in &table.rows {
        if !keys
            .iter()
            .any(|k| k.map(f64::to_bits) == row.secondary.map(f64::to_bits))
        {
            keys.push(row.secondary);
        }
    }
    let mut out = Vec::new();
    for key in keys {
        for &stage in stages {
            let mut segments = vec![Vec::new()];
            for row in table
                .rows
                .iter()
                .filter(|r| r.secondary.map(f64::to_bits) == key.map(f64::to_bits))
            {
                match row.two_eta(stage).filter(|y| y.is_finite() && *y > 0.0) {
                    Some(y) => segments.last_mut().unwrap().push((row.primary, y)),
                    None if !segments.last().unwrap().is_empty() => segments.push(Vec::new()),
                    None => {}
                }
            }
            segments.retain(|s| !s.is_empty());
            let mut label = stage.label().to_string();
            if let (Some(var), Some(v)) = (table.secondary, key) {
                label = format!("{label}, {} = {v} {}", var.name(), var.unit());
            }
            out.push(Curve { label, segments });
        }
    }
    out
}

fn plot_err(path: &Path) -> impl Fn(String) -> Error + '_ {
    move |message| Error::Io {
        path: path.into(),
        message,
    }
}

pub fn emit_plot(table: &Table, stages: &[Stage], title: &str, path: &Path) -> Result<()> {
    let curves = curves(table, stages);
    let err = plot_err(path);
    let (mut x0, mut x1) = table
        .rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
            (a.min(r.primary), b.max(r.primary))
        });
    if !(x0 < x1) {
        let c = if x0.is_finite() { x0 } else { 0.0 };
        (x0, x1) = (c - 1.0, c + 1.0);
    }
    let ys = curves
        .iter()
        .flat_map(|c| c.segments.iter().flatten().map(|p| p.1));
    let (y0, y1) = ys.fold((1.0f64, 1.0f64), |(a, b), y| (a.min(y), b.max(y)));
    let (y0, y1) = (y0 / 1.5, y1 * 1.5);

    let root = SVGBackend::new(path, (900, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(e.to_string()))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(45)
        .y_label_area_size(75)
        .build_cartesian_2d(x0..x1, (y0..y1).log_scale())
        .map_err(|e| err(e.to_string()))?;
    chart
        .configure_mesh()
        .x_desc(format!(
            "{} [{}]",
            table.primary.name(),
            table.primary.unit()
        ))
        .y_desc("2 eta")
        .y_label_formatter(&|y| format!("{y:.3e}"))
        .draw()
        .map_err(|e| err(e.to_string()))?;
    chart
        .draw_series(LineSeries::new(
            [(x0, 1.0), (x1, 1.0)],
            BLACK.stroke_width(1),
        ))
        .map_err(|e| err(e.to_string()))?
        .label("separability threshold 2 eta = 1")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK));
    for (i, curve) in curves.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        for (j, seg) in curve.segments.iter().enumerate() {
            let s = chart
                .draw_series(LineSeries::new(seg.iter().copied(), color.stroke_width(2)))
                .map_err(|e| err(e.to_string()))?;
            if j == 0 {
                s.label(curve.label.clone()).legend(move |(x, y)| {
                    PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
                });
            }
        }
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::UpperRight)
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(e.to_string()))?;
    root.present().map_err(|e| err(e.to_string()))
}
