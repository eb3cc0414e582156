//! SVG rendering of sweep and analyzer CSV files. Plots only read columns;
//! they never recompute metrics.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Mean accuracy against `alpha`, one curve per `(delta, beta)`.
    AccuracyVsAlpha,
    /// Mean MSE against `log10(beta)`, one curve per `(delta, sigma)`.
    ErrorVsBeta,
    /// Histogram of the `singular_value` column.
    Histogram,
}

impl PlotKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "accuracy-vs-alpha" => Some(Self::AccuracyVsAlpha),
            "error-vs-beta" => Some(Self::ErrorVsBeta),
            "histogram" => Some(Self::Histogram),
            _ => None,
        }
    }

    fn columns(self) -> &'static [&'static str] {
        match self {
            Self::AccuracyVsAlpha => &["alpha", "accuracy", "delta", "beta"],
            Self::ErrorVsBeta => &["beta", "mse", "delta", "sigma"],
            Self::Histogram => &["singular_value"],
        }
    }
}

const HIST_BINS: usize = 30;

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.iter().map(str::to_string).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { headers, rows })
    }

    fn index(&self, path: &Path, names: &[&str]) -> Result<Vec<usize>> {
        let missing: Vec<&str> = names
            .iter()
            .copied()
            .filter(|n| !self.headers.iter().any(|h| h == n))
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingColumns {
                path: path.to_path_buf(),
                columns: missing.join(", "),
            });
        }
        Ok(names
            .iter()
            .map(|n| self.headers.iter().position(|h| h == n).unwrap())
            .collect())
    }

    /// Rows whose selected cells all parse as numbers.
    fn numeric(&self, cols: &[usize]) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .filter_map(|r| cols.iter().map(|&c| r.get(c)?.parse::<f64>().ok()).collect())
            .collect()
    }
}

type Curves = BTreeMap<String, Vec<(f64, f64)>>;

/// Mean of `y` at each distinct `x`, per group label.
fn curves(rows: &[Vec<f64>], x_of: impl Fn(f64) -> f64, label: impl Fn(&[f64]) -> String) -> Curves {
    let mut acc: BTreeMap<String, BTreeMap<u64, (f64, f64, usize)>> = BTreeMap::new();
    for r in rows {
        let x = x_of(r[0]);
        let e = acc.entry(label(r)).or_default().entry(x.to_bits()).or_insert((x, 0.0, 0));
        e.1 += r[1];
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(k, pts)| {
            let mut v: Vec<(f64, f64)> = pts.into_values().map(|(x, s, c)| (x, s / c as f64)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            (k, v)
        })
        .collect()
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

fn draw_curves(out: &Path, title: &str, x_desc: &str, y_desc: &str, curves: &Curves) -> Result<()> {
    let (x0, x1) = span(curves.values().flatten().map(|p| p.0));
    let (y0, y1) = span(curves.values().flatten().map(|p| p.1));
    let root = SVGBackend::new(out, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .draw()
        .map_err(plot_err)?;
    for (i, (label, pts)) in curves.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

fn draw_histogram(out: &Path, values: &[f64]) -> Result<()> {
    let (lo, hi) = span(values.iter().copied());
    let width = (hi - lo) / HIST_BINS as f64;
    let mut counts = vec![0usize; HIST_BINS];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(HIST_BINS - 1);
        counts[b] += 1;
    }
    let top = *counts.iter().max().unwrap_or(&1) as f64;
    let root = SVGBackend::new(out, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("singular values", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(lo..hi, 0.0..top * 1.05)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("singular value")
        .y_desc("count")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(counts.iter().enumerate().map(|(i, &c)| {
            let x = lo + i as f64 * width;
            Rectangle::new([(x, 0.0), (x + width, c as f64)], BLUE.mix(0.6).filled())
        }))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Renders `csv_path` to an SVG at `out`. Nothing is written when the input
/// lacks the needed columns or has no usable rows.
pub fn plot_results(csv_path: &Path, kind: PlotKind, out: &Path, overwrite: bool) -> Result<()> {
    let table = Table::read(csv_path)?;
    let cols = table.index(csv_path, kind.columns())?;
    let rows = table.numeric(&cols);
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} has no usable rows for this plot",
            csv_path.display()
        )));
    }
    if out.exists() && !overwrite {
        return Err(Error::OutputExists(out.to_path_buf()));
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    match kind {
        PlotKind::AccuracyVsAlpha => {
            let c = curves(&rows, |x| x, |r| format!("delta={} beta={}", r[2], r[3]));
            draw_curves(out, "accuracy vs flip rate", "alpha", "accuracy", &c)
        }
        PlotKind::ErrorVsBeta => {
            let c = curves(&rows, f64::log10, |r| format!("delta={} sigma={}", r[2], r[3]));
            draw_curves(out, "error vs regularization", "log10 beta", "mse", &c)
        }
        PlotKind::Histogram => {
            let v: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            draw_histogram(out, &v)
        }
    }
}
