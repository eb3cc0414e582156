//! Plain-text persistence.
//!
//! Matrix format (blank lines and lines starting with `#` are ignored):
//!
//! ```text
//! n K K_bar [cols=C] [kind=clean|gaussian-noisy|flip-noisy]
//! s_1 ... s_Kbar          # sub-class sizes, omitted when K_bar = 0
//! c_1 ... c_Kbar          # class of each sub-class, omitted when K_bar = 0
//! n rows of C values      # C defaults to n
//! ```
//!
//! `K = K_bar = 0` marks a matrix without sub-class structure. Values are
//! written with 17 significant digits, so a write/read cycle is bit-exact.
//!
//! Model format: header `m n`, one line of `m` natural probabilities, then
//! `m` rows of `n` augmentation probabilities.
//!
//! Spectrum format: `lambda l_1 ... l_n`, then `n` rows where row `k` is the
//! `k`-th eigenvector.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::bounds::BoundReport;
use crate::embedding::{RepresentationMatrix, Spectrum};
use crate::error::{Error, Result};
use crate::graph::{AdjacencyMatrix, DiscreteAugmentationModel};
use crate::labels::{LabelKind, LabelMatrix};
use crate::structure::SubclassStructure;

/// A parsed matrix file.
#[derive(Debug, Clone, PartialEq)]
pub struct TextMatrix {
    pub values: DMatrix<f64>,
    pub structure: Option<SubclassStructure>,
    pub kind: Option<LabelKind>,
}

fn fmt_value(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").expect("write to String");
}

fn push_row<'a>(out: &mut String, row: impl Iterator<Item = &'a f64>) {
    for (i, x) in row.enumerate() {
        if i > 0 {
            out.push(' ');
        }
        fmt_value(out, *x);
    }
    out.push('\n');
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn format_matrix(
    values: &DMatrix<f64>,
    structure: Option<&SubclassStructure>,
    kind: Option<LabelKind>,
) -> String {
    let mut out = String::new();
    let (k, k_bar) = structure.map_or((0, 0), |s| (s.classes(), s.subclasses()));
    write!(out, "{} {k} {k_bar}", values.nrows()).unwrap();
    if values.ncols() != values.nrows() {
        write!(out, " cols={}", values.ncols()).unwrap();
    }
    if let Some(kind) = kind {
        write!(out, " kind={kind}").unwrap();
    }
    out.push('\n');
    if let Some(s) = structure {
        out.push_str(&join(s.sizes()));
        out.push('\n');
        out.push_str(&join(s.class_of()));
        out.push('\n');
    }
    for row in values.row_iter() {
        push_row(&mut out, row.iter());
    }
    out
}

/// Meaningful lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_tokens<T: std::str::FromStr>(line: usize, text: &str, expected: usize, what: &str) -> Result<Vec<T>> {
    let out: Vec<T> = text
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| parse_err(line, format!("bad {what} value `{t}`"))))
        .collect::<Result<_>>()?;
    if out.len() != expected {
        return Err(parse_err(
            line,
            format!("expected {expected} {what} values, found {}", out.len()),
        ));
    }
    Ok(out)
}

fn parse_float_row(line: usize, text: &str, expected: usize) -> Result<Vec<f64>> {
    let row: Vec<f64> = parse_tokens(line, text, expected, "matrix")?;
    if let Some(x) = row.iter().find(|x| !x.is_finite()) {
        return Err(parse_err(line, format!("non-finite value {x}")));
    }
    Ok(row)
}

fn take_line<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, last: usize, what: &str) -> Result<(usize, &'a str)> {
    lines
        .next()
        .ok_or_else(|| parse_err(last + 1, format!("missing {what}")))
}

fn parse_rows<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    rows: usize,
    cols: usize,
    mut last: usize,
) -> Result<(DMatrix<f64>, usize)> {
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (ln, text) = take_line(lines, last, &format!("row {}", r + 1))?;
        data.extend(parse_float_row(ln, text, cols)?);
        last = ln;
    }
    Ok((DMatrix::from_row_slice(rows, cols, &data), last))
}

fn reject_trailing<'a>(mut lines: impl Iterator<Item = (usize, &'a str)>) -> Result<()> {
    match lines.next() {
        Some((ln, _)) => Err(parse_err(ln, "unexpected trailing content")),
        None => Ok(()),
    }
}

pub fn parse_matrix(text: &str) -> Result<TextMatrix> {
    let mut lines = content_lines(text);
    let (hl, header) = take_line(&mut lines, 0, "header")?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 3 {
        return Err(parse_err(hl, "header needs `n K K_bar`"));
    }
    let dims: Vec<usize> = parse_tokens(hl, &tokens[..3].join(" "), 3, "header")?;
    let (n, k, k_bar) = (dims[0], dims[1], dims[2]);
    let mut cols = n;
    let mut kind = None;
    for t in &tokens[3..] {
        if let Some(c) = t.strip_prefix("cols=") {
            cols = c
                .parse()
                .map_err(|_| parse_err(hl, format!("bad column count `{c}`")))?;
        } else if let Some(kd) = t.strip_prefix("kind=") {
            kind = Some(
                LabelKind::parse(kd).ok_or_else(|| parse_err(hl, format!("unknown label kind `{kd}`")))?,
            );
        } else {
            return Err(parse_err(hl, format!("unknown header token `{t}`")));
        }
    }
    let mut last = hl;
    let structure = if k_bar == 0 {
        if k != 0 {
            return Err(parse_err(hl, "K must be 0 when K_bar is 0"));
        }
        None
    } else {
        let (sl, sizes_text) = take_line(&mut lines, last, "sizes line")?;
        let sizes: Vec<usize> = parse_tokens(sl, sizes_text, k_bar, "size")?;
        let (cl, class_text) = take_line(&mut lines, sl, "class_of line")?;
        let class_of: Vec<usize> = parse_tokens(cl, class_text, k_bar, "class")?;
        last = cl;
        let s = SubclassStructure::new(k, sizes, class_of)?;
        if s.n() != n {
            return Err(parse_err(
                cl,
                format!("sub-class sizes sum to {} but n is {n}", s.n()),
            ));
        }
        Some(s)
    };
    let (values, _) = parse_rows(&mut lines, n, cols, last)?;
    reject_trailing(lines)?;
    Ok(TextMatrix {
        values,
        structure,
        kind,
    })
}

fn require_structure(m: TextMatrix, what: &str) -> Result<(DMatrix<f64>, SubclassStructure, Option<LabelKind>)> {
    let s = m
        .structure
        .ok_or_else(|| Error::InvalidStructure(format!("{what} file has no sub-class structure")))?;
    Ok((m.values, s, m.kind))
}

pub fn format_adjacency(adj: &AdjacencyMatrix) -> String {
    format_matrix(adj.weights(), Some(adj.structure()), None)
}

pub fn parse_adjacency(text: &str) -> Result<AdjacencyMatrix> {
    let (values, s, _) = require_structure(parse_matrix(text)?, "adjacency")?;
    AdjacencyMatrix::new(values, s)
}

pub fn format_labels(y: &LabelMatrix, structure: &SubclassStructure) -> String {
    format_matrix(y.values(), Some(structure), Some(y.kind()))
}

pub fn parse_labels(text: &str) -> Result<(LabelMatrix, Option<SubclassStructure>)> {
    let m = parse_matrix(text)?;
    let kind = m
        .kind
        .ok_or_else(|| parse_err(1, "label file header needs kind="))?;
    Ok((LabelMatrix::new(m.values, kind)?, m.structure))
}

pub fn format_representation(f: &RepresentationMatrix, structure: &SubclassStructure) -> String {
    format_matrix(f.values(), Some(structure), None)
}

pub fn format_model(model: &DiscreteAugmentationModel) -> String {
    let mut out = format!("{} {}\n", model.natural_count(), model.augmented_count());
    push_row(&mut out, model.natural_probs().iter());
    for row in model.aug_probs().row_iter() {
        push_row(&mut out, row.iter());
    }
    out
}

pub fn parse_model(text: &str) -> Result<DiscreteAugmentationModel> {
    let mut lines = content_lines(text);
    let (hl, header) = take_line(&mut lines, 0, "header")?;
    let dims: Vec<usize> = parse_tokens(hl, header, 2, "header")?;
    let (m, n) = (dims[0], dims[1]);
    let (pl, probs) = take_line(&mut lines, hl, "natural probabilities")?;
    let natural = DVector::from_vec(parse_float_row(pl, probs, m)?);
    let (aug, _) = parse_rows(&mut lines, m, n, pl)?;
    reject_trailing(lines)?;
    DiscreteAugmentationModel::new(natural, aug)
}

pub fn format_spectrum(spec: &Spectrum) -> String {
    let mut out = String::from("lambda");
    for l in spec.eigenvalues().iter() {
        out.push(' ');
        fmt_value(&mut out, *l);
    }
    out.push('\n');
    for col in spec.eigenvectors().column_iter() {
        push_row(&mut out, col.iter());
    }
    out
}

pub fn parse_spectrum(text: &str, structure: SubclassStructure) -> Result<Spectrum> {
    let n = structure.n();
    let mut lines = content_lines(text);
    let (ll, lambda) = take_line(&mut lines, 0, "lambda line")?;
    let rest = lambda
        .strip_prefix("lambda")
        .ok_or_else(|| parse_err(ll, "first line must start with `lambda`"))?;
    let values = DVector::from_vec(parse_float_row(ll, rest, n)?);
    let (rows, _) = parse_rows(&mut lines, n, n, ll)?;
    reject_trailing(lines)?;
    Spectrum::from_parts(values, rows.transpose(), structure)
}

/// CSV with columns `name,bound,observed,slack,holds`.
pub fn format_bound_csv(reports: &[BoundReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "bound", "observed", "slack", "holds"])?;
    for r in reports {
        w.write_record([
            r.name.clone(),
            format!("{:.16e}", r.bound_value),
            format!("{:.16e}", r.observed_value),
            format!("{:.16e}", r.slack),
            r.holds.to_string(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Numerical(format!("CSV buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Aligned table with one line per report and a totals line.
pub fn format_bound_table(reports: &[BoundReport]) -> String {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = format!(
        "{:<width$}  {:>14}  {:>14}  {:>11}  holds\n",
        "name", "bound", "observed", "slack"
    );
    for r in reports {
        writeln!(
            out,
            "{:<width$}  {:>14.6e}  {:>14.6e}  {:>11.3e}  {}",
            r.name,
            r.bound_value,
            r.observed_value,
            r.slack,
            if r.holds { "yes" } else { "NO" }
        )
        .unwrap();
    }
    let held = reports.iter().filter(|r| r.holds).count();
    writeln!(out, "{held}/{} hold", reports.len()).unwrap();
    out
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents`, refusing to replace an existing file unless `overwrite`.
pub fn write_text(path: &Path, contents: &str, overwrite: bool) -> Result<()> {
    if path.exists() && !overwrite {
        return Err(Error::OutputExists(path.to_path_buf()));
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}
