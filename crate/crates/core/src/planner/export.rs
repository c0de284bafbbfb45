//! Path CSV polylines and an SVG overlay of the map with candidate paths.
//!
//! A path file starts with one comment line carrying the tuple and planning
//! metadata, then a `row,col` header, then one pixel per line:
//!
//! ```text
//! # vehicle=0,demand=1,path=0,lambda=10,planned_cost=57.25
//! row,col
//! 24,4
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{CandidateSet, GridPath};
use crate::assignment::Tuple;
use crate::error::{Error, Result};
use crate::terrain::{LabelMap, Pixel, VarianceMap};

#[derive(Clone, Debug, PartialEq)]
pub struct PathRecord {
    pub tuple: Tuple,
    pub path: GridPath,
}

pub fn write_path_csv(file: impl AsRef<Path>, tuple: Tuple, path: &GridPath) -> Result<()> {
    let mut out = format!(
        "# vehicle={},demand={},path={},lambda={},planned_cost={}\nrow,col\n",
        tuple.vehicle,
        tuple.demand,
        tuple.path,
        path.lambda(),
        path.planned_cost()
    );
    for p in path.pixels() {
        writeln!(out, "{},{}", p.row, p.col).unwrap();
    }
    let file = file.as_ref();
    fs::write(file, out).map_err(|e| Error::io(file, e))
}

pub fn read_path_csv(file: impl AsRef<Path>) -> Result<PathRecord> {
    let file = file.as_ref();
    let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
    let ctx = |line: usize| format!("{}:{line}", file.display());
    let mut lines = text.lines().enumerate();

    let (_, meta) = lines
        .next()
        .ok_or_else(|| Error::parse(ctx(1), "empty path file"))?;
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(ctx(1), "missing metadata comment"))?;
    let mut fields = std::collections::HashMap::new();
    for kv in meta.trim().split(',') {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse(ctx(1), format!("bad field {kv:?}")))?;
        fields.insert(k.trim(), v.trim());
    }
    let field = |name: &str| {
        fields
            .get(name)
            .copied()
            .ok_or_else(|| Error::parse(ctx(1), format!("missing {name}")))
    };
    let index = |name: &str| {
        field(name)?
            .parse::<usize>()
            .map_err(|e| Error::parse(ctx(1), format!("{name}: {e}")))
    };
    let real = |name: &str| {
        field(name)?
            .parse::<f64>()
            .map_err(|e| Error::parse(ctx(1), format!("{name}: {e}")))
    };
    let tuple = Tuple::new(index("vehicle")?, index("demand")?, index("path")?);
    let (lambda, planned_cost) = (real("lambda")?, real("planned_cost")?);

    match lines.next() {
        Some((_, h)) if h.trim() == "row,col" => {}
        _ => return Err(Error::parse(ctx(2), "expected header row,col")),
    }
    let mut pixels = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (r, c) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(ctx(n + 1), format!("bad pixel {line:?}")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::parse(ctx(n + 1), e))
        };
        pixels.push(Pixel::new(parse(r)?, parse(c)?));
    }
    Ok(PathRecord {
        tuple,
        path: GridPath::new(pixels, planned_cost, lambda)?,
    })
}

const CLASS_COLORS: [&str; 8] = [
    "#b0b0b0", "#8fd16a", "#2e7d32", "#8d6e63", "#1e88e5", "#fdd835", "#e53935", "#6a1b9a",
];
const PATH_COLORS: [&str; 4] = ["#1565c0", "#a0522d", "#c2185b", "#00897b"];
const CELL: usize = 8;

/// Renders class colours shaded by uncertainty, every candidate path
/// coloured by its λ index, and the `assigned` tuples drawn heavier.
pub fn render_svg(
    labels: &LabelMap,
    variance: &VarianceMap,
    candidates: &CandidateSet,
    assigned: &[Tuple],
) -> String {
    let (w, h) = (labels.width(), labels.height());
    let max_var = variance
        .values()
        .iter()
        .copied()
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        w * CELL,
        h * CELL,
        w * CELL,
        h * CELL
    );
    for row in 0..h {
        for col in 0..w {
            let p = Pixel::new(row, col);
            let (x, y) = (col * CELL, row * CELL);
            writeln!(
                svg,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\"/>",
                CLASS_COLORS[labels.get(p) % CLASS_COLORS.len()]
            )
            .unwrap();
            let shade = variance.get(p) / max_var * 0.6;
            if shade > 0.01 {
                writeln!(
                    svg,
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"#000\" fill-opacity=\"{shade:.3}\"/>"
                )
                .unwrap();
            }
        }
    }
    let centre = |p: Pixel| (p.col * CELL + CELL / 2, p.row * CELL + CELL / 2);
    for (t, path) in candidates.iter() {
        let points: Vec<String> = path
            .pixels()
            .iter()
            .map(|&p| {
                let (x, y) = centre(p);
                format!("{x},{y}")
            })
            .collect();
        let width = if assigned.contains(&t) { 4 } else { 1 };
        writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{width}\"><title>{t} lambda={}</title></polyline>",
            points.join(" "),
            PATH_COLORS[t.path % PATH_COLORS.len()],
            path.lambda()
        )
        .unwrap();
    }
    for (n, &v) in candidates.vehicles().iter().enumerate() {
        let (x, y) = centre(v);
        writeln!(
            svg,
            "<circle cx=\"{x}\" cy=\"{y}\" r=\"{}\" fill=\"#ffffff\" stroke=\"#000\"><title>vehicle {n}</title></circle>",
            CELL
        )
        .unwrap();
    }
    for (n, &d) in candidates.demands().iter().enumerate() {
        let (x, y) = centre(d);
        writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#e53935\" stroke=\"#000\"><title>demand {n}</title></rect>",
            x - CELL,
            y - CELL,
            2 * CELL,
            2 * CELL
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}
