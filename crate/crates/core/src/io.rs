//! Plain-text serialization: curves and patches as CSV, every float written
//! with 17 significant digits so files round-trip exactly.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::ambient::AmbientVector;
use crate::curves::{PlanarCurve, Point};
use crate::surface::{Grid, ScalarField, SurfacePatch};
use crate::{Error, Result};

pub const CURVE_HEADER: &str = "# planar-curve v1";
pub const PATCH_HEADER: &str = "# surface-patch v1";

/// Formats `x` with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        first = false;
        out.push_str(&fmt_f64(v));
    }
    out.push('\n');
}

/// Writes the components of a curve, separated by blank lines.
pub fn write_curves<'a>(components: impl IntoIterator<Item = &'a PlanarCurve>) -> String {
    let mut out = format!("{CURVE_HEADER}\nx,y\n");
    for (k, c) in components.into_iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for p in c.points() {
            push_row(&mut out, [p.re, p.im]);
        }
    }
    out
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("line {line}: `{s}` is not a number")))
}

fn expect_header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, header: &str) -> Result<Vec<String>> {
    match lines.next() {
        Some((_, l)) if l.trim_end() == header => {}
        _ => return Err(Error::Invalid(format!("missing `{header}` header"))),
    }
    let (_, cols) = lines
        .next()
        .ok_or_else(|| Error::Invalid("missing column line".into()))?;
    Ok(cols.trim_end().split(',').map(str::to_string).collect())
}

/// Reads the point lists of a planar-curve file; topology is not stored.
pub fn read_curves(text: &str) -> Result<Vec<Vec<Point>>> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let cols = expect_header(&mut lines, CURVE_HEADER)?;
    if cols != ["x", "y"] {
        return Err(Error::Invalid(format!("unexpected curve columns {cols:?}")));
    }
    let mut comps = vec![Vec::new()];
    for (n, line) in lines {
        if line.trim().is_empty() {
            if !comps.last().unwrap().is_empty() {
                comps.push(Vec::new());
            }
            continue;
        }
        let (x, y) = line
            .split_once(',')
            .ok_or_else(|| Error::Invalid(format!("line {n}: expected two columns")))?;
        comps
            .last_mut()
            .unwrap()
            .push(Complex64::new(parse_f64(x, n)?, parse_f64(y, n)?));
    }
    if comps.last().is_some_and(Vec::is_empty) {
        comps.pop();
    }
    Ok(comps)
}

/// Writes a patch node by node (`u` outer, `v` inner) with one extra column
/// per field.
pub fn write_patch(p: &SurfacePatch, fields: &[&ScalarField]) -> Result<String> {
    for f in fields {
        if f.values.len() != p.grid.len() {
            return Err(Error::Invalid(format!(
                "field `{}` has {} values for {} nodes",
                f.name,
                f.values.len(),
                p.grid.len()
            )));
        }
        if f.name.is_empty() || f.name.contains([',', '\n']) {
            return Err(Error::Invalid(format!("field name `{}` is not a valid column", f.name)));
        }
    }
    let mut out = format!("{PATCH_HEADER}\nu,v,x1,y1,x2,y2");
    for f in fields {
        let _ = write!(out, ",{}", f.name);
    }
    out.push('\n');
    let g = &p.grid;
    for i in 0..g.nu {
        for j in 0..g.nv {
            let k = g.idx(i, j);
            let x = p.positions[k];
            push_row(
                &mut out,
                [g.u(i), g.v(j), x.x1, x.y1, x.x2, x.y2]
                    .into_iter()
                    .chain(fields.iter().map(|f| f.values[k])),
            );
        }
    }
    Ok(out)
}

/// Reads a surface-patch file back into a patch and its field columns.
pub fn read_patch(text: &str) -> Result<(SurfacePatch, Vec<ScalarField>)> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let cols = expect_header(&mut lines, PATCH_HEADER)?;
    if cols.len() < 6 || cols[..6] != ["u", "v", "x1", "y1", "x2", "y2"] {
        return Err(Error::Invalid(format!("unexpected patch columns {cols:?}")));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let row = line.split(',').map(|s| parse_f64(s, n)).collect::<Result<Vec<_>>>()?;
        if row.len() != cols.len() {
            return Err(Error::Invalid(format!("line {n}: expected {} columns", cols.len())));
        }
        rows.push(row);
    }
    let nv = rows
        .iter()
        .take_while(|r| !rows.is_empty() && r[0] == rows[0][0])
        .count();
    if nv < 2 || !rows.len().is_multiple_of(nv) {
        return Err(Error::Invalid("patch rows do not form a grid".into()));
    }
    let nu = rows.len() / nv;
    if nu < 2 {
        return Err(Error::Invalid("patch rows do not form a grid".into()));
    }
    let grid = Grid::new(
        nu,
        nv,
        rows[0][0],
        rows[0][1],
        rows[nv][0] - rows[0][0],
        rows[1][1] - rows[0][1],
    )?;
    let positions = rows
        .iter()
        .map(|r| AmbientVector::new(r[2], r[3], r[4], r[5]))
        .collect();
    let fields = cols[6..]
        .iter()
        .enumerate()
        .map(|(c, name)| ScalarField::new(name.clone(), rows.iter().map(|r| r[6 + c]).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok((SurfacePatch::new(grid, positions, None)?, fields))
}

/// A generic numeric table with a comment header line.
pub fn write_table(header: &str, columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = format!("# {header}\n{}\n", columns.join(","));
    for r in rows {
        push_row(&mut out, r.iter().copied());
    }
    out
}
