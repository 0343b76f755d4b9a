//! VTK and CSV writers.

use std::io::{BufRead, Write};

use crate::mesh::{Axis1D, RectilinearGrid};
use crate::model::Model;
use crate::{Error, Result};

/// Legacy ASCII VTK rectilinear grid with nodal scalar fields.
pub fn write_vtk<W: Write>(mut w: W, grid: &RectilinearGrid<f64>, fields: &[(&str, &[f64])]) -> Result<()> {
    let n = grid.num_nodes();
    for (name, v) in fields {
        if v.len() != n {
            return Err(Error::Dimension(format!("field {name} has {} values for {n} nodes", v.len())));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::Invalid(format!("field name {name:?} must be a single word")));
        }
    }
    let [nx, ny, nz] = grid.dims();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "thinwire")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET RECTILINEAR_GRID")?;
    writeln!(w, "DIMENSIONS {nx} {ny} {nz}")?;
    for (label, a) in ["X", "Y", "Z"].iter().zip(grid.axes()) {
        writeln!(w, "{label}_COORDINATES {} double", a.len())?;
        write_values(&mut w, a.coords())?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    for (name, v) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        write_values(&mut w, v)?;
    }
    Ok(())
}

fn write_values<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    for chunk in v.chunks(6) {
        let line: Vec<String> = chunk.iter().map(|x| format!("{x:e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VtkData {
    pub axes: [Vec<f64>; 3],
    pub fields: Vec<(String, Vec<f64>)>,
}

impl VtkData {
    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields.iter().find(|f| f.0 == name).map(|f| f.1.as_slice())
    }

    pub fn grid(&self) -> Result<RectilinearGrid<f64>> {
        let axis = |c: &Vec<f64>| if c.len() == 1 { Ok(Axis1D::degenerate(c[0])) } else { Axis1D::new(c.clone()) };
        Ok(RectilinearGrid::new([axis(&self.axes[0])?, axis(&self.axes[1])?, axis(&self.axes[2])?]))
    }
}

/// Reads files produced by [`write_vtk`].
pub fn read_vtk<R: BufRead>(r: R) -> Result<VtkData> {
    let bad = |m: &str| Error::Invalid(format!("malformed VTK file: {m}"));
    let mut tokens = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i < 3 {
            continue;
        }
        tokens.extend(line.split_whitespace().map(str::to_string));
    }
    let mut it = tokens.into_iter();
    let mut next = |what: &str| it.next().ok_or_else(|| bad(&format!("missing {what}")));
    let num = |s: String| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
    let count = |s: String| s.parse::<usize>().map_err(|_| bad(&format!("bad count {s:?}")));
    if next("DATASET")? != "DATASET" || next("type")? != "RECTILINEAR_GRID" {
        return Err(bad("expected DATASET RECTILINEAR_GRID"));
    }
    if next("DIMENSIONS")? != "DIMENSIONS" {
        return Err(bad("expected DIMENSIONS"));
    }
    let dims = [count(next("nx")?)?, count(next("ny")?)?, count(next("nz")?)?];
    let mut axes: [Vec<f64>; 3] = Default::default();
    for a in 0..3 {
        let _label = next("coordinates")?;
        let len = count(next("coordinate count")?)?;
        let _ty = next("type")?;
        if len != dims[a] {
            return Err(bad("coordinate count does not match DIMENSIONS"));
        }
        axes[a] = (0..len).map(|_| next("coordinate").and_then(num)).collect::<Result<_>>()?;
    }
    let mut fields = Vec::new();
    match next("POINT_DATA") {
        Ok(t) if t == "POINT_DATA" => {
            let n = count(next("point count")?)?;
            if n != dims.iter().product::<usize>() {
                return Err(bad("POINT_DATA count does not match the grid"));
            }
            while let Ok(t) = next("SCALARS") {
                if t != "SCALARS" {
                    return Err(bad(&format!("unexpected token {t:?}")));
                }
                let name = next("field name")?;
                let _ty = next("type")?;
                let _nc = next("components")?;
                let _lt = next("LOOKUP_TABLE")?;
                let _table = next("table name")?;
                let v = (0..n).map(|_| next("value").and_then(num)).collect::<Result<_>>()?;
                fields.push((name, v));
            }
        }
        Ok(t) => return Err(bad(&format!("unexpected token {t:?}"))),
        Err(_) => {}
    }
    Ok(VtkData { axes, fields })
}

/// Per-wire node table: `wire,s,arclen,phi_bar,T_bar`.
pub fn write_wire_csv<W: Write>(w: W, model: &Model<f64>, phi_bar: &[Vec<f64>], t_bar: Option<&[Vec<f64>]>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["wire", "s", "arclen", "phi_bar", "T_bar"]).map_err(csv_err)?;
    for (i, wire) in model.wires.iter().enumerate() {
        let arc = wire.grid1d.cumulative_arclen();
        for (j, &s) in wire.grid1d.s_nodes.iter().enumerate() {
            let t = t_bar.map_or(String::new(), |t| format!("{:e}", t[i][j]));
            out.write_record([i.to_string(), format!("{s:e}"), format!("{:e}", arc[j]), format!("{:e}", phi_bar[i][j]), t])
                .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}
