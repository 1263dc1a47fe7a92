//! Field and series output: legacy-VTK and CSV cell fields, per-segment
//! coolant profiles, convergence history and the run report.
//!
//! All numbers are written with a fixed exponent format so that two runs of
//! the same scenario produce identical files.

use crate::coupling::{energy_bookkeeping, CoupledModel, CoupledState, EnergyBookkeeping, OuterRecord};
use crate::error::{Error, Result};
use crate::mesh::{CellField, StructuredGrid2D};
use crate::pipenet::{FluidState, PipeNetwork};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

/// Cell fields on the grid as a legacy ASCII `RECTILINEAR_GRID`.
pub fn vtk_cell_fields(grid: &StructuredGrid2D, title: &str, fields: &[(&str, &CellField)]) -> Result<String> {
    check_lengths(grid, fields)?;
    let mut s = String::new();
    let xs = grid.x_lines();
    let ys = grid.y_lines();
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "{}", title.replace('\n', " ")).unwrap();
    writeln!(s, "ASCII").unwrap();
    writeln!(s, "DATASET RECTILINEAR_GRID").unwrap();
    writeln!(s, "DIMENSIONS {} {} 1", xs.len(), ys.len()).unwrap();
    for (name, lines) in [("X", xs), ("Y", ys)] {
        writeln!(s, "{name}_COORDINATES {} double", lines.len()).unwrap();
        let row: Vec<String> = lines.iter().map(|v| num(*v)).collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
    writeln!(s, "Z_COORDINATES 1 double").unwrap();
    writeln!(s, "{}", num(0.0)).unwrap();
    writeln!(s, "CELL_DATA {}", grid.num_elements()).unwrap();
    for (name, field) in fields {
        writeln!(s, "SCALARS {name} double 1").unwrap();
        writeln!(s, "LOOKUP_TABLE default").unwrap();
        for v in field.values() {
            writeln!(s, "{}", num(*v)).unwrap();
        }
    }
    Ok(s)
}

/// One row per cell: `i, j, x, y` and the fields.
pub fn csv_cell_fields(grid: &StructuredGrid2D, fields: &[(&str, &CellField)]) -> Result<String> {
    check_lengths(grid, fields)?;
    let mut s = String::from("i,j,x,y");
    for (name, _) in fields {
        write!(s, ",{name}").unwrap();
    }
    s.push('\n');
    for k in 0..grid.num_elements() {
        let (i, j) = grid.ij(k);
        let c = grid.center(k);
        write!(s, "{i},{j},{},{}", num(c[0]), num(c[1])).unwrap();
        for (_, f) in fields {
            write!(s, ",{}", num(f[k])).unwrap();
        }
        s.push('\n');
    }
    Ok(s)
}

fn check_lengths(grid: &StructuredGrid2D, fields: &[(&str, &CellField)]) -> Result<()> {
    for (name, f) in fields {
        if f.len() != grid.num_elements() {
            return Err(Error::Config(format!(
                "field {name} has {} values, grid has {} cells",
                f.len(),
                grid.num_elements()
            )));
        }
    }
    Ok(())
}

/// Coolant state at one element, located by its segment and arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub segment: usize,
    pub element: usize,
    /// Distance of the element midpoint from the segment's `from` vertex.
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub mass_flux: f64,
    pub quality: f64,
    pub temperature: f64,
    pub pressure: f64,
}

pub fn channel_profiles(net: &PipeNetwork, fluid: &FluidState) -> Vec<ProfilePoint> {
    let mut out = Vec::with_capacity(net.num_elements());
    for (si, seg) in net.segments().iter().enumerate() {
        let start = net.node_position(seg.from);
        for k in seg.elements.clone() {
            let m = net.elements()[k].midpoint;
            out.push(ProfilePoint {
                segment: si,
                element: k,
                s: (m[0] - start[0]).hypot(m[1] - start[1]),
                x: m[0],
                y: m[1],
                mass_flux: fluid.mass_flux[k],
                quality: fluid.quality[k],
                temperature: fluid.temperature[k],
                pressure: fluid.pressure[k],
            });
        }
    }
    out
}

pub fn csv_profiles(points: &[ProfilePoint]) -> String {
    let mut s = String::from("segment,element,s,x,y,G,quality,T_c,p\n");
    for p in points {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            p.segment,
            p.element,
            num(p.s),
            num(p.x),
            num(p.y),
            num(p.mass_flux),
            num(p.quality),
            num(p.temperature),
            num(p.pressure)
        )
        .unwrap();
    }
    s
}

pub fn csv_history(history: &[OuterRecord]) -> String {
    let mut s = String::from("iteration,d_air,d_wall,d_coolant,residual,inner_2d,inner_1d,clamped\n");
    for r in history {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.iteration,
            num(r.d_air),
            num(r.d_wall),
            num(r.d_coolant),
            num(r.residual),
            r.inner_2d,
            r.inner_1d,
            r.clamped
        )
        .unwrap();
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub converged: bool,
    pub outer_iterations: usize,
    /// Area-weighted mean of `T_w` (K).
    pub mean_panel_temperature: f64,
    pub min_panel_temperature: f64,
    pub max_panel_temperature: f64,
    pub max_air_temperature: f64,
    pub min_quality: f64,
    pub clamped_elements: usize,
    pub network_elements: usize,
    pub energy: EnergyBookkeeping,
    pub wall_clock_seconds: f64,
    pub history: Vec<OuterRecord>,
}

impl RunReport {
    pub fn new(model: &CoupledModel, state: &CoupledState, elapsed: Duration) -> Result<Self> {
        Ok(Self {
            scenario: model.config.name.clone(),
            converged: state.converged,
            outer_iterations: state.outer_iterations(),
            mean_panel_temperature: state.t_w.mean(&model.grid),
            min_panel_temperature: state.t_w.min(),
            max_panel_temperature: state.t_w.max(),
            max_air_temperature: state.t_a.max(),
            min_quality: state.fluid.quality.iter().copied().fold(f64::INFINITY, f64::min),
            clamped_elements: state.clamped(),
            network_elements: model.net.num_elements(),
            energy: energy_bookkeeping(model, state)?,
            wall_clock_seconds: elapsed.as_secs_f64(),
            history: state.history.clone(),
        })
    }

    pub fn to_text(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("cannot serialize report: {e}")))
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} after {} outer iterations, mean panel {:.3} K, heat {:.4} W, {} clamped",
            self.scenario,
            if self.converged { "converged" } else { "not converged" },
            self.outer_iterations,
            self.mean_panel_temperature,
            self.energy.network_release,
            self.clamped_elements
        )
    }
}

/// Writes `fields.vtk`, `fields.csv`, `profiles.csv`, `history.csv` and
/// `report.toml` into `dir`, returning the paths written.
pub fn write_run(dir: &Path, model: &CoupledModel, state: &CoupledState, report: &RunReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let fields = [("T_a", &state.t_a), ("T_w", &state.t_w), ("T_c", &state.t_c_cells)];
    let files = [
        ("fields.vtk", vtk_cell_fields(&model.grid, &model.config.name, &fields)?),
        ("fields.csv", csv_cell_fields(&model.grid, &fields)?),
        ("profiles.csv", csv_profiles(&channel_profiles(&model.net, &state.fluid))),
        ("history.csv", csv_history(&state.history)),
        ("report.toml", report.to_text()?),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vtk_layout() {
        let g = StructuredGrid2D::uniform(2, 3, 1.0, 1.5).unwrap();
        let f = CellField::from_fn(&g, |p| p[0] + p[1]);
        let s = vtk_cell_fields(&g, "t", &[("u", &f)]).unwrap();
        assert!(s.contains("DIMENSIONS 3 4 1"));
        assert!(s.contains("CELL_DATA 6"));
        let after = s.split("LOOKUP_TABLE default\n").nth(1).unwrap();
        assert_eq!(after.lines().count(), 6);
        let first: f64 = after.lines().next().unwrap().parse().unwrap();
        assert!((first - 0.5).abs() < 1e-12);
    }

    #[test]
    fn csv_rows_and_mismatch() {
        let g = StructuredGrid2D::uniform(2, 2, 1.0, 1.0).unwrap();
        let f = CellField::constant(4, 1.0);
        let s = csv_cell_fields(&g, &[("a", &f), ("b", &f)]).unwrap();
        assert_eq!(s.lines().count(), 5);
        assert!(s.starts_with("i,j,x,y,a,b\n"));
        let short = CellField::constant(3, 1.0);
        assert!(csv_cell_fields(&g, &[("a", &short)]).is_err());
    }
}
