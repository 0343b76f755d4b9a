//! Configuration, experiment presets, study driver and file output.

pub mod config;
pub mod output;
pub mod presets;
pub mod study;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub use config::{load_config, load_config_file, ExperimentConfig, PresetKind, StudyParameter};
pub use output::{read_vtk, write_vtk, write_wire_csv, VtkData};
pub use presets::{BentWire, ChipPackage, CustomSetup, GridSpec, LevelResult, RcplRule, Resistor0d2d, StraightWire};
pub use study::{run_study, write_study_csv, StudyReport, StudyRow};

use crate::model::Model;
use crate::solver::{run_transient, solve_electric, wire_joule_losses, TransientConfig};
use crate::{Error, Result};

/// Builds the model of a configuration (the finest study level is not
/// applied; the preset parameters are used as given).
pub fn build_model(cfg: &ExperimentConfig) -> Result<Model<f64>> {
    let missing = |w: &str| Error::ConfigInvalid(vec![format!("missing [{w}]")]);
    let model = match cfg.preset {
        PresetKind::Resistor0d2d => cfg.resistor_0d2d.ok_or_else(|| missing("resistor_0d2d"))?.build()?.model,
        PresetKind::StraightWire => cfg.straight_wire.ok_or_else(|| missing("straight_wire"))?.build()?.model,
        PresetKind::BentWire => cfg.bent_wire.ok_or_else(|| missing("bent_wire"))?.build()?.model,
        PresetKind::ChipPackage => cfg.chip_package.ok_or_else(|| missing("chip_package"))?.build()?.model,
        PresetKind::Custom => cfg.custom.as_ref().ok_or_else(|| missing("custom"))?.build()?,
    };
    Ok(presets::with_solver_kind(model, cfg.solver.unwrap_or_default()))
}

fn transient_of(cfg: &ExperimentConfig) -> Option<(usize, f64)> {
    match cfg.preset {
        PresetKind::ChipPackage => cfg.chip_package.map(|c| (c.n_t, c.t0)),
        PresetKind::Custom => cfg.transient.map(|t| (t.n_t, t.t0)),
        _ => None,
    }
}

/// Grid and wire summary.
pub fn describe(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let m = build_model(cfg)?;
    let [nx, ny, nz] = m.grid.dims();
    let mut out = vec![
        format!("preset: {}", cfg.preset.name()),
        format!("grid: {nx} x {ny} x {nz} = {} nodes, {} edges", m.num_nodes(), m.grid.num_edges()),
        format!("mean edge length h: {:.6e}", m.grid.mean_edge_length()),
        format!("wires: {}", m.wires.len()),
    ];
    for (i, w) in m.wires.iter().enumerate() {
        out.push(format!(
            "  wire {i}: {} nodes, length {:.6e}, r_cpl {:.6e}, gamma {:.6}",
            w.grid1d.num_nodes(),
            w.grid1d.total_length(),
            w.coupling.r_cpl,
            w.coupling.gamma
        ));
    }
    if let Some((n, t0)) = transient_of(cfg) {
        out.push(format!("transient: {n} steps to t0 = {t0:e} s"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let p = dir.join(name);
    let f = File::create(&p)?;
    files.push(p);
    Ok(BufWriter::new(f))
}

/// Solves the configured problem and writes its fields to `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path, mut progress: impl FnMut(String)) -> Result<RunSummary> {
    std::fs::create_dir_all(out)?;
    let model = build_model(cfg)?;
    let opts = cfg.output.unwrap_or_default();
    let mut s = RunSummary::default();
    s.lines.push(format!("nodes: {}, wires: {}", model.num_nodes(), model.wires.len()));
    match transient_of(cfg) {
        None => {
            let sol = solve_electric(&model)?;
            s.lines.push(format!("electric solve: relative residual {:.3e}", sol.residual));
            for (i, pb) in sol.phi_bar.iter().enumerate() {
                let (lo, hi) = pb.iter().fold((f64::MAX, f64::MIN), |a, &v| (a.0.min(v), a.1.max(v)));
                s.lines.push(format!("wire {i}: phi_bar in [{lo:.6e}, {hi:.6e}]"));
            }
            if opts.vtk {
                write_vtk(create(out, "field.vtk", &mut s.files)?, &model.grid, &[("phi", &sol.phi)])?;
            }
            if opts.wire_csv && !model.wires.is_empty() {
                write_wire_csv(create(out, "wires.csv", &mut s.files)?, &model, &sol.phi_bar, None)?;
            }
        }
        Some((n_t, t0)) => {
            let tc = TransientConfig::new(n_t, t0)?;
            let mut history = csv::Writer::from_writer(create(out, "history.csv", &mut s.files)?);
            history.write_record(["step", "time", "T_max", "T_bar_max", "P_wires"]).map_err(output::csv_err)?;
            let mut failure: Option<Error> = None;
            let mut files = Vec::new();
            run_transient(&model, &tc, None, |n, st| {
                if failure.is_some() {
                    return;
                }
                let res = (|| -> Result<()> {
                    let t_max = st.temperature.iter().cloned().fold(f64::MIN, f64::max);
                    let tb_max = st.t_bar.iter().flatten().cloned().fold(f64::MIN, f64::max);
                    let p: f64 = wire_joule_losses(&model, &st.phi_bar).iter().sum();
                    history
                        .write_record([n.to_string(), format!("{:e}", st.time), format!("{t_max:e}"), format!("{tb_max:e}"), format!("{p:e}")])
                        .map_err(output::csv_err)?;
                    if opts.vtk {
                        let w = create(out, &format!("step_{n:04}.vtk"), &mut files)?;
                        write_vtk(w, &model.grid, &[("phi", &st.phi), ("T", &st.temperature)])?;
                    }
                    if opts.wire_csv && !model.wires.is_empty() {
                        let w = create(out, &format!("wires_{n:04}.csv"), &mut files)?;
                        write_wire_csv(w, &model, &st.phi_bar, Some(&st.t_bar))?;
                    }
                    progress(format!("step {n}/{n_t}: t = {:.4e} s, T_max = {t_max:.6} K, P = {p:.4e} W", st.time));
                    Ok(())
                })();
                failure = res.err();
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            history.flush()?;
            s.files.extend(files);
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn custom_default_runs_and_writes_files() {
        let cfg = ExperimentConfig::preset(PresetKind::Custom);
        let dir = tempfile::tempdir().unwrap();
        let s = run(&cfg, dir.path(), |_| {}).unwrap();
        assert_eq!(s.files.len(), 2);
        let data = read_vtk(std::io::BufReader::new(File::open(dir.path().join("field.vtk")).unwrap())).unwrap();
        let phi = data.field("phi").unwrap();
        assert!(phi.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        let wires = std::fs::read_to_string(dir.path().join("wires.csv")).unwrap();
        assert_eq!(wires.lines().next().unwrap(), "wire,s,arclen,phi_bar,T_bar");
        assert_eq!(wires.lines().count(), 1 + 9);
    }

    #[test]
    fn custom_transient_writes_history() {
        let mut cfg = ExperimentConfig::preset(PresetKind::Custom);
        cfg.transient = Some(config::TransientSpec { n_t: 2, t0: 0.1 });
        cfg.output = Some(config::OutputConfig { vtk: false, wire_csv: true });
        let dir = tempfile::tempdir().unwrap();
        run(&cfg, dir.path(), |_| {}).unwrap();
        let h = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
        assert_eq!(h.lines().count(), 3);
        assert!(dir.path().join("wires_0002.csv").exists());
    }

    #[test]
    fn describe_lists_wires() {
        let lines = describe(&ExperimentConfig::preset(PresetKind::Custom)).unwrap();
        assert!(lines.iter().any(|l| l.starts_with("  wire 0:")));
    }
}
