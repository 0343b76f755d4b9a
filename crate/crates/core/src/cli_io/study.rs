//! Refinement studies over a sequence of levels.

use std::io::Write;

use super::config::{ExperimentConfig, PresetKind, StudyParameter};
use super::output::csv_err;
use super::presets::{with_solver_kind, BentWireModel, LevelResult};
use crate::analysis::{error_big_delta, fit_order, transfer_nodal, transfer_wire, NormKind};
use crate::solver::{run_transient, solve_electric, ElectricSolution, TransientConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub level: usize,
    pub h: f64,
    pub h_bar: f64,
    pub measure: String,
    pub value: f64,
    /// Order against the previous level; absent on the first level.
    pub local_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub preset: PresetKind,
    pub parameter: StudyParameter,
    pub rows: Vec<StudyRow>,
    /// Least-squares order per measure over all levels.
    pub fits: Vec<(String, f64)>,
}

impl StudyReport {
    pub fn fit(&self, measure: &str) -> Option<f64> {
        self.fits.iter().find(|f| f.0 == measure).map(|f| f.1)
    }

    pub fn values(&self, measure: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.measure == measure).map(|r| r.value).collect()
    }
}

/// Self-convergence measures of a bent-wire level against a finer reference.
pub fn bent_delta(
    coarse: &BentWireModel,
    sol: &ElectricSolution<f64>,
    reference: &BentWireModel,
    ref_sol: &ElectricSolution<f64>,
) -> Result<LevelResult> {
    let w = &coarse.weights;
    let s_c = &coarse.model.wires[0].grid1d.s_nodes;
    let s_f = &reference.model.wires[0].grid1d.s_nodes;
    let ref_bar = transfer_wire(s_f, &ref_sol.phi_bar[0], s_c)?;
    let ref_3d = transfer_nodal(&reference.model.grid, &ref_sol.phi, &coarse.model.grid)?;
    let pb = &sol.phi_bar[0];
    Ok(LevelResult {
        h: coarse.h,
        h_bar: coarse.h_bar,
        measures: vec![
            ("Delta_L2_1D".into(), error_big_delta(w, NormKind::L2Wire, pb, &ref_bar)?),
            ("Delta_H1_1D".into(), error_big_delta(w, NormKind::H1SemiWire, pb, &ref_bar)?),
            ("Delta_L2_3D".into(), error_big_delta(w, NormKind::L2Volume, &sol.phi, &ref_3d)?),
        ],
    })
}

/// Solves every level and returns its measures.
pub fn level_results(
    cfg: &ExperimentConfig,
    levels: &[usize],
    mut progress: impl FnMut(String),
) -> Result<Vec<(usize, LevelResult)>> {
    let solver = cfg.solver.unwrap_or_default();
    let param = cfg.study_parameter();
    let mut out = Vec::with_capacity(levels.len());
    match cfg.preset {
        PresetKind::Resistor0d2d => {
            let base = cfg.resistor_0d2d.ok_or_else(|| missing("resistor_0d2d"))?;
            for &l in levels {
                let mut s = base;
                s.grid = s.grid.with_level(l);
                let mut m = s.build()?;
                m.model = with_solver_kind(m.model, solver);
                let (_, r) = m.solve()?;
                progress(format!("level {l}: h = {:.4e}, nodes = {}", r.h, m.model.num_nodes()));
                out.push((l, r));
            }
        }
        PresetKind::StraightWire => {
            let base = cfg.straight_wire.ok_or_else(|| missing("straight_wire"))?;
            for &l in levels {
                let mut s = base;
                match param {
                    StudyParameter::N1d => s.n1d = l,
                    _ => s.grid = s.grid.with_level(l),
                }
                let mut m = s.build()?;
                m.model = with_solver_kind(m.model, solver);
                let (_, r) = m.solve()?;
                progress(format!("level {l}: h = {:.4e}, h_bar = {:.4e}, nodes = {}", r.h, r.h_bar, m.model.num_nodes()));
                out.push((l, r));
            }
        }
        PresetKind::BentWire => {
            let base = cfg.bent_wire.ok_or_else(|| missing("bent_wire"))?;
            let reference = cfg.study.as_ref().and_then(|s| s.reference).ok_or_else(|| missing("study.reference"))?;
            let mut rs = base;
            rs.n1d = reference;
            let mut rm = rs.build()?;
            rm.model = with_solver_kind(rm.model, solver);
            let rsol = solve_electric(&rm.model)?;
            progress(format!("reference {reference}: h = {:.4e}, nodes = {}", rm.h, rm.model.num_nodes()));
            for &l in levels {
                let mut s = base;
                s.n1d = l;
                let mut m = s.build()?;
                m.model = with_solver_kind(m.model, solver);
                let sol = solve_electric(&m.model)?;
                let r = bent_delta(&m, &sol, &rm, &rsol)?;
                progress(format!("level {l}: h = {:.4e}, h_bar = {:.4e}, nodes = {}", r.h, r.h_bar, m.model.num_nodes()));
                out.push((l, r));
            }
        }
        PresetKind::ChipPackage => {
            let c = cfg.chip_package.ok_or_else(|| missing("chip_package"))?;
            let mut m = c.build()?;
            m.model = with_solver_kind(m.model, solver);
            let mut finals = Vec::with_capacity(levels.len());
            for &l in levels {
                let tc = TransientConfig::new(l, c.t0)?;
                let states = run_transient(&m.model, &tc, None, |_, _| {})?;
                let last = states.into_iter().last().expect("at least one step");
                progress(format!("N_t = {l}: dt = {:.4e}", tc.dt()));
                finals.push((l, tc.dt(), last.temperature));
            }
            let finest = &finals.last().ok_or_else(|| Error::Invalid("study needs levels".into()))?.2;
            let hot = argmax(finest);
            for (l, dt, t) in finals {
                let t_max = t.iter().cloned().fold(f64::MIN, f64::max);
                out.push((l, LevelResult { h: dt, h_bar: 0.0, measures: vec![("T_hot".into(), t[hot]), ("T_max".into(), t_max)] }));
            }
        }
        PresetKind::Custom => return Err(Error::Invalid("custom setups have no refinement study".into())),
    }
    Ok(out)
}

fn missing(what: &str) -> Error {
    Error::ConfigInvalid(vec![format!("missing [{what}]")])
}

pub fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold((0, f64::MIN), |b, (i, &x)| if x > b.1 { (i, x) } else { b }).0
}

/// Assembles rows, local orders and fits. The step size is `h̄` for wire
/// refinement and `h` otherwise.
pub fn build_report(preset: PresetKind, parameter: StudyParameter, results: &[(usize, LevelResult)]) -> StudyReport {
    let step = |r: &LevelResult| if parameter == StudyParameter::N1d { r.h_bar } else { r.h };
    let mut names: Vec<String> = Vec::new();
    for (_, r) in results {
        for (n, _) in &r.measures {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for name in &names {
        let mut pts = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for (level, r) in results {
            let Some(v) = r.measure(name) else { continue };
            let x = step(r);
            let local_order = prev.and_then(|(px, pv)| {
                let o = (v / pv).ln() / (x / px).ln();
                o.is_finite().then_some(o)
            });
            rows.push(StudyRow { level: *level, h: r.h, h_bar: r.h_bar, measure: name.clone(), value: v, local_order });
            prev = Some((x, v));
            pts.push((x, v));
        }
        if let Ok(f) = fit_order(&pts) {
            fits.push((name.clone(), f.slope));
        }
    }
    StudyReport { preset, parameter, rows, fits }
}

pub fn run_study(cfg: &ExperimentConfig, levels: &[usize], progress: impl FnMut(String)) -> Result<StudyReport> {
    let results = level_results(cfg, levels, progress)?;
    Ok(build_report(cfg.preset, cfg.study_parameter(), &results))
}

/// `level,h,h_bar,measure,value,local_order`.
pub fn write_study_csv<W: Write>(w: W, report: &StudyReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["level", "h", "h_bar", "measure", "value", "local_order"]).map_err(csv_err)?;
    for r in &report.rows {
        out.write_record([
            r.level.to_string(),
            format!("{:e}", r.h),
            format!("{:e}", r.h_bar),
            r.measure.clone(),
            format!("{:e}", r.value),
            r.local_order.map_or(String::new(), |o| format!("{o:e}")),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lr(h: f64, v: f64) -> LevelResult {
        LevelResult { h, h_bar: h / 2.0, measures: vec![("e".into(), v)] }
    }

    #[test]
    fn report_orders_of_exact_power() {
        let res: Vec<_> = [0.4, 0.2, 0.1, 0.05].iter().enumerate().map(|(i, &h)| (i + 1, lr(h, 3.0 * h * h))).collect();
        let rep = build_report(PresetKind::StraightWire, StudyParameter::Grid, &res);
        assert_eq!(rep.rows.len(), 4);
        assert!(rep.rows[0].local_order.is_none());
        for r in &rep.rows[1..] {
            assert!((r.local_order.unwrap() - 2.0).abs() < 1e-12);
        }
        assert!((rep.fit("e").unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let res = vec![(1, lr(0.5, 0.1)), (2, lr(0.25, 0.05))];
        let rep = build_report(PresetKind::StraightWire, StudyParameter::Grid, &res);
        let mut buf = Vec::new();
        write_study_csv(&mut buf, &rep).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "level,h,h_bar,measure,value,local_order");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with(','));
        assert!(lines[2].starts_with("2,2.5e-1,1.25e-1,e,5e-2,"));
    }

    #[test]
    fn argmax_picks_first_maximum() {
        assert_eq!(argmax(&[1.0, 3.0, 2.0, 3.0]), 1);
    }
}
