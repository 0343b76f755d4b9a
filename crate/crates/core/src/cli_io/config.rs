//! TOML experiment configuration.

use serde::{Deserialize, Serialize};

use super::presets::{BentWire, ChipPackage, CustomSetup, Resistor0d2d, StraightWire};
use crate::solver::SolverKind;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresetKind {
    #[serde(rename = "resistor_0d2d")]
    Resistor0d2d,
    #[serde(rename = "straight_wire")]
    StraightWire,
    #[serde(rename = "bent_wire")]
    BentWire,
    #[serde(rename = "chip_package")]
    ChipPackage,
    #[serde(rename = "custom")]
    Custom,
}

impl PresetKind {
    pub const ALL: [PresetKind; 5] =
        [PresetKind::Resistor0d2d, PresetKind::StraightWire, PresetKind::BentWire, PresetKind::ChipPackage, PresetKind::Custom];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::Resistor0d2d => "resistor_0d2d",
            PresetKind::StraightWire => "straight_wire",
            PresetKind::BentWire => "bent_wire",
            PresetKind::ChipPackage => "chip_package",
            PresetKind::Custom => "custom",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Quantity varied across the levels of a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyParameter {
    /// Transverse grid level `n` of the grid family.
    Grid,
    /// Number of wire nodes.
    N1d,
    /// Number of time steps.
    Nt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub parameter: Option<StudyParameter>,
    pub levels: Option<Vec<usize>>,
    /// Level of the reference solution for self-convergence measures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransientSpec {
    pub n_t: usize,
    pub t0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub vtk: bool,
    pub wire_csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { vtk: true, wire_csv: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: PresetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
    /// Time stepping for custom setups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient: Option<TransientSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resistor_0d2d: Option<Resistor0d2d>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub straight_wire: Option<StraightWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bent_wire: Option<BentWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chip_package: Option<ChipPackage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSetup>,
}

impl ExperimentConfig {
    /// Configuration of a preset with every default filled in.
    pub fn preset(kind: PresetKind) -> Self {
        let mut c = Self {
            preset: kind,
            solver: None,
            output: None,
            study: None,
            transient: None,
            resistor_0d2d: None,
            straight_wire: None,
            bent_wire: None,
            chip_package: None,
            custom: None,
        };
        if kind == PresetKind::Custom {
            c.custom = Some(default_custom());
        }
        c.fill_defaults();
        c
    }

    fn fill_defaults(&mut self) {
        self.solver.get_or_insert(SolverKind::Direct);
        self.output.get_or_insert_with(OutputConfig::default);
        match self.preset {
            PresetKind::Resistor0d2d => {
                self.resistor_0d2d.get_or_insert_with(Resistor0d2d::default);
            }
            PresetKind::StraightWire => {
                self.straight_wire.get_or_insert_with(StraightWire::default);
            }
            PresetKind::BentWire => {
                self.bent_wire.get_or_insert_with(BentWire::default);
            }
            PresetKind::ChipPackage => {
                self.chip_package.get_or_insert_with(ChipPackage::default);
            }
            PresetKind::Custom => {}
        }
        if self.preset == PresetKind::Custom {
            return;
        }
        let (param, levels, reference) = default_study(self.preset);
        let study = self.study.get_or_insert(StudyConfig { parameter: None, levels: None, reference: None });
        let param = *study.parameter.get_or_insert(param);
        if study.levels.is_none() {
            study.levels = Some(match (self.preset, param) {
                (PresetKind::StraightWire, StudyParameter::N1d) => vec![3, 5, 9, 17],
                _ => levels,
            });
        }
        if study.reference.is_none() && param == StudyParameter::N1d && self.preset == PresetKind::BentWire {
            study.reference = reference;
        }
    }

    /// Every problem found, not just the first.
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        let present = [
            (PresetKind::Resistor0d2d, self.resistor_0d2d.is_some()),
            (PresetKind::StraightWire, self.straight_wire.is_some()),
            (PresetKind::BentWire, self.bent_wire.is_some()),
            (PresetKind::ChipPackage, self.chip_package.is_some()),
            (PresetKind::Custom, self.custom.is_some()),
        ];
        for (kind, there) in present {
            if there && kind != self.preset {
                e.push(format!("section [{}] given but preset is \"{}\"", kind.name(), self.preset.name()));
            }
        }
        if let Some(SolverKind::Iterative { tol, max_iter }) = self.solver {
            if !(tol > 0.0 && tol < 1.0) {
                e.push(format!("solver: tol must lie in (0, 1), got {tol}"));
            }
            if max_iter == 0 {
                e.push("solver: max_iter must be positive".into());
            }
        }
        if let Some(r) = &self.resistor_0d2d {
            validate_resistor(r, &mut e);
        }
        if let Some(s) = &self.straight_wire {
            validate_straight(s, &mut e);
        }
        if let Some(b) = &self.bent_wire {
            validate_bent(b, &mut e);
        }
        if let Some(c) = &self.chip_package {
            validate_chip(c, &mut e);
        }
        match (&self.custom, self.preset) {
            (Some(c), _) => c.validate(&mut e),
            (None, PresetKind::Custom) => e.push("preset \"custom\" needs a [custom] section".into()),
            _ => {}
        }
        if let Some(t) = &self.transient {
            if t.n_t == 0 {
                e.push("transient: n_t must be at least 1".into());
            }
            if !(t.t0 > 0.0) {
                e.push(format!("transient: t0 must be positive, got {}", t.t0));
            }
        }
        if let Some(s) = &self.study {
            if self.preset == PresetKind::Custom {
                e.push("study: custom setups have no refinement study".into());
            }
            self.validate_study(s, &mut e);
        }
        e
    }

    fn validate_study(&self, s: &StudyConfig, e: &mut Vec<String>) {
        let param = s.parameter.unwrap_or(StudyParameter::Grid);
        let allowed: &[StudyParameter] = match self.preset {
            PresetKind::Resistor0d2d => &[StudyParameter::Grid],
            PresetKind::StraightWire => &[StudyParameter::Grid, StudyParameter::N1d],
            PresetKind::BentWire => &[StudyParameter::N1d],
            PresetKind::ChipPackage => &[StudyParameter::Nt],
            PresetKind::Custom => &[],
        };
        if !allowed.is_empty() && !allowed.contains(&param) {
            e.push(format!("study: parameter {param:?} is not available for preset \"{}\"", self.preset.name()));
        }
        if let Some(levels) = &s.levels {
            if levels.is_empty() {
                e.push("study: levels must not be empty".into());
            }
            if levels.windows(2).any(|w| w[1] <= w[0]) {
                e.push("study: levels must increase strictly".into());
            }
            let min = match param {
                StudyParameter::N1d => 2,
                _ => 1,
            };
            if levels.iter().any(|&l| l < min) {
                e.push(format!("study: levels must be at least {min}"));
            }
            if let (Some(r), Some(&last)) = (s.reference, levels.last()) {
                if r <= last {
                    e.push(format!("study: reference level {r} must exceed the finest level {last}"));
                }
            }
        }
        if self.preset == PresetKind::BentWire && s.reference.is_none() {
            e.push("study: bent_wire needs a reference level".into());
        }
    }

    pub fn levels(&self) -> Vec<usize> {
        self.study.as_ref().and_then(|s| s.levels.clone()).unwrap_or_default()
    }

    pub fn study_parameter(&self) -> StudyParameter {
        self.study.as_ref().and_then(|s| s.parameter).unwrap_or(StudyParameter::Grid)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Invalid(format!("cannot serialize configuration: {e}")))
    }
}

fn default_study(kind: PresetKind) -> (StudyParameter, Vec<usize>, Option<usize>) {
    match kind {
        PresetKind::Resistor0d2d => (StudyParameter::Grid, vec![16, 32, 64, 128, 256, 512], None),
        PresetKind::StraightWire => (StudyParameter::Grid, vec![5, 10, 20, 40], None),
        PresetKind::BentWire => (StudyParameter::N1d, vec![5, 9, 17, 33], Some(65)),
        PresetKind::ChipPackage => (StudyParameter::Nt, vec![10, 20, 40], None),
        PresetKind::Custom => unreachable!("custom setups have no study"),
    }
}

fn default_custom() -> CustomSetup {
    use super::presets::{CustomWire, Electrode, RcplRule};
    use crate::materials::Material;
    CustomSetup {
        lo: [0.0; 3],
        hi: [1.0; 3],
        intervals: [8, 8, 8],
        background: Material { sigma: 1.0, lambda: 1.0, rho: 1.0, c: 1.0 },
        regions: Vec::new(),
        electrodes: vec![
            Electrode { lo: [0.0, 0.0, 0.0], hi: [1.0, 1.0, 0.0], value: 0.0 },
            Electrode { lo: [0.0, 0.0, 1.0], hi: [1.0, 1.0, 1.0], value: 1.0 },
        ],
        wires: vec![CustomWire {
            start: [0.5, 0.5, 0.0],
            end: [0.5, 0.5, 1.0],
            height: 0.0,
            normal: [0.0, 0.0, 1.0],
            n1d: 9,
            r_bar: 1e-3,
            r0: 0.5,
            r_cpl: RcplRule::MaxTransverseEdge { factor: 1.0 },
            material: Material { sigma: 1e6, lambda: 1.0, rho: 1.0, c: 1.0 },
        }],
        h_conv: 0.0,
        t_inf: 300.0,
        t_init: 300.0,
        n_theta: 8,
    }
}

fn positive(e: &mut Vec<String>, what: &str, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        e.push(format!("{what}: {name} must be positive and finite, got {v}"));
    }
}

fn radii(e: &mut Vec<String>, what: &str, r_bar: f64, r0: f64) {
    if !(r_bar > 0.0 && r0 > r_bar) {
        e.push(format!("{what}: need 0 < r_bar < r0, got r_bar = {r_bar}, r0 = {r0}"));
    }
}

fn validate_resistor(r: &Resistor0d2d, e: &mut Vec<String>) {
    let w = "resistor_0d2d";
    positive(e, w, "d", r.d);
    positive(e, w, "sigma", r.sigma);
    positive(e, w, "r0_prime", r.r0_prime);
    radii(e, w, r.r_bar, r.r0());
    r.grid.validate(e);
    r.r_cpl.validate(w, e);
    if r.n_theta == 0 {
        e.push(format!("{w}: n_theta must be positive"));
    }
}

fn validate_straight(s: &StraightWire, e: &mut Vec<String>) {
    let w = "straight_wire";
    positive(e, w, "d", s.d);
    positive(e, w, "sigma", s.sigma);
    positive(e, w, "sigma_bar_factor", s.sigma_bar_factor);
    radii(e, w, s.r_bar, s.r0());
    s.grid.validate(e);
    s.r_cpl.validate(w, e);
    if s.n1d < 2 {
        e.push(format!("{w}: n1d must be at least 2, got {}", s.n1d));
    }
    if s.z_intervals == Some(0) {
        e.push(format!("{w}: z_intervals must be positive"));
    }
    if s.n_theta == 0 {
        e.push(format!("{w}: n_theta must be positive"));
    }
}

fn validate_bent(b: &BentWire, e: &mut Vec<String>) {
    let w = "bent_wire";
    positive(e, w, "d", b.d);
    positive(e, w, "sigma", b.sigma);
    positive(e, w, "sigma_bar_factor", b.sigma_bar_factor);
    positive(e, w, "pec_side", b.pec_side);
    radii(e, w, b.r_bar, b.r0());
    b.r_cpl.validate(w, e);
    if b.n1d < 2 {
        e.push(format!("{w}: n1d must be at least 2, got {}", b.n1d));
    }
    if !(b.height >= 0.0) {
        e.push(format!("{w}: height must be nonnegative, got {}", b.height));
    }
    for (name, p) in [("start", b.start), ("end", b.end)] {
        if p.iter().any(|&c| !(0.0..=b.d).contains(&c)) {
            e.push(format!("{w}: {name} {p:?} lies outside the domain"));
        }
    }
    if b.normal.iter().all(|&c| c == 0.0) {
        e.push(format!("{w}: normal must be nonzero"));
    }
    if b.n_theta == 0 {
        e.push(format!("{w}: n_theta must be positive"));
    }
}

fn validate_chip(c: &ChipPackage, e: &mut Vec<String>) {
    let w = "chip_package";
    for (i, s) in c.size.iter().enumerate() {
        positive(e, w, &format!("size[{i}]"), *s);
    }
    for (name, v) in [
        ("chip_side", c.chip_side),
        ("chip_height", c.chip_height),
        ("pad_length", c.pad_length),
        ("pad_width", c.pad_width),
        ("wire_inset", c.wire_inset),
        ("wire_height", c.wire_height),
        ("t0", c.t0),
        ("target_h", c.target_h),
    ] {
        positive(e, w, name, v);
    }
    if c.chip_side >= c.size[0].min(c.size[1]) {
        e.push(format!("{w}: chip_side must be smaller than the package"));
    }
    if !(c.pad_bottom >= 0.0 && c.pad_bottom < c.chip_height) {
        e.push(format!("{w}: pad_bottom must lie in [0, chip_height)"));
    }
    if c.chip_height >= c.size[2] {
        e.push(format!("{w}: chip_height must be below the package height"));
    }
    radii(e, w, c.r_bar, c.r0());
    c.r_cpl.validate(w, e);
    if c.n1d < 2 {
        e.push(format!("{w}: n1d must be at least 2, got {}", c.n1d));
    }
    if c.n_t == 0 {
        e.push(format!("{w}: n_t must be at least 1"));
    }
    if !(c.h_conv >= 0.0) {
        e.push(format!("{w}: h_conv must be nonnegative, got {}", c.h_conv));
    }
    c.insulator.validate(&format!("{w}.insulator"), e);
    c.conductor.validate(&format!("{w}.conductor"), e);
    c.wire.validate(&format!("{w}.wire"), e);
    if c.n_theta == 0 {
        e.push(format!("{w}: n_theta must be positive"));
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses, fills in defaults and validates a configuration.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::ConfigParse { line, column, message: e.message().to_string() }
    })?;
    cfg.fill_defaults();
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(Error::ConfigInvalid(errors));
    }
    Ok(cfg)
}

pub fn load_config_file(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    load_config(&text)
}
