//! Command-line front end: `probability`, `scan`, `bound`, `flux` and
//! `verify`.
//!
//! Settings resolve as compiled defaults, then the config file (`--config`
//! or `NU_COLLAPSE_CONFIG`), then flags. The resolved settings head every
//! output: `#` comment lines for CSV, a `config` object for JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::collapse::{decoherence_onset, CollapseParams};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::flavor::{Flavor, MassSpectrum, MixingAngles};
use crate::flux::{pion_chain_source, FlavorFlux};
use crate::observability::{
    energy_at_observability_length, evaluate_cell, matched_dm2, max_observable_energy,
    minimal_observability_length, scan_window, xi_upper_bound, ScanCell, ScanGrid, ScanSetup,
};
use crate::oracle::{resolution_samples, run_suite, CheckGroup};

/// Environment variable consulted when `--config` is absent.
pub const CONFIG_ENV: &str = "NU_COLLAPSE_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nu-collapse",
    version,
    about = "Neutrino flavor oscillations with gravity-induced damping"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct GlobalArgs {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Neutrino energy, eV.
    #[arg(long = "E", global = true)]
    pub energy: Option<f64>,
    /// Baseline, light-years.
    #[arg(long = "L-ly", global = true)]
    pub baseline_ly: Option<f64>,
    /// Collapse strength.
    #[arg(long, global = true)]
    pub xi: Option<f64>,
    /// Masses m1,m2,m3 in eV.
    #[arg(long = "m", global = true)]
    pub masses: Option<String>,
    /// Mixing preset: `global-fit` or `tri-bimaximal`.
    #[arg(long, global = true)]
    pub mixing: Option<String>,
    #[arg(long, global = true)]
    pub theta12: Option<f64>,
    #[arg(long, global = true)]
    pub theta13: Option<f64>,
    #[arg(long, global = true)]
    pub theta23: Option<f64>,
    #[arg(long = "delta-cp", global = true)]
    pub delta_cp: Option<f64>,
    /// Mass pair j,k (1-based) used for the observability condition.
    #[arg(long, global = true)]
    pub pair: Option<String>,
    /// Source flux: `pion` or `e:mu:tau`.
    #[arg(long, global = true)]
    pub source: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Undamped and damped probability matrices at one (E, L).
    Probability,
    /// CSV/JSON sweep over an energy × baseline grid.
    Scan {
        /// Energies in eV: `MIN:MAX:N` or a comma list.
        #[arg(long = "E-grid")]
        energy_grid: Option<String>,
        /// Baselines in light-years: `MIN:MAX:N` or a comma list.
        #[arg(long = "L-grid-ly")]
        baseline_grid: Option<String>,
        #[arg(long, value_enum)]
        spacing: Option<Spacing>,
    },
    /// Upper bound on ξ from a damping threshold.
    Bound {
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Source and detector flavor ratios.
    Flux,
    /// Run the oracle suite.
    Verify {
        /// Restrict to a check group (probability, delta_e, damping, observability).
        #[arg(long)]
        only: Option<String>,
        /// Monte Carlo resolution: low, medium, high, or a sample count.
        #[arg(long)]
        resolution: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Log,
    Linear,
}

/// A one-dimensional grid, either a range or an explicit list.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Range { min: f64, max: f64, count: usize },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let bad =
            || Error::InvalidInput(format!("grid must be MIN:MAX:N or a comma list, got `{s}`"));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let min = parse_f64(parts[0])?;
            let max = parse_f64(parts[1])?;
            let count = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
            if count == 0 || (count > 1 && min >= max) || (count == 1 && min != max && max < min) {
                return Err(bad());
            }
            Ok(GridSpec::Range { min, max, count })
        } else {
            Ok(GridSpec::List(parse_list(s)?))
        }
    }

    pub fn values(&self, spacing: Spacing) -> Result<Vec<f64>> {
        match self {
            GridSpec::List(v) => Ok(v.clone()),
            GridSpec::Range { min, count: 1, .. } => Ok(vec![*min]),
            GridSpec::Range { min, max, count } => {
                let n = (*count - 1) as f64;
                let mut v: Vec<f64> = match spacing {
                    Spacing::Log => {
                        if *min <= 0.0 {
                            return Err(Error::InvalidInput(
                                "log grid needs a positive minimum".into(),
                            ));
                        }
                        let ratio = (max / min).ln();
                        (0..*count)
                            .map(|i| min * (ratio * i as f64 / n).exp())
                            .collect()
                    }
                    Spacing::Linear => (0..*count)
                        .map(|i| min + (max - min) * i as f64 / n)
                        .collect(),
                };
                v[*count - 1] = *max;
                Ok(v)
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            GridSpec::Range { min, max, count } => format!("{min:e}:{max:e}:{count}"),
            GridSpec::List(v) => v
                .iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    let v = s
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("not a number: `{s}`")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!("not a finite number: `{s}`")))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let v: Vec<&str> = s.split(',').collect();
    let idx = |t: &str| -> Result<usize> {
        match t.trim().parse::<usize>() {
            Ok(i @ 1..=3) => Ok(i - 1),
            _ => Err(Error::InvalidInput(format!(
                "pair index must be 1, 2 or 3, got `{t}`"
            ))),
        }
    };
    if v.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "pair must be `j,k`, got `{s}`"
        )));
    }
    let (j, k) = (idx(v[0])?, idx(v[1])?);
    if j == k {
        return Err(Error::InvalidInput("pair indices must differ".into()));
    }
    Ok((j.min(k), j.max(k)))
}

fn parse_source(s: &str) -> Result<FlavorFlux> {
    if s.trim() == "pion" {
        return Ok(pion_chain_source());
    }
    let v: Vec<f64> = s.split(':').map(parse_f64).collect::<Result<_>>()?;
    if v.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "source must be `pion` or `e:mu:tau`, got `{s}`"
        )));
    }
    let flux = FlavorFlux::new(v[0], v[1], v[2])?;
    if flux.total() <= 0.0 {
        return Err(Error::InvalidInput(
            "source flux must have a positive total".into(),
        ));
    }
    Ok(flux)
}

/// Reads a flat `key = value` file. `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().trim_matches('"').to_string());
    }
    Ok(out)
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub angles: MixingAngles,
    pub masses: [f64; 3],
    pub xi: f64,
    pub energy: f64,
    pub baseline_ly: f64,
    pub energy_grid: GridSpec,
    pub baseline_grid_ly: GridSpec,
    pub spacing: Spacing,
    pub pair: (usize, usize),
    pub source: FlavorFlux,
    pub threshold: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub resolution: String,
    pub only: Option<String>,
    pub constants: PhysicalConstants,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            angles: MixingAngles::default_global_fit(),
            masses: MassSpectrum::default_degenerate().masses(),
            xi: 1.0,
            energy: 1e18,
            baseline_ly: 15e9,
            energy_grid: GridSpec::Range {
                min: 1e20,
                max: 1e24,
                count: 9,
            },
            baseline_grid_ly: GridSpec::Range {
                min: 1e8,
                max: 1.5e10,
                count: 8,
            },
            spacing: Spacing::Log,
            pair: (0, 2),
            source: pion_chain_source(),
            threshold: 1.0,
            format: Format::Csv,
            out: None,
            seed: 42,
            resolution: "low".into(),
            only: None,
            constants: PhysicalConstants::default(),
        }
    }
}

fn mixing_preset(name: &str) -> Result<MixingAngles> {
    match name {
        "global-fit" | "default" => Ok(MixingAngles::default_global_fit()),
        "tri-bimaximal" | "tbm" => Ok(MixingAngles::tri_bimaximal()),
        other => Err(Error::InvalidInput(format!(
            "unknown mixing preset `{other}`"
        ))),
    }
}

impl RunConfig {
    /// Applies config-file entries.
    pub fn apply_file(&mut self, entries: &BTreeMap<String, String>) -> Result<()> {
        let mut constants = BTreeMap::new();
        let mut sin2 = [None; 3];
        let num = |v: &String| parse_f64(v).map_err(|e| Error::Config(e.to_string()));
        if let Some(p) = entries.get("mixing") {
            self.angles = mixing_preset(p)?;
        }
        for (key, value) in entries {
            match key.as_str() {
                "mixing" => {}
                "theta12_rad" => self.angles.theta12 = num(value)?,
                "theta13_rad" => self.angles.theta13 = num(value)?,
                "theta23_rad" => self.angles.theta23 = num(value)?,
                "delta_cp_rad" => self.angles.delta_cp = num(value)?,
                "sin2_theta12" => sin2[0] = Some(num(value)?),
                "sin2_theta13" => sin2[1] = Some(num(value)?),
                "sin2_theta23" => sin2[2] = Some(num(value)?),
                "m1_ev" => self.masses[0] = num(value)?,
                "m2_ev" => self.masses[1] = num(value)?,
                "m3_ev" => self.masses[2] = num(value)?,
                "xi" => self.xi = num(value)?,
                "energy_ev" => self.energy = num(value)?,
                "baseline_ly" => self.baseline_ly = num(value)?,
                "e_grid_ev" => self.energy_grid = GridSpec::parse(value)?,
                "l_grid_ly" => self.baseline_grid_ly = GridSpec::parse(value)?,
                "spacing" => {
                    self.spacing = Spacing::from_str(value, true).map_err(Error::Config)?;
                }
                "pair" => self.pair = parse_pair(value)?,
                "source" => self.source = parse_source(value)?,
                "threshold" => self.threshold = num(value)?,
                "format" => self.format = Format::from_str(value, true).map_err(Error::Config)?,
                "out" => self.out = Some(PathBuf::from(value)),
                "seed" => {
                    self.seed = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad seed `{value}`")))?;
                }
                "resolution" => self.resolution = value.clone(),
                k if PhysicalConstants::KEYS.contains(&k) => {
                    constants.insert(k.to_string(), num(value)?);
                }
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        for (slot, s) in sin2.iter().enumerate() {
            if let Some(s) = s {
                if !(0.0..=1.0).contains(s) {
                    return Err(Error::Config(format!("sin² value {s} outside [0, 1]")));
                }
                let theta = s.sqrt().asin();
                match slot {
                    0 => self.angles.theta12 = theta,
                    1 => self.angles.theta13 = theta,
                    _ => self.angles.theta23 = theta,
                }
            }
        }
        self.constants = self.constants.with_overrides(&constants)?;
        Ok(())
    }

    pub fn apply_flags(&mut self, g: &GlobalArgs) -> Result<()> {
        if let Some(p) = &g.mixing {
            self.angles = mixing_preset(p)?;
        }
        if let Some(v) = g.theta12 {
            self.angles.theta12 = v;
        }
        if let Some(v) = g.theta13 {
            self.angles.theta13 = v;
        }
        if let Some(v) = g.theta23 {
            self.angles.theta23 = v;
        }
        if let Some(v) = g.delta_cp {
            self.angles.delta_cp = v;
        }
        if let Some(m) = &g.masses {
            let v = parse_list(m)?;
            if v.len() != 3 {
                return Err(Error::InvalidInput(format!(
                    "--m needs three masses, got {}",
                    v.len()
                )));
            }
            self.masses = [v[0], v[1], v[2]];
        }
        if let Some(v) = g.xi {
            self.xi = v;
        }
        if let Some(v) = g.energy {
            self.energy = v;
        }
        if let Some(v) = g.baseline_ly {
            self.baseline_ly = v;
        }
        if let Some(p) = &g.pair {
            self.pair = parse_pair(p)?;
        }
        if let Some(s) = &g.source {
            self.source = parse_source(s)?;
        }
        if let Some(f) = g.format {
            self.format = f;
        }
        if let Some(o) = &g.out {
            self.out = Some(o.clone());
        }
        if let Some(s) = g.seed {
            self.seed = s;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.angles.validate()?;
        MassSpectrum::new(self.masses[0], self.masses[1], self.masses[2])?;
        CollapseParams::with_constants(self.xi, self.constants)?;
        if !(self.energy.is_finite() && self.energy > 0.0) {
            return Err(Error::InvalidInput(format!(
                "energy must be > 0 eV, got {}",
                self.energy
            )));
        }
        if !(self.baseline_ly.is_finite() && self.baseline_ly >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "baseline must be ≥ 0 ly, got {}",
                self.baseline_ly
            )));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::InvalidInput(format!(
                "threshold must be > 0, got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn spectrum(&self) -> Result<MassSpectrum> {
        MassSpectrum::new(self.masses[0], self.masses[1], self.masses[2])
    }

    pub fn params(&self) -> Result<CollapseParams> {
        CollapseParams::with_constants(self.xi, self.constants)
    }

    pub fn scan_setup(&self) -> Result<ScanSetup> {
        Ok(ScanSetup {
            mixing_angles: self.angles,
            spectrum: self.spectrum()?,
            params: self.params()?,
            pair: self.pair,
            source: self.source,
        })
    }

    /// Resolved settings as ordered key/value text.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = &self.constants;
        vec![
            ("theta12_rad", format!("{:e}", self.angles.theta12)),
            ("theta13_rad", format!("{:e}", self.angles.theta13)),
            ("theta23_rad", format!("{:e}", self.angles.theta23)),
            ("delta_cp_rad", format!("{:e}", self.angles.delta_cp)),
            ("m1_ev", format!("{:e}", self.masses[0])),
            ("m2_ev", format!("{:e}", self.masses[1])),
            ("m3_ev", format!("{:e}", self.masses[2])),
            ("xi", format!("{:e}", self.xi)),
            ("energy_ev", format!("{:e}", self.energy)),
            ("baseline_ly", format!("{:e}", self.baseline_ly)),
            ("e_grid_ev", self.energy_grid.describe()),
            ("l_grid_ly", self.baseline_grid_ly.describe()),
            (
                "spacing",
                if self.spacing == Spacing::Log {
                    "log"
                } else {
                    "linear"
                }
                .into(),
            ),
            ("pair", format!("{},{}", self.pair.0 + 1, self.pair.1 + 1)),
            (
                "source",
                format!(
                    "{:e}:{:e}:{:e}",
                    self.source.phi_e, self.source.phi_mu, self.source.phi_tau
                ),
            ),
            ("threshold", format!("{:e}", self.threshold)),
            ("format", self.format.name().into()),
            ("seed", self.seed.to_string()),
            ("resolution", self.resolution.clone()),
            ("gf_ev2", format!("{:e}", c.fermi_constant)),
            ("mp_ev", format!("{:e}", c.planck_mass)),
            ("lp_m", format!("{:e}", c.planck_length)),
            ("hbar_c_ev_m", format!("{:e}", c.hbar_c)),
            ("hbar_ev_s", format!("{:e}", c.seconds_per_inverse_ev)),
            ("ly_m", format!("{:e}", c.meters_per_lightyear)),
            ("ev_per_gram", format!("{:e}", c.ev_per_gram)),
        ]
    }
}

/// Builds the run configuration: defaults, then file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let path = cli
        .global
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    if let Some(path) = path {
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_file(&parse_config_text(&text)?)?;
    }
    cfg.apply_flags(&cli.global)?;
    match &cli.command {
        Command::Scan {
            energy_grid,
            baseline_grid,
            spacing,
        } => {
            if let Some(g) = energy_grid {
                cfg.energy_grid = GridSpec::parse(g)?;
            }
            if let Some(g) = baseline_grid {
                cfg.baseline_grid_ly = GridSpec::parse(g)?;
            }
            if let Some(s) = spacing {
                cfg.spacing = *s;
            }
        }
        Command::Bound { threshold: Some(t) } => cfg.threshold = *t,
        Command::Verify { only, resolution } => {
            if let Some(r) = resolution {
                cfg.resolution = r.clone();
            }
            cfg.only = only.clone();
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Text produced by a command plus whether it succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub success: bool,
    /// Set when the text went to a file instead of stdout.
    pub written_to: Option<PathBuf>,
}

/// `%.17g`-equivalent: 17 significant digits in scientific notation.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn num_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(fmt_num(v))
    }
}

fn csv_header(cfg: &RunConfig, command: &str) -> String {
    let mut s = format!("# nu-collapse {command}\n");
    for (k, v) in cfg.entries() {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s
}

fn config_json(cfg: &RunConfig, command: &str) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), Value::String(command.into()));
    for (k, v) in cfg.entries() {
        m.insert(k.into(), Value::String(v));
    }
    Value::Object(m)
}

/// Renders an ordered list of named scalars as `quantity,value` CSV or a
/// JSON object.
fn render_quantities(cfg: &RunConfig, command: &str, rows: &[(String, f64)]) -> String {
    match cfg.format {
        Format::Csv => {
            let mut s = csv_header(cfg, command);
            s.push_str("quantity,value\n");
            for (k, v) in rows {
                let _ = writeln!(s, "{k},{}", fmt_num(*v));
            }
            s
        }
        Format::Json => {
            let mut results = Map::new();
            for (k, v) in rows {
                results.insert(k.clone(), num_value(*v));
            }
            let doc =
                json!({ "config": config_json(cfg, command), "results": Value::Object(results) });
            format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serializable")
            )
        }
    }
}

fn matrix_keys(suffix: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(9);
    for a in Flavor::ALL {
        for b in Flavor::ALL {
            out.push(format!("P_{}{}_{suffix}", a.label(), b.label()));
        }
    }
    out
}

fn pair_label(j: usize, k: usize) -> String {
    format!("{}{}", j + 1, k + 1)
}

/// Column names of the scan CSV, in order.
pub fn scan_columns() -> Vec<String> {
    let mut cols: Vec<String> = [
        "E_eV", "L_ly", "dm2_eV2", "D_ly", "gamma_12", "gamma_13", "gamma_23",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(matrix_keys("u"));
    cols.extend(matrix_keys("d"));
    cols.push("deviation".into());
    cols
}

fn scan_row(cell: &ScanCell, constants: &PhysicalConstants) -> Vec<f64> {
    let (dm2, onset_ly) = match cell.matched {
        Some(m) => (m.dm2, constants.natural_to_lightyears(m.onset)),
        None => (f64::NAN, f64::NAN),
    };
    let mut row = vec![cell.energy, cell.baseline_ly, dm2, onset_ly];
    row.extend(cell.pairs.iter().map(|p| p.exponent));
    row.extend(cell.undamped.flat());
    row.extend(cell.damped.flat());
    row.push(cell.deviation);
    row
}

fn cmd_probability(cfg: &RunConfig) -> Result<Outcome> {
    let setup = cfg.scan_setup()?;
    let cell = evaluate_cell(&setup, cfg.energy, cfg.baseline_ly)?;
    let c = &cfg.constants;
    let mut rows: Vec<(String, f64)> = vec![
        ("E_eV".into(), cfg.energy),
        ("L_ly".into(), cfg.baseline_ly),
        ("xi".into(), cfg.xi),
    ];
    rows.extend(matrix_keys("u").into_iter().zip(cell.undamped.flat()));
    rows.extend(matrix_keys("d").into_iter().zip(cell.damped.flat()));
    let spectrum = cfg.spectrum()?;
    for p in &cell.pairs {
        let l = pair_label(p.j, p.k);
        rows.push((format!("dm2_{l}_eV2"), spectrum.dm2(p.j, p.k)));
        rows.push((
            format!("D_{l}_ly"),
            p.onset
                .map_or(f64::INFINITY, |d| c.natural_to_lightyears(d)),
        ));
        rows.push((format!("gamma_{l}"), p.exponent));
    }
    Ok(Outcome {
        text: render_quantities(cfg, "probability", &rows),
        success: true,
        written_to: None,
    })
}

fn cmd_scan(cfg: &RunConfig) -> Result<Outcome> {
    let energies = cfg.energy_grid.values(cfg.spacing)?;
    let baselines = cfg.baseline_grid_ly.values(cfg.spacing)?;
    let grid: ScanGrid = scan_window(&cfg.scan_setup()?, &energies, &baselines)?;
    let columns = scan_columns();
    let text = match cfg.format {
        Format::Csv => {
            let mut s = csv_header(cfg, "scan");
            s.push_str(&columns.join(","));
            s.push('\n');
            for cell in &grid.cells {
                let row: Vec<String> = scan_row(cell, &cfg.constants)
                    .into_iter()
                    .map(fmt_num)
                    .collect();
                s.push_str(&row.join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = grid
                .cells
                .iter()
                .map(|cell| {
                    let mut m = Map::new();
                    for (k, v) in columns.iter().zip(scan_row(cell, &cfg.constants)) {
                        m.insert(k.clone(), num_value(v));
                    }
                    Value::Object(m)
                })
                .collect();
            let doc = json!({ "config": config_json(cfg, "scan"), "rows": rows });
            format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serializable")
            )
        }
    };
    Ok(Outcome {
        text,
        success: true,
        written_to: None,
    })
}

fn cmd_bound(cfg: &RunConfig) -> Result<Outcome> {
    let c = &cfg.constants;
    let spectrum = cfg.spectrum()?;
    let (m_j, m_k) = (spectrum.mass(cfg.pair.0), spectrum.mass(cfg.pair.1));
    let baseline = c.lightyears_to_natural(cfg.baseline_ly)?;
    let bound = xi_upper_bound(m_j, m_k, cfg.energy, baseline, cfg.threshold, c)?;
    let dm2 = matched_dm2(cfg.energy, baseline)?;
    let unit = CollapseParams::with_constants(1.0, *c)?;
    let onset = decoherence_onset(m_j, m_k, cfg.energy, dm2, &unit)?.unwrap_or(f64::INFINITY);
    let e_star = max_observable_energy(m_j, m_k, c)?;
    let params = cfg.params()?;
    let (l_min_ly, e_at_cap) = if cfg.xi > 0.0 {
        let l_min = c.natural_to_lightyears(minimal_observability_length(m_j, m_k, &params)?);
        let e_cap = energy_at_observability_length(m_j, m_k, baseline, &params).unwrap_or(f64::NAN);
        (l_min, e_cap)
    } else {
        (f64::INFINITY, f64::NAN)
    };
    let rows: Vec<(String, f64)> = vec![
        ("xi_bound".into(), bound),
        ("threshold".into(), cfg.threshold),
        ("E_eV".into(), cfg.energy),
        ("L_ly".into(), cfg.baseline_ly),
        ("dm2_eV2".into(), dm2),
        ("D_ly".into(), c.natural_to_lightyears(onset)),
        ("exponent_at_unit_xi".into(), cfg.threshold / bound),
        ("E_star_eV".into(), e_star),
        ("L_min_ly".into(), l_min_ly),
        ("E_at_L_eV".into(), e_at_cap),
    ];
    Ok(Outcome {
        text: render_quantities(cfg, "bound", &rows),
        success: true,
        written_to: None,
    })
}

fn cmd_flux(cfg: &RunConfig) -> Result<Outcome> {
    let cell = evaluate_cell(&cfg.scan_setup()?, cfg.energy, cfg.baseline_ly)?;
    let mut rows: Vec<(String, f64)> = Vec::new();
    for (prefix, flux) in [
        ("source", cfg.source),
        ("detector_u", cell.detector_undamped),
        ("detector_d", cell.detector_damped),
    ] {
        let n = flux.normalized()?;
        for f in Flavor::ALL {
            rows.push((format!("{prefix}_{}", f.label()), n.get(f)));
        }
    }
    rows.push(("deviation".into(), cell.deviation));
    Ok(Outcome {
        text: render_quantities(cfg, "flux", &rows),
        success: true,
        written_to: None,
    })
}

fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let groups = match &cfg.only {
        Some(list) => list
            .split(',')
            .map(|g| CheckGroup::parse(g.trim()))
            .collect::<Result<Vec<_>>>()?,
        None => CheckGroup::ALL.to_vec(),
    };
    let samples = resolution_samples(&cfg.resolution)?;
    let reports = run_suite(&groups, samples, cfg.seed, &cfg.params()?)?;
    let success = reports.iter().all(|r| r.passed);
    let text = match cfg.format {
        Format::Csv => {
            let mut s = csv_header(cfg, "verify");
            for r in &reports {
                let _ = writeln!(s, "{r}");
            }
            let _ = writeln!(
                s,
                "# {} of {} checks passed",
                reports.iter().filter(|r| r.passed).count(),
                reports.len()
            );
            s
        }
        Format::Json => {
            let doc = json!({ "config": config_json(cfg, "verify"), "reports": reports, "passed": success });
            format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serializable")
            )
        }
    };
    Ok(Outcome {
        text,
        success,
        written_to: None,
    })
}

/// Runs a parsed command line. Output goes to `--out` when given; the
/// rendered text is returned either way.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = resolve_config(cli)?;
    let mut outcome = match cli.command {
        Command::Probability => cmd_probability(&cfg)?,
        Command::Scan { .. } => cmd_scan(&cfg)?,
        Command::Bound { .. } => cmd_bound(&cfg)?,
        Command::Flux => cmd_flux(&cfg)?,
        Command::Verify { .. } => cmd_verify(&cfg)?,
    };
    if let Some(path) = &cfg.out {
        write_output(path, &outcome.text)?;
        outcome.written_to = Some(path.clone());
    }
    Ok(outcome)
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Process exit code for an error: 2 for bad input, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_) | Error::Config(_) | Error::DimensionMismatch(_) => 2,
        _ => 1,
    }
}
