//! Config-driven command dispatch for the `adm` binary.
//!
//! A run is described by a TOML file with the sections `[model]`, `[sweep]`,
//! `[engineering]`, `[validate]` and `[output]`. Each command reads only the
//! sections it needs; unknown keys are rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::basis::{CompositeBasis, Parity};
use crate::couplings::{anisotropy, effective_couplings, floquet_couplings, EngineeringParams};
use crate::dynamics::{choose_duration, ground_state_initial, run_sweep, DurationSearch, SweepKind, SweepProtocol};
use crate::hamiltonian::{build_adm_terms, Boundary, ModelParams, TermSet};
use crate::spectra::{
    classify_gap, min_gap, refine_gap, sector_width, spectral_flow, ControlGrid, GapKind, SpectralFlow,
};
use crate::validate::{validate_floquet, validate_sw, FloquetOptions, SwOptions, ValidationReport};

/// Version string recorded in every sidecar.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] crate::Error),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Output { .. } => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Wrap a parameter-validation failure as a config error.
fn config_err(e: crate::Error) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "adm", version, about = "Anisotropic Dicke model with Rydberg interactions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Couplings,
    Spectrum,
    Sweep,
    ValidateSw,
    ValidateFloquet,
}

#[derive(Debug, clap::Args)]
pub struct CommandArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Renormalized couplings against the drive ratio A/ω_s.
    Couplings(CommandArgs),
    /// Parity-resolved low-lying spectrum along the sweep control.
    Spectrum(CommandArgs),
    /// Time-dependent sweep with fidelity and order parameters.
    Sweep(CommandArgs),
    /// Three-level dynamics against the eliminated two-level model.
    ValidateSw(CommandArgs),
    /// Modulated-frame dynamics against the period-averaged model.
    ValidateFloquet(CommandArgs),
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Couplings(_) => CommandKind::Couplings,
            Command::Spectrum(_) => CommandKind::Spectrum,
            Command::Sweep(_) => CommandKind::Sweep,
            Command::ValidateSw(_) => CommandKind::ValidateSw,
            Command::ValidateFloquet(_) => CommandKind::ValidateFloquet,
        }
    }

    pub fn args(&self) -> &CommandArgs {
        match self {
            Command::Couplings(a)
            | Command::Spectrum(a)
            | Command::Sweep(a)
            | Command::ValidateSw(a)
            | Command::ValidateFloquet(a) => a,
        }
    }
}

// ---------------------------------------------------------------------------
// config

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSection>,
    pub sweep: Option<SweepSection>,
    pub engineering: Option<EngineeringSection>,
    pub validate: Option<ValidateSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub n_sites: usize,
    pub photon_cutoff: usize,
    pub omega_c_tilde: f64,
    pub omega_a_tilde: f64,
    pub v_int: f64,
    pub omega: f64,
    pub alpha: f64,
    pub boundary: Boundary,
    pub dim_cap: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            n_sites: 6,
            photon_cutoff: 40,
            omega_c_tilde: 1.0,
            omega_a_tilde: 1.0,
            v_int: 1.0,
            omega: 0.0,
            alpha: 0.0,
            boundary: Boundary::Periodic,
            dim_cap: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepName {
    Sr,
    Srs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepName,
    /// Sweep time T; absent means the doubling study picks it.
    pub duration: Option<f64>,
    pub dt: Option<f64>,
    #[serde(default = "default_omega_final")]
    pub omega_final: f64,
    #[serde(default = "default_omega_a_start")]
    pub omega_a_start: f64,
    #[serde(default = "default_omega_a_end")]
    pub omega_a_end: f64,
    pub sample_stride: Option<usize>,
    #[serde(default = "default_levels_k")]
    pub levels_k: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    pub grid_start: Option<f64>,
    pub grid_end: Option<f64>,
    #[serde(default = "default_auto_start")]
    pub auto_start: f64,
    #[serde(default = "default_auto_max")]
    pub auto_max: f64,
    #[serde(default = "default_auto_tolerance")]
    pub auto_tolerance: f64,
}

fn default_omega_final() -> f64 {
    1.5
}
fn default_omega_a_start() -> f64 {
    0.5
}
fn default_omega_a_end() -> f64 {
    -0.1
}
fn default_levels_k() -> usize {
    6
}
fn default_grid_points() -> usize {
    151
}
fn default_auto_start() -> f64 {
    DurationSearch::default().start
}
fn default_auto_max() -> f64 {
    DurationSearch::default().max_duration
}
fn default_auto_tolerance() -> f64 {
    DurationSearch::default().tolerance
}

impl SweepSection {
    pub fn kind(&self) -> SweepKind {
        match self.kind {
            SweepName::Sr => SweepKind::Sr { omega_final: self.omega_final },
            SweepName::Srs => SweepKind::Srs { omega_a_start: self.omega_a_start, omega_a_end: self.omega_a_end },
        }
    }

    pub fn grid(&self) -> ControlGrid {
        let kind = self.kind();
        ControlGrid {
            control: kind.control(),
            start: self.grid_start.unwrap_or_else(|| kind.control_at(0.0)),
            end: self.grid_end.unwrap_or_else(|| kind.control_at(1.0)),
            points: self.grid_points,
        }
    }
}

/// Every field is optional; each command fills its own defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineeringSection {
    pub omega_1: Option<f64>,
    pub omega_2: Option<f64>,
    pub delta_1: Option<f64>,
    pub delta_2: Option<f64>,
    pub drive_amp: Option<f64>,
    pub drive_freq: Option<f64>,
    pub sideband: Option<u32>,
    pub omega_c_bare: Option<f64>,
    pub omega_a_bare: Option<f64>,
    pub n_sites: Option<usize>,
    /// Direct effective couplings; bypass the three-level elimination.
    pub omega_e1: Option<f64>,
    pub omega_e2: Option<f64>,
    pub a_over_ws_start: Option<f64>,
    pub a_over_ws_end: Option<f64>,
    pub a_over_ws_step: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub photon_cutoff: Option<usize>,
    pub v_int: Option<f64>,
    pub horizon: Option<f64>,
    pub initial_photons: Option<usize>,
    pub step_factor: Option<f64>,
    pub n_periods: Option<usize>,
    pub lab_frame: Option<bool>,
    pub finite_cavity: Option<bool>,
    pub overlap_threshold: Option<f64>,
    pub intermediate_threshold: Option<f64>,
    pub deviation_threshold: Option<f64>,
    pub scaling_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub prefix: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), prefix: "adm".into() }
    }
}

impl RunConfig {
    /// Parse TOML; syntax and type errors carry line and column.
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn section<'a, T>(s: &'a Option<T>, name: &str, cmd: &str) -> CliResult<&'a T> {
        s.as_ref().ok_or_else(|| CliError::Config(format!("`{cmd}` needs a [{name}] section")))
    }
}

fn check_finite(values: &[(f64, &str)]) -> CliResult<()> {
    match values.iter().find(|(v, _)| !v.is_finite()) {
        Some((_, name)) => Err(CliError::Config(format!("{name} must be finite"))),
        None => Ok(()),
    }
}

/// Validated model inputs shared by `spectrum` and `sweep`.
struct ModelSetup {
    terms: TermSet,
    base: ModelParams,
}

fn model_setup(m: &ModelSection) -> CliResult<ModelSetup> {
    if m.n_sites == 0 {
        return Err(CliError::Config("model.n_sites must be at least 1".into()));
    }
    let basis = CompositeBasis::new(m.n_sites, m.photon_cutoff).map_err(config_err)?;
    if basis.dim() > m.dim_cap {
        return Err(CliError::Config(format!(
            "basis dimension {} exceeds model.dim_cap = {}",
            basis.dim(),
            m.dim_cap
        )));
    }
    let base = ModelParams {
        omega_c_tilde: m.omega_c_tilde,
        omega_a_tilde: m.omega_a_tilde,
        v_int: m.v_int,
        omega: m.omega,
        alpha: m.alpha,
        boundary: m.boundary,
    };
    base.validate().map_err(config_err)?;
    Ok(ModelSetup { terms: build_adm_terms(&basis, m.boundary), base })
}

fn check_sweep(s: &SweepSection) -> CliResult<()> {
    check_finite(&[
        (s.omega_final, "sweep.omega_final"),
        (s.omega_a_start, "sweep.omega_a_start"),
        (s.omega_a_end, "sweep.omega_a_end"),
        (s.auto_start, "sweep.auto_start"),
        (s.auto_max, "sweep.auto_max"),
        (s.auto_tolerance, "sweep.auto_tolerance"),
    ])?;
    if let Some(t) = s.duration {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::Config(format!("sweep.duration must be finite and non-negative, got {t}")));
        }
    }
    if let Some(dt) = s.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CliError::Config(format!("sweep.dt must be positive, got {dt}")));
        }
    }
    if s.levels_k == 0 {
        return Err(CliError::Config("sweep.levels_k must be at least 1".into()));
    }
    if s.sample_stride == Some(0) {
        return Err(CliError::Config("sweep.sample_stride must be at least 1".into()));
    }
    Ok(())
}

fn units(v_int: f64) -> String {
    if v_int != 0.0 {
        format!("hbar = 1; energies, rates and inverse times in units of V (V = {v_int})")
    } else {
        "hbar = 1; energies, rates and inverse times in units of omega_c_tilde (V = 0)".into()
    }
}

// ---------------------------------------------------------------------------
// output

/// 17 significant digits, lowercase scientific notation.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn sidecar(command: &str, units: String, parameters: Value, results: Value) -> String {
    let doc = json!({
        "command": command,
        "version": VERSION,
        "units": units,
        "parameters": parameters,
        "results": results,
        "timestamp_unix": timestamp(),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Paths of the files written by one command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Emitted {
    pub data: Option<PathBuf>,
    pub metadata: PathBuf,
}

struct Target {
    dir: PathBuf,
    prefix: String,
}

impl Target {
    fn path(&self, stem: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{}_{stem}.{ext}", self.prefix))
    }
}

// ---------------------------------------------------------------------------
// commands

/// Run one command with an already parsed config.
pub fn execute(kind: CommandKind, config: &RunConfig, out: Option<&Path>) -> CliResult<Emitted> {
    let target = Target {
        dir: out.map_or_else(|| config.output.directory.clone(), Path::to_path_buf),
        prefix: config.output.prefix.clone(),
    };
    if target.prefix.is_empty() || target.prefix.contains(['/', '\\']) {
        return Err(CliError::Config("output.prefix must be a non-empty file name".into()));
    }
    match kind {
        CommandKind::Couplings => cmd_couplings(config, &target),
        CommandKind::Spectrum => cmd_spectrum(config, &target),
        CommandKind::Sweep => cmd_sweep(config, &target),
        CommandKind::ValidateSw => cmd_validate_sw(config, &target),
        CommandKind::ValidateFloquet => cmd_validate_floquet(config, &target),
    }
}

/// Parse arguments already handled by clap, load the config and run.
pub fn run(cli: &Cli) -> CliResult<Emitted> {
    let args = cli.command.args();
    let config = RunConfig::load(&args.config)?;
    execute(cli.command.kind(), &config, args.out.as_deref())
}

/// One row of the couplings table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingRow {
    pub a_over_ws: f64,
    pub omega_e3: f64,
    pub omega_e4: f64,
    pub ratio_crw_rw: f64,
    pub alpha: f64,
}

/// Ω_e3, Ω_e4 and α over a grid of drive ratios.
pub fn coupling_table(
    omega_e1: f64,
    omega_e2: f64,
    sideband: u32,
    n_sites: usize,
    grid: &[f64],
) -> crate::Result<Vec<CouplingRow>> {
    grid.iter()
        .map(|&a| {
            let p = EngineeringParams {
                omega_1: 0.0,
                omega_2: 0.0,
                delta_1: 1.0,
                delta_2: 1.0,
                drive_amp: a,
                drive_freq: 1.0,
                sideband,
                omega_c_bare: 0.0,
                omega_a_bare: 0.0,
                n_sites,
            };
            let (e3, e4) = floquet_couplings(&p, omega_e1, omega_e2)?;
            let alpha = match anisotropy(e3, e4, n_sites) {
                Ok(c) => c.alpha,
                Err(crate::Error::DegenerateCouplings) => f64::NAN,
                Err(e) => return Err(e),
            };
            let ratio = if e3 == 0.0 { f64::INFINITY } else { e4.abs() / e3.abs() };
            Ok(CouplingRow { a_over_ws: a, omega_e3: e3, omega_e4: e4, ratio_crw_rw: ratio, alpha })
        })
        .collect()
}

/// `start, start + step, …` up to `end` (inclusive within rounding).
pub fn ratio_grid(start: f64, end: f64, step: f64) -> crate::Result<Vec<f64>> {
    if !(start.is_finite() && end.is_finite() && step.is_finite()) {
        return Err(crate::Error::NonFinite("a_over_ws grid"));
    }
    if !(step > 0.0) || end < start {
        return Err(crate::Error::InvalidParameter("a_over_ws grid needs step > 0 and end >= start".into()));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize + 1;
    if n > 10_000_000 {
        return Err(crate::Error::InvalidParameter(format!("a_over_ws grid has {n} points")));
    }
    // i/m is correctly rounded when the step is 1/m, so 0.01-grids print cleanly
    let inv = 1.0 / step;
    let m = inv.round();
    if m >= 1.0 && (inv - m).abs() < 1e-9 * m {
        Ok((0..n).map(|i| start + i as f64 / m).collect())
    } else {
        Ok((0..n).map(|i| start + step * i as f64).collect())
    }
}

fn cmd_couplings(config: &RunConfig, target: &Target) -> CliResult<Emitted> {
    let e = RunConfig::section(&config.engineering, "engineering", "couplings")?;
    let chain = [e.omega_1, e.omega_2, e.delta_1, e.delta_2];
    let (omega_e1, omega_e2, source) = match (e.omega_e1, e.omega_e2) {
        (Some(a), Some(b)) => (a, b, "direct"),
        (None, None) if chain.iter().all(Option::is_none) => (2.0, 1.0, "default"),
        (None, None) => {
            let [Some(omega_1), Some(omega_2), Some(delta_1), Some(delta_2)] = chain else {
                return Err(CliError::Config(
                    "deriving couplings needs all of omega_1, omega_2, delta_1, delta_2".into(),
                ));
            };
            let p = EngineeringParams {
                omega_1,
                omega_2,
                delta_1,
                delta_2,
                drive_amp: 0.0,
                drive_freq: 1.0,
                sideband: 0,
                omega_c_bare: 0.0,
                omega_a_bare: 0.0,
                n_sites: 1,
            };
            p.validate().map_err(config_err)?;
            let (a, b) = effective_couplings(&p).map_err(config_err)?;
            (a, b, "derived")
        }
        _ => return Err(CliError::Config("omega_e1 and omega_e2 must be given together".into())),
    };
    check_finite(&[(omega_e1, "engineering.omega_e1"), (omega_e2, "engineering.omega_e2")])?;
    let sideband = e.sideband.unwrap_or(1);
    let n_sites = e.n_sites.unwrap_or(1);
    if n_sites == 0 {
        return Err(CliError::Config("engineering.n_sites must be at least 1".into()));
    }
    let (start, end, step) =
        (e.a_over_ws_start.unwrap_or(0.0), e.a_over_ws_end.unwrap_or(5.0), e.a_over_ws_step.unwrap_or(0.01));
    let grid = ratio_grid(start, end, step).map_err(config_err)?;
    let rows = coupling_table(omega_e1, omega_e2, sideband, n_sites, &grid)?;

    let mut csv = String::from("a_over_ws,omega_e3,omega_e4,ratio_crw_rw,alpha\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            format_number(r.a_over_ws),
            format_number(r.omega_e3),
            format_number(r.omega_e4),
            format_number(r.ratio_crw_rw),
            format_number(r.alpha)
        );
    }
    let data = target.path("couplings", "csv");
    write_file(&data, &csv)?;
    let params = json!({
        "omega_e1": omega_e1,
        "omega_e2": omega_e2,
        "coupling_source": source,
        "engineering": e,
        "sideband": sideband,
        "n_sites": n_sites,
        "a_over_ws": {"start": start, "end": end, "step": step, "points": grid.len()},
    });
    let results = json!({ "rows": rows.len() });
    let metadata = target.path("couplings", "json");
    write_file(
        &metadata,
        &sidecar("couplings", "hbar = 1; couplings in the units of omega_e1 and omega_e2".into(), params, results),
    )?;
    Ok(Emitted { data: Some(data), metadata })
}

fn gap_summary(setup: &ModelSetup, flow: &SpectralFlow, parity: Parity) -> crate::Result<Value> {
    let Some(sector) = flow.sector(parity) else { return Ok(Value::Null) };
    if sector.energies.first().is_none_or(|e| e.len() < 2) {
        return Ok(Value::Null);
    }
    let coarse = min_gap(flow, parity, (0, 1))?;
    let width = (flow.grid[flow.grid.len() - 1] - flow.grid[0]).abs();
    let refined = refine_gap(&setup.terms, &setup.base, flow, parity, (0, 1), coarse, 1e-9 * width.max(1.0))?;
    let kind = classify_gap(refined.gap, sector_width(flow, parity));
    Ok(json!({
        "coarse": coarse,
        "refined": refined,
        "classification": kind,
        "level_crossing": kind == GapKind::Crossing,
    }))
}

fn cmd_spectrum(config: &RunConfig, target: &Target) -> CliResult<Emitted> {
    let m = RunConfig::section(&config.model, "model", "spectrum")?;
    let s = RunConfig::section(&config.sweep, "sweep", "spectrum")?;
    check_sweep(s)?;
    let setup = model_setup(m)?;
    let grid = s.grid();
    grid.values().map_err(config_err)?;
    let parities = [Parity::Even, Parity::Odd];
    for p in parities {
        let available = setup.terms.basis.sector_indices(p).len();
        if s.levels_k > available {
            return Err(CliError::Config(format!(
                "sweep.levels_k = {} exceeds the {available} states of the {p:?} sector",
                s.levels_k
            )));
        }
    }
    let flow = spectral_flow(&setup.terms, &setup.base, &grid, s.levels_k, &parities)?;

    let mut csv = String::from("control,level_index,energy,parity,sector_rank\n");
    for (g, &c) in flow.grid.iter().enumerate() {
        let mut levels: Vec<(f64, i32, usize)> = flow
            .sectors
            .iter()
            .flat_map(|sec| sec.energies[g].iter().enumerate().map(move |(r, &e)| (e, sec.parity.sign(), r)))
            .collect();
        levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        for (level, (e, parity, rank)) in levels.iter().enumerate() {
            let _ = writeln!(csv, "{},{level},{},{parity},{rank}", format_number(c), format_number(*e));
        }
    }
    let data = target.path("spectrum", "csv");
    write_file(&data, &csv)?;

    let flags: Vec<Value> = flow
        .sectors
        .iter()
        .flat_map(|sec| sec.flags.iter().map(move |f| json!({"parity": sec.parity.sign(), "flag": f})))
        .collect();
    let results = json!({
        "control": grid.control,
        "grid_points": flow.grid.len(),
        "levels_per_sector": s.levels_k,
        "basis_dim": setup.terms.basis.dim(),
        "even_lowest_gap": gap_summary(&setup, &flow, Parity::Even)?,
        "odd_lowest_gap": gap_summary(&setup, &flow, Parity::Odd)?,
        "tracking_flags": flags,
    });
    let params = json!({ "model": m, "sweep": s, "grid": grid });
    let metadata = target.path("spectrum", "json");
    write_file(&metadata, &sidecar("spectrum", units(m.v_int), params, results))?;
    Ok(Emitted { data: Some(data), metadata })
}

fn cmd_sweep(config: &RunConfig, target: &Target) -> CliResult<Emitted> {
    let m = RunConfig::section(&config.model, "model", "sweep")?;
    let s = RunConfig::section(&config.sweep, "sweep", "sweep")?;
    check_sweep(s)?;
    let setup = model_setup(m)?;
    let kind = s.kind();
    kind.params_at(&setup.base, 0.0).validate().map_err(config_err)?;
    kind.params_at(&setup.base, 1.0).validate().map_err(config_err)?;
    let initial = ground_state_initial(&setup.terms, &kind.params_at(&setup.base, 0.0))?;

    let (duration, study) = match s.duration {
        Some(t) => (t, None),
        None => {
            let search = DurationSearch { start: s.auto_start, max_duration: s.auto_max, tolerance: s.auto_tolerance };
            let study = choose_duration(&setup.terms, &setup.base, kind, s.dt, &initial, search)?;
            (study.chosen, Some(study))
        }
    };
    let protocol = SweepProtocol { kind, duration, dt: s.dt, sample_stride: s.sample_stride };
    let out = run_sweep(&setup.terms, &setup.base, &protocol, &initial)?;

    let mut csv = String::from("t,control,fidelity,photon_number,s_pi,parity_expect,norm\n");
    for r in &out.records {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            format_number(r.t),
            format_number(r.control),
            format_number(r.fidelity),
            format_number(r.photon_number),
            format_number(r.s_pi),
            format_number(r.parity_expect),
            format_number(r.norm)
        );
    }
    let data = target.path("sweep", "csv");
    write_file(&data, &csv)?;

    let mut warnings = out.warnings.clone();
    if study.as_ref().is_some_and(|st| !st.converged) {
        warnings.push(format!("duration study did not converge below {}", s.auto_tolerance));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let results = json!({
        "duration": duration,
        "dt": out.dt,
        "n_steps": out.n_steps,
        "max_norm_h": out.max_norm_h,
        "final_fidelity": out.final_fidelity(),
        "max_norm_drift": out.max_norm_drift,
        "max_parity_drift": out.max_parity_drift,
        "max_fock_tail": out.max_fock_tail,
        "convergence_study": study,
        "warnings": warnings,
    });
    let params = json!({ "model": m, "sweep": s, "protocol": protocol, "structure_factor": "occupation" });
    let metadata = target.path("sweep", "json");
    write_file(&metadata, &sidecar("sweep", units(m.v_int), params, results))?;
    Ok(Emitted { data: Some(data), metadata })
}

fn report_json(command: &str, report: &ValidationReport, units: &str) -> String {
    let value = serde_json::to_value(report).expect("reports always serialize");
    sidecar(command, units.into(), value["params"].clone(), value)
}

fn cmd_validate_sw(config: &RunConfig, target: &Target) -> CliResult<Emitted> {
    let e = RunConfig::section(&config.engineering, "engineering", "validate-sw")?;
    if e.omega_e1.is_some() || e.omega_e2.is_some() {
        return Err(CliError::Config("validate-sw derives omega_e1/omega_e2; remove them from [engineering]".into()));
    }
    let delta_1 = e.delta_1.unwrap_or(100.0);
    let omega_c = e.omega_c_bare.unwrap_or(10.0 * delta_1.abs());
    let p = EngineeringParams {
        omega_1: e.omega_1.unwrap_or(1.0),
        omega_2: e.omega_2.unwrap_or(1.0),
        delta_1,
        delta_2: e.delta_2.unwrap_or(-delta_1),
        drive_amp: e.drive_amp.unwrap_or(0.0),
        drive_freq: e.drive_freq.unwrap_or(1.0),
        sideband: e.sideband.unwrap_or(0),
        omega_c_bare: omega_c,
        omega_a_bare: e.omega_a_bare.unwrap_or(omega_c),
        n_sites: e.n_sites.unwrap_or(1),
    };
    p.validate().map_err(config_err)?;
    let v = config.validate.clone().unwrap_or_default();
    let d = SwOptions::default();
    let o = SwOptions {
        photon_cutoff: v.photon_cutoff.unwrap_or(d.photon_cutoff),
        v_int: v.v_int.unwrap_or(d.v_int),
        horizon: v.horizon.or(d.horizon),
        initial_photons: v.initial_photons.unwrap_or(d.initial_photons),
        step_factor: v.step_factor.unwrap_or(d.step_factor),
        overlap_threshold: v.overlap_threshold.unwrap_or(d.overlap_threshold),
        intermediate_threshold: v.intermediate_threshold.unwrap_or(d.intermediate_threshold),
        lab_frame: v.lab_frame.unwrap_or(d.lab_frame),
        finite_cavity: v.finite_cavity.unwrap_or(d.finite_cavity),
        scaling_factors: d.scaling_factors,
    };
    let report = validate_sw(&p, &o).map_err(|err| match err {
        crate::Error::Precondition(_) | crate::Error::InvalidParameter(_) | crate::Error::StabilityGuard { .. } => {
            config_err(err)
        }
        other => CliError::Numeric(other),
    })?;
    let metadata = target.path("validate_sw", "json");
    write_file(&metadata, &report_json("validate-sw", &report, "hbar = 1; rates in the units of omega_1"))?;
    Ok(Emitted { data: None, metadata })
}

fn cmd_validate_floquet(config: &RunConfig, target: &Target) -> CliResult<Emitted> {
    let e = RunConfig::section(&config.engineering, "engineering", "validate-floquet")?;
    let drive_freq = e.drive_freq.unwrap_or(50.0);
    let sideband = e.sideband.unwrap_or(1);
    let shift = sideband as f64 * drive_freq;
    let omega_c = e.omega_c_bare.unwrap_or(1.0 + shift);
    let p = EngineeringParams {
        omega_1: e.omega_1.unwrap_or(1.0),
        omega_2: e.omega_2.unwrap_or(1.0),
        delta_1: e.delta_1.unwrap_or(10.0),
        delta_2: e.delta_2.unwrap_or(-10.0),
        drive_amp: e.drive_amp.unwrap_or(drive_freq),
        drive_freq,
        sideband,
        omega_c_bare: omega_c,
        omega_a_bare: e.omega_a_bare.unwrap_or(omega_c),
        n_sites: e.n_sites.unwrap_or(2),
    };
    p.validate().map_err(config_err)?;
    let omega_e = match (e.omega_e1, e.omega_e2) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) if e.omega_1.is_none() && e.omega_2.is_none() => Some((0.2, 0.1)),
        (None, None) => None,
        _ => return Err(CliError::Config("omega_e1 and omega_e2 must be given together".into())),
    };
    let v = config.validate.clone().unwrap_or_default();
    let d = FloquetOptions::default();
    let o = FloquetOptions {
        omega_e,
        v_int: v.v_int.unwrap_or(d.v_int),
        photon_cutoff: v.photon_cutoff.unwrap_or(d.photon_cutoff),
        n_periods: v.n_periods.unwrap_or(d.n_periods),
        initial_photons: v.initial_photons.unwrap_or(d.initial_photons),
        step_factor: v.step_factor.unwrap_or(d.step_factor),
        deviation_threshold: v.deviation_threshold.unwrap_or(d.deviation_threshold),
        scaling_ratio: v.scaling_ratio.unwrap_or(d.scaling_ratio),
    };
    let report = validate_floquet(&p, &o).map_err(|err| match err {
        crate::Error::Precondition(_) | crate::Error::InvalidParameter(_) | crate::Error::StabilityGuard { .. } => {
            config_err(err)
        }
        other => CliError::Numeric(other),
    })?;
    let metadata = target.path("validate_floquet", "json");
    write_file(&metadata, &report_json("validate-floquet", &report, "hbar = 1; rates in the units of omega_e1"))?;
    Ok(Emitted { data: None, metadata })
}

/// Apply `ADM_THREADS` to the global worker pool.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("ADM_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("ADM_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))
}
