//! Run configuration: a flat table of dotted keys.
//!
//! Files are TOML, so `sweep.step = 2` and a `[sweep]` table with
//! `step = 2` are the same key. Every key is optional; `RunConfig::to_text`
//! dumps the effective values in a form that parses back to the same
//! configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fem::MaterialProperties;
use crate::moments::SvdMethod;
use crate::sweep::{OfflineConfig, SweepConfig, SweepMode};
use crate::tbl::{CorcosGoody, SpectrumModel, TabulatedSpectrum, TblConfig};

/// Dotted keys mapped to TOML values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlatTable {
    entries: BTreeMap<String, toml::Value>,
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            v => {
                out.insert(key, v);
            }
        }
    }
}

fn type_error(key: &str, want: &str, got: &toml::Value) -> Error {
    Error::Config(format!("{key} must be {want}, got {got}"))
}

impl FlatTable {
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::parse(context, e.message()))?;
        let mut entries = BTreeMap::new();
        flatten("", table, &mut entries);
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&super::io::read_text(path)?, &path.display().to_string())
    }

    /// Applies `key=value`. The value is read as TOML; anything that does
    /// not parse is taken as a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(Error::Config(format!("override '{assignment}' is not of the form key=value")));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("override '{assignment}' has an empty key")));
        }
        let value = value.trim();
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        self.entries.insert(key.to_string(), parsed);
        Ok(())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(type_error(key, "a number", v)),
        }
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(type_error(key, "a non-negative integer", v)),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(type_error(key, "true or false", v)),
        }
    }

    pub fn str(&self, key: &str) -> Result<Option<&str>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(type_error(key, "a string", v)),
        }
    }

    fn list<T>(&self, key: &str, want: &str, item: impl Fn(&toml::Value) -> Option<T>) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| item(v).ok_or_else(|| type_error(key, want, v)))
                .collect::<Result<Vec<T>>>()
                .map(Some),
            Some(v) => item(v).map(|x| Some(vec![x])).ok_or_else(|| type_error(key, want, v)),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.list(key, "a list of numbers", |v| match v {
            toml::Value::Float(x) => Some(*x),
            toml::Value::Integer(i) => Some(*i as f64),
            _ => None,
        })
    }

    pub fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.list(key, "a list of non-negative integers", |v| match v {
            toml::Value::Integer(i) if *i >= 0 => Some(*i as usize),
            _ => None,
        })
    }
}

/// Writes `key = value` lines in TOML syntax with round-trip float formatting.
#[derive(Clone, Debug, Default)]
pub struct KeyValueWriter {
    out: String,
}

impl KeyValueWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.out, "# {text}");
        self
    }

    pub fn f64(&mut self, key: &str, v: f64) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {}", fmt_f64(v));
        self
    }

    pub fn int(&mut self, key: &str, v: impl Into<i128>) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {}", v.into());
        self
    }

    pub fn bool(&mut self, key: &str, v: bool) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {v}");
        self
    }

    pub fn str(&mut self, key: &str, v: &str) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {}", toml::Value::String(v.to_string()));
        self
    }

    pub fn f64_list(&mut self, key: &str, v: &[f64]) -> &mut Self {
        let items: Vec<String> = v.iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(self.out, "{key} = [{}]", items.join(", "));
        self
    }

    pub fn usize_list(&mut self, key: &str, v: &[usize]) -> &mut Self {
        let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(self.out, "{key} = [{}]", items.join(", "));
        self
    }

    /// A raw TOML value, already formatted.
    pub fn raw(&mut self, key: &str, value: &str) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {value}");
        self
    }

    pub fn finish(&mut self) -> String {
        std::mem::take(&mut self.out)
    }
}

/// Shortest round-trip form that TOML also reads as a float.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnsembleFormat {
    /// Text, one row per loaded DOF with `re,im` column pairs per sample.
    Csv,
    /// Little-endian `f64` pairs behind a text header; about a third of the
    /// CSV size.
    Binary,
}

impl EnsembleFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            EnsembleFormat::Csv => "csv",
            EnsembleFormat::Binary => "bin",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(EnsembleFormat::Csv),
            "bin" | "binary" => Ok(EnsembleFormat::Binary),
            other => Err(Error::Config(format!("ensemble.format must be csv or bin, got '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnsembleOrigin {
    /// Read the files written by the excite stage.
    Files,
    /// Regenerate in memory from the seed; identical values, no files.
    Generate,
}

impl EnsembleOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            EnsembleOrigin::Files => "files",
            EnsembleOrigin::Generate => "generate",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "files" => Ok(EnsembleOrigin::Files),
            "generate" => Ok(EnsembleOrigin::Generate),
            other => Err(Error::Config(format!(
                "ensemble.source must be files or generate, got '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshConfig {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            lx: 1.0,
            ly: 1.0,
            lz: 0.6,
            nx: 20,
            ny: 20,
            nz: 20,
        }
    }
}

impl MeshConfig {
    /// Total DOF count: four per plate node plus one per cavity node.
    pub fn n_dofs(&self) -> usize {
        4 * (self.nx + 1) * (self.ny + 1) + (self.nx + 1) * (self.ny + 1) * (self.nz + 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Paths {
    pub workdir: PathBuf,
    pub model: PathBuf,
    pub ensembles: PathBuf,
    pub basis: PathBuf,
    /// Parent of the per-mode `sweep-<mode>` directories.
    pub sweeps: PathBuf,
    pub report: PathBuf,
}

impl Paths {
    fn under(workdir: &Path) -> Self {
        Self {
            workdir: workdir.to_path_buf(),
            model: workdir.join("model"),
            ensembles: workdir.join("ensembles"),
            basis: workdir.join("basis"),
            sweeps: workdir.to_path_buf(),
            report: workdir.join("report"),
        }
    }

    pub fn sweep(&self, mode: SweepMode) -> PathBuf {
        self.sweeps.join(format!("sweep-{mode}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareConfig {
    pub reference: SweepMode,
    pub candidate: SweepMode,
    /// Bound on every covariance error; a violation fails the compare stage.
    pub max_err_cov: Option<f64>,
    /// Bound on every relative transfer error.
    pub max_transfer_rel: Option<f64>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            reference: SweepMode::FomLowRank,
            candidate: SweepMode::Rom,
            max_err_cov: None,
            max_transfer_rel: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub mesh: MeshConfig,
    pub material: MaterialProperties,
    pub tbl: TblConfig,
    /// Peak of the analytic point spectrum, used when `tbl.tau_w` is unset.
    pub tbl_peak_hz: f64,
    pub tbl_table: Option<PathBuf>,
    pub ensemble_format: EnsembleFormat,
    pub ensemble_origin: EnsembleOrigin,
    /// Frequencies the excite stage writes; empty means the sweep grid plus
    /// the expansion points.
    pub excite_frequencies_hz: Vec<f64>,
    pub sweep: SweepConfig,
    pub offline: OfflineConfig,
    pub compare: CompareConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sweep = SweepConfig::default();
        let mut tbl = TblConfig::default();
        tbl.f_max_hz = sweep.f_max_hz;
        Self {
            seed: sweep.seed,
            paths: Paths::under(Path::new(".")),
            mesh: MeshConfig::default(),
            material: MaterialProperties::default(),
            tbl,
            tbl_peak_hz: 100.0,
            tbl_table: None,
            ensemble_format: EnsembleFormat::Csv,
            ensemble_origin: EnsembleOrigin::Files,
            excite_frequencies_hz: Vec::new(),
            offline: OfflineConfig::for_band(sweep.f_min_hz, sweep.f_max_hz),
            sweep,
            compare: CompareConfig::default(),
        }
    }
}

/// Every recognized key.
pub const KEYS: &[&str] = &[
    "seed",
    "paths.workdir",
    "paths.model",
    "paths.ensembles",
    "paths.basis",
    "paths.sweeps",
    "paths.report",
    "plate.lx",
    "plate.ly",
    "plate.nx",
    "plate.ny",
    "cavity.lz",
    "cavity.nz",
    "mat.E",
    "mat.t",
    "mat.nu",
    "mat.rho_s",
    "mat.rho_f",
    "mat.c",
    "mat.eta",
    "tbl.model",
    "tbl.table",
    "tbl.u_inf",
    "tbl.u_c",
    "tbl.alpha_x",
    "tbl.alpha_y",
    "tbl.delta",
    "tbl.rho_air",
    "tbl.nu_air",
    "tbl.tau_w",
    "tbl.peak_hz",
    "tbl.n_kx",
    "tbl.n_ky",
    "tbl.source_nx",
    "tbl.source_ny",
    "ensemble.format",
    "ensemble.source",
    "excite.frequencies",
    "sweep.f_min",
    "sweep.f_max",
    "sweep.step",
    "sweep.mode",
    "sweep.samples",
    "sweep.probes",
    "sweep.keep_factors",
    "rank.l_max",
    "rank.energy_tol",
    "rank.method",
    "rank.oversample",
    "rank.power_iterations",
    "mor.points",
    "mor.order",
    "mor.deflation_tol",
    "mor.duplicate_right_factors",
    "compare.reference",
    "compare.candidate",
    "compare.max_err_cov",
    "compare.max_transfer_rel",
];

fn resolve(workdir: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.as_os_str().is_empty() || p == Path::new(".") {
        workdir.to_path_buf()
    } else if p.is_absolute() {
        p.to_path_buf()
    } else {
        workdir.join(p)
    }
}

macro_rules! set {
    ($target:expr, $value:expr) => {
        if let Some(v) = $value {
            $target = v;
        }
    };
}

impl RunConfig {
    pub fn from_table(t: &FlatTable) -> Result<Self> {
        let unknown: Vec<&str> = t.keys().filter(|k| !KEYS.contains(k)).collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!(
                "unknown configuration key(s): {}",
                unknown.join(", ")
            )));
        }
        let mut c = RunConfig::default();
        set!(c.seed, t.u64("seed")?);

        let workdir = PathBuf::from(t.str("paths.workdir")?.unwrap_or("."));
        c.paths = Paths::under(&workdir);
        for (key, slot) in [
            ("paths.model", &mut c.paths.model),
            ("paths.ensembles", &mut c.paths.ensembles),
            ("paths.basis", &mut c.paths.basis),
            ("paths.sweeps", &mut c.paths.sweeps),
            ("paths.report", &mut c.paths.report),
        ] {
            if let Some(p) = t.str(key)? {
                *slot = resolve(&workdir, p);
            }
        }

        set!(c.mesh.lx, t.f64("plate.lx")?);
        set!(c.mesh.ly, t.f64("plate.ly")?);
        set!(c.mesh.nx, t.usize("plate.nx")?);
        set!(c.mesh.ny, t.usize("plate.ny")?);
        set!(c.mesh.lz, t.f64("cavity.lz")?);
        set!(c.mesh.nz, t.usize("cavity.nz")?);

        let m = &mut c.material;
        set!(m.youngs_modulus, t.f64("mat.E")?);
        set!(m.thickness, t.f64("mat.t")?);
        set!(m.poisson_ratio, t.f64("mat.nu")?);
        set!(m.density_plate, t.f64("mat.rho_s")?);
        set!(m.density_fluid, t.f64("mat.rho_f")?);
        set!(m.speed_of_sound, t.f64("mat.c")?);
        set!(m.loss_factor, t.f64("mat.eta")?);

        let s = &mut c.sweep;
        s.seed = c.seed;
        set!(s.f_min_hz, t.f64("sweep.f_min")?);
        set!(s.f_max_hz, t.f64("sweep.f_max")?);
        set!(s.step_hz, t.f64("sweep.step")?);
        if let Some(mode) = t.str("sweep.mode")? {
            s.mode = mode.parse()?;
        }
        set!(s.samples, t.usize("sweep.samples")?);
        set!(s.probes, t.usize_list("sweep.probes")?);
        set!(s.keep_factors_hz, t.f64_list("sweep.keep_factors")?);

        let r = &mut s.rank;
        set!(r.l_max, t.usize("rank.l_max")?);
        set!(r.energy_tol, t.f64("rank.energy_tol")?);
        let method = t.str("rank.method")?.unwrap_or("exact");
        r.method = match method {
            "exact" => {
                for key in ["rank.oversample", "rank.power_iterations"] {
                    if t.contains(key) {
                        return Err(Error::Config(format!("{key} needs rank.method = \"randomized\"")));
                    }
                }
                SvdMethod::Exact
            }
            "randomized" => SvdMethod::Randomized {
                oversample: t.usize("rank.oversample")?.unwrap_or(10),
                power_iterations: t.usize("rank.power_iterations")?.unwrap_or(2),
                seed: c.seed,
            },
            other => {
                return Err(Error::Config(format!(
                    "rank.method must be exact or randomized, got '{other}'"
                )))
            }
        };

        c.tbl.f_max_hz = s.f_max_hz;
        set!(c.tbl.n_kx, t.usize("tbl.n_kx")?);
        set!(c.tbl.n_ky, t.usize("tbl.n_ky")?);
        set!(c.tbl.source_nx, t.usize("tbl.source_nx")?);
        set!(c.tbl.source_ny, t.usize("tbl.source_ny")?);
        set!(c.tbl_peak_hz, t.f64("tbl.peak_hz")?);
        match t.str("tbl.model")?.unwrap_or("corcos-goody") {
            "corcos-goody" => {
                if t.contains("tbl.table") {
                    return Err(Error::Config("tbl.table needs tbl.model = \"tabulated\"".into()));
                }
                let mut g = CorcosGoody::default();
                set!(g.u_inf, t.f64("tbl.u_inf")?);
                g.u_c = 0.7 * g.u_inf;
                set!(g.u_c, t.f64("tbl.u_c")?);
                set!(g.alpha_x, t.f64("tbl.alpha_x")?);
                set!(g.alpha_y, t.f64("tbl.alpha_y")?);
                set!(g.delta, t.f64("tbl.delta")?);
                set!(g.rho_air, t.f64("tbl.rho_air")?);
                set!(g.nu_air, t.f64("tbl.nu_air")?);
                g.tau_w = match t.f64("tbl.tau_w")? {
                    Some(v) => v,
                    None => g.tau_w_for_peak(c.tbl_peak_hz)?,
                };
                g.validate()?;
                c.tbl.spectrum = SpectrumModel::CorcosGoody(g);
            }
            "tabulated" => {
                let Some(table) = t.str("tbl.table")? else {
                    return Err(Error::Config("tbl.model = \"tabulated\" needs tbl.table".into()));
                };
                let Some(u_c) = t.f64("tbl.u_c")? else {
                    return Err(Error::Config("tbl.model = \"tabulated\" needs tbl.u_c".into()));
                };
                let path = resolve(&workdir, table);
                c.tbl.spectrum = SpectrumModel::Tabulated(TabulatedSpectrum::from_csv(&path, u_c)?);
                c.tbl_table = Some(path);
            }
            other => {
                return Err(Error::Config(format!(
                    "tbl.model must be corcos-goody or tabulated, got '{other}'"
                )))
            }
        }

        if let Some(f) = t.str("ensemble.format")? {
            c.ensemble_format = EnsembleFormat::parse(f)?;
        }
        if let Some(f) = t.str("ensemble.source")? {
            c.ensemble_origin = EnsembleOrigin::parse(f)?;
        }
        set!(c.excite_frequencies_hz, t.f64_list("excite.frequencies")?);

        c.offline = OfflineConfig::for_band(c.sweep.f_min_hz, c.sweep.f_max_hz);
        set!(c.offline.points_hz, t.f64_list("mor.points")?);
        set!(c.offline.order, t.usize("mor.order")?);
        set!(c.offline.deflation_tol, t.f64("mor.deflation_tol")?);
        set!(c.offline.duplicate_right_factors, t.bool("mor.duplicate_right_factors")?);

        if let Some(m) = t.str("compare.reference")? {
            c.compare.reference = m.parse()?;
        }
        if let Some(m) = t.str("compare.candidate")? {
            c.compare.candidate = m.parse()?;
        }
        c.compare.max_err_cov = t.f64("compare.max_err_cov")?;
        c.compare.max_transfer_rel = t.f64("compare.max_transfer_rel")?;

        c.validate()?;
        Ok(c)
    }

    pub fn parse(text: &str, context: &str) -> Result<Self> {
        Self::from_table(&FlatTable::parse(text, context)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.sweep.validate()?;
        self.tbl.spectrum.validate()?;
        for (key, n) in [
            ("plate.nx", self.mesh.nx),
            ("plate.ny", self.mesh.ny),
            ("cavity.nz", self.mesh.nz),
            ("tbl.n_kx", self.tbl.n_kx),
            ("tbl.n_ky", self.tbl.n_ky),
            ("tbl.source_nx", self.tbl.source_nx),
            ("tbl.source_ny", self.tbl.source_ny),
            ("mor.order", self.offline.order),
        ] {
            if n == 0 {
                return Err(Error::Config(format!("{key} must be at least 1")));
            }
        }
        for (key, v) in [("plate.lx", self.mesh.lx), ("plate.ly", self.mesh.ly), ("cavity.lz", self.mesh.lz)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{key} must be positive, got {v}")));
            }
        }
        if self.offline.points_hz.is_empty() {
            return Err(Error::Config("mor.points must list at least one frequency".into()));
        }
        if !(self.offline.deflation_tol > 0.0 && self.offline.deflation_tol < 1.0) {
            return Err(Error::Config(format!(
                "mor.deflation_tol must lie in (0, 1), got {}",
                self.offline.deflation_tol
            )));
        }
        if self.compare.reference == self.compare.candidate {
            return Err(Error::Config("compare.reference and compare.candidate must differ".into()));
        }
        if let Some(&f) = self.excite_frequencies_hz.iter().find(|f| !(**f >= 0.0 && f.is_finite())) {
            return Err(Error::Config(format!("excite.frequencies entries must be non-negative, got {f}")));
        }
        Ok(())
    }

    /// The effective configuration with every key spelled out.
    pub fn to_text(&self) -> String {
        let mut w = KeyValueWriter::new();
        w.comment("effective configuration");
        w.int("seed", self.seed);
        let p = &self.paths;
        let rel = |q: &Path| match q.strip_prefix(&p.workdir) {
            Ok(r) if r.as_os_str().is_empty() => ".".to_string(),
            Ok(r) => r.display().to_string(),
            Err(_) => q.display().to_string(),
        };
        w.str("paths.workdir", &p.workdir.display().to_string())
            .str("paths.model", &rel(&p.model))
            .str("paths.ensembles", &rel(&p.ensembles))
            .str("paths.basis", &rel(&p.basis))
            .str("paths.sweeps", &rel(&p.sweeps))
            .str("paths.report", &rel(&p.report));
        let g = &self.mesh;
        w.f64("plate.lx", g.lx)
            .f64("plate.ly", g.ly)
            .int("plate.nx", g.nx as u64)
            .int("plate.ny", g.ny as u64)
            .f64("cavity.lz", g.lz)
            .int("cavity.nz", g.nz as u64);
        write_material(&mut w, &self.material);
        match &self.tbl.spectrum {
            SpectrumModel::CorcosGoody(m) => {
                w.str("tbl.model", "corcos-goody")
                    .f64("tbl.u_inf", m.u_inf)
                    .f64("tbl.u_c", m.u_c)
                    .f64("tbl.alpha_x", m.alpha_x)
                    .f64("tbl.alpha_y", m.alpha_y)
                    .f64("tbl.delta", m.delta)
                    .f64("tbl.rho_air", m.rho_air)
                    .f64("tbl.nu_air", m.nu_air)
                    .f64("tbl.tau_w", m.tau_w);
            }
            SpectrumModel::Tabulated(t) => {
                let table = self.tbl_table.as_deref().unwrap_or(Path::new(""));
                w.str("tbl.model", "tabulated")
                    .str("tbl.table", &rel(table))
                    .f64("tbl.u_c", t.convective_velocity);
            }
        }
        w.f64("tbl.peak_hz", self.tbl_peak_hz)
            .int("tbl.n_kx", self.tbl.n_kx as u64)
            .int("tbl.n_ky", self.tbl.n_ky as u64)
            .int("tbl.source_nx", self.tbl.source_nx as u64)
            .int("tbl.source_ny", self.tbl.source_ny as u64);
        w.str("ensemble.format", self.ensemble_format.as_str())
            .str("ensemble.source", self.ensemble_origin.as_str())
            .f64_list("excite.frequencies", &self.excite_frequencies_hz);
        let s = &self.sweep;
        w.f64("sweep.f_min", s.f_min_hz)
            .f64("sweep.f_max", s.f_max_hz)
            .f64("sweep.step", s.step_hz)
            .str("sweep.mode", s.mode.as_str())
            .int("sweep.samples", s.samples as u64)
            .usize_list("sweep.probes", &s.probes)
            .f64_list("sweep.keep_factors", &s.keep_factors_hz);
        w.int("rank.l_max", s.rank.l_max as u64).f64("rank.energy_tol", s.rank.energy_tol);
        match s.rank.method {
            SvdMethod::Exact => {
                w.str("rank.method", "exact");
            }
            SvdMethod::Randomized {
                oversample,
                power_iterations,
                ..
            } => {
                w.str("rank.method", "randomized")
                    .int("rank.oversample", oversample as u64)
                    .int("rank.power_iterations", power_iterations as u64);
            }
        }
        let o = &self.offline;
        w.f64_list("mor.points", &o.points_hz)
            .int("mor.order", o.order as u64)
            .f64("mor.deflation_tol", o.deflation_tol)
            .bool("mor.duplicate_right_factors", o.duplicate_right_factors);
        w.str("compare.reference", self.compare.reference.as_str())
            .str("compare.candidate", self.compare.candidate.as_str());
        if let Some(v) = self.compare.max_err_cov {
            w.f64("compare.max_err_cov", v);
        }
        if let Some(v) = self.compare.max_transfer_rel {
            w.f64("compare.max_transfer_rel", v);
        }
        w.finish()
    }

    /// Frequencies whose ensembles the excite stage writes.
    pub fn excite_frequencies(&self) -> Result<Vec<f64>> {
        let mut f = if self.excite_frequencies_hz.is_empty() {
            let mut g = self.sweep.grid()?;
            g.extend(&self.offline.points_hz);
            g
        } else {
            self.excite_frequencies_hz.clone()
        };
        f.sort_by(f64::total_cmp);
        f.dedup_by_key(|x| crate::tbl::frequency_key(*x));
        Ok(f)
    }
}

pub fn write_material(w: &mut KeyValueWriter, m: &MaterialProperties) {
    w.f64("mat.E", m.youngs_modulus)
        .f64("mat.t", m.thickness)
        .f64("mat.nu", m.poisson_ratio)
        .f64("mat.rho_s", m.density_plate)
        .f64("mat.rho_f", m.density_fluid)
        .f64("mat.c", m.speed_of_sound)
        .f64("mat.eta", m.loss_factor);
}

pub fn read_material(t: &FlatTable) -> Result<MaterialProperties> {
    let need = |key: &str| t.f64(key)?.ok_or_else(|| Error::Config(format!("missing {key}")));
    let m = MaterialProperties {
        youngs_modulus: need("mat.E")?,
        thickness: need("mat.t")?,
        poisson_ratio: need("mat.nu")?,
        density_plate: need("mat.rho_s")?,
        density_fluid: need("mat.rho_f")?,
        speed_of_sound: need("mat.c")?,
        loss_factor: need("mat.eta")?,
    };
    m.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("", "t").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.mesh.n_dofs(), 4 * 441 + 441 * 21);
        assert_eq!(c.offline.points_hz, vec![114.0, 414.0]);
    }

    #[test]
    fn dotted_keys_and_tables_agree() {
        let a = RunConfig::parse("sweep.step = 4\nmat.eta = 0.01\n", "t").unwrap();
        let b = RunConfig::parse("[sweep]\nstep = 4\n[mat]\neta = 0.01\n", "t").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sweep.step_hz, 4.0);
        assert_eq!(a.material.loss_factor, 0.01);
    }

    #[test]
    fn dump_parses_back_to_the_same_config() {
        let text = "seed = 7\nsweep.f_min = 20\nsweep.f_max = 100\nsweep.probes = [3, 9]\n\
                    rank.method = \"randomized\"\nrank.oversample = 5\nmor.order = 4\n\
                    compare.max_err_cov = 1e-2\nensemble.format = \"bin\"\n";
        let c = RunConfig::parse(text, "t").unwrap();
        let dumped = c.to_text();
        let again = RunConfig::parse(&dumped, "dump").unwrap();
        assert_eq!(c, again);
        assert_eq!(again.to_text(), dumped);
        assert_eq!(c.offline.points_hz, default_points(20.0, 100.0));
        assert!(matches!(c.sweep.rank.method, SvdMethod::Randomized { seed: 7, oversample: 5, .. }));
    }

    fn default_points(lo: f64, hi: f64) -> Vec<f64> {
        crate::mor::default_points_hz(lo, hi)
    }

    #[test]
    fn overrides_take_precedence() {
        let mut t = FlatTable::parse("sweep.step = 4\n", "t").unwrap();
        t.set("sweep.step=1").unwrap();
        t.set("sweep.mode = fom").unwrap();
        t.set("mor.points=[100, 200.5]").unwrap();
        let c = RunConfig::from_table(&t).unwrap();
        assert_eq!(c.sweep.step_hz, 1.0);
        assert_eq!(c.sweep.mode, SweepMode::Fom);
        assert_eq!(c.offline.points_hz, vec![100.0, 200.5]);
        assert!(t.set("novalue").is_err());
    }

    #[test]
    fn unknown_and_mistyped_keys_are_config_errors() {
        let cases = [
            "sweep.stpe = 2",
            "sweep.step = \"two\"",
            "plate.nx = -3",
            "plate.nx = 0",
            "rank.method = \"qr\"",
            "rank.oversample = 4",
            "sweep.mode = \"modal\"",
            "tbl.model = \"tabulated\"",
            "mat.nu = 0.7",
            "compare.reference = \"rom\"",
        ];
        for text in cases {
            let e = RunConfig::parse(text, "t").unwrap_err();
            assert!(matches!(e, Error::Config(_)), "{text}: {e}");
        }
        assert!(matches!(RunConfig::parse("a = [", "t"), Err(Error::Parse { .. })));
    }

    #[test]
    fn paths_resolve_under_workdir() {
        let c = RunConfig::parse("paths.workdir = \"/w\"\npaths.basis = \"b2\"\npaths.report = \"/abs\"", "t").unwrap();
        assert_eq!(c.paths.model, PathBuf::from("/w/model"));
        assert_eq!(c.paths.basis, PathBuf::from("/w/b2"));
        assert_eq!(c.paths.report, PathBuf::from("/abs"));
        assert_eq!(c.paths.sweep(SweepMode::FomLowRank), PathBuf::from("/w/sweep-fom-lowrank"));
    }

    #[test]
    fn peak_key_sets_wall_shear() {
        let c = RunConfig::parse("tbl.peak_hz = 150", "t").unwrap();
        let SpectrumModel::CorcosGoody(m) = &c.tbl.spectrum else { panic!() };
        assert!((m.point_spectrum_peak_hz() - 150.0).abs() < 0.5);
    }

    #[test]
    fn excite_frequencies_merge_grid_and_points() {
        let c = RunConfig::parse("sweep.f_min = 100\nsweep.f_max = 120\nsweep.step = 10\nmor.points = [110, 115]", "t")
            .unwrap();
        assert_eq!(c.excite_frequencies().unwrap(), vec![100.0, 110.0, 115.0, 120.0]);
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1 + 0.2, 1e-300, 70e9, -2.5, 1.0, f64::INFINITY] {
            let text = format!("x = {}", fmt_f64(v));
            assert_eq!(FlatTable::parse(&text, "t").unwrap().f64("x").unwrap(), Some(v));
        }
    }
}
