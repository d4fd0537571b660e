//! File-based pipeline stages: assemble, excite, offline, sweep, compare.
//!
//! Each stage reads only the configuration and files written by earlier
//! stages. Outputs are pure functions of those inputs; wall-clock timings
//! go to separate `timing*` files so everything else is byte-reproducible.

use std::path::{Path, PathBuf};

use faer::{c64, Mat};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{read_material, write_material, EnsembleOrigin, FlatTable, KeyValueWriter, RunConfig};
use crate::error::{Error, Result};
use crate::fem::{assemble_system, build_cavity_mesh, build_plate_mesh, CoupledSystem, ModelGeometry};
use crate::io::{self, CsvTable, FileEnsembleSource};
use crate::moments::SolutionCovariance;
use crate::mor::RomModel;
use crate::sweep::{
    build_rom, covariance_error, run_sweep, transfer_error, EnsembleSource, OfflineReport, PhaseTimings,
    SweepMode, SweepResult, TimingColumn, TimingTable, Trace,
};
use crate::tbl::{frequency_key, TblGenerator};

pub const K_FILE: &str = "K.mtx";
pub const M_FILE: &str = "M.mtx";
pub const C_SF_FILE: &str = "C_sf.mtx";
pub const MODEL_META: &str = "model.meta";
pub const OFFLINE_META: &str = "offline.meta";
pub const OFFLINE_TIMING: &str = "timing.meta";
pub const STEPS_FILE: &str = "steps.csv";
pub const VARIANCE_FILE: &str = "variance.csv";
pub const FLAGGED_FILE: &str = "flagged.csv";
pub const SWEEP_META: &str = "sweep.meta";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const SWEEP_TIMING: &str = "timing.meta";
pub const TRANSFER_ERRORS: &str = "transfer_errors.csv";
pub const COV_ERRORS: &str = "cov_errors.csv";
pub const SUMMARY: &str = "summary.txt";
pub const TIMING_TABLE: &str = "timing.txt";

/// Model size the reference study used.
pub const REFERENCE_DOFS: usize = 40800;

fn refuse_overwrite(paths: &[PathBuf], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(Error::Config(format!(
            "{} already exists; pass --force to overwrite",
            p.display()
        ))),
        None => Ok(()),
    }
}

fn need_file(path: &Path, stage: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, format!("missing; run the {stage} stage first")),
        ))
    }
}

/// SHA-256 over the DOF layout: counts, then every node's coordinates and
/// DOF indices.
pub fn dof_map_digest(g: &ModelGeometry) -> String {
    let mut h = Sha256::new();
    h.update((g.plate.n_dofs() as u64).to_le_bytes());
    h.update((g.cavity.n_nodes() as u64).to_le_bytes());
    for (node, c) in g.plate.coords.iter().enumerate() {
        for x in c {
            h.update(x.to_le_bytes());
        }
        for d in g.plate.dof_map(node) {
            h.update((d as u64).to_le_bytes());
        }
    }
    for (node, c) in g.cavity.coords.iter().enumerate() {
        for x in c {
            h.update(x.to_le_bytes());
        }
        h.update((g.cavity.dof_map(node) as u64).to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn geometry(cfg: &RunConfig) -> Result<ModelGeometry> {
    let g = &cfg.mesh;
    Ok(ModelGeometry {
        plate: build_plate_mesh(g.lx, g.ly, g.nx, g.ny)?,
        cavity: build_cavity_mesh(g.lx, g.ly, g.lz, g.nx, g.ny, g.nz)?,
    })
}

fn mesh_comments(cfg: &RunConfig, sys: &CoupledSystem, what: &str) -> Vec<String> {
    let g = &cfg.mesh;
    vec![
        what.to_string(),
        format!("n_s = {}, n_f = {}", sys.n_s, sys.n_f),
        format!(
            "plate {} x {} m, {} x {} elements; cavity depth {} m, {} layers",
            g.lx, g.ly, g.nx, g.ny, g.lz, g.nz
        ),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssembleReport {
    pub n_s: usize,
    pub n_f: usize,
    pub nnz_k: usize,
    pub nnz_m: usize,
    pub digest: String,
}

impl AssembleReport {
    pub fn n(&self) -> usize {
        self.n_s + self.n_f
    }
}

/// Meshes and assembles the model; writes `K`, `M`, `C_sf` and metadata.
pub fn assemble(cfg: &RunConfig, force: bool) -> Result<AssembleReport> {
    let dir = &cfg.paths.model;
    let outputs: Vec<PathBuf> = [K_FILE, M_FILE, C_SF_FILE, MODEL_META].iter().map(|f| dir.join(f)).collect();
    refuse_overwrite(&outputs, force)?;
    let n = cfg.mesh.n_dofs();
    if n.abs_diff(REFERENCE_DOFS) * 50 <= REFERENCE_DOFS {
        log::info!("{n} DOFs is the scale of the reference study ({REFERENCE_DOFS} DOFs); expect long factorizations");
    }
    let geo = geometry(cfg)?;
    let digest = dof_map_digest(&geo);
    let sys = assemble_system(geo.plate, geo.cavity, &cfg.material)?;
    io::write_coordinate(&outputs[0], &sys.k, &mesh_comments(cfg, &sys, "coupled stiffness K"))?;
    io::write_coordinate(&outputs[1], &sys.m, &mesh_comments(cfg, &sys, "coupled mass M"))?;
    io::write_coordinate(&outputs[2], &sys.c_sf, &mesh_comments(cfg, &sys, "coupling C_sf"))?;

    let g = &cfg.mesh;
    let mut w = KeyValueWriter::new();
    w.comment("coupled plate-cavity model; structure DOFs first")
        .int("n", sys.n() as u64)
        .int("n_s", sys.n_s as u64)
        .int("n_f", sys.n_f as u64)
        .f64("plate.lx", g.lx)
        .f64("plate.ly", g.ly)
        .int("plate.nx", g.nx as u64)
        .int("plate.ny", g.ny as u64)
        .f64("cavity.lz", g.lz)
        .int("cavity.nz", g.nz as u64);
    write_material(&mut w, &cfg.material);
    w.str("dof_map_digest", &digest);
    io::write_text(&outputs[3], &w.finish())?;
    log::info!("assembled n = {} ({} structure + {} fluid DOFs)", sys.n(), sys.n_s, sys.n_f);
    Ok(AssembleReport {
        n_s: sys.n_s,
        n_f: sys.n_f,
        nnz_k: sys.k.nnz(),
        nnz_m: sys.m.nnz(),
        digest,
    })
}

/// Checks the model metadata against the configuration and returns the
/// geometry it describes.
fn check_model_meta(cfg: &RunConfig) -> Result<(ModelGeometry, usize, usize)> {
    let path = cfg.paths.model.join(MODEL_META);
    need_file(&path, "assemble")?;
    let t = FlatTable::read(&path)?;
    let ctx = path.display().to_string();
    let missing = |k: &str| Error::parse(&ctx, format!("missing '{k}'"));
    let n_s = t.usize("n_s")?.ok_or_else(|| missing("n_s"))?;
    let n_f = t.usize("n_f")?.ok_or_else(|| missing("n_f"))?;
    let g = &cfg.mesh;
    let recorded = (
        t.f64("plate.lx")?,
        t.f64("plate.ly")?,
        t.usize("plate.nx")?,
        t.usize("plate.ny")?,
        t.f64("cavity.lz")?,
        t.usize("cavity.nz")?,
    );
    if recorded != (Some(g.lx), Some(g.ly), Some(g.nx), Some(g.ny), Some(g.lz), Some(g.nz)) {
        return Err(Error::Config(format!(
            "{ctx} describes a different mesh than the configuration; rerun assemble"
        )));
    }
    if read_material(&t)? != cfg.material {
        return Err(Error::Config(format!(
            "{ctx} was assembled with different mat.* values; rerun assemble"
        )));
    }
    let geo = geometry(cfg)?;
    let digest = t.str("dof_map_digest")?.ok_or_else(|| missing("dof_map_digest"))?;
    if digest != dof_map_digest(&geo) {
        return Err(Error::Config(format!("{ctx}: DOF map digest does not match this build's numbering")));
    }
    Ok((geo, n_s, n_f))
}

/// Reads the assembled model back.
pub fn load_model(cfg: &RunConfig) -> Result<CoupledSystem> {
    let (geo, n_s, n_f) = check_model_meta(cfg)?;
    let dir = &cfg.paths.model;
    let (k, _) = io::read_coordinate(&dir.join(K_FILE))?;
    let (m, _) = io::read_coordinate(&dir.join(M_FILE))?;
    if k.nrows() != n_s + n_f {
        return Err(Error::parse(
            dir.join(K_FILE).display().to_string(),
            format!("{} rows, metadata says {}", k.nrows(), n_s + n_f),
        ));
    }
    CoupledSystem::from_matrices_with(k, m, n_s, cfg.material.clone(), Some(geo))
}

fn generator(cfg: &RunConfig, geo: &ModelGeometry, n: usize) -> Result<TblGenerator> {
    TblGenerator::new(&cfg.tbl, &geo.plate, n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExciteReport {
    pub files: Vec<PathBuf>,
}

/// Writes one ensemble file per requested frequency.
pub fn excite(cfg: &RunConfig, force: bool) -> Result<ExciteReport> {
    let (geo, n_s, n_f) = check_model_meta(cfg)?;
    let gen = generator(cfg, &geo, n_s + n_f)?;
    let freqs = cfg.excite_frequencies()?;
    let files: Vec<PathBuf> = freqs
        .iter()
        .map(|&f| io::ensemble_path(&cfg.paths.ensembles, f, cfg.ensemble_format))
        .collect();
    refuse_overwrite(&files, force)?;
    io::ensure_dir(&cfg.paths.ensembles)?;
    for (k, (&f, path)) in freqs.iter().zip(&files).enumerate() {
        let e = gen.generate(f, cfg.sweep.samples, cfg.seed)?;
        io::write_ensemble(path, &e, cfg.ensemble_format)?;
        log::info!("excite: {f} Hz ({}/{}) -> {}", k + 1, freqs.len(), path.display());
    }
    Ok(ExciteReport { files })
}

/// Ensemble source selected by `ensemble.source`.
pub fn ensemble_source(cfg: &RunConfig, system: &CoupledSystem) -> Result<Box<dyn EnsembleSource>> {
    Ok(match cfg.ensemble_origin {
        EnsembleOrigin::Files => Box::new(FileEnsembleSource {
            dir: cfg.paths.ensembles.clone(),
            format: cfg.ensemble_format,
        }),
        EnsembleOrigin::Generate => {
            let geo = system
                .geometry
                .as_ref()
                .ok_or_else(|| Error::Contract("generating loads needs the model geometry".into()))?;
            Box::new(generator(cfg, geo, system.n())?)
        }
    })
}

/// Moments, truncated SVD and Krylov basis at the expansion points; writes
/// the basis and its sidecars.
pub fn offline(cfg: &RunConfig, force: bool) -> Result<OfflineReport> {
    let dir = &cfg.paths.basis;
    let outputs: Vec<PathBuf> = [io::BASIS_FILE, io::BASIS_META, OFFLINE_META, OFFLINE_TIMING]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    refuse_overwrite(&outputs, force)?;
    let system = load_model(cfg)?;
    let source = ensemble_source(cfg, &system)?;
    let (rom, report) = build_rom(&system, source.as_ref(), &cfg.sweep, &cfg.offline)?;
    io::write_basis(dir, &rom.basis)?;
    let mut w = KeyValueWriter::new();
    w.comment("offline phase summary")
        .f64_list("points_hz", &cfg.offline.points_hz)
        .usize_list("ranks", &report.ranks)
        .usize_list("inputs", &report.inputs)
        .int("r", report.r as u64)
        .int("nominal_size", report.nominal as u64)
        .int("deflations", report.deflations as u64);
    io::write_text(&outputs[2], &w.finish())?;
    io::write_text(&outputs[3], &KeyValueWriter::new().f64("offline_seconds", report.seconds).finish())?;
    log::info!(
        "basis r = {} (nominal {}, {} deflated) in {:.1} s",
        report.r,
        report.nominal,
        report.deflations,
        report.seconds
    );
    Ok(report)
}

/// Reads the basis and rebuilds the reduced matrices.
pub fn load_rom(cfg: &RunConfig, system: &CoupledSystem) -> Result<RomModel> {
    let dir = &cfg.paths.basis;
    if !dir.join(io::BASIS_META).exists() {
        return Err(Error::Config(format!(
            "ROM mode needs a basis in {}; run the offline stage first",
            dir.display()
        )));
    }
    let basis = io::read_basis(dir)?;
    let mut rom = RomModel::new(system, basis)?;
    let timing = dir.join(OFFLINE_TIMING);
    rom.offline_seconds = if timing.exists() {
        FlatTable::read(&timing)?.f64("offline_seconds")?.unwrap_or(0.0)
    } else {
        log::warn!("{} missing; offline cost reported as 0", timing.display());
        0.0
    };
    Ok(rom)
}

/// One structural and one fluid DOF away from symmetry lines: the
/// transverse displacement nearest `(0.3 lx, 0.2 ly)` and the pressure
/// nearest `(0.7 lx, 0.6 ly, 0.5 lz)`.
pub fn default_probes(system: &CoupledSystem) -> Result<Vec<usize>> {
    let g = system
        .geometry
        .as_ref()
        .ok_or_else(|| Error::Config("sweep.probes must be set for a model without geometry".into()))?;
    // interior nodes whenever the mesh has any
    let near = |frac: f64, cells: usize| ((frac * cells as f64).round() as usize).clamp(1, cells.max(2) - 1);
    let p = &g.plate;
    let node = near(0.2, p.ny) * (p.nx + 1) + near(0.3, p.nx);
    let c = &g.cavity;
    let fluid = c.dof_map(c.node(near(0.7, c.nx), near(0.6, c.ny), near(0.5, c.nz)));
    Ok(vec![p.w_dof(node), system.n_s + fluid])
}

fn sweep_dir(cfg: &RunConfig, mode: SweepMode) -> PathBuf {
    cfg.paths.sweep(mode)
}

fn factor_stem(frequency_hz: f64) -> String {
    format!("cov_{}mHz", frequency_key(frequency_hz))
}

fn write_factors(dir: &Path, f: f64, mean: Option<&Vec<c64>>, c: &SolutionCovariance) -> Result<()> {
    let stem = factor_stem(f);
    let note = [format!("solution covariance factor U at {f} Hz")];
    io::write_array(&dir.join(format!("{stem}_u.mtx")), c.u.as_ref(), &note)?;
    if !c.hermitian {
        let note = [format!("solution covariance factor V at {f} Hz")];
        io::write_array(&dir.join(format!("{stem}_v.mtx")), c.v.as_ref(), &note)?;
    }
    if let Some(mean) = mean {
        let m = Mat::from_fn(mean.len(), 1, |i, _| mean[i]);
        io::write_array(&dir.join(format!("mean_{}mHz.mtx", frequency_key(f))), m.as_ref(), &[format!("mean at {f} Hz")])?;
    }
    let mut w = KeyValueWriter::new();
    w.f64("frequency_hz", f).bool("hermitian", c.hermitian).f64_list("s", &c.s);
    io::write_text(&dir.join(format!("{stem}.meta")), &w.finish())
}

/// Covariance factors retained at one frequency by a sweep stage.
pub fn read_factors(dir: &Path, frequency_hz: f64) -> Result<SolutionCovariance> {
    let stem = factor_stem(frequency_hz);
    let meta = dir.join(format!("{stem}.meta"));
    let t = FlatTable::read(&meta)?;
    let ctx = meta.display().to_string();
    let s = t.f64_list("s")?.ok_or_else(|| Error::parse(&ctx, "missing 's'"))?;
    let hermitian = t.bool("hermitian")?.ok_or_else(|| Error::parse(&ctx, "missing 'hermitian'"))?;
    let (u, _) = io::read_array(&dir.join(format!("{stem}_u.mtx")))?;
    let v = if hermitian { u.clone() } else { io::read_array(&dir.join(format!("{stem}_v.mtx")))?.0 };
    if u.ncols() != s.len() || v.ncols() != s.len() || u.nrows() != v.nrows() {
        return Err(Error::parse(ctx, "factor shapes disagree with the singular values"));
    }
    Ok(SolutionCovariance { u, s, v, hermitian })
}

fn trace_file(probe: usize) -> String {
    format!("mean_dof{probe}.csv")
}

/// Writes everything but timings; the byte-reproducible part of a sweep.
pub fn write_sweep(dir: &Path, res: &SweepResult) -> Result<()> {
    io::ensure_dir(dir)?;
    for (k, &p) in res.probes.iter().enumerate() {
        io::trace_csv(&res.trace(k)).write(&dir.join(trace_file(p)))?;
    }
    let names: Vec<String> = res.probes.iter().map(|p| format!("var_dof{p}")).collect();
    let mut header = vec!["f_Hz"];
    header.extend(names.iter().map(String::as_str));
    let mut var = CsvTable::new(&header);
    let mut steps = CsvTable::new(&["f_Hz", "rank", "solves", "residual"]);
    for r in &res.results {
        let mut row = vec![r.frequency_hz];
        row.extend((0..res.probes.len()).map(|k| r.covariance_probes[(k, k)].re));
        var.push(row);
        steps.push(vec![r.frequency_hz, r.rank as f64, r.solves as f64, r.residual]);
    }
    var.write(&dir.join(VARIANCE_FILE))?;
    steps.write(&dir.join(STEPS_FILE))?;
    let mut flagged = String::from("f_Hz,reason\n");
    for fl in &res.flagged {
        flagged.push_str(&format!("{},\"{}\"\n", crate::config::fmt_f64(fl.frequency_hz), fl.reason.replace('"', "'")));
    }
    io::write_text(&dir.join(FLAGGED_FILE), &flagged)?;
    let mut kept = Vec::new();
    for r in &res.results {
        if let Some(c) = &r.factors {
            write_factors(dir, r.frequency_hz, r.mean.as_ref(), c)?;
            kept.push(r.frequency_hz);
        }
    }
    let mut w = KeyValueWriter::new();
    w.comment("sweep result")
        .str("mode", res.mode.as_str())
        .usize_list("probes", &res.probes)
        .f64_list("frequencies_hz", &res.frequencies_hz())
        .f64_list("flagged_hz", &res.flagged.iter().map(|f| f.frequency_hz).collect::<Vec<_>>())
        .f64_list("factors_hz", &kept);
    io::write_text(&dir.join(SWEEP_META), &w.finish())
}

const TIMING_HEADER: [&str; 8] = ["f_Hz", "excite", "svd", "assemble", "factorize", "solve", "reduce", "total"];

pub fn write_sweep_timings(dir: &Path, res: &SweepResult) -> Result<()> {
    let mut t = CsvTable::new(&TIMING_HEADER);
    for r in &res.results {
        let p = &r.timings;
        t.push(vec![r.frequency_hz, p.excite, p.svd, p.assemble, p.factorize, p.solve, p.reduce, p.total()]);
    }
    t.write(&dir.join(TIMINGS_FILE))?;
    io::write_text(
        &dir.join(SWEEP_TIMING),
        &KeyValueWriter::new().f64("offline_seconds", res.offline_seconds).finish(),
    )
}

/// Runs a sweep in `mode` and writes its results.
pub fn sweep(cfg: &RunConfig, mode: SweepMode, force: bool) -> Result<SweepResult> {
    let dir = sweep_dir(cfg, mode);
    refuse_overwrite(&[dir.join(SWEEP_META)], force)?;
    let system = load_model(cfg)?;
    let source = ensemble_source(cfg, &system)?;
    let rom = match mode {
        SweepMode::Rom => Some(load_rom(cfg, &system)?),
        _ => None,
    };
    let mut sc = cfg.sweep.clone();
    sc.mode = mode;
    if sc.probes.is_empty() {
        sc.probes = default_probes(&system)?;
    }
    let res = run_sweep(&sc, &system, source.as_ref(), rom.as_ref())?;
    write_sweep(&dir, &res)?;
    write_sweep_timings(&dir, &res)?;
    log::info!(
        "{mode} sweep: {} frequencies, {} flagged -> {}",
        res.results.len(),
        res.flagged.len(),
        dir.display()
    );
    Ok(res)
}

/// Sweep results as read back from disk.
#[derive(Clone, Debug)]
pub struct SweepFiles {
    pub dir: PathBuf,
    pub mode: SweepMode,
    pub probes: Vec<usize>,
    pub traces: Vec<Trace>,
    pub flagged_hz: Vec<f64>,
    pub factors_hz: Vec<f64>,
}

impl SweepFiles {
    pub fn read(dir: &Path) -> Result<Self> {
        let meta = dir.join(SWEEP_META);
        need_file(&meta, "sweep")?;
        let t = FlatTable::read(&meta)?;
        let ctx = meta.display().to_string();
        let missing = |k: &str| Error::parse(&ctx, format!("missing '{k}'"));
        let mode: SweepMode = t.str("mode")?.ok_or_else(|| missing("mode"))?.parse()?;
        let probes = t.usize_list("probes")?.ok_or_else(|| missing("probes"))?;
        let traces = probes
            .iter()
            .map(|&p| {
                let path = dir.join(trace_file(p));
                io::parse_trace_csv(&io::read_text(&path)?, &path.display().to_string())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dir: dir.to_path_buf(),
            mode,
            probes,
            traces,
            flagged_hz: t.f64_list("flagged_hz")?.unwrap_or_default(),
            factors_hz: t.f64_list("factors_hz")?.unwrap_or_default(),
        })
    }

    /// Mean per-step timings and the offline cost, when recorded.
    pub fn timing_column(&self) -> Result<Option<TimingColumn>> {
        let path = self.dir.join(TIMINGS_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let t = CsvTable::read(&path)?;
        if t.header != TIMING_HEADER {
            return Err(Error::parse(path.display().to_string(), "unexpected timing columns"));
        }
        let steps = t.rows.len();
        if steps == 0 {
            return Ok(None);
        }
        let mean = |k: usize| t.rows.iter().map(|r| r[k]).sum::<f64>() / steps as f64;
        let offline_path = self.dir.join(SWEEP_TIMING);
        let offline_seconds = if offline_path.exists() {
            FlatTable::read(&offline_path)?.f64("offline_seconds")?.unwrap_or(0.0)
        } else {
            0.0
        };
        Ok(Some(TimingColumn {
            mode: self.mode,
            steps,
            offline_seconds,
            per_step: PhaseTimings {
                excite: mean(1),
                svd: mean(2),
                assemble: mean(3),
                factorize: mean(4),
                solve: mean(5),
                reduce: mean(6),
            },
        }))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeError {
    pub dof: usize,
    pub max_abs: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub transfer: Vec<ProbeError>,
    /// `(frequency, err_cov)` wherever both sweeps kept factors.
    pub covariance: Vec<(f64, f64)>,
    pub timing: TimingTable,
    /// Threshold violations, one line each; empty when all pass.
    pub violations: Vec<String>,
}

fn compare_results(cfg: &RunConfig, reference: &SweepFiles, candidate: &SweepFiles) -> Result<CompareReport> {
    if reference.probes != candidate.probes {
        return Err(Error::Contract(format!(
            "probe sets differ: {:?} in {} and {:?} in {}",
            reference.probes,
            reference.dir.display(),
            candidate.probes,
            candidate.dir.display()
        )));
    }
    let mut skip = reference.flagged_hz.clone();
    skip.extend(&candidate.flagged_hz);
    let mut transfer = Vec::new();
    for (k, &dof) in reference.probes.iter().enumerate() {
        let a = reference.traces[k].without(&skip);
        let b = candidate.traces[k].without(&skip);
        let e = transfer_error(&a, &b)?;
        transfer.push(ProbeError {
            dof,
            max_abs: e.max_abs,
            relative: e.relative,
        });
    }
    let common: Vec<f64> = reference
        .factors_hz
        .iter()
        .copied()
        .filter(|f| candidate.factors_hz.iter().any(|g| frequency_key(*g) == frequency_key(*f)))
        .collect();
    let covariance = common
        .par_iter()
        .map(|&f| {
            let a = read_factors(&reference.dir, f)?;
            let b = read_factors(&candidate.dir, f)?;
            Ok((f, covariance_error(&a, &b)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut violations = Vec::new();
    if let Some(tol) = cfg.compare.max_err_cov {
        for &(f, e) in &covariance {
            if !(e <= tol) {
                violations.push(format!("err_cov {e:.3e} at {f} Hz exceeds {tol:e}"));
            }
        }
    }
    if let Some(tol) = cfg.compare.max_transfer_rel {
        for p in &transfer {
            if !(p.relative <= tol) {
                violations.push(format!(
                    "relative transfer error {:.3e} at DOF {} exceeds {tol:e}",
                    p.relative, p.dof
                ));
            }
        }
    }
    Ok(CompareReport {
        transfer,
        covariance,
        timing: TimingTable::default(),
        violations,
    })
}

fn summary_text(cfg: &RunConfig, r: &CompareReport) -> String {
    let mut out = format!(
        "comparison: reference {} against {}\n\ntransfer error (max over the band)\n{:>10} {:>14} {:>14}\n",
        cfg.compare.reference, cfg.compare.candidate, "dof", "max_abs", "relative"
    );
    for p in &r.transfer {
        out.push_str(&format!("{:>10} {:>14.4e} {:>14.4e}\n", p.dof, p.max_abs, p.relative));
    }
    out.push_str(&format!("\ncovariance error\n{:>10} {:>14}\n", "f [Hz]", "err_cov"));
    for (f, e) in &r.covariance {
        out.push_str(&format!("{f:>10} {e:>14.4e}\n"));
    }
    let verdict = |name: &str, tol: Option<f64>| match tol {
        None => String::new(),
        Some(t) => format!("threshold {name} <= {t:e}\n"),
    };
    out.push('\n');
    out.push_str(&verdict("err_cov", cfg.compare.max_err_cov));
    out.push_str(&verdict("relative transfer error", cfg.compare.max_transfer_rel));
    if r.violations.is_empty() {
        out.push_str("verdict: PASS\n");
    } else {
        for v in &r.violations {
            out.push_str(&format!("violation: {v}\n"));
        }
        out.push_str("verdict: FAIL\n");
    }
    out
}

/// Compares the reference and candidate sweeps; writes error CSVs, a summary
/// and the timing table of every sweep found.
pub fn compare(cfg: &RunConfig, force: bool) -> Result<CompareReport> {
    let dir = &cfg.paths.report;
    let outputs: Vec<PathBuf> =
        [TRANSFER_ERRORS, COV_ERRORS, SUMMARY, TIMING_TABLE].iter().map(|f| dir.join(f)).collect();
    refuse_overwrite(&outputs, force)?;
    let reference = SweepFiles::read(&sweep_dir(cfg, cfg.compare.reference))?;
    let candidate = SweepFiles::read(&sweep_dir(cfg, cfg.compare.candidate))?;
    let mut report = compare_results(cfg, &reference, &candidate)?;

    for mode in SweepMode::ALL {
        let d = sweep_dir(cfg, mode);
        if d.join(SWEEP_META).exists() {
            if let Some(col) = SweepFiles::read(&d)?.timing_column()? {
                report.timing.columns.push(col);
            }
        }
    }

    let mut t = CsvTable::new(&["dof", "max_abs", "relative"]);
    for p in &report.transfer {
        t.push(vec![p.dof as f64, p.max_abs, p.relative]);
    }
    t.write(&outputs[0])?;
    let mut c = CsvTable::new(&["f_Hz", "err_cov"]);
    for &(f, e) in &report.covariance {
        c.push(vec![f, e]);
    }
    c.write(&outputs[1])?;
    io::write_text(&outputs[2], &summary_text(cfg, &report))?;
    io::write_text(&outputs[3], &report.timing.to_text())?;
    Ok(report)
}
