//! Experiment orchestration: build the state from a validated config, run,
//! and write reproducible artifacts (CSV trace, JSON reports, effective
//! config copy, optional snapshot dump).

use crate::coeffs::HypoCoeffs;
use crate::config::{Model, SimConfig};
use crate::diagnostics::{coefficient_search, decay_fit_trace, CoefficientSelection, DecayFit};
use crate::equilibrium::equilibrium_density;
use crate::error::{Error, Result};
use crate::forms::{constants_report, ConstantsReport};
use crate::grid::{VelocityField, VelocityGrid};
use crate::params::AlphaParams;
use crate::phase::{ModeState, PhaseField};
use crate::solver_bgk::{bgk_coefficients, check_hypotheses, simulate_bgk, BgkEquilibrium};
use crate::solver_lfp::{simulate, CollisionPlan, SimOptions, SimTrace};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Everything a finished run leaves on disk.
#[derive(Debug)]
pub struct RunArtifacts {
    pub trace_path: PathBuf,
    pub constants_path: Option<PathBuf>,
    pub decay_path: PathBuf,
    pub config_path: PathBuf,
    pub snapshots_path: Option<PathBuf>,
    pub trace: SimTrace,
    pub fit: DecayFit,
}

pub fn run_experiment(cfg: &SimConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let p = AlphaParams::new(cfg.params.alpha, cfg.params.dim)?;
    let grid = VelocityGrid::new(cfg.params.extent, cfg.params.nodes)?;
    let mu = equilibrium_density(&p, &grid)?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let dir = Path::new(&cfg.output.dir);
    let hash = cfg.hash();

    // coefficients: auto pipeline or explicit
    let mut constants: Option<ConstantsReport> = None;
    let mut selection: Option<CoefficientSelection> = None;
    let coeffs: HypoCoeffs = match (cfg.model, cfg.coeffs.mode.as_str()) {
        (_, "explicit") => {
            HypoCoeffs::new(cfg.coeffs.a, cfg.coeffs.b, cfg.coeffs.c, cfg.coeffs.eps)?
        }
        (Model::Lfp, _) => {
            let report = constants_report(&p, &mu, &cfg.coeffs.eps_grid, cfg.seed, 1)?;
            let sel = coefficient_search(&report)?;
            let c = sel.coeffs;
            constants = Some(report);
            selection = Some(sel);
            c
        }
        (Model::Bgk, _) => {
            let eq = bgk_equilibrium_from(cfg, &grid, &mu)?;
            bgk_coefficients(&eq, 1.0)?
        }
    };

    let opts = SimOptions {
        dt: cfg.time.dt,
        t_end: cfg.time.t_end,
        sample_every: cfg.time.sample_every,
    };

    // optional snapshot capture
    let mut snaps: Vec<(f64, PhaseField)> = Vec::new();
    let want_snaps = cfg.output.snapshots;
    let mut observer = |t: f64, state: &ModeState| {
        if want_snaps {
            if let Ok(phase) = state.to_phase() {
                snaps.push((t, phase));
            }
        }
    };

    let trace = match cfg.model {
        Model::Lfp => {
            let f0 = initial_phase(cfg, &grid, &p, &mu)?;
            simulate(&f0, &p, &coeffs, &mu, &opts, Some(&mut observer))?
        }
        Model::Bgk => {
            let eq = bgk_equilibrium_from(cfg, &grid, &mu)?;
            let f0 = initial_phase_bgk(cfg, &grid, &eq)?;
            simulate_bgk(&f0, &eq, &coeffs, &opts, Some(&mut observer))?
        }
    };

    let fit = decay_fit_trace(&trace, (cfg.time.fit_window_start, cfg.time.t_end))?;

    // artifacts
    let trace_path = dir.join("trace.csv");
    write_trace_csv_with_budget(
        &trace_path,
        &trace,
        hash,
        cfg.time.fit_window_start,
        cfg.params.extent.powf(-cfg.params.alpha),
    )?;
    let decay_path = dir.join("decay.json");
    write_json(
        &decay_path,
        &WithHash {
            config_hash: format!("{hash:016x}"),
            payload: &fit,
        },
    )?;
    let constants_path = match (&constants, &selection) {
        (Some(report), Some(sel)) => {
            let path = dir.join("constants.json");
            #[derive(serde::Serialize)]
            struct Combined<'a> {
                config_hash: String,
                report: &'a ConstantsReport,
                selection: &'a CoefficientSelection,
            }
            write_json(
                &path,
                &Combined {
                    config_hash: format!("{hash:016x}"),
                    report,
                    selection: sel,
                },
            )?;
            Some(path)
        }
        _ => None,
    };
    let config_path = dir.join("effective_config.toml");
    std::fs::write(&config_path, cfg.to_toml())?;
    let snapshots_path = if want_snaps {
        let path = dir.join("snapshots.bin");
        write_snapshots(&path, cfg, &coeffs, constants.as_ref(), &snaps)?;
        Some(path)
    } else {
        None
    };
    Ok(RunArtifacts {
        trace_path,
        constants_path,
        decay_path,
        config_path,
        snapshots_path,
        trace,
        fit,
    })
}

/// Resolve the BGK local equilibrium from the config: the alpha-equilibrium
/// by default, or a tabulated profile from a CSV file. Both pass through
/// the hypothesis gate.
pub fn bgk_equilibrium_from(
    cfg: &SimConfig,
    grid: &VelocityGrid,
    mu: &VelocityField,
) -> Result<BgkEquilibrium> {
    match cfg.bgk.equilibrium.as_str() {
        "file" => {
            let profile = read_profile_csv(Path::new(&cfg.bgk.file), grid)?;
            check_hypotheses(&profile)
        }
        _ => check_hypotheses(mu),
    }
}

fn initial_phase(
    cfg: &SimConfig,
    grid: &VelocityGrid,
    p: &AlphaParams,
    mu: &VelocityField,
) -> Result<PhaseField> {
    let m = cfg.params.x_modes;
    match cfg.init.preset.as_str() {
        "lfp-default" => {
            let mv = mu.values().to_vec();
            let n = grid.len();
            PhaseField::from_fn(m, grid, |x, v| {
                let iv = grid.index_of(v).expect("grid node");
                let _ = n;
                (1.0 + 0.5 * x.cos()) * mv[iv]
            })
        }
        "equilibrium" => {
            let plan = CollisionPlan::new(p, grid);
            let eq = plan.discrete_equilibrium();
            let n = grid.len();
            PhaseField::new(
                m,
                grid.clone(),
                (0..m * n).map(|i| eq.values()[i % n]).collect(),
            )
        }
        "file" => phase_from_file(Path::new(&cfg.init.file), m, grid),
        other => Err(Error::Config(format!(
            "init preset {other:?} is not available for the LFP model"
        ))),
    }
}

fn initial_phase_bgk(
    cfg: &SimConfig,
    grid: &VelocityGrid,
    eq: &BgkEquilibrium,
) -> Result<PhaseField> {
    let m = cfg.params.x_modes;
    match cfg.init.preset.as_str() {
        "bgk-default" => {
            let mv = eq.profile().values().to_vec();
            PhaseField::from_fn(m, grid, |x, v| {
                (1.0 + 0.5 * x.cos()) * mv[grid.index_of(v).expect("grid node")]
            })
        }
        "equilibrium" => {
            let n = grid.len();
            PhaseField::new(
                m,
                grid.clone(),
                (0..m * n).map(|i| eq.profile().values()[i % n]).collect(),
            )
        }
        "file" => phase_from_file(Path::new(&cfg.init.file), m, grid),
        other => Err(Error::Config(format!(
            "init preset {other:?} is not available for the BGK model"
        ))),
    }
}

/// Initial data from a two-column CSV (v, value) sampled on the exact grid;
/// the profile is modulated by the default (1 + cos x / 2) density wave.
fn phase_from_file(path: &Path, m: usize, grid: &VelocityGrid) -> Result<PhaseField> {
    let profile = read_profile_csv(path, grid)?;
    let pv = profile.values().to_vec();
    PhaseField::from_fn(m, grid, |x, v| {
        (1.0 + 0.5 * x.cos()) * pv[grid.index_of(v).expect("grid node")]
    })
}

/// Two-column CSV (v, value), validated against the exact grid nodes.
pub fn read_profile_csv(path: &Path, grid: &VelocityGrid) -> Result<VelocityField> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut idx = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('v') {
            continue;
        }
        let mut parts = line.split(',');
        let v: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("line {}: bad v column", lineno + 1)))?;
        let val: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("line {}: bad value column", lineno + 1)))?;
        if idx >= grid.len() {
            return Err(Error::Config("profile file has too many rows".into()));
        }
        let expect = grid.nodes()[idx];
        if (v - expect).abs() > 1e-9 * grid.spacing().max(1.0) {
            return Err(Error::Config(format!(
                "line {}: v = {v} does not match grid node {expect}",
                lineno + 1
            )));
        }
        values.push(val);
        idx += 1;
    }
    if idx != grid.len() {
        return Err(Error::Config(format!(
            "profile file has {idx} rows; the grid needs {}",
            grid.len()
        )));
    }
    VelocityField::new(grid.clone(), values)
}

#[derive(serde::Serialize)]
struct WithHash<'a, T: serde::Serialize> {
    config_hash: String,
    payload: &'a T,
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialize: {e}")))?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Trace CSV with a versioned header and a running decay-rate column
/// (cumulative fit over [max(window_start, t/2), t] once ten samples are
/// available).
pub fn write_trace_csv(
    path: &Path,
    trace: &SimTrace,
    config_hash: u64,
    fit_window_start: f64,
) -> Result<()> {
    write_trace_csv_with_budget(path, trace, config_hash, fit_window_start, f64::NAN)
}

pub fn write_trace_csv_with_budget(
    path: &Path,
    trace: &SimTrace,
    config_hash: u64,
    fit_window_start: f64,
    tail_mass_budget: f64,
) -> Result<()> {
    let mut out = String::new();
    out.push_str("# lfp-lab trace v1\n");
    out.push_str(&format!("# config_hash={config_hash:016x}\n"));
    if tail_mass_budget.is_finite() {
        out.push_str(&format!("# tail_mass_budget={tail_mass_budget}\n"));
    }
    out.push_str("t,mass,triple_norm,h1_norm,l2_norm,fitted_lambda_running\n");
    for i in 0..trace.len() {
        let t = trace.times[i];
        let lam = running_lambda(trace, i, fit_window_start);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t,
            trace.mass[i],
            trace.triple_norm[i],
            trace.h1_norm[i],
            trace.l2_norm[i],
            lam.map_or_else(|| "nan".to_string(), |l| l.to_string())
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn running_lambda(trace: &SimTrace, i: usize, window_start: f64) -> Option<f64> {
    let t = trace.times[i];
    let t0 = (t / 2.0).max(window_start);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 0..=i {
        let tj = trace.times[j];
        if tj >= t0 && trace.triple_norm[j] > 0.0 {
            xs.push(tj);
            ys.push(trace.triple_norm[j].ln());
        }
    }
    if xs.len() < 10 {
        return None;
    }
    let nf = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    Some(-(nf * sxy - sx * sy) / (nf * sxx - sx * sx))
}

/// Parse a trace CSV written by [`write_trace_csv`].
pub fn read_trace_csv(path: &Path) -> Result<SimTrace> {
    let text = std::fs::read_to_string(path)?;
    let mut trace = SimTrace {
        times: Vec::new(),
        mass: Vec::new(),
        triple_norm: Vec::new(),
        h1_norm: Vec::new(),
        l2_norm: Vec::new(),
        dissipation_estimate: Vec::new(),
    };
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with('t') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 5 {
            return Err(Error::Config(format!("malformed trace row: {line}")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad number {s:?} in trace")))
        };
        trace.times.push(parse(cols[0])?);
        trace.mass.push(parse(cols[1])?);
        trace.triple_norm.push(parse(cols[2])?);
        trace.h1_norm.push(parse(cols[3])?);
        trace.l2_norm.push(parse(cols[4])?);
        trace.dissipation_estimate.push(f64::NAN);
    }
    Ok(trace)
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"LFPSNAP1";

/// Self-contained snapshot dump: header with the grid, the coefficients and
/// the constants needed to re-evaluate the dissipation functional, then the
/// sampled physical fields.
pub fn write_snapshots(
    path: &Path,
    cfg: &SimConfig,
    coeffs: &HypoCoeffs,
    constants: Option<&ConstantsReport>,
    snaps: &[(f64, PhaseField)],
) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&cfg.hash().to_le_bytes());
    let m = cfg.params.x_modes as u32;
    let n = cfg.params.nodes as u32;
    buf.extend_from_slice(&m.to_le_bytes());
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&cfg.params.extent.to_le_bytes());
    buf.extend_from_slice(&cfg.params.alpha.to_le_bytes());
    for x in [coeffs.a, coeffs.b, coeffs.c, coeffs.eps] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let (c_p, c_f, k_eps, ct_p) = match constants {
        Some(r) => (
            r.c_p,
            r.c_f,
            r.k_at(coeffs.eps).unwrap_or(f64::NAN),
            r.torus_poincare,
        ),
        None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    };
    for x in [c_p, c_f, k_eps, ct_p] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(&(snaps.len() as u32).to_le_bytes());
    for (t, phase) in snaps {
        buf.extend_from_slice(&t.to_le_bytes());
        for &x in phase.values() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Parsed snapshot dump.
pub struct SnapshotFile {
    pub config_hash: u64,
    pub alpha: f64,
    pub extent: f64,
    pub coeffs: HypoCoeffs,
    pub constants: Option<(f64, f64, f64, f64)>,
    pub snaps: Vec<(f64, PhaseField)>,
}

pub fn read_snapshots(path: &Path) -> Result<SnapshotFile> {
    let data = std::fs::read(path)?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, len: usize| -> Result<&[u8]> {
        if *pos + len > data.len() {
            return Err(Error::Config("snapshot file truncated".into()));
        }
        let s = &data[*pos..*pos + len];
        *pos += len;
        Ok(s)
    };
    if take(&mut pos, 8)? != SNAPSHOT_MAGIC {
        return Err(Error::Config("not a snapshot file (bad magic)".into()));
    }
    let config_hash = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let u32_at = |pos: &mut usize| -> Result<u32> {
        Ok(u32::from_le_bytes(take(pos, 4)?.try_into().unwrap()))
    };
    let m = u32_at(&mut pos)? as usize;
    let n = u32_at(&mut pos)? as usize;
    let f64_at = |pos: &mut usize| -> Result<f64> {
        Ok(f64::from_le_bytes(take(pos, 8)?.try_into().unwrap()))
    };
    let extent = f64_at(&mut pos)?;
    let alpha = f64_at(&mut pos)?;
    let a = f64_at(&mut pos)?;
    let b = f64_at(&mut pos)?;
    let c = f64_at(&mut pos)?;
    let eps = f64_at(&mut pos)?;
    let c_p = f64_at(&mut pos)?;
    let c_f = f64_at(&mut pos)?;
    let k_eps = f64_at(&mut pos)?;
    let ct_p = f64_at(&mut pos)?;
    let count = u32_at(&mut pos)? as usize;
    let grid = VelocityGrid::new(extent, n)?;
    let mut snaps = Vec::with_capacity(count);
    for _ in 0..count {
        let t = f64_at(&mut pos)?;
        let mut vals = Vec::with_capacity(m * n);
        for _ in 0..m * n {
            vals.push(f64_at(&mut pos)?);
        }
        snaps.push((t, PhaseField::new(m, grid.clone(), vals)?));
    }
    let constants = if c_p.is_nan() {
        None
    } else {
        Some((c_p, c_f, k_eps, ct_p))
    };
    Ok(SnapshotFile {
        config_hash,
        alpha,
        extent,
        coeffs: HypoCoeffs::new(a, b, c, eps)?,
        constants,
        snaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_csv_roundtrip() {
        let trace = SimTrace {
            times: vec![0.0, 0.5, 1.0],
            mass: vec![1.0, 1.0, 1.0],
            triple_norm: vec![0.5, 0.4, 0.3],
            h1_norm: vec![0.6, 0.5, 0.4],
            l2_norm: vec![0.3, 0.25, 0.2],
            dissipation_estimate: vec![f64::NAN; 3],
        };
        let dir = std::env::temp_dir().join("lfp_lab_trace_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trace.csv");
        write_trace_csv(&path, &trace, 0xdeadbeef, 1.0).unwrap();
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(back.times, trace.times);
        assert_eq!(back.triple_norm, trace.triple_norm);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("config_hash=00000000deadbeef"));
    }

    #[test]
    fn snapshot_roundtrip() {
        let grid = VelocityGrid::new(8.0, 16).unwrap();
        let phase = PhaseField::from_fn(4, &grid, |x, v| x.cos() + v).unwrap();
        let cfg_text = "[params]\nalpha = 1.0\nextent = 8.0\nnodes = 16\nx_modes = 4\n";
        let mut cfg = SimConfig::from_toml(cfg_text).unwrap();
        cfg.params.extent = 8.0;
        let coeffs = HypoCoeffs::new(5.0, 0.5, 1.0, 0.1).unwrap();
        let dir = std::env::temp_dir().join("lfp_lab_snap_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("snaps.bin");
        write_snapshots(&path, &cfg, &coeffs, None, &[(0.5, phase.clone())]).unwrap();
        let file = read_snapshots(&path).unwrap();
        assert_eq!(file.snaps.len(), 1);
        assert_eq!(file.snaps[0].0, 0.5);
        for (a, b) in file.snaps[0].1.values().iter().zip(phase.values()) {
            assert_eq!(a, b);
        }
        assert!(file.constants.is_none());
        assert_eq!(file.coeffs, coeffs);
    }
}
