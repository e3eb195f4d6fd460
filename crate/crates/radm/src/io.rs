//! Run configuration files, diagnostic CSV emission, run manifests and
//! binary field snapshots.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::diagnostics::DiagRecord;
use crate::operators::FilterParams;
use crate::spectral::{SpectralVectorField, WaveGrid};
use crate::timestepper::{ForcingPreset, IcPreset, ModelMode, SolverConfig};
use crate::{Error, Result};

/// Parsed run file: solver configuration plus the I/O-level settings that
/// do not belong to the solver itself.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub config: SolverConfig,
    pub sample_every: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunSetup {
    fn default() -> Self {
        RunSetup {
            config: SolverConfig::default(),
            sample_every: 1,
            out_dir: None,
        }
    }
}

fn cfg_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, val: &str, line: usize) -> Result<T> {
    val.parse()
        .map_err(|_| cfg_err(line, format!("{key}: cannot parse '{val}'")))
}

/// Parse a flat `key=value` run file. `#` starts a comment, blank lines are
/// skipped, unknown keys are errors, missing keys take the documented
/// defaults. Every error carries its 1-based line number.
pub fn parse_config(text: &str) -> Result<RunSetup> {
    let mut setup = RunSetup::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, val) = stripped
            .split_once('=')
            .ok_or_else(|| cfg_err(line, format!("expected key=value, got '{stripped}'")))?;
        let key = key.trim();
        let val = val.trim();
        if seen.iter().any(|k| k == key) {
            return Err(cfg_err(line, format!("duplicate key '{key}'")));
        }
        seen.push(key.to_string());
        let cfg = &mut setup.config;
        match key {
            "grid_n" => {
                let n: usize = parse_num(key, val, line)?;
                if n < 8 || n % 2 != 0 {
                    return Err(cfg_err(line, format!("grid_n must be even and >= 8, got {n}")));
                }
                cfg.grid_n = n;
            }
            "nu" => {
                let nu: f64 = parse_num(key, val, line)?;
                if nu < 0.0 || !nu.is_finite() {
                    return Err(cfg_err(line, format!("nu must be >= 0, got {val}")));
                }
                cfg.nu = nu;
            }
            "alpha" => {
                let a: f64 = parse_num(key, val, line)?;
                if a < 0.0 || !a.is_finite() {
                    return Err(cfg_err(line, format!("alpha must be >= 0, got {val}")));
                }
                cfg.filter.alpha = a;
            }
            "theta" => {
                let t: f64 = parse_num(key, val, line)?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(cfg_err(line, format!("theta must lie in [0, 1], got {val}")));
                }
                cfg.filter.theta = t;
            }
            "deconv_n" => cfg.filter.deconv_order = parse_num(key, val, line)?,
            "dt" => {
                let dt: f64 = parse_num(key, val, line)?;
                if !(dt > 0.0) {
                    return Err(cfg_err(line, format!("dt must be > 0, got {val}")));
                }
                cfg.dt = dt;
            }
            "t_end" => {
                let t: f64 = parse_num(key, val, line)?;
                if !(t > 0.0) {
                    return Err(cfg_err(line, format!("t_end must be > 0, got {val}")));
                }
                cfg.t_end = t;
            }
            "ic" => {
                cfg.ic = match val {
                    "taylor_green_2d" => IcPreset::TaylorGreen2d,
                    "random_divfree" => IcPreset::RandomDivfree,
                    "abc_flow" => IcPreset::AbcFlow,
                    _ => return Err(cfg_err(line, format!("unknown ic preset '{val}'"))),
                }
            }
            "seed" => cfg.ic_seed = parse_num(key, val, line)?,
            "forcing" => {
                cfg.forcing = match val {
                    "none" => ForcingPreset::None,
                    "steady_trig" => ForcingPreset::SteadyTrig,
                    "time_decaying_trig" => ForcingPreset::TimeDecayingTrig,
                    _ => return Err(cfg_err(line, format!("unknown forcing preset '{val}'"))),
                }
            }
            "model_mode" => {
                cfg.model_mode = match val {
                    "radm" => ModelMode::Radm,
                    "limit_atheta" => ModelMode::LimitAtheta,
                    "plain_rotational_nse" => ModelMode::PlainRotationalNse,
                    _ => return Err(cfg_err(line, format!("unknown model_mode '{val}'"))),
                }
            }
            "cfl_safety" => {
                let c: f64 = parse_num(key, val, line)?;
                if !(0.0 < c && c <= 1.0) {
                    return Err(cfg_err(line, format!("cfl_safety must lie in (0, 1], got {val}")));
                }
                cfg.cfl_safety = c;
            }
            "sample_every" => {
                let m: u64 = parse_num(key, val, line)?;
                if m == 0 {
                    return Err(cfg_err(line, "sample_every must be >= 1"));
                }
                setup.sample_every = m;
            }
            "out_dir" => setup.out_dir = Some(PathBuf::from(val)),
            _ => return Err(cfg_err(line, format!("unknown key '{key}'"))),
        }
    }
    // cross-field checks reported against the whole file (line 0)
    setup
        .config
        .validate()
        .map_err(|e| cfg_err(0, e.to_string()))?;
    FilterParams::new(
        setup.config.filter.alpha,
        setup.config.filter.theta,
        setup.config.filter.deconv_order,
    )
    .map_err(|e| cfg_err(0, e.to_string()))?;
    Ok(setup)
}

pub const DIAG_CSV_HEADER: &str = "t,model_energy,model_dissipation,kinetic_energy,\
norm_theta,norm_1_plus_theta,div_residual,orth_defect,forcing_power";

/// Write diagnostic records as CSV: exact header above, one row per record,
/// shortest round-trip decimals, LF endings.
pub fn write_diag_csv(records: &[DiagRecord], path: &Path) -> Result<()> {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(DIAG_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.t,
            r.model_energy,
            r.model_dissipation,
            r.kinetic_energy,
            r.sobolev_theta,
            r.sobolev_one_plus_theta,
            r.div_residual,
            r.orth_defect,
            r.forcing_power
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parse a CSV produced by [`write_diag_csv`] back into records.
pub fn read_diag_csv(path: &Path) -> Result<Vec<DiagRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == DIAG_CSV_HEADER => {}
        _ => {
            return Err(Error::VerificationFailure(format!(
                "{}: missing or wrong CSV header",
                path.display()
            )))
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::VerificationFailure(format!(
                "{}: unparsable CSV row {}",
                path.display(),
                i + 2
            )))?;
        if fields.len() != 9 {
            return Err(Error::VerificationFailure(format!(
                "{}: CSV row {} has {} fields, expected 9",
                path.display(),
                i + 2,
                fields.len()
            )));
        }
        records.push(DiagRecord {
            t: fields[0],
            model_energy: fields[1],
            model_dissipation: fields[2],
            kinetic_energy: fields[3],
            sobolev_theta: fields[4],
            sobolev_one_plus_theta: fields[5],
            div_residual: fields[6],
            orth_defect: fields[7],
            forcing_power: fields[8],
        });
    }
    Ok(records)
}

/// Write the run manifest: enough text to reproduce the run (modulo the
/// timestamp line). Numbers use shortest round-trip decimals.
pub fn write_manifest(
    setup: &RunSetup,
    code_revision: &str,
    path: &Path,
) -> Result<()> {
    let cfg = &setup.config;
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_else(|_| "0".into());
    let ic = match cfg.ic {
        IcPreset::TaylorGreen2d => "taylor_green_2d",
        IcPreset::RandomDivfree => "random_divfree",
        IcPreset::AbcFlow => "abc_flow",
    };
    let forcing = match cfg.forcing {
        ForcingPreset::None => "none",
        ForcingPreset::SteadyTrig => "steady_trig",
        ForcingPreset::TimeDecayingTrig => "time_decaying_trig",
    };
    let mode = match cfg.model_mode {
        ModelMode::Radm => "radm",
        ModelMode::LimitAtheta => "limit_atheta",
        ModelMode::PlainRotationalNse => "plain_rotational_nse",
    };
    let text = format!(
        "schema_version=1\n\
         created_at={created}\n\
         code_revision={code_revision}\n\
         grid_n={}\n\
         nu={}\n\
         alpha={}\n\
         theta={}\n\
         deconv_n={}\n\
         dt={}\n\
         t_end={}\n\
         ic={ic}\n\
         seed={}\n\
         forcing={forcing}\n\
         model_mode={mode}\n\
         cfl_safety={}\n\
         sample_every={}\n",
        cfg.grid_n,
        cfg.nu,
        cfg.filter.alpha,
        cfg.filter.theta,
        cfg.filter.deconv_order,
        cfg.dt,
        cfg.t_end,
        cfg.ic_seed,
        cfg.cfl_safety,
        setup.sample_every,
    );
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"RADMSNP1";

/// Snapshot metadata preceding the payload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub n_per_axis: u32,
    pub t: f64,
    pub alpha: f64,
    pub theta: f64,
    pub deconv_order: u32,
    /// 0 = spectral complex coefficients, 1 = physical real values.
    pub payload_kind: u8,
}

fn snap_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Snapshot {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Write a spectral field snapshot (payload_kind 0). Per retained mode, in
/// increasing storage (lexicographic wavenumber-index) order, the three
/// complex components are stored as little-endian f64 pairs. Modes outside
/// the dealias mask must be zero: they are not stored.
pub fn write_snapshot(
    field: &SpectralVectorField,
    header: &SnapshotHeader,
    path: &Path,
) -> Result<()> {
    let grid = &field.grid;
    if header.n_per_axis as usize != grid.n() || header.payload_kind != 0 {
        return Err(snap_err(path, "header does not describe this field"));
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.push(0x01);
    buf.extend_from_slice(&header.n_per_axis.to_le_bytes());
    buf.extend_from_slice(&header.t.to_le_bytes());
    buf.extend_from_slice(&header.alpha.to_le_bytes());
    buf.extend_from_slice(&header.theta.to_le_bytes());
    buf.extend_from_slice(&header.deconv_order.to_le_bytes());
    buf.push(header.payload_kind);
    for m in 0..grid.len() {
        if !grid.retained(m) {
            for a in 0..3 {
                if field.comps[a][m] != Complex64::ZERO {
                    return Err(snap_err(
                        path,
                        "field carries energy outside the dealias mask; dealias before writing",
                    ));
                }
            }
            continue;
        }
        for a in 0..3 {
            let c = field.comps[a][m];
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn take<const N: usize>(r: &mut impl std::io::Read, path: &Path) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|_| snap_err(path, "truncated file"))?;
    Ok(b)
}

/// Read a snapshot written by [`write_snapshot`]; bitwise inverse of the
/// writer. Rejects bad magic, truncation, trailing bytes and fields that
/// violate conjugate symmetry.
pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, SpectralVectorField)> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = data.as_slice();
    let magic: [u8; 8] = take(&mut r, path)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(snap_err(path, "bad magic"));
    }
    let endian: [u8; 1] = take(&mut r, path)?;
    if endian[0] != 0x01 {
        return Err(snap_err(path, "unsupported endianness marker"));
    }
    let n = u32::from_le_bytes(take(&mut r, path)?);
    let t = f64::from_le_bytes(take(&mut r, path)?);
    let alpha = f64::from_le_bytes(take(&mut r, path)?);
    let theta = f64::from_le_bytes(take(&mut r, path)?);
    let deconv_order = u32::from_le_bytes(take(&mut r, path)?);
    let payload_kind = take::<1>(&mut r, path)?[0];
    if payload_kind != 0 {
        return Err(snap_err(path, "unsupported payload kind"));
    }
    let grid = WaveGrid::new(n as usize)
        .map_err(|e| snap_err(path, e.to_string()))?;
    let retained = (0..grid.len()).filter(|&m| grid.retained(m)).count();
    if r.len() != retained * 3 * 16 {
        return Err(snap_err(
            path,
            format!("payload length {} does not match header", r.len()),
        ));
    }
    let mut field = SpectralVectorField::zeros(grid.clone());
    for m in 0..grid.len() {
        if !grid.retained(m) {
            continue;
        }
        for a in 0..3 {
            let re = f64::from_le_bytes(take(&mut r, path)?);
            let im = f64::from_le_bytes(take(&mut r, path)?);
            field.comps[a][m] = Complex64::new(re, im);
        }
    }
    let defect = field.symmetry_defect();
    let scale = field.linf_coeff().max(1.0);
    if defect > 1e-10 * scale {
        return Err(snap_err(
            path,
            format!("conjugate symmetry violated (defect {defect:.3e})"),
        ));
    }
    let header = SnapshotHeader {
        n_per_axis: n,
        t,
        alpha,
        theta,
        deconv_order,
        payload_kind,
    };
    Ok((header, field))
}

/// Exclusive lock on an output directory, released on drop. A second lock
/// attempt on the same directory fails with `OutputLocked`.
pub struct DirLock {
    path: PathBuf,
}

pub fn lock_out_dir(dir: &Path) -> Result<DirLock> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(".radm-lock");
    match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
        Ok(mut f) => {
            let _ = writeln!(f, "{}", std::process::id());
            Ok(DirLock { path })
        }
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
            Err(Error::OutputLocked(dir.to_path_buf()))
        }
        Err(e) => Err(Error::io(&path, e)),
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Human-readable listing of the largest modes in a snapshot, for the CLI's
/// dump subcommand.
pub fn describe_snapshot(path: &Path, top: usize) -> Result<String> {
    let (header, field) = read_snapshot(path)?;
    let grid = field.grid.clone();
    let mut modes: Vec<(f64, usize)> = (0..grid.len())
        .filter(|&m| grid.retained(m))
        .map(|m| {
            let mag: f64 = (0..3).map(|a| field.comps[a][m].norm_sqr()).sum();
            (mag.sqrt(), m)
        })
        .collect();
    modes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = format!(
        "n={} t={} alpha={} theta={} deconv_n={} l2_norm={}\n",
        header.n_per_axis,
        header.t,
        header.alpha,
        header.theta,
        header.deconv_order,
        field.l2_norm()
    );
    for &(mag, m) in modes.iter().take(top) {
        if mag == 0.0 {
            break;
        }
        let k = grid.k_at(m);
        out.push_str(&format!("k=({},{},{}) |c|={mag:.6e}\n", k[0], k[1], k[2]));
    }
    Ok(out)
}
