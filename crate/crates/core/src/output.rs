//! Run outputs: trajectory table, manifest and coefficient checkpoints.
//!
//! `trajectory.csv` has the header `t,sx_mid,infidelity,extrapolated`; the
//! infidelity field is empty when no exact reference was available and
//! `extrapolated` is `0` or `1`. Numbers use the shortest representation that
//! parses back to the same double.
//!
//! Checkpoints are plain text:
//!
//! ```text
//! snqs-coefficients 1
//! shape <L> <alpha> <Q> <N_p>
//! window <index> <t_start> <t_end>
//! trained_end <t>
//! <re> <im> <re> <im> ...      # Q pairs per line, N_p lines
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde_json::json;

use crate::ansatz::CoeffTensor;
use crate::basis::WindowSpec;
use crate::config::RunConfig;
use crate::driver::{RunRecord, TrajectoryRow, WindowCheckpoint};
use crate::error::{Error, Result};
use crate::rbm::param_count;

pub const CHECKPOINT_MAGIC: &str = "snqs-coefficients";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const TRAJECTORY_HEADER: &str = "t,sx_mid,infidelity,extrapolated";

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    s.push('\n');
    for r in rows {
        let inf = r.infidelity.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{},{}\n", r.t, r.sx_mid, inf, u8::from(r.extrapolated)));
    }
    s
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(TRAJECTORY_HEADER) {
        return Err(Error::Config("trajectory header mismatch".into()));
    }
    let bad = |l: &str| Error::Config(format!("malformed trajectory row: {l}"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(bad(l));
            }
            Ok(TrajectoryRow {
                t: f[0].parse().map_err(|_| bad(l))?,
                sx_mid: f[1].parse().map_err(|_| bad(l))?,
                infidelity: if f[2].is_empty() { None } else { Some(f[2].parse().map_err(|_| bad(l))?) },
                extrapolated: match f[3] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad(l)),
                },
            })
        })
        .collect()
}

pub fn checkpoint_text(ck: &WindowCheckpoint) -> String {
    let c = &ck.coeffs;
    let w = c.window();
    let q = c.basis_size();
    let mut s = format!(
        "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\nshape {} {} {} {}\nwindow {} {:e} {:e}\ntrained_end {:e}\n",
        c.sites(),
        c.alpha(),
        q,
        c.n_params(),
        ck.window,
        w.t_start,
        w.t_end,
        ck.trained_end
    );
    for row in c.as_slice().chunks_exact(q) {
        let fields: Vec<String> = row.iter().map(|z| format!("{:e} {:e}", z.re, z.im)).collect();
        s.push_str(&fields.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_checkpoint(text: &str) -> Result<WindowCheckpoint> {
    let err = |m: &str| Error::Checkpoint(m.to_string());
    let mut lines = text.lines();
    let mut header = |tag: &str, n: usize| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| err(&format!("missing {tag} line")))?;
        let parts: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if parts.len() != n + 1 || parts[0] != tag {
            return Err(err(&format!("expected `{tag}` with {n} fields, found `{line}`")));
        }
        Ok(parts[1..].to_vec())
    };
    let version = header(CHECKPOINT_MAGIC, 1)?;
    if version[0] != CHECKPOINT_VERSION.to_string() {
        return Err(err(&format!("unsupported format version {}", version[0])));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| err(&format!("bad integer `{s}`")));
    let flt = |s: &str| s.parse::<f64>().map_err(|_| err(&format!("bad number `{s}`")));
    let shape = header("shape", 4)?;
    let (l, alpha, q, np) = (int(&shape[0])?, int(&shape[1])?, int(&shape[2])?, int(&shape[3])?);
    if param_count(l, alpha) != np {
        return Err(err("parameter count inconsistent with shape"));
    }
    let win = header("window", 3)?;
    let window = int(&win[0])?;
    let spec = WindowSpec::new(flt(&win[1])?, flt(&win[2])?, q)?;
    let trained_end = flt(&header("trained_end", 1)?[0])?;
    let mut coeffs = Vec::with_capacity(np * q);
    let mut rows = 0;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let vals: Vec<f64> = line.split_whitespace().map(flt).collect::<Result<_>>()?;
        if vals.len() != 2 * q {
            return Err(err(&format!("row {} has {} fields, expected {}", rows + 1, vals.len(), 2 * q)));
        }
        coeffs.extend(vals.chunks_exact(2).map(|p| C64::new(p[0], p[1])));
        rows += 1;
    }
    if rows != np {
        return Err(err(&format!("found {rows} coefficient rows, expected {np}")));
    }
    Ok(WindowCheckpoint { window, trained_end, coeffs: CoeffTensor::from_raw(l, alpha, spec, coeffs)? })
}

pub fn checkpoint_path(dir: &Path, window: usize) -> PathBuf {
    dir.join(format!("window_{window}.ckpt"))
}

pub fn write_checkpoint(dir: &Path, ck: &WindowCheckpoint) -> Result<PathBuf> {
    let p = checkpoint_path(dir, ck.window);
    write_atomic(&p, &checkpoint_text(ck))?;
    Ok(p)
}

pub fn read_checkpoint(path: &Path) -> Result<WindowCheckpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    parse_checkpoint(&text)
}

/// The checkpoint with the highest window index in `dir`.
pub fn latest_checkpoint(dir: &Path) -> Result<WindowCheckpoint> {
    let mut best: Option<(usize, PathBuf)> = None;
    let entries = fs::read_dir(dir).map_err(|e| Error::Checkpoint(format!("{}: {e}", dir.display())))?;
    for e in entries {
        let p = e?.path();
        let n = p
            .file_name()
            .and_then(|s| s.to_str())
            .and_then(|s| s.strip_prefix("window_"))
            .and_then(|s| s.strip_suffix(".ckpt"))
            .and_then(|s| s.parse::<usize>().ok());
        if let Some(n) = n {
            if best.as_ref().is_none_or(|(b, _)| n > *b) {
                best = Some((n, p));
            }
        }
    }
    match best {
        Some((_, p)) => read_checkpoint(&p),
        None => Err(Error::Checkpoint(format!("no window_<n>.ckpt in {}", dir.display()))),
    }
}

pub fn manifest_json(record: &RunRecord, cfg: &RunConfig) -> serde_json::Value {
    json!({
        "method": record.method,
        "version": env!("CARGO_PKG_VERSION"),
        "formats": { "checkpoint": CHECKPOINT_VERSION, "trajectory": TRAJECTORY_HEADER },
        "seed": cfg.seed,
        "mode": cfg.mode.as_str(),
        "middle_site": record.middle_site,
        "parameter_counts": {
            "per_network": record.param_counts.per_network,
            "smooth": record.param_counts.smooth_total,
            "stepwise": record.param_counts.stepwise_total,
        },
        "intervals": record.intervals,
        "checkpoints": record.checkpoints.iter().map(|c| json!({
            "window": c.window,
            "file": format!("window_{}.ckpt", c.window),
            "trained_end": c.trained_end,
        })).collect::<Vec<_>>(),
        "aborted": record.aborted,
        "config": cfg.to_toml(),
    })
}

/// Write `trajectory.csv`, `manifest.json` and every window checkpoint.
pub fn emit_outputs(record: &RunRecord, cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("trajectory.csv"), &trajectory_csv(&record.rows))?;
    let manifest =
        serde_json::to_string_pretty(&manifest_json(record, cfg)).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(&dir.join("manifest.json"), &(manifest + "\n"))?;
    for ck in &record.checkpoints {
        write_checkpoint(dir, ck)?;
    }
    Ok(())
}
