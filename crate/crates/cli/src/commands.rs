//! Subcommand implementations. Each returns the process exit code.

use std::path::Path;

use anyhow::Result;
use contour_core::evolution::{dispersion_matrix, eigenvalues, run, RunOptions};
use contour_core::pressure::solve_radial;
use contour_core::{Error, SimState};

use crate::config::SimConfig;
use crate::io::{self, fmt_f64, TrajectoryWriter, DISPERSION_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_COLLISION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

fn exit_for(err: &Error) -> i32 {
    match err {
        Error::Collision { .. } => EXIT_COLLISION,
        _ => EXIT_SOLVER,
    }
}

fn load(config_path: &Path) -> Result<SimConfig, i32> {
    SimConfig::load(config_path).map_err(|e| {
        eprintln!("invalid config: {e}");
        EXIT_INVALID
    })
}

/// Runs the configured simulation, writing `trajectory.jsonl` and `diagnostics.csv`.
pub fn cmd_simulate(config_path: &Path) -> i32 {
    let cfg = match load(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    simulate(&cfg)
}

pub fn simulate(cfg: &SimConfig) -> i32 {
    let params = cfg.params();
    let initial = match cfg.initial_pair().and_then(|pair| SimState::new(0.0, pair, &params)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("initial state: {e}");
            return exit_for(&e);
        }
    };
    let mut writer = match TrajectoryWriter::create(&cfg.out_dir) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("output: {e:#}");
            return EXIT_INVALID;
        }
    };
    let opts = RunOptions { dt: cfg.dt, t_end: cfg.t_end, cadence: cfg.cadence };
    let mut write_err = None;
    let outcome = run(initial, &params, &opts, |s| {
        if write_err.is_none() {
            write_err = writer.write(s).err();
        }
    });
    let finished = writer.finish();
    if let Some(e) = write_err.map(Err).unwrap_or(finished).err() {
        eprintln!("output: {e:#}");
        return EXIT_INVALID;
    }
    match outcome {
        Ok(end) => {
            eprintln!("finished at t = {} ({})", end.time, cfg.out_dir.display());
            EXIT_OK
        }
        Err(failure) => {
            eprintln!("run stopped: {failure}");
            exit_for(&failure.error)
        }
    }
}

/// Writes `dispersion.csv` with the eigenvalues of M(k) for k = 1..=k_max.
pub fn cmd_dispersion(config_path: &Path) -> i32 {
    let cfg = match load(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match dispersion(&cfg) {
        Ok(unstable) => {
            if unstable > 0 {
                eprintln!("{unstable} unstable wavenumbers flagged");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("dispersion: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(err) => exit_for(err),
                None => EXIT_INVALID,
            }
        }
    }
}

/// Returns the number of wavenumbers with a positive real eigenvalue.
pub fn dispersion(cfg: &SimConfig) -> Result<usize> {
    let radial = solve_radial(&cfg.growth, cfg.mu, cfg.nu, cfg.r0, cfg.big_r0, cfg.n_rho)?;
    let a = (cfg.mu - cfg.nu) / (cfg.mu + cfg.nu);
    let (r, big_r, c) = (cfg.r0, cfg.big_r0, radial.c_star);
    let c_tilde = r / big_r * c;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut w = csv::Writer::from_path(cfg.out_dir.join("dispersion.csv"))?;
    w.write_record(DISPERSION_HEADER)?;
    let mut unstable = 0;
    for k in 1..=cfg.k_max {
        let ev = eigenvalues(&dispersion_matrix(k, a, c, r, big_r));
        let kf = k as f64;
        let max_re = ev[0].re.max(ev[1].re);
        let flag = max_re > 0.0;
        unstable += flag as usize;
        let mut row = vec![k.to_string()];
        row.extend([ev[0].re, ev[0].im, ev[1].re, ev[1].im, -a * c * kf / r, c_tilde * kf / big_r, max_re].map(fmt_f64));
        row.push(u8::from(flag).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(unstable)
}

/// Writes one SVG frame per trajectory state into `out_dir`.
pub fn cmd_render(trajectory: &Path, out_dir: &Path) -> i32 {
    match render(trajectory, out_dir) {
        Ok(n) => {
            eprintln!("wrote {n} frames to {}", out_dir.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("render: {e:#}");
            EXIT_INVALID
        }
    }
}

pub fn render(trajectory: &Path, out_dir: &Path) -> Result<usize> {
    let records = io::read_trajectory(trajectory)?;
    std::fs::create_dir_all(out_dir)?;
    for (i, rec) in records.iter().enumerate() {
        std::fs::write(out_dir.join(format!("frame_{i:05}.svg")), io::render_svg(rec))?;
    }
    Ok(records.len())
}
