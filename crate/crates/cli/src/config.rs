//! INI-style run configuration.
//!
//! ```ini
//! [physics]
//! mu = 1.0
//! nu = 2.0
//! r0 = 1.0
//! R0 = 1.5
//!
//! [growth]
//! law = linear        ; linear | constant | table
//! g0 = 1.0
//! pm = 1.0
//! ; table_p = 0, 0.5, 1
//! ; table_g = 1, 0.6, 0
//!
//! [initial]
//! modes = h:3:1e-3:0, H:2:5e-4:0.25   ; target:k:amplitude:phase
//!
//! [resolution]
//! n = 128
//! n_rho = 512
//! n_omega = 128
//! n_w = 256
//! n_xi = 512
//!
//! [time]
//! dt = 1e-3
//! t_end = 0.1
//! scheme = etd1       ; etd1 | etd2rk
//!
//! [solver]
//! pressure_tol = 1e-10
//! pressure_max_iter = 200
//! density_tol = 1e-10
//! density_max_iter = 100
//! damping = 0.8
//! dealias = true
//!
//! [output]
//! dir = out
//! cadence = 1
//!
//! [dispersion]
//! k_max = 32
//! ```

use std::path::{Path, PathBuf};

use contour_core::densities::DensityControls;
use contour_core::evolution::{Scheme, SimParams};
use contour_core::growth_potential::QuadSpec;
use contour_core::pressure::{GrowthLaw, PressureControls};
use contour_core::{InterfacePair, PeriodicField};
use ini::Ini;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: ini::Error },
    #[error("[{section}] {key}: missing")]
    Missing { section: &'static str, key: &'static str },
    #[error("[{section}] {key} = {value:?}: {reason}")]
    Invalid { section: &'static str, key: &'static str, value: String, reason: String },
    #[error("initial data violates the {kind} invariant: {0}", kind = invariant(.0))]
    Geometry(#[from] contour_core::Error),
}

fn invariant(e: &contour_core::Error) -> &'static str {
    match e {
        contour_core::Error::SmallnessViolated { .. } => "smallness",
        contour_core::Error::Collision { .. } => "non-collision",
        contour_core::Error::DeltaOutOfBand { .. } => "delta band",
        _ => "interface",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Inner,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub target: Target,
    pub k: u32,
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mu: f64,
    pub nu: f64,
    pub growth: GrowthLaw,
    pub r0: f64,
    pub big_r0: f64,
    pub modes: Vec<ModeSpec>,
    pub n: usize,
    pub n_rho: usize,
    pub n_omega: usize,
    pub n_w: usize,
    pub n_xi: usize,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub pressure: PressureControls,
    pub densities: DensityControls,
    pub dealias: bool,
    pub out_dir: PathBuf,
    pub cadence: usize,
    pub k_max: u32,
}

struct Reader<'a> {
    ini: &'a Ini,
}

impl Reader<'_> {
    fn raw(&self, section: &'static str, key: &'static str) -> Option<&str> {
        self.ini.section(Some(section)).and_then(|s| s.get(key)).map(str::trim)
    }

    fn parse<T: std::str::FromStr>(&self, section: &'static str, key: &'static str, default: Option<T>) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match (self.raw(section, key), default) {
            (Some(v), _) => {
                v.parse().map_err(|e: T::Err| ConfigError::Invalid { section, key, value: v.to_string(), reason: e.to_string() })
            }
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ConfigError::Missing { section, key }),
        }
    }

    fn list(&self, section: &'static str, key: &'static str) -> Result<Vec<f64>, ConfigError> {
        let v = self.raw(section, key).ok_or(ConfigError::Missing { section, key })?;
        v.split(',')
            .map(|x| {
                x.trim().parse::<f64>().map_err(|e| ConfigError::Invalid { section, key, value: v.to_string(), reason: e.to_string() })
            })
            .collect()
    }
}

fn invalid(section: &'static str, key: &'static str, value: impl ToString, reason: &str) -> ConfigError {
    ConfigError::Invalid { section, key, value: value.to_string(), reason: reason.to_string() }
}

fn parse_mode(text: &str) -> Result<ModeSpec, ConfigError> {
    let bad = |reason: &str| invalid("initial", "modes", text, reason);
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(bad("expected target:k:amplitude:phase"));
    }
    let target = match parts[0] {
        "h" => Target::Inner,
        "H" => Target::Outer,
        _ => return Err(bad("target must be h or H")),
    };
    let k: u32 = parts[1].parse().map_err(|_| bad("k must be a positive integer"))?;
    if k == 0 {
        return Err(bad("k must be a positive integer"));
    }
    let amplitude: f64 = parts[2].parse().map_err(|_| bad("amplitude must be a number"))?;
    let phase: f64 = parts[3].parse().map_err(|_| bad("phase must be a number"))?;
    if !amplitude.is_finite() || !phase.is_finite() {
        return Err(bad("amplitude and phase must be finite"));
    }
    Ok(ModeSpec { target, k, amplitude, phase })
}

fn check_resolution(key: &'static str, v: usize) -> Result<usize, ConfigError> {
    if v >= 64 && v.is_power_of_two() {
        Ok(v)
    } else {
        Err(invalid("resolution", key, v, "must be a power of two >= 64"))
    }
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_file(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_ini(&ini, base)
    }

    pub fn parse_str(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Read { path: base.to_path_buf(), source: ini::Error::Parse(e) })?;
        Self::from_ini(&ini, base)
    }

    fn from_ini(ini: &Ini, base: &Path) -> Result<Self, ConfigError> {
        let rd = Reader { ini };
        let mu: f64 = rd.parse("physics", "mu", None)?;
        let nu: f64 = rd.parse("physics", "nu", None)?;
        for (key, v) in [("mu", mu), ("nu", nu)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid("physics", key, v, "mobility must be positive"));
            }
        }
        let r0: f64 = rd.parse("physics", "r0", None)?;
        let big_r0: f64 = rd.parse("physics", "R0", None)?;
        if !(r0 > 0.0 && big_r0 > r0 && big_r0.is_finite()) {
            return Err(invalid("physics", "R0", big_r0, "need 0 < r0 < R0"));
        }

        let law_name: String = rd.parse("growth", "law", Some("linear".to_string()))?;
        let growth = match law_name.as_str() {
            "linear" => GrowthLaw::linear(rd.parse("growth", "g0", None)?, rd.parse("growth", "pm", None)?)
                .map_err(|e| invalid("growth", "law", "linear", &e.to_string()))?,
            "constant" => {
                let g0: f64 = rd.parse("growth", "g0", None)?;
                if !(g0 >= 0.0 && g0.is_finite()) {
                    return Err(invalid("growth", "g0", g0, "must be non-negative"));
                }
                GrowthLaw::Constant { g0 }
            }
            "table" => GrowthLaw::tabulated(rd.list("growth", "table_p")?, rd.list("growth", "table_g")?)
                .map_err(|e| invalid("growth", "law", "table", &e.to_string()))?,
            other => return Err(invalid("growth", "law", other, "expected linear, constant, or table")),
        };

        let modes = match rd.raw("initial", "modes") {
            Some(text) if !text.is_empty() => text.split(',').map(parse_mode).collect::<Result<Vec<_>, _>>()?,
            _ => Vec::new(),
        };

        let n = check_resolution("n", rd.parse("resolution", "n", Some(128))?)?;
        let n_rho = check_resolution("n_rho", rd.parse("resolution", "n_rho", Some(512))?)?;
        let n_omega = check_resolution("n_omega", rd.parse("resolution", "n_omega", Some(128))?)?;
        let n_w = check_resolution("n_w", rd.parse("resolution", "n_w", Some(256))?)?;
        let n_xi = check_resolution("n_xi", rd.parse("resolution", "n_xi", Some(512))?)?;
        for m in &modes {
            if 3 * m.k as usize > n {
                return Err(invalid("initial", "modes", m.k, "wavenumber exceeds the 2/3 band of n"));
            }
        }

        let dt: f64 = rd.parse("time", "dt", None)?;
        let t_end: f64 = rd.parse("time", "t_end", None)?;
        if !(dt > 0.0 && dt < t_end && t_end.is_finite()) {
            return Err(invalid("time", "dt", dt, "need 0 < dt < t_end"));
        }
        let scheme = match rd.parse("time", "scheme", Some("etd1".to_string()))?.as_str() {
            "etd1" => Scheme::Etd1,
            "etd2rk" => Scheme::Etd2Rk,
            other => return Err(invalid("time", "scheme", other, "expected etd1 or etd2rk")),
        };

        let pressure = PressureControls {
            tol: rd.parse("solver", "pressure_tol", Some(1e-10))?,
            max_iter: rd.parse("solver", "pressure_max_iter", Some(200))?,
        };
        let densities = DensityControls {
            tol: rd.parse("solver", "density_tol", Some(1e-10))?,
            max_iter: rd.parse("solver", "density_max_iter", Some(100))?,
            damping: rd.parse("solver", "damping", Some(0.8))?,
        };
        if !(pressure.tol > 0.0 && densities.tol > 0.0) {
            return Err(invalid("solver", "pressure_tol", pressure.tol, "tolerances must be positive"));
        }
        if !(densities.damping > 0.0 && densities.damping <= 1.0) {
            return Err(invalid("solver", "damping", densities.damping, "must lie in (0, 1]"));
        }
        let dealias: bool = rd.parse("solver", "dealias", Some(true))?;

        let out: String = rd.parse("output", "dir", Some("out".to_string()))?;
        let out_dir = base.join(out);
        let cadence: usize = rd.parse("output", "cadence", Some(1))?;
        if cadence == 0 {
            return Err(invalid("output", "cadence", 0, "must be >= 1"));
        }
        let k_max: u32 = rd.parse("dispersion", "k_max", Some(32))?;
        if k_max == 0 {
            return Err(invalid("dispersion", "k_max", 0, "must be >= 1"));
        }

        let cfg = Self {
            mu,
            nu,
            growth,
            r0,
            big_r0,
            modes,
            n,
            n_rho,
            n_omega,
            n_w,
            n_xi,
            dt,
            t_end,
            scheme,
            pressure,
            densities,
            dealias,
            out_dir,
            cadence,
            k_max,
        };
        cfg.initial_pair()?.check_regime()?;
        Ok(cfg)
    }

    pub fn initial_pair(&self) -> Result<InterfacePair, contour_core::Error> {
        let build = |target: Target| {
            let modes: Vec<ModeSpec> = self.modes.iter().copied().filter(|m| m.target == target).collect();
            PeriodicField::from_fn(self.n, move |t| modes.iter().map(|m| m.amplitude * (m.k as f64 * t + m.phase).cos()).sum())
        };
        InterfacePair::with_default_delta(self.r0, self.big_r0, build(Target::Inner)?, build(Target::Outer)?)
    }

    pub fn params(&self) -> SimParams {
        SimParams {
            mu: self.mu,
            nu: self.nu,
            law: self.growth.clone(),
            n_rho: self.n_rho,
            n_omega: self.n_omega,
            quad: QuadSpec { n_w: self.n_w, n_xi: self.n_xi },
            pressure: self.pressure,
            densities: self.densities,
            scheme: self.scheme,
            dealias: self.dealias,
        }
    }
}
