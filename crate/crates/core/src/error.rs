use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("grid size {0} is invalid: need an even number of samples, at least 8")]
    InvalidGrid(usize),

    #[error("grid sizes differ: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("parameter `{name}` = {value} is outside its admissible range ({expected})")]
    InvalidParameter { name: &'static str, value: f64, expected: &'static str },

    #[error("kernel evaluated at its singular point (s, xi) = (1, 0)")]
    SingularKernel,

    #[error("reference map is degenerate at rho = {rho}, omega = {omega} (zeta^2 + zeta*rho*dzeta = {value})")]
    DegenerateMap { rho: f64, omega: f64, value: f64 },

    #[error("gap parameter delta = {delta} lies outside [{lower}, {upper}]")]
    DeltaOutOfBand { delta: f64, lower: f64, upper: f64 },

    #[error("deviation too large for the reference map: (|h|_inf + |H|_inf)/delta = {ratio}")]
    SmallnessViolated { ratio: f64 },

    #[error("interfaces touch or cross (margin {margin})")]
    Collision { margin: f64 },

    #[error("growth table rejected: {0}")]
    InvalidGrowthTable(String),

    #[error("{solver} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { solver: &'static str, iterations: usize, residual: f64, history: Vec<f64> },

    #[error("{solver} diverged after {iterations} iterations (residual {residual:e})")]
    Diverged { solver: &'static str, iterations: usize, residual: f64, history: Vec<f64> },

    #[error("fixed-point map is not contracting: residual grew for {sweeps} consecutive sweeps (last factor {factor})")]
    NonContraction { sweeps: usize, factor: f64 },

    #[error("quadrature grid places a node on the singular radius w = 1")]
    QuadratureResolution,

    #[error("evaluation point lies within one grid spacing of the curve (distance {distance})")]
    OnCurve { distance: f64 },

    #[error("time step {dt} exceeds the stability guard {limit}")]
    TimeStepTooLarge { dt: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, ok: bool, expected: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, expected })
    }
}
