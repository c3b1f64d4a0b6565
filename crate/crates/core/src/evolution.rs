//! Time evolution of (h, H): boundary-integral right-hand sides, exponential time differencing on
//! the half-Laplacian part, the direct pressure-gradient velocity, and the linear dispersion matrix.

use num_complex::Complex64;

use crate::densities::{solve_densities, BoundaryDensities, DensityControls, Linearization};
use crate::error::{Error, Result};
use crate::geometry::{needs_rereference, rereference, smallness_norms, InterfacePair, ReferenceMap};
use crate::growth_potential::{grad_inner, grad_outer, GradComponents, QuadSpec, SourceGrid};
use crate::layer_ops::{interaction_inner_from_outer, interaction_outer_from_inner, singular_parts, Curve};
use crate::pressure::{interface_velocity, solve_radial, solve_reference, GrowthLaw, PressureControls, ReferencePressure};
use crate::spectral::{wavenumber, PeriodicField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Etd1,
    Etd2Rk,
}

/// Physical parameters, resolutions, and solver controls shared by every step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub mu: f64,
    pub nu: f64,
    pub law: GrowthLaw,
    pub n_rho: usize,
    pub n_omega: usize,
    pub quad: QuadSpec,
    pub pressure: PressureControls,
    pub densities: DensityControls,
    pub scheme: Scheme,
    pub dealias: bool,
}

impl SimParams {
    pub fn new(mu: f64, nu: f64, law: GrowthLaw) -> Self {
        Self {
            mu,
            nu,
            law,
            n_rho: 512,
            n_omega: 128,
            quad: QuadSpec::default(),
            pressure: PressureControls::default(),
            densities: DensityControls::default(),
            scheme: Scheme::Etd1,
            dealias: true,
        }
    }

    pub fn a(&self) -> f64 {
        (self.mu - self.nu) / (self.mu + self.nu)
    }
}

/// Number of Fourier modes reported in diagnostics.
pub const DIAG_MODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagRecord {
    pub time: f64,
    pub r: f64,
    pub big_r: f64,
    pub annulus_area: f64,
    pub m0: f64,
    pub big_m0: f64,
    /// |h_k| for k = 1..=8 as cosine-series amplitudes (2|ĥ_k|).
    pub modes_h: Vec<f64>,
    pub modes_big_h: Vec<f64>,
    pub pressure_residual: f64,
    pub pressure_iterations: usize,
    pub density_residual: f64,
    pub density_sweeps: usize,
    pub c_star: f64,
    pub c: f64,
}

fn amplitudes(f: &PeriodicField) -> Vec<f64> {
    let c = f.coefficients();
    (1..=DIAG_MODES).map(|k| if k < f.len() / 2 { 2.0 * c[k].norm() } else { 0.0 }).collect()
}

/// Geometry with every derived quantity needed for one right-hand-side evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub pair: InterfacePair,
    pub pressure: ReferencePressure,
    pub grads_inner: GradComponents,
    pub grads_outer: GradComponents,
    pub densities: BoundaryDensities,
    pub lin: Linearization,
    pub diagnostics: DiagRecord,
}

impl SimState {
    /// Solves the pressure, growth-potential, and density problems for `pair`.
    pub fn new(time: f64, pair: InterfacePair, params: &SimParams) -> Result<Self> {
        pair.check_regime()?;
        let radial = solve_radial(&params.law, params.mu, params.nu, pair.r, pair.big_r, params.n_rho)?;
        let map = ReferenceMap::new(pair.clone());
        let pressure = solve_reference(&params.law, params.mu, params.nu, &map, params.n_rho, params.n_omega, params.pressure)?;
        let source = SourceGrid::from_pressure(&pressure)?;
        let grads_inner = grad_inner(&pair, &source, &params.quad)?;
        let grads_outer = grad_outer(&pair, &source, &params.quad)?;
        let lin = Linearization::new(params.mu, params.nu, radial.c_star, pair.r, pair.big_r);
        let densities = solve_densities(&pair, &lin, &grads_inner, &grads_outer, &params.densities)?;
        let (m0, big_m0) = smallness_norms(&pair);
        let diagnostics = DiagRecord {
            time,
            r: pair.r,
            big_r: pair.big_r,
            annulus_area: pair.annulus_area(),
            m0,
            big_m0,
            modes_h: amplitudes(&pair.h),
            modes_big_h: amplitudes(&pair.big_h),
            pressure_residual: pressure.final_residual(),
            pressure_iterations: pressure.iterations(),
            density_residual: densities.history.last().copied().unwrap_or(0.0),
            density_sweeps: densities.history.len(),
            c_star: radial.c_star,
            c: pressure.c,
        };
        Ok(Self { time, pair, pressure, grads_inner, grads_outer, densities, lin, diagnostics })
    }
}

/// (∂_t h, ∂_t H) from the contour equations
/// ∂_t f = −(1/f)(γ′·K_γ[φ]′ + γ′·K_{γ,γ̃}φ′) + (1/f)∇(Γ∗g)|_γ·γ′⊥ and the outer analogue.
pub fn velocity_boundary_integral(state: &SimState) -> Result<(PeriodicField, PeriodicField)> {
    let pair = &state.pair;
    let jump = &state.densities.jump_prime;
    let outer = &state.densities.outer_prime;
    let f = pair.inner_radius();
    let big_f = pair.outer_radius();
    let self_in = singular_parts(Curve::Inner, pair, jump)?.tangent;
    let self_out = singular_parts(Curve::Outer, pair, outer)?.tangent;
    let (cross_in, _) = interaction_inner_from_outer(pair, outer)?.project(&f);
    let (cross_out, _) = interaction_outer_from_inner(pair, jump)?.project(&big_f);
    let normal_flux = |rad: &PeriodicField, g: &GradComponents| {
        // ∇(Γ∗g)·γ′⊥ with γ′⊥ = f′e_θ − f e_r
        &(&rad.derivative() * &g.tangential) - &(rad * &g.radial)
    };
    let flux_in = normal_flux(&f, &state.grads_inner);
    let flux_out = normal_flux(&big_f, &state.grads_outer);
    let dt_f = (&flux_in - &(&self_in + &cross_in)).zip_map(&f, |v, fv| v / fv);
    let dt_big_f = (&flux_out - &(&self_out + &cross_out)).zip_map(&big_f, |v, fv| v / fv);
    Ok((dt_f.scale(1.0 / pair.r), dt_big_f.scale(1.0 / pair.big_r)))
}

/// Right-hand sides of ∂_t h = −λ_h(−Δ)^{1/2}h + rhs_h and ∂_t H = −λ_H(−Δ)^{1/2}H + rhs_H.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs {
    pub rhs_h: PeriodicField,
    pub rhs_big_h: PeriodicField,
    pub lambda_h: f64,
    pub lambda_big_h: f64,
}

/// Linear rates λ_h = Ac_*/r and λ_H = −c̃_*/R at the state's radii.
pub fn linear_rates(lin: &Linearization) -> (f64, f64) {
    (lin.a * lin.c_star / lin.r, -lin.c_tilde_star / lin.big_r)
}

fn rhs_with(state: &SimState, lambda_h: f64, lambda_big_h: f64, dealias: bool) -> Result<Rhs> {
    let (vh, vbig) = velocity_boundary_integral(state)?;
    let mut rhs_h = &vh + &state.pair.h.frac_laplacian_half().scale(lambda_h);
    let mut rhs_big_h = &vbig + &state.pair.big_h.frac_laplacian_half().scale(lambda_big_h);
    if dealias {
        rhs_h = rhs_h.dealias_2_3();
        rhs_big_h = rhs_big_h.dealias_2_3();
    }
    Ok(Rhs { rhs_h, rhs_big_h, lambda_h, lambda_big_h })
}

/// Backbone right-hand sides: the full velocity with the stiff half-Laplacian part moved to the left.
pub fn assemble_rhs(state: &SimState, params: &SimParams) -> Result<Rhs> {
    let (lh, lbig) = linear_rates(&state.lin);
    rhs_with(state, lh, lbig, params.dealias)
}

/// (∂_t h, ∂_t H) from one-sided gradients of the reference pressure, resampled to the interface grid.
pub fn velocity_direct(state: &SimState) -> Result<(PeriodicField, PeriodicField)> {
    let map = ReferenceMap::new(state.pair.clone());
    let (dth, dt_big) = interface_velocity(&map, &state.pressure)?;
    let n = state.pair.n();
    Ok((dth.resample(n)?, dt_big.resample(n)?))
}

/// M(k) in d/dt(f_k, F_k) = M(k)(f_k, F_k) for the linearization about concentric circles.
pub fn dispersion_matrix(k: u32, a: f64, c_star: f64, r: f64, big_r: f64) -> [[f64; 2]; 2] {
    let lin = Linearization { a, c_star, c_tilde_star: r / big_r * c_star, r, big_r };
    let s = lin.ratio().powi(k as i32);
    let kk = k as i64;
    let column = |f: Complex64, big: Complex64| {
        let (x, y) = crate::densities::linearized_densities(kk, &lin, f, big);
        // −(1/2r)H(·) with H ↦ −i for k > 0
        let i = Complex64::new(0.0, 1.0);
        let df = i * (x + s * y) / (2.0 * r);
        let dbig = i * (y + s * x) / (2.0 * big_r);
        [df.re, dbig.re]
    };
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let c0 = column(one, zero);
    let c1 = column(zero, one);
    [[c0[0], c1[0]], [c0[1], c1[1]]]
}

/// Eigenvalues of a real 2×2 matrix, larger real part first.
pub fn eigenvalues(m: &[[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    let half = Complex64::new(tr / 2.0, 0.0);
    let (a, b) = (half + disc, half - disc);
    if a.re >= b.re {
        [a, b]
    } else {
        [b, a]
    }
}

/// The eigenvalue whose eigenvector has the larger inner-interface component.
pub fn inner_eigenvalue(m: &[[f64; 2]; 2]) -> Complex64 {
    let ev = eigenvalues(m);
    let weight = |l: Complex64| {
        // (M − λ)v = 0 with v = (m01, λ − m00) or (λ − m11, m10)
        let (v0, v1) = if m[0][1].abs() + (l.re - m[0][0]).abs() > 0.0 {
            (Complex64::new(m[0][1], 0.0), l - m[0][0])
        } else {
            (l - m[1][1], Complex64::new(m[1][0], 0.0))
        };
        v0.norm() / (v0.norm() + v1.norm())
    };
    if weight(ev[0]) >= weight(ev[1]) {
        ev[0]
    } else {
        ev[1]
    }
}

fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        z.exp_m1() / z
    }
}

fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        0.5 + z / 6.0 + z * z / 24.0
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// u ← e^{L dt}u + dt φ₁(L dt) n, with L = −λ|k| per mode.
fn etd1_update(u: &PeriodicField, n: &PeriodicField, lambda: f64, dt: f64) -> Result<PeriodicField> {
    let len = u.len();
    let (cu, cn) = (u.coefficients(), n.coefficients());
    let out: Vec<Complex64> = (0..len)
        .map(|j| {
            let z = -lambda * wavenumber(j, len).unsigned_abs() as f64 * dt;
            z.exp() * cu[j] + dt * phi1(z) * cn[j]
        })
        .collect();
    PeriodicField::from_coefficients(&out)
}

/// a + dt φ₂(L dt)(n_a − n_u).
fn etd2_correction(a: &PeriodicField, na: &PeriodicField, nu: &PeriodicField, lambda: f64, dt: f64) -> Result<PeriodicField> {
    let len = a.len();
    let (ca, cd) = (a.coefficients(), (na - nu).coefficients());
    let out: Vec<Complex64> = (0..len)
        .map(|j| {
            let z = -lambda * wavenumber(j, len).unsigned_abs() as f64 * dt;
            ca[j] + dt * phi2(z) * cd[j]
        })
        .collect();
    PeriodicField::from_coefficients(&out)
}

/// Largest admissible dt in the unstable regime (λ_h < 0), none otherwise.
pub fn dt_limit(state: &SimState) -> Option<f64> {
    let (lh, _) = linear_rates(&state.lin);
    (lh < 0.0).then(|| 0.5 * state.pair.r / (state.lin.c_star.abs() * state.pair.n() as f64))
}

fn with_deviations(pair: &InterfacePair, h: PeriodicField, big_h: PeriodicField) -> Result<InterfacePair> {
    let next = InterfacePair::new(pair.r, pair.big_r, pair.delta, h, big_h)?;
    next.check_regime()?;
    Ok(next)
}

/// Advances one step of size `dt`, then re-references when the mean drift trigger fires.
pub fn step_etd(state: &SimState, dt: f64, params: &SimParams) -> Result<SimState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter { name: "dt", value: dt, expected: "dt > 0" });
    }
    if let Some(limit) = dt_limit(state) {
        if dt > limit {
            return Err(Error::TimeStepTooLarge { dt, limit });
        }
    }
    let rhs = assemble_rhs(state, params)?;
    let (lh, lbig) = (rhs.lambda_h, rhs.lambda_big_h);
    let h1 = etd1_update(&state.pair.h, &rhs.rhs_h, lh, dt)?;
    let big_h1 = etd1_update(&state.pair.big_h, &rhs.rhs_big_h, lbig, dt)?;
    let mut pair = with_deviations(&state.pair, h1, big_h1)?;
    if params.scheme == Scheme::Etd2Rk {
        // the stage geometry is solved in its own reference frame; f = r(1+h) = r'(1+h') rescales the rhs by r'/r
        let stage_pair = if needs_rereference(&pair) { rereference(&pair)? } else { pair.clone() };
        let stage = SimState::new(state.time + dt, stage_pair, params)?;
        let rhs_a = rhs_with(&stage, lh, lbig, params.dealias)?;
        let na = rhs_a.rhs_h.scale(stage.pair.r / pair.r);
        let big_na = rhs_a.rhs_big_h.scale(stage.pair.big_r / pair.big_r);
        let h2 = etd2_correction(&pair.h, &na, &rhs.rhs_h, lh, dt)?;
        let big_h2 = etd2_correction(&pair.big_h, &big_na, &rhs.rhs_big_h, lbig, dt)?;
        pair = with_deviations(&state.pair, h2, big_h2)?;
    }
    if needs_rereference(&pair) {
        pair = rereference(&pair)?;
    }
    SimState::new(state.time + dt, pair, params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Emit every `cadence` steps; the final state is always emitted.
    pub cadence: usize,
}

/// A failed run: the error and the last state that was computed successfully.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    pub last: Box<SimState>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (last good state at t = {})", self.error, self.last.time)
    }
}

impl std::error::Error for RunFailure {}

/// Steps from `initial` to `t_end`, handing emitted states to `emit`.
pub fn run(
    initial: SimState,
    params: &SimParams,
    opts: &RunOptions,
    mut emit: impl FnMut(&SimState),
) -> std::result::Result<SimState, RunFailure> {
    let fail = |error: Error, last: &SimState| RunFailure { error, last: Box::new(last.clone()) };
    if !(opts.dt > 0.0 && opts.t_end > 0.0 && opts.dt <= opts.t_end) {
        return Err(fail(Error::InvalidParameter { name: "dt", value: opts.dt, expected: "0 < dt <= t_end" }, &initial));
    }
    let steps = (opts.t_end / opts.dt - 1e-9).ceil() as usize;
    let cadence = opts.cadence.max(1);
    let mut state = initial;
    for step in 1..=steps {
        let dt = if step == steps { opts.t_end - state.time } else { opts.dt };
        let next = match step_etd(&state, dt, params) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, &state)),
        };
        state = next;
        if step % cadence == 0 || step == steps {
            emit(&state);
        }
    }
    Ok(state)
}
