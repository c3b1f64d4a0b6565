//! Pressure on the reference disc: the radial profile p_* and the full transformed pressure p̃.
//!
//! Fourier collocation in ω and finite volumes in ρ. The radial grid has a face exactly at ρ = r;
//! face conductances are exact for the quadratic (inner) and logarithmic (annulus) radial profiles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_range, Error, Result};
use crate::geometry::{AngularSample, ReferenceMap};
use crate::spectral::{wavenumber, PeriodicField};

/// Pressure-dependent proliferation rate G(p).
#[derive(Debug, Clone, PartialEq)]
pub enum GrowthLaw {
    /// G(p) = G0(1 − p/pM).
    Linear { g0: f64, pm: f64 },
    /// Monotone cubic through decreasing samples with G(p_last) = 0.
    Tabulated(Table),
    /// G ≡ G0; only meaningful for checks against closed forms.
    Constant { g0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    p: Vec<f64>,
    g: Vec<f64>,
    slopes: Vec<f64>,
}

impl GrowthLaw {
    pub fn linear(g0: f64, pm: f64) -> Result<Self> {
        check_range("G0", g0, g0 > 0.0, "G0 > 0")?;
        check_range("pM", pm, pm > 0.0, "pM > 0")?;
        Ok(Self::Linear { g0, pm })
    }

    /// Table must start at p = 0 with G > 0, be strictly decreasing, and end at G = 0.
    pub fn tabulated(p: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidGrowthTable(msg.to_string()));
        if p.len() != g.len() || p.len() < 2 {
            return bad("need at least two (p, G) pairs of equal length");
        }
        if p.iter().chain(&g).any(|x| !x.is_finite()) {
            return bad("non-finite entry");
        }
        if p[0] != 0.0 {
            return bad("first pressure must be 0");
        }
        if g[0] <= 0.0 {
            return bad("G(0) must be positive");
        }
        if *g.last().unwrap() != 0.0 {
            return bad("last rate must be 0 (G(pM) = 0)");
        }
        if p.windows(2).any(|w| w[1] <= w[0]) {
            return bad("pressures must be strictly increasing");
        }
        if g.windows(2).any(|w| w[1] >= w[0]) {
            return bad("rates must be strictly decreasing");
        }
        let slopes = pchip_slopes(&p, &g);
        Ok(Self::Tabulated(Table { p, g, slopes }))
    }

    pub fn rate(&self, p: f64) -> f64 {
        match self {
            Self::Linear { g0, pm } => g0 * (1.0 - p / pm),
            Self::Constant { g0 } => *g0,
            Self::Tabulated(t) => t.eval(p).0,
        }
    }

    pub fn slope(&self, p: f64) -> f64 {
        match self {
            Self::Linear { g0, pm } => -g0 / pm,
            Self::Constant { .. } => 0.0,
            Self::Tabulated(t) => t.eval(p).1,
        }
    }

    /// pM, or +∞ for the constant law.
    pub fn max_pressure(&self) -> f64 {
        match self {
            Self::Linear { pm, .. } => *pm,
            Self::Constant { .. } => f64::INFINITY,
            Self::Tabulated(t) => *t.p.last().unwrap(),
        }
    }
}

/// Fritsch–Carlson slopes with one-sided secants at the ends.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m
}

impl Table {
    /// (G, G′) with linear extension outside the table.
    fn eval(&self, p: f64) -> (f64, f64) {
        let n = self.p.len();
        if p <= self.p[0] {
            return (self.g[0] + self.slopes[0] * (p - self.p[0]), self.slopes[0]);
        }
        if p >= self.p[n - 1] {
            return (self.g[n - 1] + self.slopes[n - 1] * (p - self.p[n - 1]), self.slopes[n - 1]);
        }
        let i = self.p.partition_point(|&x| x <= p) - 1;
        let h = self.p[i + 1] - self.p[i];
        let t = (p - self.p[i]) / h;
        let (y0, y1, m0, m1) = (self.g[i], self.g[i + 1], self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let val = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * m1;
        let der =
            ((6.0 * t2 - 6.0 * t) * y0 + (-6.0 * t2 + 6.0 * t) * y1) / h + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (3.0 * t2 - 2.0 * t) * m1;
        (val, der)
    }
}

/// Cell-centered radial grid on [0, R] with a face at ρ = r, plus face conductances.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub r: f64,
    pub big_r: f64,
    pub mu: f64,
    pub nu: f64,
    pub n_inner: usize,
    pub centers: Vec<f64>,
    pub faces: Vec<f64>,
    /// ρ-weighted flux per unit radial pressure difference, one per face.
    cond: Vec<f64>,
    /// Coefficient of 𝔸ρω·(tangential derivative) in the face flux.
    cross: Vec<f64>,
    /// Conductance of the half cell between the last inner center and ρ = r.
    inner_half: f64,
}

impl RadialGrid {
    pub fn new(r: f64, big_r: f64, n_rho: usize, mu: f64, nu: f64) -> Result<Self> {
        check_range("r", r, r > 0.0, "r > 0")?;
        check_range("R", big_r, big_r > r, "R > r")?;
        check_range("mu", mu, mu > 0.0, "mu > 0")?;
        check_range("nu", nu, nu > 0.0, "nu > 0")?;
        check_range("N_rho", n_rho as f64, n_rho >= 64, "N_rho >= 64")?;
        let n_inner = ((n_rho as f64 * r / big_r).round() as usize).clamp(2, n_rho - 4);
        let n_outer = n_rho - n_inner;
        let di = r / n_inner as f64;
        let dout = (big_r - r) / n_outer as f64;
        let mut faces = Vec::with_capacity(n_rho + 1);
        faces.extend((0..=n_inner).map(|i| i as f64 * di));
        faces.extend((1..=n_outer).map(|i| r + i as f64 * dout));
        faces[n_inner] = r;
        faces[n_rho] = big_r;
        let centers: Vec<f64> = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();

        let ri = centers[n_inner - 1];
        let ro = centers[n_inner];
        let res_in = (r * r - ri * ri) / (2.0 * r * r * mu);
        let res_out = (ro / r).ln() / nu;
        let mut cond = vec![0.0; n_rho + 1];
        let mut cross = vec![0.0; n_rho + 1];
        for k in 1..n_rho {
            let (a, b) = (centers[k - 1], centers[k]);
            let rf = faces[k];
            if k < n_inner {
                cond[k] = mu * rf / (b - a);
                cross[k] = mu * rf;
            } else if k == n_inner {
                cond[k] = 1.0 / (res_in + res_out);
                cross[k] = cond[k] * r * (mu * res_in + nu * res_out);
            } else {
                cond[k] = nu / (b / a).ln();
                cross[k] = nu * rf;
            }
        }
        cond[n_rho] = nu / (big_r / centers[n_rho - 1]).ln();
        cross[n_rho] = nu * big_r;
        Ok(Self { r, big_r, mu, nu, n_inner, centers, faces, cond, cross, inner_half: 1.0 / res_in })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.faces[i + 1] - self.faces[i]
    }

    /// ∫ρ dρ over cell i.
    pub fn area(&self, i: usize) -> f64 {
        self.centers[i] * self.width(i)
    }

    pub fn mobility(&self, i: usize) -> f64 {
        if i < self.n_inner {
            self.mu
        } else {
            self.nu
        }
    }

    /// Pressure at ρ = r from the two adjacent radial values, exact for radial profiles.
    fn interface_value(&self, p_in: f64, p_out: f64) -> f64 {
        let k = self.n_inner;
        p_in + self.cond[k] * (p_out - p_in) / self.inner_half
    }
}

/// Radially symmetric pressure p_* and its characteristic speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPressure {
    pub grid: RadialGrid,
    pub p_star: Vec<f64>,
    pub p_interface: f64,
    pub c_star: f64,
    pub c_star_tilde: f64,
    pub iterations: usize,
}

impl RadialPressure {
    /// Piecewise-linear interpolant through the cell values, p(r) and p(R) = 0.
    pub fn eval(&self, rho: f64) -> f64 {
        let g = &self.grid;
        let mut xs = Vec::with_capacity(g.len() + 2);
        let mut ys = Vec::with_capacity(g.len() + 2);
        for i in 0..g.len() {
            if i == g.n_inner {
                xs.push(g.r);
                ys.push(self.p_interface);
            }
            xs.push(g.centers[i]);
            ys.push(self.p_star[i]);
        }
        xs.push(g.big_r);
        ys.push(0.0);
        if rho <= xs[0] {
            return ys[0];
        }
        let i = xs.partition_point(|&x| x <= rho).min(xs.len() - 1);
        let t = (rho - xs[i - 1]) / (xs[i] - xs[i - 1]);
        ys[i - 1] + t * (ys[i] - ys[i - 1])
    }

    /// Total production ∫_{B_r} G(p_*) dX.
    pub fn production(&self) -> f64 {
        -2.0 * PI * self.grid.r * self.c_star
    }
}

/// −(1/r)Σ A_i G(p_i) over the inner cells, i.e. −(1/2πr)∫_{B_r} G.
fn speed_from_cells(grid: &RadialGrid, g: impl Fn(usize) -> f64) -> f64 {
    let s: f64 = (0..grid.n_inner).map(|i| grid.area(i) * g(i)).sum();
    -s / grid.r
}

/// Solves the radial two-point problem by Newton iteration on the source term.
pub fn solve_radial(law: &GrowthLaw, mu: f64, nu: f64, r: f64, big_r: f64, n_rho: usize) -> Result<RadialPressure> {
    let grid = RadialGrid::new(r, big_r, n_rho, mu, nu)?;
    let n = grid.len();
    let mut p = vec![0.0; n];
    let mut history = Vec::new();
    let max_iter = 100;
    for it in 0..max_iter {
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let (cl, cr) = (grid.cond[i], grid.cond[i + 1]);
            diag[i] = cl + cr;
            let mut lp = (cl + cr) * p[i];
            if i > 0 {
                lower[i] = -cl;
                lp -= cl * p[i - 1];
            }
            if i + 1 < n {
                upper[i] = -cr;
                lp -= cr * p[i + 1];
            }
            let mut src = 0.0;
            if i < grid.n_inner {
                src = grid.area(i) * law.rate(p[i]);
                diag[i] -= grid.area(i) * law.slope(p[i]);
            }
            rhs[i] = src - lp;
        }
        let delta = thomas(&lower, &diag, &upper, &rhs);
        let step = delta.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        for (pi, d) in p.iter_mut().zip(&delta) {
            *pi += d;
        }
        let scale = p.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        // on fine grids the Newton step bottoms out at the rounding floor of the tridiagonal solve
        let stalled = step <= 1e-9 * scale && history.last().is_some_and(|&prev| step >= prev);
        history.push(step);
        if !step.is_finite() {
            return Err(Error::Diverged { solver: "radial pressure", iterations: it + 1, residual: step, history });
        }
        if step <= 1e-12 * scale || stalled {
            let p_interface = grid.interface_value(p[grid.n_inner - 1], p[grid.n_inner]);
            let c_star = speed_from_cells(&grid, |i| law.rate(p[i]));
            return Ok(RadialPressure { c_star_tilde: r / big_r * c_star, grid, p_star: p, p_interface, c_star, iterations: it + 1 });
        }
    }
    Err(Error::NoConvergence { solver: "radial pressure", iterations: max_iter, residual: *history.last().unwrap(), history })
}

/// Tridiagonal solve; `lower[0]` and `upper[n-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

fn thomas_complex(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[Complex64]) -> Vec<Complex64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - d[i - 1] * lower[i]) / m;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= next * c[i];
    }
    d
}

/// Derivative at `x` of the quadratic through three points.
#[inline]
fn lagrange3_derivative(x: [f64; 3], y: [f64; 3], at: f64) -> f64 {
    let [x0, x1, x2] = x;
    y[0] * ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2))
        + y[1] * ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2))
        + y[2] * ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1))
}

/// Derivative at `at` of the cubic through four points.
fn lagrange4_derivative(x: [f64; 4], y: [f64; 4], at: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..4 {
        let mut denom = 1.0;
        for j in 0..4 {
            if j != i {
                denom *= x[i] - x[j];
            }
        }
        let mut num = 0.0;
        for j in 0..4 {
            if j == i {
                continue;
            }
            let mut prod = 1.0;
            for m in 0..4 {
                if m != i && m != j {
                    prod *= at - x[m];
                }
            }
            num += prod;
        }
        total += y[i] * num / denom;
    }
    total
}

/// Metric coefficients of the pulled-back operator at one point.
#[derive(Debug, Clone, Copy, Default)]
struct Coeffs {
    a_rr: f64,
    a_rw: f64,
    a_ww: f64,
    jac: f64,
}

fn coeffs_at(map: &ReferenceMap, ang: &AngularSample, rho: f64, omega: f64) -> Result<Coeffs> {
    let m = map.eval_with(ang, rho);
    let z = m.zeta;
    let zr = z + m.rho_dzeta;
    let jac = z * zr;
    if jac <= 0.1 {
        return Err(Error::DegenerateMap { rho, omega, value: jac });
    }
    let zw = m.dzeta_domega;
    Ok(Coeffs { a_rr: (z * z + zw * zw) / jac, a_rw: -zw / z, a_ww: zr / z, jac })
}

/// Solver controls for [`solve_reference`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureControls {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PressureControls {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200 }
    }
}

/// Transformed pressure p̃ on the polar reference grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePressure {
    pub grid: RadialGrid,
    pub n_omega: usize,
    /// Row-major: `p_tilde[i * n_omega + j]` at (ρ_i, ω_j).
    pub p_tilde: Vec<f64>,
    /// p̃ at ρ = r per ω_j.
    pub p_interface: Vec<f64>,
    pub c: f64,
    pub c_tilde: f64,
    /// G(p̃) on the inner cells, row-major like `p_tilde`.
    pub g0: Vec<f64>,
    /// G(p̃) at ρ = r per ω_j.
    pub g0_interface: Vec<f64>,
    pub residual_history: Vec<f64>,
    grad_inner: Vec<[f64; 2]>,
    grad_outer: Vec<[f64; 2]>,
}

impl ReferencePressure {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.p_tilde[i * self.n_omega + j]
    }

    pub fn ring(&self, i: usize) -> &[f64] {
        &self.p_tilde[i * self.n_omega..(i + 1) * self.n_omega]
    }

    /// ω-average of p̃ on each ring.
    pub fn mode0(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.ring(i).iter().sum::<f64>() / self.n_omega as f64).collect()
    }

    pub fn iterations(&self) -> usize {
        self.residual_history.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }

    /// Total production ∫_{B_r} G(p̃) dX.
    pub fn production(&self) -> f64 {
        -2.0 * PI * self.grid.r * self.c
    }

    pub fn min(&self) -> f64 {
        self.p_tilde.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.p_tilde.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Reference-coordinate gradients (e_r, e_θ components) of p̃ at ρ = r⁻ and ρ = R, per ω-node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGradients {
    pub inner: Vec<[f64; 2]>,
    pub outer: Vec<[f64; 2]>,
}

impl BoundaryGradients {
    pub fn inner_radial(&self) -> Result<PeriodicField> {
        PeriodicField::new(self.inner.iter().map(|g| g[0]).collect())
    }

    pub fn inner_tangential(&self) -> Result<PeriodicField> {
        PeriodicField::new(self.inner.iter().map(|g| g[1]).collect())
    }

    pub fn outer_radial(&self) -> Result<PeriodicField> {
        PeriodicField::new(self.outer.iter().map(|g| g[0]).collect())
    }
}

pub fn boundary_gradients(p: &ReferencePressure) -> BoundaryGradients {
    BoundaryGradients { inner: p.grad_inner.clone(), outer: p.grad_outer.clone() }
}

fn ring_derivative(row: &[f64]) -> Vec<f64> {
    PeriodicField::new(row.to_vec()).expect("ring size validated").derivative().into_samples()
}

/// Discrete transformed operator on a fixed geometry.
struct Operator<'a> {
    grid: &'a RadialGrid,
    law: &'a GrowthLaw,
    nw: usize,
    face: Vec<Coeffs>,
    center: Vec<Coeffs>,
}

struct Evaluation {
    residual: Vec<f64>,
    p_interface: Vec<f64>,
    interface_flux: Vec<f64>,
    interface_tangent: Vec<f64>,
}

impl<'a> Operator<'a> {
    fn new(grid: &'a RadialGrid, law: &'a GrowthLaw, map: &ReferenceMap, nw: usize) -> Result<Self> {
        let ang = map.angular_grid(nw)?;
        let n = grid.len();
        let omega = |j: usize| 2.0 * PI * j as f64 / nw as f64;
        let mut face = vec![Coeffs::default(); (n + 1) * nw];
        for k in 0..=n {
            for j in 0..nw {
                face[k * nw + j] = coeffs_at(map, &ang[j], grid.faces[k], omega(j))?;
            }
        }
        let mut center = vec![Coeffs::default(); n * nw];
        for i in 0..n {
            for j in 0..nw {
                center[i * nw + j] = coeffs_at(map, &ang[j], grid.centers[i], omega(j))?;
            }
        }
        Ok(Self { grid, law, nw, face, center })
    }

    /// S(p) − L(p) per cell, with the interface values lagged through their tangential derivative.
    fn evaluate(&self, p: &[f64], p_interface_lagged: &[f64]) -> Evaluation {
        let g = self.grid;
        let n = g.len();
        let nw = self.nw;
        let ki = g.n_inner;
        let dp_dw: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| ring_derivative(&p[i * nw..(i + 1) * nw])).collect();
        let t_interface: Vec<f64> = ring_derivative(p_interface_lagged).iter().map(|d| d / g.r).collect();

        // face fluxes ρ a Q_ρ
        let mut flux = vec![0.0; (n + 1) * nw];
        for k in 1..=n {
            for j in 0..nw {
                let c = self.face[k * nw + j];
                let (p_lo, p_hi, t) = if k == n {
                    (p[(n - 1) * nw + j], 0.0, 0.0)
                } else if k == ki {
                    (p[(k - 1) * nw + j], p[k * nw + j], t_interface[j])
                } else {
                    let (a, b) = (g.centers[k - 1], g.centers[k]);
                    let wt = (b - g.faces[k]) / (b - a);
                    let tw = wt * dp_dw[k - 1][j] + (1.0 - wt) * dp_dw[k][j];
                    (p[(k - 1) * nw + j], p[k * nw + j], tw / g.faces[k])
                };
                flux[k * nw + j] = g.cond[k] * c.a_rr * (p_hi - p_lo) + g.cross[k] * c.a_rw * t;
            }
        }

        let mut p_interface = vec![0.0; nw];
        let mut interface_flux = vec![0.0; nw];
        for j in 0..nw {
            let c = self.face[ki * nw + j];
            let x = flux[ki * nw + j];
            let radial_part = x - g.mu * g.r * c.a_rw * t_interface[j];
            p_interface[j] = p[(ki - 1) * nw + j] + radial_part / (c.a_rr * g.inner_half);
            interface_flux[j] = x;
        }

        // ρ-derivative at cell centers
        let radial_derivative = |i: usize, j: usize| -> f64 {
            let v = |ii: usize| p[ii * nw + j];
            let rc = &g.centers;
            if i == 0 {
                let mirror = p[(j + nw / 2) % nw];
                lagrange3_derivative([-rc[0], rc[0], rc[1]], [mirror, v(0), v(1)], rc[0])
            } else if i == n - 1 {
                lagrange3_derivative([rc[n - 2], rc[n - 1], g.big_r], [v(n - 2), v(n - 1), 0.0], rc[n - 1])
            } else if i == ki - 1 {
                lagrange3_derivative([rc[i - 1], rc[i], g.r], [v(i - 1), v(i), p_interface[j]], rc[i])
            } else if i == ki {
                lagrange3_derivative([g.r, rc[i], rc[i + 1]], [p_interface[j], v(i), v(i + 1)], rc[i])
            } else {
                lagrange3_derivative([rc[i - 1], rc[i], rc[i + 1]], [v(i - 1), v(i), v(i + 1)], rc[i])
            }
        };

        let residual: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let rho = g.centers[i];
                let a = g.mobility(i);
                let q_omega: Vec<f64> = (0..nw)
                    .map(|j| {
                        let c = self.center[i * nw + j];
                        c.a_rw * radial_derivative(i, j) + c.a_ww * dp_dw[i][j] / rho
                    })
                    .collect();
                let dq = ring_derivative(&q_omega);
                let width = g.width(i);
                let area = g.area(i);
                let flux = &flux;
                (0..nw).map(move |j| {
                    let lp = -(flux[(i + 1) * nw + j] - flux[i * nw + j]) - a * width * dq[j];
                    let src = if i < ki { area * self.center[i * nw + j].jac * self.law.rate(p[i * nw + j]) } else { 0.0 };
                    src - lp
                })
            })
            .collect();

        Evaluation { residual, p_interface, interface_flux, interface_tangent: t_interface }
    }

    /// ℓ² norm of the cell-integrated residuals with weight Δω/2π per angular node.
    fn norm(&self, residual: &[f64]) -> f64 {
        let w = 1.0 / self.nw as f64;
        (residual.iter().map(|e| e * e).sum::<f64>() * w).sqrt()
    }

    /// Applies the inverse of the radially symmetric operator with a linearized source shift.
    fn precondition(&self, residual: &[f64], shift: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let n = g.len();
        let nw = self.nw;
        let spectra: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|i| PeriodicField::new(residual[i * nw..(i + 1) * nw].to_vec()).expect("ring size validated").coefficients())
            .collect();
        let columns: Vec<Vec<Complex64>> = (0..nw)
            .into_par_iter()
            .map(|jm| {
                let k = wavenumber(jm, nw) as f64;
                let mut lower = vec![0.0; n];
                let mut diag = vec![0.0; n];
                let mut upper = vec![0.0; n];
                let rhs: Vec<Complex64> = (0..n).map(|i| spectra[i][jm]).collect();
                for i in 0..n {
                    let (cl, cr) = (g.cond[i], g.cond[i + 1]);
                    diag[i] = cl + cr + g.mobility(i) * g.width(i) * k * k / g.centers[i] + shift[i];
                    lower[i] = -cl;
                    upper[i] = -cr;
                }
                thomas_complex(&lower, &diag, &upper, &rhs)
            })
            .collect();
        let mut out = vec![0.0; n * nw];
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let c: Vec<Complex64> = (0..nw).map(|jm| columns[jm][i]).collect();
                PeriodicField::from_coefficients(&c).expect("ring size validated").into_samples()
            })
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            out[i * nw..(i + 1) * nw].copy_from_slice(&row);
        }
        out
    }
}

/// Solves for p̃ by preconditioned defect correction; the preconditioner is the radial operator
/// per Fourier mode with the source linearized about the ring means.
pub fn solve_reference(
    law: &GrowthLaw,
    mu: f64,
    nu: f64,
    map: &ReferenceMap,
    n_rho: usize,
    n_omega: usize,
    controls: PressureControls,
) -> Result<ReferencePressure> {
    let pair = &map.pair;
    let (r, big_r) = (pair.r, pair.big_r);
    if n_omega < 8 || !n_omega.is_multiple_of(2) {
        return Err(Error::InvalidGrid(n_omega));
    }
    let radial = solve_radial(law, mu, nu, r, big_r, n_rho)?;
    let grid = radial.grid.clone();
    let n = grid.len();
    let nw = n_omega;
    let op = Operator::new(&grid, law, map, nw)?;

    let mut p: Vec<f64> = (0..n).flat_map(|i| std::iter::repeat_n(radial.p_star[i], nw)).collect();
    let mut p_interface = vec![radial.p_interface; nw];
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut eval = op.evaluate(&p, &p_interface);
    loop {
        let res = op.norm(&eval.residual);
        let drift = eval.p_interface.iter().zip(&p_interface).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        history.push(res);
        p_interface = eval.p_interface.clone();
        if !res.is_finite() || res > 1e6 * best.max(controls.tol) {
            return Err(Error::Diverged { solver: "reference pressure", iterations: history.len(), residual: res, history });
        }
        best = best.min(res);
        if res <= controls.tol && drift <= controls.tol {
            break;
        }
        if history.len() >= controls.max_iter {
            return Err(Error::NoConvergence { solver: "reference pressure", iterations: history.len(), residual: res, history });
        }
        let shift: Vec<f64> = (0..n)
            .map(|i| {
                if i < grid.n_inner {
                    let mean = p[i * nw..(i + 1) * nw].iter().sum::<f64>() / nw as f64;
                    -grid.area(i) * law.slope(mean)
                } else {
                    0.0
                }
            })
            .collect();
        let delta = op.precondition(&eval.residual, &shift);
        for (pi, d) in p.iter_mut().zip(&delta) {
            *pi += d;
        }
        eval = op.evaluate(&p, &p_interface);
    }

    let ki = grid.n_inner;
    let g0: Vec<f64> = p[..ki * nw].iter().map(|&x| law.rate(x)).collect();
    let g0_interface: Vec<f64> = eval.p_interface.iter().map(|&x| law.rate(x)).collect();
    let c = speed_from_cells(&grid, |i| g0[i * nw..(i + 1) * nw].iter().sum::<f64>() / nw as f64);

    let grad_inner: Vec<[f64; 2]> = (0..nw)
        .map(|j| {
            let cf = op.face[ki * nw + j];
            let t = eval.interface_tangent[j];
            let radial = (eval.interface_flux[j] / (mu * r) - cf.a_rw * t) / cf.a_rr;
            [radial, t]
        })
        .collect();
    let grad_outer: Vec<[f64; 2]> = (0..nw)
        .map(|j| {
            let rc = &grid.centers;
            let v = |i: usize| p[i * nw + j];
            let d = lagrange4_derivative([rc[n - 3], rc[n - 2], rc[n - 1], big_r], [v(n - 3), v(n - 2), v(n - 1), 0.0], big_r);
            [d, 0.0]
        })
        .collect();

    Ok(ReferencePressure {
        n_omega: nw,
        p_tilde: p,
        p_interface: eval.p_interface,
        c,
        c_tilde: r / big_r * c,
        g0,
        g0_interface,
        residual_history: history,
        grad_inner,
        grad_outer,
        grid,
    })
}

/// Interface velocities (∂_t h, ∂_t H) from the boundary gradients of p̃, on the ω grid.
pub fn interface_velocity(map: &ReferenceMap, pressure: &ReferencePressure) -> Result<(PeriodicField, PeriodicField)> {
    let nw = pressure.n_omega;
    let ang = map.angular_grid(nw)?;
    let (r, big_r) = (map.pair.r, map.pair.big_r);
    let (mu, nu) = (pressure.grid.mu, pressure.grid.nu);
    let grads = boundary_gradients(pressure);
    let dth = (0..nw)
        .map(|j| {
            let (h, dh) = (ang[j].h, ang[j].dh);
            let [pr, pt] = grads.inner[j];
            let one = 1.0 + h;
            -(mu / r) * (((one * one + dh * dh) / one.powi(3)) * pr - dh / (one * one) * pt)
        })
        .collect();
    let dt_big = (0..nw)
        .map(|j| {
            let (hh, dhh) = (ang[j].big_h, ang[j].big_dh);
            let one = 1.0 + hh;
            -(nu / big_r) * ((one * one + dhh * dhh) / one.powi(3)) * grads.outer[j][0]
        })
        .collect();
    Ok((PeriodicField::new(dth)?, PeriodicField::new(dt_big)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::InterfacePair;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_law_values() {
        let g = GrowthLaw::linear(2.0, 4.0).unwrap();
        assert_eq!(g.rate(0.0), 2.0);
        assert_eq!(g.rate(4.0), 0.0);
        assert_eq!(g.slope(1.0), -0.5);
        assert!(GrowthLaw::linear(-1.0, 1.0).is_err());
        assert!(GrowthLaw::linear(1.0, 0.0).is_err());
    }

    #[test]
    fn table_validation() {
        assert!(GrowthLaw::tabulated(vec![0.0, 1.0], vec![1.0, 0.0]).is_ok());
        assert!(GrowthLaw::tabulated(vec![0.0, 1.0], vec![1.0, 0.1]).is_err());
        assert!(GrowthLaw::tabulated(vec![0.0, 0.5, 1.0], vec![1.0, 1.2, 0.0]).is_err());
        assert!(GrowthLaw::tabulated(vec![0.1, 1.0], vec![1.0, 0.0]).is_err());
        assert!(GrowthLaw::tabulated(vec![0.0, 1.0, 0.5], vec![1.0, 0.5, 0.0]).is_err());
    }

    #[test]
    fn table_is_monotone_and_interpolating() {
        let law = GrowthLaw::tabulated(vec![0.0, 0.2, 0.5, 1.0], vec![1.0, 0.9, 0.3, 0.0]).unwrap();
        assert_abs_diff_eq!(law.rate(0.5), 0.3, epsilon = 1e-15);
        let mut prev = law.rate(0.0);
        for i in 1..=1000 {
            let g = law.rate(i as f64 / 1000.0);
            assert!(g <= prev + 1e-15);
            prev = g;
        }
        let e = 1e-6;
        assert_abs_diff_eq!(law.slope(0.37), (law.rate(0.37 + e) - law.rate(0.37 - e)) / (2.0 * e), epsilon = 1e-6);
    }

    #[test]
    fn grid_has_face_at_interface() {
        let g = RadialGrid::new(1.0, 2.0, 64, 1.0, 1.0).unwrap();
        assert_eq!(g.n_inner, 32);
        assert_eq!(g.faces[32], 1.0);
        assert_eq!(*g.faces.last().unwrap(), 2.0);
        let total: f64 = (0..g.len()).map(|i| g.area(i)).sum();
        assert_abs_diff_eq!(total, 2.0, epsilon = 1e-13);
        assert!(RadialGrid::new(1.0, 2.0, 32, 1.0, 1.0).is_err());
    }

    #[test]
    fn constant_source_closed_form() {
        let (mu, nu, r, big_r, g0) = (1.3, 0.7, 1.0, 1.8, 0.9);
        let law = GrowthLaw::Constant { g0 };
        let sol = solve_radial(&law, mu, nu, r, big_r, 128).unwrap();
        let p_r = g0 * r * r / (2.0 * nu) * (big_r / r).ln();
        for (i, &rho) in sol.grid.centers.iter().enumerate() {
            let exact = if rho < r { p_r + g0 * (r * r - rho * rho) / (4.0 * mu) } else { g0 * r * r / (2.0 * nu) * (big_r / rho).ln() };
            assert_abs_diff_eq!(sol.p_star[i], exact, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(sol.p_interface, p_r, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.c_star, -g0 * r / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sol.c_star_tilde, r / big_r * sol.c_star, epsilon = 1e-15);
    }

    #[test]
    fn linear_law_properties() {
        let law = GrowthLaw::linear(1.0, 1.0).unwrap();
        let sol = solve_radial(&law, 1.0, 2.0, 1.0, 1.5, 128).unwrap();
        assert!(sol.c_star < 0.0);
        assert!(sol.p_star.windows(2).all(|w| w[1] <= w[0]));
        assert!(sol.p_star.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn lagrange_stencils_are_exact_on_polynomials() {
        let d = lagrange3_derivative([0.1, 0.4, 0.45], [0.01, 0.16, 0.2025], 0.4);
        assert_abs_diff_eq!(d, 0.8, epsilon = 1e-13);
        let f = |x: f64| x * x * x - 2.0 * x;
        let xs = [0.5, 0.7, 0.8, 1.0];
        let d = lagrange4_derivative(xs, xs.map(f), 1.0);
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_map_reproduces_radial_solution() {
        let law = GrowthLaw::linear(1.0, 1.0).unwrap();
        let pair = InterfacePair::concentric(1.0, 1.5, 32).unwrap();
        let map = ReferenceMap::new(pair);
        let rad = solve_radial(&law, 1.0, 2.0, 1.0, 1.5, 64).unwrap();
        let full = solve_reference(&law, 1.0, 2.0, &map, 64, 16, PressureControls::default()).unwrap();
        for i in 0..rad.grid.len() {
            for j in 0..16 {
                assert_abs_diff_eq!(full.at(i, j), rad.p_star[i], epsilon = 1e-10);
            }
        }
        assert_abs_diff_eq!(full.c, rad.c_star, epsilon = 1e-12);
    }
}
