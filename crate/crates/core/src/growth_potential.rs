//! Gradient of the growth potential Γ∗g restricted to both interfaces.
//!
//! The source is given in reference coordinates, g(x) = g₀(X(x)), and the gradient is written as a
//! double integral over (w, ξ) with w = ρ/r against the kernels K = sQ and J = −s(1+P).

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{check_range, Error, Result};
use crate::geometry::InterfacePair;
use crate::kernels::kernel_kj;
use crate::pressure::ReferencePressure;
use crate::spectral::PeriodicField;

/// Source g₀ sampled on rings w_k ∈ [0, 1] and a uniform ω-grid, interpolated linearly in w.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceGrid {
    w: Vec<f64>,
    rings: Vec<PeriodicField>,
}

impl SourceGrid {
    /// `values[k * n_omega + j]` is g₀(w_k, ω_j). Nodes must increase strictly from 0 to 1.
    pub fn new(w: Vec<f64>, n_omega: usize, values: Vec<f64>) -> Result<Self> {
        if w.len() < 2 || w[0] != 0.0 || *w.last().unwrap() != 1.0 || w.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidParameter { name: "w", value: w.len() as f64, expected: "strictly increasing nodes from 0 to 1" });
        }
        if values.len() != w.len() * n_omega {
            return Err(Error::GridMismatch { left: values.len(), right: w.len() * n_omega });
        }
        let rings = values.chunks(n_omega).map(|c| PeriodicField::new(c.to_vec())).collect::<Result<Vec<_>>>()?;
        Ok(Self { w, rings })
    }

    /// Uniform nodes w_k = k/(n_w−1).
    pub fn from_fn(n_w: usize, n_omega: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_range("n_w", n_w as f64, n_w >= 2, "n_w >= 2")?;
        let w: Vec<f64> = (0..n_w).map(|k| k as f64 / (n_w - 1) as f64).collect();
        let mut values = Vec::with_capacity(n_w * n_omega);
        for &wk in &w {
            for j in 0..n_omega {
                values.push(f(wk, crate::spectral::node(j, n_omega)));
            }
        }
        Self::new(w, n_omega, values)
    }

    /// G(p̃) on the inner pressure cells, closed by the ring-0 mean at w = 0 and the interface values at w = 1.
    pub fn from_pressure(p: &ReferencePressure) -> Result<Self> {
        let g = &p.grid;
        let nw = p.n_omega;
        let ni = g.n_inner;
        let mut w = Vec::with_capacity(ni + 2);
        let mut values = Vec::with_capacity((ni + 2) * nw);
        let center = p.g0[..nw].iter().sum::<f64>() / nw as f64;
        w.push(0.0);
        values.extend(std::iter::repeat_n(center, nw));
        for i in 0..ni {
            w.push(g.centers[i] / g.r);
            values.extend_from_slice(&p.g0[i * nw..(i + 1) * nw]);
        }
        w.push(1.0);
        values.extend_from_slice(&p.g0_interface);
        Self::new(w, nw, values)
    }

    pub fn n_omega(&self) -> usize {
        self.rings[0].len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.w
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { w: self.w.clone(), rings: self.rings.iter().map(|r| r.scale(a)).collect() }
    }

    /// Rings resampled to `m` angular nodes.
    fn resampled(&self, m: usize) -> Result<Vec<Vec<f64>>> {
        self.rings.iter().map(|r| Ok(r.resample(m)?.into_samples())).collect()
    }

    /// (k, t) with w = (1−t)w_k + t w_{k+1}.
    fn bracket(&self, w: f64) -> (usize, f64) {
        let k = self.w.partition_point(|&x| x <= w).clamp(1, self.w.len() - 1) - 1;
        (k, (w - self.w[k]) / (self.w[k + 1] - self.w[k]))
    }

    /// ∫₀¹ w ḡ(w) dw for the piecewise-linear ring means.
    pub fn weighted_mean_integral(&self) -> f64 {
        let means: Vec<f64> = self.rings.iter().map(|r| r.mean()).collect();
        self.w
            .windows(2)
            .zip(means.windows(2))
            .map(|(x, g)| {
                let (a, b) = (x[0], x[1]);
                let l = b - a;
                // ∫ w (g_a (b−w) + g_b (w−a)) / l dw
                (g[0] * (b * (b * b - a * a) / 2.0 - (b * b * b - a * a * a) / 3.0)
                    + g[1] * ((b * b * b - a * a * a) / 3.0 - a * (b * b - a * a) / 2.0))
                    / l
            })
            .sum()
    }
}

/// Tensor quadrature: N_w cell-centered w-cells (the last two split geometrically) times N_ξ uniform ξ-nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadSpec {
    pub n_w: usize,
    pub n_xi: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { n_w: 256, n_xi: 512 }
    }
}

const REFINE: usize = 8;

impl QuadSpec {
    /// (nodes, weights) of the w-rule on [0, 1].
    pub fn w_rule(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        check_range("n_w", self.n_w as f64, self.n_w >= 4, "n_w >= 4")?;
        let dw = 1.0 / self.n_w as f64;
        let mut nodes = Vec::with_capacity(self.n_w + REFINE);
        let mut weights = Vec::with_capacity(self.n_w + REFINE);
        for i in 0..self.n_w - 2 {
            nodes.push((i as f64 + 0.5) * dw);
            weights.push(dw);
        }
        let len = 2.0 * dw;
        let mut breaks: Vec<f64> = (0..REFINE).map(|k| 1.0 - len * 0.5f64.powi(k as i32)).collect();
        breaks.push(1.0);
        for p in breaks.windows(2) {
            nodes.push(0.5 * (p[0] + p[1]));
            weights.push(p[1] - p[0]);
        }
        if nodes.iter().any(|&w| w >= 1.0) {
            return Err(Error::QuadratureResolution);
        }
        Ok((nodes, weights))
    }
}

/// Interface-restricted gradient of Γ∗g in the (e_θ, e_r) frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GradComponents {
    pub tangential: PeriodicField,
    pub radial: PeriodicField,
}

impl GradComponents {
    pub fn zeros(n: usize) -> Result<Self> {
        Ok(Self { tangential: PeriodicField::zeros(n)?, radial: PeriodicField::zeros(n)? })
    }
}

/// Per-(angle, w-node) data shared by both interfaces: |y| and the weighted source.
struct Table {
    m: usize,
    nq: usize,
    /// `y[i * nq + q]` = w_q (1 + h(ω_i) η(w_q)).
    y: Vec<f64>,
    /// `u[i * nq + q]` = g₀ (∂|y|/∂ρ) Δw_q.
    u: Vec<f64>,
}

fn build_table(pair: &InterfacePair, g0: &SourceGrid, quad: &QuadSpec) -> Result<Table> {
    let n = pair.n();
    if !quad.n_xi.is_multiple_of(2) || quad.n_xi < 8 || !n.max(quad.n_xi).is_multiple_of(n.min(quad.n_xi)) {
        return Err(Error::InvalidParameter {
            name: "n_xi",
            value: quad.n_xi as f64,
            expected: "even, >= 8, and dividing or divisible by the interface grid size",
        });
    }
    let m = n.max(quad.n_xi);
    let (wq, dw) = quad.w_rule()?;
    let nq = wq.len();
    let h = pair.h.resample(m)?;
    let rings = g0.resampled(m)?;
    let eta = pair.cutoff();
    let mut y = vec![0.0; m * nq];
    let mut u = vec![0.0; m * nq];
    for (q, (&w, &weight)) in wq.iter().zip(&dw).enumerate() {
        let (e, de, _) = eta.eval(w);
        let (k, t) = g0.bracket(w);
        for i in 0..m {
            let hi = h.samples()[i];
            let g = (1.0 - t) * rings[k][i] + t * rings[k + 1][i];
            y[i * nq + q] = w * (1.0 + hi * e);
            u[i * nq + q] = g * (1.0 + hi * (e + w * de)) * weight;
        }
    }
    Ok(Table { m, nq, y, u })
}

fn xi_value(k: usize, n: usize) -> f64 {
    let x = 2.0 * PI * k as f64 / n as f64;
    if 2 * k > n {
        x - 2.0 * PI
    } else {
        x
    }
}

/// e_θ·∇(Γ∗g) and e_r·∇(Γ∗g) at γ(θ_j).
pub fn grad_inner(pair: &InterfacePair, g0: &SourceGrid, quad: &QuadSpec) -> Result<GradComponents> {
    let t = build_table(pair, g0, quad)?;
    let n = pair.n();
    let (stride, xstride) = (t.m / n, t.m / quad.n_xi);
    let dxi = 2.0 * PI / quad.n_xi as f64;
    let pref = pair.r / (4.0 * PI);
    let nq = t.nq;
    let out: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let jj = j * stride;
            let a = 1.0 + pair.h.samples()[j];
            let y0 = &t.y[jj * nq..(jj + 1) * nq];
            let u0 = &t.u[jj * nq..(jj + 1) * nq];
            let (mut tang, mut rad) = (0.0, 0.0);
            for mx in 0..quad.n_xi {
                let xi = xi_value(mx, quad.n_xi);
                let i = (jj + mx * xstride) % t.m;
                let yr = &t.y[i * nq..(i + 1) * nq];
                let ur = &t.u[i * nq..(i + 1) * nq];
                for q in 0..nq {
                    let (k, jv) = kernel_kj(yr[q] / a, xi);
                    let (_, jb) = kernel_kj(y0[q] / a, xi);
                    tang += k * ur[q];
                    rad += jv * ur[q] - jb * u0[q];
                }
            }
            // ∫ J(s, ξ) dξ = −4πs for s < 1
            let analytic: f64 = (0..nq).map(|q| -4.0 * PI * (y0[q] / a) * u0[q]).sum();
            (pref * tang * dxi, pref * (rad * dxi + analytic))
        })
        .collect();
    collect(out)
}

/// e_θ·∇(Γ∗g) and e_r·∇(Γ∗g) at γ̃(θ_j).
pub fn grad_outer(pair: &InterfacePair, g0: &SourceGrid, quad: &QuadSpec) -> Result<GradComponents> {
    let t = build_table(pair, g0, quad)?;
    let n = pair.n();
    let (stride, xstride) = (t.m / n, t.m / quad.n_xi);
    let dxi = 2.0 * PI / quad.n_xi as f64;
    let pref = pair.r / (4.0 * PI);
    let ratio = pair.r / pair.big_r;
    let nq = t.nq;
    let out: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let jj = j * stride;
            let scale = ratio / (1.0 + pair.big_h.samples()[j]);
            let (mut tang, mut rad) = (0.0, 0.0);
            for mx in 0..quad.n_xi {
                let xi = xi_value(mx, quad.n_xi);
                let i = (jj + mx * xstride) % t.m;
                let yr = &t.y[i * nq..(i + 1) * nq];
                let ur = &t.u[i * nq..(i + 1) * nq];
                for q in 0..nq {
                    let (k, jv) = kernel_kj(scale * yr[q], xi);
                    tang += k * ur[q];
                    rad += jv * ur[q];
                }
            }
            (pref * tang * dxi, pref * rad * dxi)
        })
        .collect();
    collect(out)
}

fn collect(out: Vec<(f64, f64)>) -> Result<GradComponents> {
    let (tangential, radial): (Vec<f64>, Vec<f64>) = out.into_iter().unzip();
    Ok(GradComponents { tangential: PeriodicField::new(tangential)?, radial: PeriodicField::new(radial)? })
}

/// c_{g₀} = −(1/2πr)∫_{B_r} g₀ dX.
pub fn c_g0(pair: &InterfacePair, g0: &SourceGrid) -> f64 {
    -pair.r * g0.weighted_mean_integral()
}

/// c̃_{g₀} = (r/R) c_{g₀}.
pub fn c_tilde_g0(pair: &InterfacePair, g0: &SourceGrid) -> f64 {
    pair.r / pair.big_r * c_g0(pair, g0)
}
