//! Isometric embedding of axisymmetric 2-metrics as surfaces of revolution in
//! R³ ⊂ R^{3,1}, and the reference data (H₀, outward normal, τ) built on it.
//!
//! A metric `σ = r₀²P² dθ² + r₀²Q² sin²θ dφ²` embeds as
//! `X = (0, u sin φ, u cos φ, v)` with `u = r₀Q sin θ` and
//! `(u′)² + (v′)² = r₀²P²`, choosing `v′ < 0` so that `v ≈ r₀ cos θ`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Parity, SphereGrid};
use crate::surface::{CalculusFields, Sym2, SurfaceCalculus, SurfaceGeometry};

/// Axisymmetric 2-metric sampled on the θ-nodes of a grid.
#[derive(Debug, Clone)]
pub struct AxisymMetric2 {
    grid: Arc<SphereGrid>,
    r0: f64,
    sigma_tt: Vec<f64>,
    sigma_pp: Vec<f64>,
}

impl AxisymMetric2 {
    /// From `σ_θθ(θ)` and `σ_φφ(θ)` columns.
    pub fn new(grid: Arc<SphereGrid>, r0: f64, sigma_tt: Vec<f64>, sigma_pp: Vec<f64>) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r0}")));
        }
        assert_eq!(sigma_tt.len(), grid.n_theta());
        assert_eq!(sigma_pp.len(), grid.n_theta());
        for (i, &t) in grid.theta().iter().enumerate() {
            if !(sigma_tt[i] > 0.0 && sigma_pp[i] > 0.0) {
                return Err(Error::NotImmersed { theta: t, phi: 0.0 });
            }
        }
        Ok(Self {
            grid,
            r0,
            sigma_tt,
            sigma_pp,
        })
    }

    /// From dimensionless profiles `P(θ)`, `Q(θ)`.
    pub fn from_fn(
        grid: Arc<SphereGrid>,
        r0: f64,
        p: impl Fn(f64) -> f64,
        q: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let tt = grid.theta().iter().map(|&t| (r0 * p(t)).powi(2)).collect();
        let pp = grid
            .theta()
            .iter()
            .map(|&t| (r0 * q(t) * t.sin()).powi(2))
            .collect();
        Self::new(grid, r0, tt, pp)
    }

    pub fn round(grid: Arc<SphereGrid>, r0: f64) -> Result<Self> {
        Self::from_fn(grid, r0, |_| 1.0, |_| 1.0)
    }

    /// Induced metric of a computed surface; fails unless σ is φ-independent
    /// with `σ_θφ = 0` to relative `tol`.
    pub fn from_geometry(geo: &SurfaceGeometry, tol: f64) -> Result<Self> {
        let grid = geo.grid().clone();
        let mut tt = Vec::with_capacity(grid.n_theta());
        let mut pp = Vec::with_capacity(grid.n_theta());
        for i in 0..grid.n_theta() {
            let first = geo.node(i, 0).sigma;
            let scale = first[0][0].abs() + first[1][1].abs();
            let mut spread: f64 = first[0][1].abs();
            for j in 1..grid.n_phi() {
                let s = geo.node(i, j).sigma;
                spread = spread
                    .max((s[0][0] - first[0][0]).abs())
                    .max((s[1][1] - first[1][1]).abs())
                    .max(s[0][1].abs());
            }
            if spread > tol * scale {
                return Err(Error::NotAxisymmetric {
                    theta: grid.theta()[i],
                    spread: spread / scale,
                });
            }
            tt.push(first[0][0]);
            pp.push(first[1][1]);
        }
        Self::new(grid, geo.radius(), tt, pp)
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn radius(&self) -> f64 {
        self.r0
    }

    pub fn sigma_theta_theta(&self) -> &[f64] {
        &self.sigma_tt
    }

    pub fn sigma_phi_phi(&self) -> &[f64] {
        &self.sigma_pp
    }

    /// `P(θ)` at the grid nodes.
    pub fn p(&self) -> Vec<f64> {
        self.sigma_tt.iter().map(|s| s.sqrt() / self.r0).collect()
    }

    /// `Q(θ)` at the grid nodes.
    pub fn q(&self) -> Vec<f64> {
        self.sigma_pp
            .iter()
            .zip(self.grid.sin_theta())
            .map(|(s, st)| s.sqrt() / (self.r0 * st))
            .collect()
    }
}

/// Profile curve `(u(θ), v(θ))` of the embedded surface of revolution.
#[derive(Debug, Clone)]
pub struct EmbeddingProfile {
    grid: Arc<SphereGrid>,
    r0: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub ddu: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    pub ddv: Vec<f64>,
    /// Mean curvature with respect to the outward normal.
    pub h0: Vec<f64>,
}

/// Embed an axisymmetric metric; `v` is gauged to vanish at θ = π/2.
pub fn profile_from_metric(g: &AxisymMetric2) -> Result<EmbeddingProfile> {
    let grid = g.grid.clone();
    let theta = grid.theta();
    let u: Vec<f64> = g.sigma_pp.iter().map(|s| s.sqrt()).collect();
    let du = grid.d_theta_column(&u, Parity::Odd);
    let ddu = grid.d_theta_column(&du, Parity::Even);

    let radicand: Vec<f64> = g.sigma_tt.iter().zip(&du).map(|(s, d)| s - d * d).collect();
    if let Some((i, &r)) = radicand
        .iter()
        .enumerate()
        .filter(|(_, r)| **r <= 0.0)
        .min_by(|a, b| a.1.total_cmp(b.1))
    {
        return Err(Error::Embeddability {
            theta: theta[i],
            radicand: r,
        });
    }
    let dv: Vec<f64> = radicand.iter().map(|r| -r.sqrt()).collect();
    let ddv = grid.d_theta_column(&dv, Parity::Odd);
    let dv_dx: Vec<f64> = dv
        .iter()
        .zip(grid.sin_theta())
        .map(|(d, s)| -d / s)
        .collect();
    let v = grid.antiderivative_x(&dv_dx, 0.0);

    let mut profile = EmbeddingProfile {
        grid,
        r0: g.r0,
        u,
        du,
        ddu,
        v,
        dv,
        ddv,
        h0: Vec::new(),
    };
    profile.h0 = reference_mean_curvature(&profile)?;
    Ok(profile)
}

/// Mean curvature of the surface of revolution with respect to its outward
/// normal: meridian curvature plus azimuthal curvature.
pub fn reference_mean_curvature(e: &EmbeddingProfile) -> Result<Vec<f64>> {
    let theta = e.grid.theta();
    (0..theta.len())
        .map(|i| {
            let (u, du, ddu, dv, ddv) = (e.u[i], e.du[i], e.ddu[i], e.dv[i], e.ddv[i]);
            let l = du.hypot(dv);
            if !(l > 1e-14 * e.r0 && u > 0.0) {
                return Err(Error::DegenerateProfile { theta: theta[i] });
            }
            Ok((ddu * dv - du * ddv) / (l * l * l) - dv / (u * l))
        })
        .collect()
}

impl EmbeddingProfile {
    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn radius(&self) -> f64 {
        self.r0
    }

    /// Copy with `v → v + c`.
    pub fn with_gauge_shift(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.v.iter_mut().for_each(|v| *v += c);
        out
    }

    /// `X(θ_i, φ_j)` in R^{3,1}.
    pub fn point(&self, i: usize, j: usize) -> [f64; 4] {
        let (s, c) = self.grid.phi()[j].sin_cos();
        [0.0, self.u[i] * s, self.u[i] * c, self.v[i]]
    }

    /// Outward unit normal in R³ at node `(i, j)`.
    pub fn outward_normal(&self, i: usize, j: usize) -> [f64; 3] {
        let (s, c) = self.grid.phi()[j].sin_cos();
        let l = self.du[i].hypot(self.dv[i]);
        [-self.dv[i] * s / l, -self.dv[i] * c / l, self.du[i] / l]
    }

    /// Induced metric of the embedded surface as a θ-column.
    pub fn induced_metric(&self) -> Vec<Sym2> {
        (0..self.u.len())
            .map(|i| {
                [
                    [self.du[i] * self.du[i] + self.dv[i] * self.dv[i], 0.0],
                    [0.0, self.u[i] * self.u[i]],
                ]
            })
            .collect()
    }

    /// Largest relative deviation of the embedded metric from `g`.
    pub fn isometry_residual(&self, g: &AxisymMetric2) -> f64 {
        self.induced_metric()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let a = (s[0][0] - g.sigma_tt[i]).abs() / g.sigma_tt[i];
                let b = (s[1][1] - g.sigma_pp[i]).abs() / g.sigma_pp[i];
                a.max(b)
            })
            .fold(0.0, f64::max)
    }

    /// Surface calculus on the embedded (reference) metric.
    pub fn calculus(&self) -> SurfaceCalculus {
        let col = self.induced_metric();
        let mut sigma = Vec::with_capacity(self.grid.len());
        for s in &col {
            sigma.extend(std::iter::repeat_n(*s, self.grid.n_phi()));
        }
        SurfaceCalculus::new(self.grid.clone(), sigma).expect("embedded metric is nondegenerate")
    }

    /// `H₀` broadcast to the full grid.
    pub fn h0_field(&self) -> Vec<f64> {
        self.grid.broadcast(&self.h0)
    }

    /// `a · ν` over the full grid.
    pub fn normal_component(&self, a: [f64; 3]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.len());
        for i in 0..self.grid.n_theta() {
            for j in 0..self.grid.n_phi() {
                let n = self.outward_normal(i, j);
                out.push(a[0] * n[0] + a[1] * n[1] + a[2] * n[2]);
            }
        }
        out
    }
}

/// Time function `τ = −⟨X, T₀⟩ = −a·X` on the embedded surface, with its
/// differential from the profile derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TauField {
    pub values: Vec<f64>,
    pub differential: Vec<[f64; 2]>,
}

pub fn tau_field(e: &EmbeddingProfile, a: [f64; 3]) -> TauField {
    let grid = &e.grid;
    let mut values = Vec::with_capacity(grid.len());
    let mut differential = Vec::with_capacity(grid.len());
    for i in 0..grid.n_theta() {
        for j in 0..grid.n_phi() {
            let (s, c) = grid.phi()[j].sin_cos();
            values.push(-(a[0] * e.u[i] * s + a[1] * e.u[i] * c + a[2] * e.v[i]));
            differential.push([
                -(a[0] * e.du[i] * s + a[1] * e.du[i] * c + a[2] * e.dv[i]),
                -(a[0] * e.u[i] * c - a[1] * e.u[i] * s),
            ]);
        }
    }
    TauField {
        values,
        differential,
    }
}

impl TauField {
    /// Gradient, `|∇τ|²` and `Δτ` with respect to `calc`.
    pub fn calculus(&self, calc: &SurfaceCalculus) -> CalculusFields {
        calc.fields_from_differential(self.differential.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::schwarzschild_isotropic;
    use crate::surface::BoostedSphere;
    use std::f64::consts::PI;

    fn grid(n: usize, m: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::new(n, m).unwrap())
    }

    fn boosted_profile(beta: f64, r0: f64, g: &Arc<SphereGrid>) -> (AxisymMetric2, EmbeddingProfile) {
        let m = schwarzschild_isotropic(1.0).unwrap();
        let c = BoostedSphere::from_velocity(beta, r0).unwrap();
        let geo = SurfaceGeometry::compute(&c, &m, g.clone()).unwrap();
        let metric = AxisymMetric2::from_geometry(&geo, 1e-12).unwrap();
        let prof = profile_from_metric(&metric).unwrap();
        (metric, prof)
    }

    #[test]
    fn round_sphere_profile() {
        let g = grid(32, 4);
        let r = 3.0;
        let metric = AxisymMetric2::round(g.clone(), r).unwrap();
        let e = profile_from_metric(&metric).unwrap();
        for (i, &t) in g.theta().iter().enumerate() {
            assert!((e.u[i] - r * t.sin()).abs() < 1e-12);
            assert!((e.v[i] - r * t.cos()).abs() < 1e-11);
            assert!((e.h0[i] - 2.0 / r).abs() < 1e-10);
            let n = e.outward_normal(i, 1);
            let x = e.point(i, 1);
            for k in 0..3 {
                assert!((n[k] - x[k + 1] / r).abs() < 1e-11);
            }
        }
        assert!(e.isometry_residual(&metric) < 1e-12);
    }

    #[test]
    fn embeddability_failure_reports_theta() {
        let g = grid(32, 4);
        let metric = AxisymMetric2::from_fn(g.clone(), 1.0, |_| 0.5, |_| 1.0).unwrap();
        match profile_from_metric(&metric) {
            Err(Error::Embeddability { theta, radicand }) => {
                assert!(theta.cos().abs() > 0.5, "θ = {theta}");
                assert!(radicand < 0.0);
            }
            other => panic!("expected embeddability error, got {other:?}"),
        }
    }

    #[test]
    fn boosted_profile_matches_explicit_solution() {
        let g = grid(48, 4);
        let beta: f64 = 0.6;
        let bg = beta / (1.0 - beta * beta).sqrt();
        let rt = |t: f64| (1.0 + bg * bg * t.cos().powi(2)).sqrt();
        let dev = |r0: f64| {
            let (metric, e) = boosted_profile(beta, r0, &g);
            assert!(e.isometry_residual(&metric) < 1e-9);
            let du: Vec<f64> = g
                .theta()
                .iter()
                .enumerate()
                .map(|(i, &t)| e.u[i] - (r0 + 1.0 / rt(t)) * t.sin())
                .collect();
            let dv: Vec<f64> = g
                .theta()
                .iter()
                .enumerate()
                .map(|(i, &t)| e.v[i] - (r0 + 1.0 / rt(t)) * t.cos() - 2.0 * bg * (bg * t.cos()).asinh())
                .collect();
            let mean = dv.iter().sum::<f64>() / dv.len() as f64;
            let worst_u = du.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let worst_v = dv.iter().fold(0.0f64, |m, d| m.max((d - mean).abs()));
            worst_u.max(worst_v)
        };
        let (a, b) = (dev(500.0), dev(1000.0));
        assert!(a < 1e-2, "{a}");
        let ratio = a / b;
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn mean_curvature_expansion() {
        let g = grid(32, 4);
        let beta: f64 = 0.6;
        let k = beta * beta / (1.0 - beta * beta);
        let rt = |t: f64| (1.0 + k * t.cos().powi(2)).sqrt();
        let p = |t: f64| (1.0 + 2.0 * k * t.sin().powi(2)) / rt(t);
        let q = |t: f64| 1.0 / rt(t);
        let d = |f: &dyn Fn(f64) -> f64, t: f64, h: f64| (f(t + h) - f(t - h)) / (2.0 * h);
        let coef = |r0: f64| {
            let (_, e) = boosted_profile(beta, r0, &g);
            e.h0.iter().map(|h| r0 * r0 * (h - 2.0 / r0)).collect::<Vec<_>>()
        };
        let (a, b, c) = (coef(500.0), coef(1000.0), coef(2000.0));
        for (i, &t) in g.theta().iter().enumerate() {
            let dq = d(&q, t, 1e-4);
            let ddq = (q(t + 1e-3) - 2.0 * q(t) + q(t - 1e-3)) / 1e-6;
            let want = -(2.0 * p(t) + (2.0 * dq - d(&p, t, 1e-4)) / t.tan() + ddq);
            let fit = 2.0 * c[i] - b[i];
            assert!((fit - want).abs() < 1e-3 * want.abs().max(1.0), "θ={t}: {fit} vs {want}");
            let ratio = (a[i] - want) / (b[i] - want);
            if (a[i] - want).abs() > 1e-6 {
                assert!((ratio - 2.0).abs() < 0.2, "θ={t}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn total_mean_curvature() {
        let g = grid(48, 4);
        for beta in [0.0f64, 0.6] {
            let k = beta * beta / (1.0 - beta * beta);
            let (_, e) = boosted_profile(beta, 1000.0, &g);
            let calc = e.calculus();
            let total = g.integrate(&e.h0_field(), calc.area_density());
            let (x, w) = crate::grid::gauss_legendre(64);
            // ∫₀^π (1+k sin²θ)/ρ̃ sinθ dθ, doubled for [0, 2π]
            let half: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * (1.0 + k * (1.0 - x * x)) / (1.0 + k * x * x).sqrt())
                .sum();
            let want = 8.0 * PI * 1000.0 + 2.0 * PI * 2.0 * half;
            assert!((total - want).abs() < 0.05 * 8.0 * PI, "β={beta}: {total} vs {want}");
        }
    }

    #[test]
    fn tau_identities() {
        let g = grid(64, 8);
        let (_, e) = boosted_profile(0.6, 300.0, &g);
        let calc = e.calculus();
        let h0 = e.h0_field();
        for a in [[0.0, 0.0, 1.0], [0.3, -0.7, 0.4], [1.5, 0.0, 0.0]] {
            let tau = tau_field(&e, a);
            let f = tau.calculus(&calc);
            let an = e.normal_component(a);
            let a2 = a.iter().map(|v| v * v).sum::<f64>();
            for k in 0..g.len() {
                let lap = h0[k] * an[k];
                assert!((f.laplacian[k] - lap).abs() < 1e-8, "{a:?} {k}: {} vs {lap}", f.laplacian[k]);
                let grad = a2 - an[k] * an[k];
                assert!((f.gradient_norm_sq[k] - grad).abs() < 1e-8);
            }
            // spectral differential of τ agrees with the analytic one
            let spectral = calc.differential(&tau.values);
            for k in 0..g.len() {
                for c in 0..2 {
                    assert!((spectral[k][c] - tau.differential[k][c]).abs() < 1e-8 * 300.0);
                }
            }
        }
        let zero = tau_field(&e, [0.0; 3]);
        assert!(zero.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gauge_shift_leaves_tau_derivatives() {
        let g = grid(32, 8);
        let (_, e) = boosted_profile(0.6, 300.0, &g);
        let shifted = e.with_gauge_shift(17.0);
        let calc = e.calculus();
        let a = [0.2, 0.1, 0.9];
        let f0 = tau_field(&e, a).calculus(&calc);
        let f1 = tau_field(&shifted, a).calculus(&shifted.calculus());
        assert_eq!(f0, f1);
        assert_eq!(e.h0, reference_mean_curvature(&shifted).unwrap());
    }
}
