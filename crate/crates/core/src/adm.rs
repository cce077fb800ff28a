//! ADM energy-momentum of the slice `γy⁰ − βγy³ = 0` of a static spacetime.
//!
//! The slice is charted by `x = (x¹, x², x³) ↦ y = (βγx³, x¹, x², γx³)`, so
//! its coordinate spheres `|x| = r` are exactly the boosted spheres of
//! [`BoostedSphere`](crate::surface::BoostedSphere). Slice data are
//! `g_ij = G(∂ᵢy, ∂ⱼy)` and `p_ij = ⟨∇_{∂ᵢy} e₀, ∂ⱼy⟩` for the future unit
//! normal `e₀`; with this sign `p(ν,ν) − tr p = ⟨H, e₀⟩` on any surface.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::embedding::{tau_field, EmbeddingProfile};
use crate::error::{Error, Result};
use crate::grid::SphereGrid;
use crate::quasilocal::{extrapolate, EnergyMomentum, Extrapolant, RadiusLadder};
use crate::spacetime::{
    christoffel_from, invert_metric, schwarzschild_isotropic, MetricProvider, Point4,
    SchwarzschildIsotropic, Vec4,
};
use crate::surface::{NodeGeometry, SurfaceGeometry};

pub type Mat3 = [[f64; 3]; 3];

/// Boosted slice of a spacetime.
#[derive(Debug, Clone)]
pub struct SliceData<P> {
    metric: P,
    beta: f64,
    gamma: f64,
}

/// Slice of isotropic Schwarzschild with mass `mass` boosted by `(β, γ)`.
pub fn boosted_slice_data(mass: f64, beta: f64, gamma: f64) -> Result<SliceData<SchwarzschildIsotropic>> {
    SliceData::new(schwarzschild_isotropic(mass)?, beta, gamma)
}

/// Slice quantities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicePoint {
    pub y: Point4,
    pub g: Mat3,
    /// `dg[k][i][j] = ∂_k g_ij`.
    pub dg: [Mat3; 3],
    pub p: Mat3,
    pub e0: Vec4,
}

impl<P: MetricProvider> SliceData<P> {
    pub fn new(metric: P, beta: f64, gamma: f64) -> Result<Self> {
        let constraint = gamma * gamma - beta * beta * gamma * gamma - 1.0;
        if !(gamma > 0.0) || !(constraint.abs() <= 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "γ² − β²γ² = 1 violated (β = {beta}, γ = {gamma})"
            )));
        }
        Ok(Self { metric, beta, gamma })
    }

    pub fn from_velocity(metric: P, beta: f64) -> Result<Self> {
        if !(beta.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!("|beta| must be < 1, got {beta}")));
        }
        Self::new(metric, beta, 1.0 / (1.0 - beta * beta).sqrt())
    }

    pub fn metric(&self) -> &P {
        &self.metric
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn embed(&self, x: [f64; 3]) -> Point4 {
        [self.beta * self.gamma * x[2], x[0], x[1], self.gamma * x[2]]
    }

    /// Slice coordinates of a spacetime point on the slice.
    pub fn coords_of(&self, y: &Point4) -> [f64; 3] {
        [y[1], y[2], y[3] / self.gamma]
    }

    /// `∂ᵢy` as spacetime vectors.
    pub fn frame(&self) -> [Vec4; 3] {
        [
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [self.beta * self.gamma, 0.0, 0.0, self.gamma],
        ]
    }

    /// Spacetime vector `vⁱ∂ᵢy`.
    pub fn push_forward(&self, v: [f64; 3]) -> Vec4 {
        let f = self.frame();
        let mut out = [0.0; 4];
        for i in 0..3 {
            for c in 0..4 {
                out[c] += v[i] * f[i][c];
            }
        }
        out
    }

    /// Slice components of a spacetime vector tangent to the slice.
    pub fn pull_back(&self, w: &Vec4) -> [f64; 3] {
        [w[1], w[2], w[3] / self.gamma]
    }

    pub fn future_normal(&self, y: &Point4) -> Result<Vec4> {
        let ginv = invert_metric(&self.metric.metric(y)?)?;
        // raise d(γy⁰ − βγy³) and flip to the future
        let w = [self.gamma, 0.0, 0.0, -self.beta * self.gamma];
        let mut n = [0.0; 4];
        for a in 0..4 {
            for b in 0..4 {
                n[a] -= ginv[a][b] * w[b];
            }
        }
        let norm_sq: f64 = -(0..4).map(|a| n[a] * w[a]).sum::<f64>();
        if !(norm_sq < 0.0) {
            return Err(Error::Singular(format!("slice is not spacelike at {y:?}")));
        }
        let s = 1.0 / (-norm_sq).sqrt();
        Ok(n.map(|v| v * s))
    }

    pub fn at(&self, x: [f64; 3]) -> Result<SlicePoint> {
        let y = self.embed(x);
        let big_g = self.metric.metric(&y)?;
        let big_dg = self.metric.metric_derivs(&y)?;
        let gam = christoffel_from(&big_g, &big_dg)?;
        let e0 = self.future_normal(&y)?;
        let f = self.frame();
        let bilinear = |m: &[[f64; 4]; 4], u: &Vec4, v: &Vec4| -> f64 {
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    s += m[a][b] * u[a] * v[b];
                }
            }
            s
        };
        let mut g = [[0.0; 3]; 3];
        let mut dg = [[[0.0; 3]; 3]; 3];
        let mut p = [[0.0; 3]; 3];
        let e0_lower: Vec4 = std::array::from_fn(|a| (0..4).map(|b| big_g[a][b] * e0[b]).sum());
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = bilinear(&big_g, &f[i], &f[j]);
                let conn = gam.contract(&f[i], &f[j]);
                p[i][j] = -(0..4).map(|b| e0_lower[b] * conn[b]).sum::<f64>();
                for k in 0..3 {
                    let mut d = [[0.0; 4]; 4];
                    for c in 0..4 {
                        if f[k][c] != 0.0 {
                            for a in 0..4 {
                                for b in 0..4 {
                                    d[a][b] += f[k][c] * big_dg[c][a][b];
                                }
                            }
                        }
                    }
                    dg[k][i][j] = bilinear(&d, &f[i], &f[j]);
                }
            }
        }
        Ok(SlicePoint { y, g, dg, p, e0 })
    }
}

fn sphere_point(r: f64, theta: f64, phi: f64) -> ([f64; 3], [f64; 3]) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let nu = [st * sp, st * cp, ct];
    (nu.map(|v| r * v), nu)
}

/// Flux integrals over the coordinate sphere `|x| = r` (Euclidean normal and
/// area): `(E, P)`.
pub fn adm_sphere_integrals<P: MetricProvider>(d: &SliceData<P>, r: f64, grid: &SphereGrid) -> Result<EnergyMomentum> {
    let pts: Vec<SlicePoint> = grid
        .nodes()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(_, t, f)| d.at(sphere_point(r, t, f).0))
        .collect::<Result<_>>()?;
    let mut fe = Vec::with_capacity(pts.len());
    let mut fp = [Vec::with_capacity(pts.len()), Vec::with_capacity(pts.len()), Vec::with_capacity(pts.len())];
    for ((_, t, f), s) in grid.nodes().zip(&pts) {
        let nu = sphere_point(r, t, f).1;
        let mut e = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                e += (s.dg[j][i][j] - s.dg[i][j][j]) * nu[i];
            }
        }
        fe.push(e);
        let tr = s.p[0][0] + s.p[1][1] + s.p[2][2];
        for k in 0..3 {
            let v: f64 = (0..3)
                .map(|i| 2.0 * (s.p[i][k] - if i == k { tr } else { 0.0 }) * nu[i])
                .sum();
            fp[k].push(v);
        }
    }
    let area: Vec<f64> = grid.nodes().map(|(_, t, _)| r * r * t.sin()).collect();
    let norm = 1.0 / (16.0 * PI);
    Ok(EnergyMomentum {
        e: norm * grid.integrate(&fe, &area),
        p: [0, 1, 2].map(|k| norm * grid.integrate(&fp[k], &area)),
    })
}

/// Per-radius ADM integrals and their extrapolations.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmResult {
    pub samples: Vec<(f64, EnergyMomentum)>,
    pub e: Extrapolant,
    pub p: [Extrapolant; 3],
}

impl AdmResult {
    pub fn limit(&self) -> EnergyMomentum {
        EnergyMomentum {
            e: self.e.limit(),
            p: self.p.map(|f| f.limit()),
        }
    }

    /// `√(1+|a|²)E + a·P`.
    pub fn predicted_energy(&self, a: [f64; 3]) -> f64 {
        let l = self.limit();
        let lapse = (1.0 + a.iter().map(|v| v * v).sum::<f64>()).sqrt();
        lapse * l.e + (0..3).map(|i| a[i] * l.p[i]).sum::<f64>()
    }

    /// `E ≥ 0` and `E² ≥ |P|²`.
    pub fn future_timelike(&self) -> bool {
        let l = self.limit();
        l.e >= 0.0 && l.e >= l.p_norm()
    }
}

pub fn adm_energy_momentum<P: MetricProvider>(
    d: &SliceData<P>,
    ladder: &RadiusLadder,
    grid: &SphereGrid,
) -> Result<AdmResult> {
    let samples: Vec<(f64, EnergyMomentum)> = ladder
        .radii()
        .par_iter()
        .map(|&r| Ok((r, adm_sphere_integrals(d, r, grid)?)))
        .collect::<Result<_>>()?;
    let radii: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let e = extrapolate(&radii, &samples.iter().map(|s| s.1.e).collect::<Vec<_>>())?;
    let p = [0, 1, 2].map(|k| extrapolate(&radii, &samples.iter().map(|s| s.1.p[k]).collect::<Vec<_>>()));
    let [p0, p1, p2] = p;
    Ok(AdmResult {
        samples,
        e,
        p: [p0?, p1?, p2?],
    })
}

pub fn adm_energy<P: MetricProvider>(d: &SliceData<P>, ladder: &RadiusLadder, grid: &SphereGrid) -> Result<Extrapolant> {
    Ok(adm_energy_momentum(d, ladder, grid)?.e)
}

pub fn adm_momentum<P: MetricProvider>(
    d: &SliceData<P>,
    ladder: &RadiusLadder,
    grid: &SphereGrid,
) -> Result<[Extrapolant; 3]> {
    Ok(adm_energy_momentum(d, ladder, grid)?.p)
}

/// Slice-adapted normal frame of a surface lying in the slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceNormalFrame {
    pub e0: Vec4,
    /// Outward unit normal of the surface inside the slice.
    pub nu: Vec4,
    /// `⟨H, e₀⟩`.
    pub h_e0: f64,
    /// `−⟨H, ν⟩`, the mean curvature of the surface within the slice.
    pub k: f64,
}

pub fn slice_normal_frame<P: MetricProvider>(d: &SliceData<P>, n: &NodeGeometry) -> Result<SliceNormalFrame> {
    let e0 = d.future_normal(&n.y)?;
    let h_e0 = n.inner(&n.h, &e0);
    let mut w = n.h;
    for c in 0..4 {
        w[c] += h_e0 * e0[c];
    }
    let k = n.inner(&w, &w).sqrt();
    Ok(SliceNormalFrame {
        e0,
        nu: w.map(|v| -v / k),
        h_e0,
        k,
    })
}

/// `p(u, v)` for spacetime vectors tangent to the slice.
pub fn extrinsic<P: MetricProvider>(d: &SliceData<P>, pt: &SlicePoint, u: &Vec4, v: &Vec4) -> f64 {
    let (a, b) = (d.pull_back(u), d.pull_back(v));
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += pt.p[i][j] * a[i] * b[j];
        }
    }
    s
}

/// `tr_g p`.
pub fn extrinsic_trace(pt: &SlicePoint) -> f64 {
    let ginv = invert3(&pt.g);
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += ginv[i][j] * pt.p[i][j];
        }
    }
    s
}

fn invert3(m: &Mat3) -> Mat3 {
    let a = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
    let inv = a.try_inverse().expect("slice metric is positive definite");
    std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)]))
}

/// `(1/8π)∫(|H₀| − k)` with `k` the mean curvature inside the slice.
pub fn brown_york_energy<P: MetricProvider>(
    d: &SliceData<P>,
    geo: &SurfaceGeometry,
    emb: &EmbeddingProfile,
) -> Result<f64> {
    let h0 = emb.h0_field();
    let f = geo
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, n)| Ok(h0[k] - slice_normal_frame(d, n)?.k))
        .collect::<Result<Vec<_>>>()?;
    Ok(geo.integrate(&f) / (8.0 * PI))
}

/// `(1/8π)∫ p((aⁱ∂ᵢ)^⊤, ν) + ⟨H, e₀⟩⟨aⁱ∂ᵢ, ν⟩`, whose limit is `a·P`.
pub fn momentum_flux<P: MetricProvider>(d: &SliceData<P>, geo: &SurfaceGeometry, a: [f64; 3]) -> Result<f64> {
    let w = d.push_forward(a);
    let f = geo
        .nodes()
        .iter()
        .map(|n| {
            let frame = slice_normal_frame(d, n)?;
            let pt = d.at(d.coords_of(&n.y))?;
            let w_nu = n.inner(&w, &frame.nu);
            let mut tangential = w;
            for c in 0..4 {
                tangential[c] -= w_nu * frame.nu[c];
            }
            Ok(extrinsic(d, &pt, &tangential, &frame.nu) + frame.h_e0 * w_nu)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(geo.integrate(&f) / (8.0 * PI))
}

/// The two forms of `(1/8π)∫⟨∇^N_{∇τ}J/|H|, H/|H|⟩`: directly, and after
/// integrating by parts as `∫ −p(∇τ, ν) + Δτ·asinh(⟨H,e₀⟩/|H|)`.
pub fn connection_term_forms<P: MetricProvider>(
    d: &SliceData<P>,
    geo: &SurfaceGeometry,
    emb: &EmbeddingProfile,
    a: [f64; 3],
) -> Result<(f64, f64)> {
    let tau = tau_field(emb, a).calculus(&emb.calculus());
    let mut direct = Vec::with_capacity(geo.nodes().len());
    let mut parts = Vec::with_capacity(geo.nodes().len());
    for (k, n) in geo.nodes().iter().enumerate() {
        direct.push(geo.connection_form(k, tau.gradient[k]));
        let frame = slice_normal_frame(d, n)?;
        let pt = d.at(d.coords_of(&n.y))?;
        let grad = n.push_forward(tau.gradient[k]);
        parts.push(-extrinsic(d, &pt, &grad, &frame.nu) + tau.laplacian[k] * (frame.h_e0 / n.h_norm).asinh());
    }
    let s = 1.0 / (8.0 * PI);
    Ok((s * geo.integrate(&direct), s * geo.integrate(&parts)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasilocal::{boosted_family, RadiusLadder};
    use crate::spacetime::{fd_metric_derivs, minkowski};
    use std::sync::Arc;

    fn grid(n: usize, m: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::new(n, m).unwrap())
    }

    #[test]
    fn unboosted_slice_is_conformally_flat() {
        let d = boosted_slice_data(1.0, 0.0, 1.0).unwrap();
        let x = [3.0, -1.0, 2.0];
        let pt = d.at(x).unwrap();
        let r = (14.0f64).sqrt();
        let psi4 = (1.0 + 0.5 / r).powi(4);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { psi4 } else { 0.0 };
                assert!((pt.g[i][j] - want).abs() < 1e-14);
                assert!(pt.p[i][j].abs() < 1e-15);
            }
        }
        assert!(boosted_slice_data(1.0, 0.6, 1.2).is_err());
    }

    #[test]
    fn flat_data_for_any_boost() {
        let d = SliceData::from_velocity(minkowski(), 0.6).unwrap();
        let pt = d.at([1.0, 2.0, 3.0]).unwrap();
        let g2 = d.gamma() * d.gamma();
        assert!((pt.g[0][0] - 1.0).abs() < 1e-15);
        // ⟨∂₃y, ∂₃y⟩ = γ² − β²γ² = 1
        assert!((pt.g[2][2] - (g2 - 0.36 * g2)).abs() < 1e-14);
        assert!(pt.p.iter().flatten().all(|v| v.abs() < 1e-15));
        assert!(pt.dg.iter().flatten().flatten().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn slice_derivatives_match_differences() {
        let d = boosted_slice_data(1.0, 0.6, 1.25).unwrap();
        let x = [4.0, -2.0, 5.0];
        let pt = d.at(x).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let (mut up, mut dn) = (x, x);
            up[k] += h;
            dn[k] -= h;
            let (gu, gd) = (d.at(up).unwrap().g, d.at(dn).unwrap().g);
            for i in 0..3 {
                for j in 0..3 {
                    let fd = (gu[i][j] - gd[i][j]) / (2.0 * h);
                    assert!((fd - pt.dg[k][i][j]).abs() < 1e-8, "{k}{i}{j}");
                }
            }
        }
        // chain rule through closed-form ∂G agrees with the FD derivative policy
        let big = fd_metric_derivs(|y| d.metric().metric(y), &pt.y).unwrap();
        let closed = d.metric().metric_derivs(&pt.y).unwrap();
        for c in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    assert!((big[c][a][b] - closed[c][a][b]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn decay_probes() {
        let d = boosted_slice_data(1.0, 0.6, 1.25).unwrap();
        let dir = [0.3f64, 0.4, (1.0f64 - 0.25).sqrt()];
        let probe = |r: f64| {
            let pt = d.at(dir.map(|v| v * r)).unwrap();
            let g = (pt.g[2][2] - 1.0).abs() * r;
            let dg = pt.dg.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs())) * r * r;
            let p = pt.p.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())) * r * r;
            [g, dg, p]
        };
        let (a, b) = (probe(100.0), probe(1000.0));
        for k in 0..3 {
            let ratio = a[k] / b[k];
            assert!(ratio > 0.8 && ratio < 1.25, "probe {k}: {ratio}");
        }
    }

    #[test]
    fn unboosted_energy_flux_is_exact() {
        let g = grid(16, 4);
        let d = boosted_slice_data(1.0, 0.0, 1.0).unwrap();
        for r in [10.0, 100.0] {
            let em = adm_sphere_integrals(&d, r, &g).unwrap();
            assert!((em.e - (1.0 + 0.5 / r).powi(3)).abs() < 1e-12);
            assert!(em.p.iter().all(|p| p.abs() < 1e-14));
        }
        let flat = SliceData::from_velocity(minkowski(), 0.6).unwrap();
        let em = adm_sphere_integrals(&flat, 50.0, &g).unwrap();
        assert!(em.e.abs() < 1e-14 && em.p.iter().all(|p| p.abs() < 1e-14));
    }

    #[test]
    fn boosted_adm_four_vector() {
        let g = grid(32, 8);
        let d = boosted_slice_data(1.0, 0.6, 1.25).unwrap();
        let res = adm_energy_momentum(&d, &RadiusLadder::for_mass(1.0), &g).unwrap();
        let l = res.limit();
        assert!((l.e - 1.25).abs() < 1e-3, "{l:?}");
        assert!((l.p[2] - 0.75).abs() < 1e-3, "{l:?}");
        assert!(l.p[0].abs() < 1e-10 && l.p[1].abs() < 1e-10);
        assert!(res.future_timelike());
    }

    #[test]
    fn mean_curvature_splits_along_slice_normal() {
        let g = grid(24, 8);
        let d = boosted_slice_data(1.0, 0.6, 1.25).unwrap();
        let m = schwarzschild_isotropic(1.0).unwrap();
        let s = boosted_family(&m, 0.6, g)(40.0).unwrap();
        for n in s.geometry.nodes() {
            let frame = slice_normal_frame(&d, n).unwrap();
            let pt = d.at(d.coords_of(&n.y)).unwrap();
            assert!(n.inner(&frame.e0, &frame.nu).abs() < 1e-12);
            assert!((n.inner(&frame.nu, &frame.nu) - 1.0).abs() < 1e-12);
            let lhs = extrinsic(&d, &pt, &frame.nu, &frame.nu) - extrinsic_trace(&pt);
            assert!((lhs - frame.h_e0).abs() < 1e-9 * n.h_norm, "{lhs} vs {}", frame.h_e0);
        }
    }

    #[test]
    fn brown_york_and_liu_yau_share_the_limit() {
        let g = grid(32, 8);
        let d = boosted_slice_data(1.0, 0.6, 1.25).unwrap();
        let m = schwarzschild_isotropic(1.0).unwrap();
        let fam = boosted_family(&m, 0.6, g);
        let gap = |r: f64| {
            let s = fam(r).unwrap();
            let by = brown_york_energy(&d, &s.geometry, &s.profile).unwrap();
            let ly = crate::quasilocal::four_vector_at(&s.geometry, &s.profile).unwrap().e;
            // pointwise k − |H| decays like 1/r³
            let worst = s
                .geometry
                .nodes()
                .iter()
                .map(|n| (slice_normal_frame(&d, n).unwrap().k - n.h_norm).abs())
                .fold(0.0, f64::max);
            (by - ly, worst * r * r * r)
        };
        let (a, b) = (gap(250.0), gap(500.0));
        assert!(a.0.abs() < 1e-2);
        assert!((a.0 / b.0 - 2.0).abs() < 0.2, "ratio {}", a.0 / b.0);
        assert!((a.1 / b.1 - 1.0).abs() < 0.05, "{} {}", a.1, b.1);
    }

    #[test]
    fn integration_by_parts_identity() {
        let g = grid(32, 8);
        let d = boosted_slice_data(1.0, 0.6, 1.25).unwrap();
        let m = schwarzschild_isotropic(1.0).unwrap();
        let s = boosted_family(&m, 0.6, g)(60.0).unwrap();
        for a in [[0.0, 0.0, 1.0], [0.5, 0.2, -0.7]] {
            let (direct, parts) = connection_term_forms(&d, &s.geometry, &s.profile, a).unwrap();
            assert!((direct - parts).abs() < 1e-9, "{a:?}: {direct} vs {parts}");
        }
    }

    #[test]
    fn momentum_flux_tends_to_adm_momentum() {
        let g = grid(32, 8);
        let d = boosted_slice_data(1.0, 0.6, 1.25).unwrap();
        let m = schwarzschild_isotropic(1.0).unwrap();
        let fam = boosted_family(&m, 0.6, g);
        let ladder = RadiusLadder::for_mass(1.0);
        let a = [0.3, -0.2, 1.0];
        let vals: Vec<f64> = ladder
            .radii()
            .iter()
            .map(|&r| momentum_flux(&d, &fam(r).unwrap().geometry, a).unwrap())
            .collect();
        let fit = extrapolate(ladder.radii(), &vals).unwrap();
        assert!((fit.limit() - 0.75).abs() < 1e-3, "{}", fit.limit());
    }
}
