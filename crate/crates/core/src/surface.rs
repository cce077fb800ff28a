//! Extrinsic geometry of parameterized spacelike 2-surfaces.
//!
//! For a chart `Y(θ, φ)` into spacetime this computes, per node: the induced
//! metric σ, the mean curvature vector
//! `H^c = σ^{ab}(∂_a∂_b Y^c + Γ^c_{de} ∂_aY^d ∂_bY^e)` projected onto the
//! normal bundle, and the dual normal `J` (future timelike, `⟨J,J⟩ = −⟨H,H⟩`,
//! `⟨J,H⟩ = 0`). On a [`SphereGrid`] it also assembles the normal-connection
//! coefficients `ω_a = ⟨∇_{∂_aY}(J/|H|), H/|H|⟩`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Parity, SphereGrid};
use crate::spacetime::{christoffel_from, inner, Christoffels, Metric4, MetricProvider, Point4, Vec4};

pub type Sym2 = [[f64; 2]; 2];

/// Position and first/second parameter derivatives of a chart at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartJet {
    pub y: Point4,
    /// `[∂_θ Y, ∂_φ Y]`.
    pub d: [Vec4; 2],
    /// `dd[a][b] = ∂_a ∂_b Y`.
    pub dd: [[Vec4; 2]; 2],
}

pub trait SurfaceChart: Send + Sync {
    fn jet(&self, theta: f64, phi: f64) -> ChartJet;
    /// Family parameter r₀.
    fn radius(&self) -> f64;
}

/// Coordinate sphere of radius r₀ in the slice `γy⁰ − βγy³ = 0`:
/// `Y = (βγr₀ cos θ, r₀ sin θ sin φ, r₀ sin θ cos φ, γr₀ cos θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostedSphere {
    beta: f64,
    gamma: f64,
    r0: f64,
}

pub fn boosted_sphere_chart(beta: f64, gamma: f64, r0: f64) -> Result<BoostedSphere> {
    BoostedSphere::new(beta, gamma, r0)
}

impl BoostedSphere {
    pub fn new(beta: f64, gamma: f64, r0: f64) -> Result<Self> {
        if !(gamma > 0.0 && beta.is_finite() && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        let constraint = gamma * gamma - beta * beta * gamma * gamma - 1.0;
        if constraint.abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "γ² − β²γ² = 1 violated by {constraint:e} (β = {beta}, γ = {gamma})"
            )));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r0}")));
        }
        Ok(Self { beta, gamma, r0 })
    }

    /// Chart for velocity β, with γ = 1/√(1 − β²).
    pub fn from_velocity(beta: f64, r0: f64) -> Result<Self> {
        if !(beta.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!("|beta| must be < 1, got {beta}")));
        }
        Self::new(beta, 1.0 / (1.0 - beta * beta).sqrt(), r0)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn point(&self, theta: f64, phi: f64) -> Point4 {
        self.jet(theta, phi).y
    }
}

impl SurfaceChart for BoostedSphere {
    fn jet(&self, theta: f64, phi: f64) -> ChartJet {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let r = self.r0;
        let bg = self.beta * self.gamma;
        let g = self.gamma;
        ChartJet {
            y: [bg * r * ct, r * st * sp, r * st * cp, g * r * ct],
            d: [
                [-bg * r * st, r * ct * sp, r * ct * cp, -g * r * st],
                [0.0, r * st * cp, -r * st * sp, 0.0],
            ],
            dd: [
                [
                    [-bg * r * ct, -r * st * sp, -r * st * cp, -g * r * ct],
                    [0.0, r * ct * cp, -r * ct * sp, 0.0],
                ],
                [
                    [0.0, r * ct * cp, -r * ct * sp, 0.0],
                    [0.0, -r * st * sp, -r * st * cp, 0.0],
                ],
            ],
        }
    }

    fn radius(&self) -> f64 {
        self.r0
    }
}

fn invert_sym2(s: &Sym2) -> Option<(Sym2, f64)> {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    if !(det > 0.0 && s[0][0] > 0.0) {
        return None;
    }
    Some((
        [
            [s[1][1] / det, -s[0][1] / det],
            [-s[1][0] / det, s[0][0] / det],
        ],
        det,
    ))
}

fn axpy(a: f64, x: &Vec4, y: &mut Vec4) {
    for c in 0..4 {
        y[c] += a * x[c];
    }
}

/// Pointwise extrinsic data at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGeometry {
    pub theta: f64,
    pub phi: f64,
    pub y: Point4,
    pub tangents: [Vec4; 2],
    pub metric: Metric4,
    pub christoffel: Christoffels,
    pub sigma: Sym2,
    pub sigma_inv: Sym2,
    /// `√det σ`.
    pub area_density: f64,
    pub h: Vec4,
    pub h_norm: f64,
    pub j: Vec4,
}

impl NodeGeometry {
    pub fn inner(&self, u: &Vec4, v: &Vec4) -> f64 {
        inner(&self.metric, u, v)
    }

    /// Tangential part `σ^{ab}⟨v, ∂_aY⟩ ∂_bY`.
    pub fn tangential(&self, v: &Vec4) -> Vec4 {
        tangential_part(&self.metric, &self.tangents, &self.sigma_inv, v)
    }

    /// Push forward a tangent vector given by parameter components `w^a`.
    pub fn push_forward(&self, w: [f64; 2]) -> Vec4 {
        let mut out = [0.0; 4];
        axpy(w[0], &self.tangents[0], &mut out);
        axpy(w[1], &self.tangents[1], &mut out);
        out
    }

    /// `σ^{ab} df_b`.
    pub fn raise(&self, df: [f64; 2]) -> [f64; 2] {
        let s = &self.sigma_inv;
        [
            s[0][0] * df[0] + s[0][1] * df[1],
            s[1][0] * df[0] + s[1][1] * df[1],
        ]
    }
}

fn tangential_part(g: &Metric4, tangents: &[Vec4; 2], sigma_inv: &Sym2, v: &Vec4) -> Vec4 {
    let proj = [inner(g, v, &tangents[0]), inner(g, v, &tangents[1])];
    let mut out = [0.0; 4];
    for a in 0..2 {
        for b in 0..2 {
            axpy(sigma_inv[a][b] * proj[a], &tangents[b], &mut out);
        }
    }
    out
}

/// `σ_ab = G(∂_aY, ∂_bY)`.
pub fn induced_metric(
    chart: &dyn SurfaceChart,
    metric: &dyn MetricProvider,
    theta: f64,
    phi: f64,
) -> Result<Sym2> {
    let jet = chart.jet(theta, phi);
    let g = metric.metric(&jet.y)?;
    let sigma = sigma_from(&g, &jet.d);
    invert_sym2(&sigma).ok_or(Error::NotImmersed { theta, phi })?;
    Ok(sigma)
}

fn sigma_from(g: &Metric4, d: &[Vec4; 2]) -> Sym2 {
    let s01 = inner(g, &d[0], &d[1]);
    [[inner(g, &d[0], &d[0]), s01], [s01, inner(g, &d[1], &d[1])]]
}

/// Mean curvature vector `H` and `|H| = √⟨H,H⟩`.
pub fn mean_curvature_vector(
    chart: &dyn SurfaceChart,
    metric: &dyn MetricProvider,
    theta: f64,
    phi: f64,
) -> Result<(Vec4, f64)> {
    let node = node_geometry(chart, metric, theta, phi)?;
    Ok((node.h, node.h_norm))
}

/// Dual normal `J` for a given spacelike mean curvature vector `H`.
pub fn dual_normal_j(
    chart: &dyn SurfaceChart,
    metric: &dyn MetricProvider,
    theta: f64,
    phi: f64,
    h: &Vec4,
) -> Result<Vec4> {
    let jet = chart.jet(theta, phi);
    let g = metric.metric(&jet.y)?;
    let sigma = sigma_from(&g, &jet.d);
    let (sigma_inv, _) = invert_sym2(&sigma).ok_or(Error::NotImmersed { theta, phi })?;
    dual_from(&g, &jet.d, &sigma_inv, h, theta, phi)
}

fn dual_from(
    g: &Metric4,
    tangents: &[Vec4; 2],
    sigma_inv: &Sym2,
    h: &Vec4,
    theta: f64,
    phi: f64,
) -> Result<Vec4> {
    let hh = inner(g, h, h);
    if !(hh > 0.0) {
        return Err(Error::NotSpacelike {
            theta,
            phi,
            norm_sq: hh,
        });
    }
    // The orthogonal complement of H in the normal plane is a timelike line;
    // project coordinate basis vectors onto it and keep the best-conditioned.
    let mut best: Option<(Vec4, f64)> = None;
    for k in 0..4 {
        let mut e = [0.0; 4];
        e[k] = 1.0;
        let t = tangential_part(g, tangents, sigma_inv, &e);
        let mut n = e;
        axpy(-1.0, &t, &mut n);
        let c = inner(g, &n, h) / hh;
        axpy(-c, h, &mut n);
        let nn = inner(g, &n, &n);
        let euclid = n.iter().map(|v| v * v).sum::<f64>();
        let quality = -nn / euclid.max(f64::MIN_POSITIVE);
        if nn < 0.0 && best.as_ref().is_none_or(|(_, q)| quality > *q) {
            best = Some((n, quality));
        }
    }
    let (n, quality) = best.ok_or(Error::DegenerateNormal { theta, phi })?;
    if !(quality > 1e-12) {
        return Err(Error::DegenerateNormal { theta, phi });
    }
    let nn = inner(g, &n, &n);
    let scale = (hh / -nn).sqrt() * if n[0] < 0.0 { -1.0 } else { 1.0 };
    Ok(n.map(|v| v * scale))
}

/// All pointwise quantities at `(θ, φ)`.
pub fn node_geometry(
    chart: &dyn SurfaceChart,
    metric: &dyn MetricProvider,
    theta: f64,
    phi: f64,
) -> Result<NodeGeometry> {
    let jet = chart.jet(theta, phi);
    let g = metric.metric(&jet.y)?;
    let dg = metric.metric_derivs(&jet.y)?;
    let gam = christoffel_from(&g, &dg)?;
    let sigma = sigma_from(&g, &jet.d);
    let (sigma_inv, det) = invert_sym2(&sigma).ok_or(Error::NotImmersed { theta, phi })?;

    let mut trace = [0.0; 4];
    for a in 0..2 {
        for b in 0..2 {
            let s = sigma_inv[a][b];
            if s == 0.0 {
                continue;
            }
            let conn = gam.contract(&jet.d[a], &jet.d[b]);
            for c in 0..4 {
                trace[c] += s * (jet.dd[a][b][c] + conn[c]);
            }
        }
    }
    let tangential = tangential_part(&g, &jet.d, &sigma_inv, &trace);
    let mut h = trace;
    axpy(-1.0, &tangential, &mut h);
    let hh = inner(&g, &h, &h);
    if !(hh > 0.0) {
        return Err(Error::NotSpacelike {
            theta,
            phi,
            norm_sq: hh,
        });
    }
    let j = dual_from(&g, &jet.d, &sigma_inv, &h, theta, phi)?;
    Ok(NodeGeometry {
        theta,
        phi,
        y: jet.y,
        tangents: jet.d,
        metric: g,
        christoffel: gam,
        sigma,
        sigma_inv,
        area_density: det.sqrt(),
        h,
        h_norm: hh.sqrt(),
        j,
    })
}

/// Geometry of a surface sampled on a [`SphereGrid`].
#[derive(Debug, Clone)]
pub struct SurfaceGeometry {
    grid: Arc<SphereGrid>,
    radius: f64,
    nodes: Vec<NodeGeometry>,
    /// `[ω_θ, ω_φ]` with `ω_a = ⟨∇_{∂_aY}(J/|H|), H/|H|⟩`.
    connection: Vec<[f64; 2]>,
}

impl SurfaceGeometry {
    pub fn compute(
        chart: &dyn SurfaceChart,
        metric: &dyn MetricProvider,
        grid: Arc<SphereGrid>,
    ) -> Result<Self> {
        let nodes: Vec<NodeGeometry> = grid
            .nodes()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(_, t, p)| node_geometry(chart, metric, t, p))
            .collect::<Result<_>>()?;

        // J/|H| as four Cartesian component fields
        let unit_j: Vec<Vec4> = nodes.iter().map(|n| n.j.map(|v| v / n.h_norm)).collect();
        let mut d_theta = vec![[0.0; 4]; nodes.len()];
        let mut d_phi = vec![[0.0; 4]; nodes.len()];
        for c in 0..4 {
            let comp: Vec<f64> = unit_j.iter().map(|v| v[c]).collect();
            let dt = grid.d_theta(&comp, Parity::Even);
            let dp = grid.d_phi(&comp);
            for k in 0..nodes.len() {
                d_theta[k][c] = dt[k];
                d_phi[k][c] = dp[k];
            }
        }
        let connection = nodes
            .iter()
            .enumerate()
            .map(|(k, n)| {
                let mut out = [0.0; 2];
                for (a, partial) in [d_theta[k], d_phi[k]].iter().enumerate() {
                    let corr = n.christoffel.contract(&n.tangents[a], &unit_j[k]);
                    let mut cov = *partial;
                    axpy(1.0, &corr, &mut cov);
                    out[a] = n.inner(&cov, &n.h) / n.h_norm;
                }
                out
            })
            .collect();
        Ok(Self {
            grid,
            radius: chart.radius(),
            nodes,
            connection,
        })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> &[NodeGeometry] {
        &self.nodes
    }

    pub fn node(&self, i: usize, j: usize) -> &NodeGeometry {
        &self.nodes[self.grid.index(i, j)]
    }

    pub fn connection_coefficients(&self) -> &[[f64; 2]] {
        &self.connection
    }

    /// `⟨∇^N_W (J/|H|), H/|H|⟩` at node `k` for `W = w^a ∂_aY`.
    pub fn connection_form(&self, k: usize, w: [f64; 2]) -> f64 {
        let c = self.connection[k];
        w[0] * c[0] + w[1] * c[1]
    }

    pub fn area_density(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.area_density).collect()
    }

    pub fn h_norm(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.h_norm).collect()
    }

    /// `∫_Σ f dv`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.grid.integrate(f, &self.area_density())
    }

    pub fn calculus(&self) -> SurfaceCalculus {
        SurfaceCalculus::new(
            self.grid.clone(),
            self.nodes.iter().map(|n| n.sigma).collect(),
        )
        .expect("node metrics were validated on construction")
    }
}

/// Gradient, norm and Laplace–Beltrami operator of an induced metric field.
#[derive(Debug, Clone)]
pub struct SurfaceCalculus {
    grid: Arc<SphereGrid>,
    sigma_inv: Vec<Sym2>,
    area: Vec<f64>,
}

/// Output of [`SurfaceCalculus::surface_calculus`].
#[derive(Debug, Clone, PartialEq)]
pub struct CalculusFields {
    /// Covariant components `∂_a f`.
    pub differential: Vec<[f64; 2]>,
    /// Contravariant components `∇^a f = σ^{ab} ∂_b f`.
    pub gradient: Vec<[f64; 2]>,
    pub gradient_norm_sq: Vec<f64>,
    pub laplacian: Vec<f64>,
}

impl SurfaceCalculus {
    pub fn new(grid: Arc<SphereGrid>, sigma: Vec<Sym2>) -> Result<Self> {
        assert_eq!(sigma.len(), grid.len());
        let mut sigma_inv = Vec::with_capacity(sigma.len());
        let mut area = Vec::with_capacity(sigma.len());
        for (k, theta, phi) in grid.nodes() {
            let (inv, det) = invert_sym2(&sigma[k]).ok_or(Error::NotImmersed { theta, phi })?;
            sigma_inv.push(inv);
            area.push(det.sqrt());
        }
        Ok(Self {
            grid,
            sigma_inv,
            area,
        })
    }

    pub fn area_density(&self) -> &[f64] {
        &self.area
    }

    /// `∂_a f` for a smooth scalar field.
    pub fn differential(&self, f: &[f64]) -> Vec<[f64; 2]> {
        let dt = self.grid.d_theta(f, Parity::Even);
        let dp = self.grid.d_phi(f);
        dt.into_iter().zip(dp).map(|(a, b)| [a, b]).collect()
    }

    pub fn raise(&self, df: &[[f64; 2]]) -> Vec<[f64; 2]> {
        df.iter()
            .zip(&self.sigma_inv)
            .map(|(d, s)| [s[0][0] * d[0] + s[0][1] * d[1], s[1][0] * d[0] + s[1][1] * d[1]])
            .collect()
    }

    /// `σ^{ab} ∂_a f ∂_b f`.
    pub fn norm_sq(&self, df: &[[f64; 2]]) -> Vec<f64> {
        df.iter()
            .zip(self.raise(df))
            .map(|(d, u)| d[0] * u[0] + d[1] * u[1])
            .collect()
    }

    /// `Δf = (1/√σ) ∂_a(√σ σ^{ab} ∂_b f)` from the differential of `f`.
    pub fn laplacian_from_differential(&self, df: &[[f64; 2]]) -> Vec<f64> {
        let up = self.raise(df);
        let flux_theta: Vec<f64> = up.iter().zip(&self.area).map(|(u, a)| a * u[0]).collect();
        let flux_phi: Vec<f64> = up.iter().zip(&self.area).map(|(u, a)| a * u[1]).collect();
        let div_t = self.grid.d_theta(&flux_theta, Parity::Even);
        let div_p = self.grid.d_phi(&flux_phi);
        div_t
            .iter()
            .zip(&div_p)
            .zip(&self.area)
            .map(|((a, b), s)| (a + b) / s)
            .collect()
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.laplacian_from_differential(&self.differential(f))
    }

    pub fn surface_calculus(&self, f: &[f64]) -> CalculusFields {
        let differential = self.differential(f);
        self.fields_from_differential(differential)
    }

    pub fn fields_from_differential(&self, differential: Vec<[f64; 2]>) -> CalculusFields {
        CalculusFields {
            gradient: self.raise(&differential),
            gradient_norm_sq: self.norm_sq(&differential),
            laplacian: self.laplacian_from_differential(&differential),
            differential,
        }
    }
}
