//! Spacetime metrics in geometric units (G = c = 1).
//!
//! A [`MetricProvider`] evaluates the covariant metric `G_{ab}(y)` and its
//! coordinate derivatives at a point `y = (y0, y1, y2, y3)`. Christoffel
//! symbols are derived from those two through [`christoffel`].

use std::collections::BTreeMap;

use nalgebra::{Matrix4, SymmetricEigen};

use crate::error::{Error, Result};

/// Coordinates `(y0, y1, y2, y3)`.
pub type Point4 = [f64; 4];
/// Contravariant 4-vector components.
pub type Vec4 = [f64; 4];
/// Covariant metric components `G[a][b]`.
pub type Metric4 = [[f64; 4]; 4];
/// Metric derivatives `dG[c][a][b] = d_c G_{ab}`.
pub type MetricDerivs = [[[f64; 4]; 4]; 4];

/// Source of metric values and first derivatives.
///
/// Implementations are immutable after construction and may be shared
/// across threads.
pub trait MetricProvider: Send + Sync {
    fn metric(&self, y: &Point4) -> Result<Metric4>;
    fn metric_derivs(&self, y: &Point4) -> Result<MetricDerivs>;
    /// Named parameters (e.g. `M`).
    fn params(&self) -> &BTreeMap<String, f64>;
    fn name(&self) -> &str;
}

/// Christoffel symbols of the second kind, `gamma[c][a][b] = Γ^c_{ab}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffels(pub [[[f64; 4]; 4]; 4]);

impl Christoffels {
    #[inline]
    pub fn get(&self, upper: usize, a: usize, b: usize) -> f64 {
        self.0[upper][a][b]
    }

    /// `Γ^c_{ab} u^a v^b`.
    pub fn contract(&self, u: &Vec4, v: &Vec4) -> Vec4 {
        let mut out = [0.0; 4];
        for (c, slot) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for a in 0..4 {
                if u[a] == 0.0 {
                    continue;
                }
                for b in 0..4 {
                    s += self.0[c][a][b] * u[a] * v[b];
                }
            }
            *slot = s;
        }
        out
    }
}

/// `G(u, v)`.
#[inline]
pub fn inner(g: &Metric4, u: &Vec4, v: &Vec4) -> f64 {
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            s += g[a][b] * u[a] * v[b];
        }
    }
    s
}

pub fn invert_metric(g: &Metric4) -> Result<Metric4> {
    let m = Matrix4::from_fn(|i, j| g[i][j]);
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("metric {g:?}")))?;
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = inv[(i, j)];
        }
    }
    Ok(out)
}

/// Eigenvalues of the symmetric metric matrix, ascending.
pub fn metric_eigenvalues(g: &Metric4) -> [f64; 4] {
    let m = Matrix4::from_fn(|i, j| 0.5 * (g[i][j] + g[j][i]));
    let eig = SymmetricEigen::new(m).eigenvalues;
    let mut ev = [eig[0], eig[1], eig[2], eig[3]];
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Fails unless `g` has signature (-,+,+,+).
pub fn check_lorentzian(y: &Point4, g: &Metric4) -> Result<()> {
    let ev = metric_eigenvalues(g);
    let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = 1e-14 * scale.max(f64::MIN_POSITIVE);
    let ok = ev.iter().all(|v| v.is_finite()) && ev[0] < -tiny && ev[1] > tiny;
    if ok {
        Ok(())
    } else {
        Err(Error::Signature {
            point: *y,
            eigenvalues: ev,
        })
    }
}

/// `Γ^c_{ab} = ½ G^{cd}(∂_a G_{db} + ∂_b G_{da} − ∂_d G_{ab})`.
pub fn christoffel(provider: &dyn MetricProvider, y: &Point4) -> Result<Christoffels> {
    let g = provider.metric(y)?;
    let dg = provider.metric_derivs(y)?;
    christoffel_from(&g, &dg)
}

pub fn christoffel_from(g: &Metric4, dg: &MetricDerivs) -> Result<Christoffels> {
    let ginv = invert_metric(g)?;
    // lowered[d][a][b] = ½(∂_a G_db + ∂_b G_da − ∂_d G_ab), symmetric in (a, b)
    let mut lowered = [[[0.0; 4]; 4]; 4];
    for (d, plane) in lowered.iter_mut().enumerate() {
        for a in 0..4 {
            for b in a..4 {
                let v = 0.5 * (dg[a][d][b] + dg[b][d][a] - dg[d][a][b]);
                plane[a][b] = v;
                plane[b][a] = v;
            }
        }
    }
    let mut out = [[[0.0; 4]; 4]; 4];
    for (c, plane) in out.iter_mut().enumerate() {
        for a in 0..4 {
            for b in a..4 {
                let mut s = 0.0;
                for (d, low) in lowered.iter().enumerate() {
                    s += ginv[c][d] * low[a][b];
                }
                plane[a][b] = s;
                plane[b][a] = s;
            }
        }
    }
    Ok(Christoffels(out))
}

/// Flat metric `diag(-1, 1, 1, 1)`.
#[derive(Debug, Clone, Default)]
pub struct Minkowski {
    params: BTreeMap<String, f64>,
}

pub fn minkowski() -> Minkowski {
    Minkowski::default()
}

pub const MINKOWSKI: Metric4 = [
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

impl MetricProvider for Minkowski {
    fn metric(&self, _y: &Point4) -> Result<Metric4> {
        Ok(MINKOWSKI)
    }

    fn metric_derivs(&self, _y: &Point4) -> Result<MetricDerivs> {
        Ok([[[0.0; 4]; 4]; 4])
    }

    fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    fn name(&self) -> &str {
        "minkowski"
    }
}

/// Schwarzschild in isotropic coordinates:
/// `-(1/F²) dt² + (1/G²) Σ dyⁱ²` with `F² = (1+M/2ρ)²/(1−M/2ρ)²`,
/// `G² = (1+M/2ρ)⁻⁴`.
#[derive(Debug, Clone)]
pub struct SchwarzschildIsotropic {
    mass: f64,
    params: BTreeMap<String, f64>,
}

pub fn schwarzschild_isotropic(mass: f64) -> Result<SchwarzschildIsotropic> {
    SchwarzschildIsotropic::new(mass)
}

impl SchwarzschildIsotropic {
    pub fn new(mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass must be finite and non-negative, got {mass}"
            )));
        }
        let params = BTreeMap::from([("M".to_string(), mass)]);
        Ok(Self { mass, params })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn radius(&self, y: &Point4) -> Result<f64> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain {
                point: *y,
                reason: "non-finite coordinate".into(),
            });
        }
        let rho = (y[1] * y[1] + y[2] * y[2] + y[3] * y[3]).sqrt();
        if self.mass > 0.0 && rho <= 0.5 * self.mass {
            return Err(Error::Domain {
                point: *y,
                reason: format!("rho = {rho} <= M/2 = {}", 0.5 * self.mass),
            });
        }
        Ok(rho)
    }
}

impl MetricProvider for SchwarzschildIsotropic {
    fn metric(&self, y: &Point4) -> Result<Metric4> {
        let rho = self.radius(y)?;
        if self.mass == 0.0 {
            return Ok(MINKOWSKI);
        }
        let k = 0.5 * self.mass / rho;
        let psi = 1.0 + k;
        let chi = 1.0 - k;
        let lapse = chi / psi;
        let conformal = psi * psi * psi * psi;
        let mut g = [[0.0; 4]; 4];
        g[0][0] = -lapse * lapse;
        g[1][1] = conformal;
        g[2][2] = conformal;
        g[3][3] = conformal;
        Ok(g)
    }

    fn metric_derivs(&self, y: &Point4) -> Result<MetricDerivs> {
        let rho = self.radius(y)?;
        let mut dg = [[[0.0; 4]; 4]; 4];
        if self.mass == 0.0 {
            return Ok(dg);
        }
        let m = self.mass;
        let psi = 1.0 + 0.5 * m / rho;
        let lapse = (1.0 - 0.5 * m / rho) / psi;
        // d(lapse)/dρ = M / (ρ² ψ²), d(ψ⁴)/dρ = −2 M ψ³ / ρ²
        let d_g00 = -2.0 * lapse * m / (rho * rho * psi * psi);
        let d_gii = -2.0 * m * psi * psi * psi / (rho * rho);
        for c in 1..4 {
            let drho = y[c] / rho;
            dg[c][0][0] = d_g00 * drho;
            for i in 1..4 {
                dg[c][i][i] = d_gii * drho;
            }
        }
        Ok(dg)
    }

    fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    fn name(&self) -> &str {
        "schwarzschild-isotropic"
    }
}

/// Central-difference metric derivatives with one Richardson refinement.
///
/// Step `h = max(1, |y|)·1e-6`; the refined estimate is `(4 D(h/2) − D(h)) / 3`.
pub fn fd_metric_derivs<F>(metric: F, y: &Point4) -> Result<MetricDerivs>
where
    F: Fn(&Point4) -> Result<Metric4>,
{
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = norm.max(1.0) * 1e-6;
    let mut out = [[[0.0; 4]; 4]; 4];
    for (c, plane) in out.iter_mut().enumerate() {
        let central = |step: f64| -> Result<Metric4> {
            let mut yp = *y;
            let mut ym = *y;
            yp[c] += step;
            ym[c] -= step;
            let gp = metric(&yp)?;
            let gm = metric(&ym)?;
            let mut d = [[0.0; 4]; 4];
            for a in 0..4 {
                for b in 0..4 {
                    d[a][b] = (gp[a][b] - gm[a][b]) / (2.0 * step);
                }
            }
            Ok(d)
        };
        let coarse = central(h)?;
        let fine = central(0.5 * h)?;
        for a in 0..4 {
            for b in 0..4 {
                plane[a][b] = (4.0 * fine[a][b] - coarse[a][b]) / 3.0;
            }
        }
    }
    Ok(out)
}
