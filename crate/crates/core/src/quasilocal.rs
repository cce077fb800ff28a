//! Quasilocal energy of a surface with respect to an observer, its large-sphere
//! limit, and the energy-momentum four-vector `(e, p)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::embedding::{profile_from_metric, tau_field, AxisymMetric2, EmbeddingProfile};
use crate::error::{Error, Result};
use crate::grid::SphereGrid;
use crate::spacetime::MetricProvider;
use crate::surface::{BoostedSphere, SurfaceChart, SurfaceGeometry};

/// Observer `T₀ = (√(1+|a|²), a)` for the reference embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observer {
    pub a: [f64; 3],
}

impl Observer {
    pub fn new(a: [f64; 3]) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("observer vector must be finite, got {a:?}")));
        }
        Ok(Self { a })
    }

    pub fn rest() -> Self {
        Self { a: [0.0; 3] }
    }

    pub fn lapse(&self) -> f64 {
        (1.0 + self.a.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn t0(&self) -> [f64; 4] {
        [self.lapse(), self.a[0], self.a[1], self.a[2]]
    }
}

/// Energy-momentum four-vector `(e, p₁, p₂, p₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMomentum {
    pub e: f64,
    pub p: [f64; 3],
}

/// Result of minimizing `e√(1+|a|²) + p·a` over observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverMinimum {
    pub mass: f64,
    pub a_min: [f64; 3],
}

impl EnergyMomentum {
    pub fn p_norm(&self) -> f64 {
        self.p.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Energy seen by observer `a`: `e√(1+|a|²) + p·a`.
    pub fn energy_for(&self, obs: &Observer) -> f64 {
        self.e * obs.lapse() + (0..3).map(|i| self.p[i] * obs.a[i]).sum::<f64>()
    }
}

pub fn minimize_over_observers(em: &EnergyMomentum) -> Result<ObserverMinimum> {
    let pn = em.p_norm();
    if !(em.e > pn) {
        return Err(Error::NotTimelike { e: em.e, p_norm: pn });
    }
    let mass = ((em.e - pn) * (em.e + pn)).sqrt();
    Ok(ObserverMinimum {
        mass,
        a_min: em.p.map(|v| -v / mass),
    })
}

/// `√A₀ − √A` with `A = |H|²(1+|∇τ|²) + (Δτ)²`, in the cancellation-free form
/// `(|H₀|−|H|)(|H₀|+|H|)(1+|∇τ|²)/(√A₀+√A)`.
pub fn sqrt_difference(h0: f64, h: f64, grad_sq: f64, lap: f64) -> f64 {
    let w = 1.0 + grad_sq;
    let a0 = h0 * h0 * w + lap * lap;
    let a = h * h * w + lap * lap;
    (h0 - h) * (h0 + h) * w / (a0.sqrt() + a.sqrt())
}

/// `asinh x − asinh y` without cancellation for nearby arguments.
pub fn asinh_difference(x: f64, y: f64) -> f64 {
    (x * (1.0 + y * y).sqrt() - y * (1.0 + x * x).sqrt()).asinh()
}

/// Surface data at one radius: spacetime geometry plus reference embedding.
#[derive(Debug, Clone)]
pub struct SurfaceSample {
    pub geometry: SurfaceGeometry,
    pub profile: EmbeddingProfile,
}

impl SurfaceSample {
    pub fn compute(
        chart: &dyn SurfaceChart,
        metric: &dyn MetricProvider,
        grid: Arc<SphereGrid>,
    ) -> Result<Self> {
        let geometry = SurfaceGeometry::compute(chart, metric, grid)?;
        let sigma = AxisymMetric2::from_geometry(&geometry, 1e-10)?;
        let profile = profile_from_metric(&sigma)?;
        Ok(Self { geometry, profile })
    }

    pub fn radius(&self) -> f64 {
        self.geometry.radius()
    }
}

/// Boosted coordinate spheres `r₀ ↦ Σ_{r₀}` in `metric`.
pub fn boosted_family<'a>(
    metric: &'a dyn MetricProvider,
    beta: f64,
    grid: Arc<SphereGrid>,
) -> impl Fn(f64) -> Result<SurfaceSample> + Sync + 'a {
    move |r0| {
        let chart = BoostedSphere::from_velocity(beta, r0)?;
        SurfaceSample::compute(&chart, metric, grid.clone())
    }
}

fn check_positive(geo: &SurfaceGeometry, emb: &EmbeddingProfile) -> Result<()> {
    for (i, &t) in geo.grid().theta().iter().enumerate() {
        if !(emb.h0[i] > 0.0) {
            return Err(Error::DegenerateProfile { theta: t });
        }
    }
    Ok(())
}

/// Quasilocal energy of the surface with respect to `(X, T₀)` at finite radius.
pub fn qle_finite(geo: &SurfaceGeometry, emb: &EmbeddingProfile, obs: &Observer) -> Result<f64> {
    check_positive(geo, emb)?;
    let tau = tau_field(emb, obs.a).calculus(&emb.calculus());
    let h0 = emb.h0_field();
    let integrand: Vec<f64> = geo
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, n)| {
            let (g2, lap) = (tau.gradient_norm_sq[k], tau.laplacian[k]);
            let root = (1.0 + g2).sqrt();
            sqrt_difference(h0[k], n.h_norm, g2, lap)
                - lap * asinh_difference(lap / (root * h0[k]), lap / (root * n.h_norm))
                + geo.connection_form(k, tau.gradient[k])
        })
        .collect();
    Ok(geo.integrate(&integrand) / (8.0 * PI))
}

/// Large-sphere form `(1/8π)∫ √(1+|a|²)(|H₀|−|H|) + ⟨∇^N_{∇τ}J/|H|, H/|H|⟩`.
pub fn qle_limit_integrand(
    geo: &SurfaceGeometry,
    emb: &EmbeddingProfile,
    obs: &Observer,
) -> Result<f64> {
    check_positive(geo, emb)?;
    let h0 = emb.h0_field();
    for (k, n) in geo.nodes().iter().enumerate() {
        let ratio = n.h_norm / h0[k];
        if !(ratio > 0.5 && ratio < 2.0) {
            return Err(Error::RegimeGuard { theta: n.theta, ratio });
        }
    }
    let tau = tau_field(emb, obs.a).calculus(&emb.calculus());
    let lapse = obs.lapse();
    let integrand: Vec<f64> = geo
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, n)| lapse * (h0[k] - n.h_norm) + geo.connection_form(k, tau.gradient[k]))
        .collect();
    Ok(geo.integrate(&integrand) / (8.0 * PI))
}

/// Finite-radius `e = (1/8π)∫(|H₀|−|H|)` and `pᵢ = (1/8π)∫⟨∇^N_{−∇Xⁱ}J/|H|, H/|H|⟩`.
pub fn four_vector_at(geo: &SurfaceGeometry, emb: &EmbeddingProfile) -> Result<EnergyMomentum> {
    check_positive(geo, emb)?;
    let h0 = emb.h0_field();
    let de: Vec<f64> = geo
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, n)| h0[k] - n.h_norm)
        .collect();
    let calc = emb.calculus();
    let mut p = [0.0; 3];
    for (i, slot) in p.iter_mut().enumerate() {
        // −∇Xⁱ is ∇τ for the observer a = eᵢ
        let mut a = [0.0; 3];
        a[i] = 1.0;
        let grad = calc.raise(&tau_field(emb, a).differential);
        let f: Vec<f64> = (0..grad.len()).map(|k| geo.connection_form(k, grad[k])).collect();
        *slot = geo.integrate(&f) / (8.0 * PI);
    }
    Ok(EnergyMomentum {
        e: geo.integrate(&de) / (8.0 * PI),
        p,
    })
}

/// Radii `r₀` at which a family is sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusLadder {
    radii: Vec<f64>,
}

impl RadiusLadder {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.len() < 3 {
            return Err(Error::RankDeficient(format!(
                "need at least 3 radii, got {}",
                radii.len()
            )));
        }
        if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter(format!("radii must be positive, got {radii:?}")));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "radii must be strictly increasing, got {radii:?}"
            )));
        }
        Ok(Self { radii })
    }

    /// `count` radii `start·ratioᵏ`.
    pub fn geometric(start: f64, ratio: f64, count: usize) -> Result<Self> {
        Self::new((0..count).map(|k| start * ratio.powi(k as i32)).collect())
    }

    /// `{250, 500, 1000, 2000}·M`, with unit scale when `M = 0`.
    pub fn for_mass(mass: f64) -> Self {
        let scale = if mass > 0.0 { mass } else { 1.0 };
        Self::geometric(250.0 * scale, 2.0, 4).expect("default ladder is valid")
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
}

/// Acceptance threshold `rel·|limit| + abs` for fit residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-6, abs: 1e-9 }
    }
}

impl Tolerance {
    pub fn threshold(&self, limit: f64) -> f64 {
        self.rel * limit.abs() + self.abs
    }
}

/// Least-squares fit `c₀ + c₁/r + c₂/r²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolant {
    pub coeffs: [f64; 3],
    /// Largest absolute deviation of the fit from the data.
    pub residual: f64,
}

impl Extrapolant {
    pub fn limit(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.coeffs[0] + self.coeffs[1] / r + self.coeffs[2] / (r * r)
    }

    pub fn converged(&self, tol: &Tolerance) -> bool {
        self.residual <= tol.threshold(self.limit())
    }

    pub fn require(&self, tol: &Tolerance) -> Result<f64> {
        if self.converged(tol) {
            Ok(self.limit())
        } else {
            Err(Error::NonConvergent {
                residual: self.residual,
                tolerance: tol.threshold(self.limit()),
            })
        }
    }
}

pub fn extrapolate(radii: &[f64], values: &[f64]) -> Result<Extrapolant> {
    assert_eq!(radii.len(), values.len());
    let mut distinct = radii.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::RankDeficient(format!(
            "need 3 distinct radii, got {}",
            distinct.len()
        )));
    }
    // columns in s = r_min/r keep the system well scaled
    let r_min = distinct[0];
    let n = radii.len();
    let a = DMatrix::from_fn(n, 3, |i, j| (r_min / radii[i]).powi(j as i32));
    let b = DVector::from_column_slice(values);
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= 1e-12 * sv.max() {
        return Err(Error::RankDeficient("radii too close to separate 1/r terms".into()));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let fit = Extrapolant {
        coeffs: [x[0], x[1] * r_min, x[2] * r_min * r_min],
        residual: 0.0,
    };
    let residual = radii
        .iter()
        .zip(values)
        .map(|(r, v)| (fit.eval(*r) - v).abs())
        .fold(0.0, f64::max);
    Ok(Extrapolant { residual, ..fit })
}

/// Observer-dependent energies at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverEnergy {
    pub observer: Observer,
    pub finite: f64,
    pub limit_form: f64,
}

/// Everything evaluated on one surface of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSample {
    pub r0: f64,
    pub four_vector: EnergyMomentum,
    pub observers: Vec<ObserverEnergy>,
}

pub fn evaluate_sample(sample: &SurfaceSample, observers: &[Observer]) -> Result<RadiusSample> {
    let (geo, emb) = (&sample.geometry, &sample.profile);
    let four_vector = four_vector_at(geo, emb)?;
    let observers = observers
        .iter()
        .map(|o| {
            Ok(ObserverEnergy {
                observer: *o,
                finite: qle_finite(geo, emb, o)?,
                limit_form: qle_limit_integrand(geo, emb, o)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RadiusSample {
        r0: sample.radius(),
        four_vector,
        observers,
    })
}

/// Evaluate a family on every radius of the ladder, in parallel.
pub fn sample_family<F>(family: F, ladder: &RadiusLadder, observers: &[Observer]) -> Result<Vec<RadiusSample>>
where
    F: Fn(f64) -> Result<SurfaceSample> + Sync,
{
    ladder
        .radii()
        .par_iter()
        .map(|&r| evaluate_sample(&family(r)?, observers))
        .collect()
}

/// Extrapolated four-vector and per-observer limits.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyFit {
    pub samples: Vec<RadiusSample>,
    pub e: Extrapolant,
    pub p: [Extrapolant; 3],
    /// `(finite, limit form)` fits per observer.
    pub observers: Vec<(Observer, Extrapolant, Extrapolant)>,
}

impl FamilyFit {
    pub fn from_samples(samples: Vec<RadiusSample>) -> Result<Self> {
        let radii: Vec<f64> = samples.iter().map(|s| s.r0).collect();
        let fit = |f: &dyn Fn(&RadiusSample) -> f64| {
            extrapolate(&radii, &samples.iter().map(f).collect::<Vec<_>>())
        };
        let e = fit(&|s| s.four_vector.e)?;
        let p = [
            fit(&|s| s.four_vector.p[0])?,
            fit(&|s| s.four_vector.p[1])?,
            fit(&|s| s.four_vector.p[2])?,
        ];
        let n_obs = samples.first().map_or(0, |s| s.observers.len());
        let observers = (0..n_obs)
            .map(|j| {
                Ok((
                    samples[0].observers[j].observer,
                    fit(&|s| s.observers[j].finite)?,
                    fit(&|s| s.observers[j].limit_form)?,
                ))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            samples,
            e,
            p,
            observers,
        })
    }

    pub fn limit(&self) -> EnergyMomentum {
        EnergyMomentum {
            e: self.e.limit(),
            p: self.p.map(|f| f.limit()),
        }
    }

    /// Whether every four-vector component fit meets `tol`.
    pub fn converged(&self, tol: &Tolerance) -> bool {
        self.e.converged(tol) && self.p.iter().all(|f| f.converged(tol))
    }

    /// The limit, or the first component whose fit misses `tol`.
    pub fn require_converged(&self, tol: &Tolerance) -> Result<EnergyMomentum> {
        self.e.require(tol)?;
        for f in &self.p {
            f.require(tol)?;
        }
        Ok(self.limit())
    }
}

/// Sample and extrapolate `(e, p)` plus the requested observer energies.
pub fn energy_momentum<F>(family: F, ladder: &RadiusLadder, observers: &[Observer]) -> Result<FamilyFit>
where
    F: Fn(f64) -> Result<SurfaceSample> + Sync,
{
    FamilyFit::from_samples(sample_family(family, ladder, observers)?)
}
