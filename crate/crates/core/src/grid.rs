//! Spectral grid on the sphere.
//!
//! θ-nodes are Gauss–Legendre points in `x = cos θ` (never at the poles),
//! φ-nodes are uniform. Fields are stored row-major: `field[i * n_phi + j]`
//! at `(θ_i, φ_j)`, with θ ascending.
//!
//! θ-derivatives go through a Fourier decomposition in φ. The mode-`m` part of
//! a smooth function on the sphere is a smooth function of `x` when `m` is
//! even and `sin θ` times one when `m` is odd; [`Parity`] records which of the
//! two a field's `m = 0` part belongs to, and odd modes flip it. Within each
//! class differentiation is barycentric on the Legendre nodes, so smooth data
//! is differentiated to spectral accuracy without pole singularities.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MIN_ORDER: usize = 16;
pub const MAX_ORDER: usize = 512;

/// Behaviour of a field's axisymmetric part near the poles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Smooth in `cos θ` (scalars, Cartesian components of smooth vectors).
    Even,
    /// `sin θ` times a smooth function of `cos θ` (θ-derivatives of even fields).
    Odd,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    fn for_mode(self, m: usize) -> Parity {
        if m % 2 == 1 {
            self.flip()
        } else {
            self
        }
    }
}

/// Gauss–Legendre nodes (descending, so θ ascends) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Values `P_0(z) .. P_{n}(z)`.
fn legendre_values(n: usize, z: f64) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = z;
    }
    for k in 2..=n {
        p[k] = ((2 * k - 1) as f64 * z * p[k - 1] - (k - 1) as f64 * p[k - 2]) / k as f64;
    }
    p
}

/// Barycentric differentiation matrix (row-major) for distinct nodes.
pub fn barycentric_diff_matrix(nodes: &[f64], bary: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}

#[derive(Debug, Clone)]
pub struct SphereGrid {
    n_theta: usize,
    n_phi: usize,
    /// `cos θ_i`.
    x: Vec<f64>,
    theta: Vec<f64>,
    sin_theta: Vec<f64>,
    gl_weights: Vec<f64>,
    phi: Vec<f64>,
    diff_x: Vec<f64>,
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if !(MIN_ORDER..=MAX_ORDER).contains(&n_theta) {
            return Err(Error::InvalidParameter(format!(
                "quadrature order {n_theta} outside [{MIN_ORDER}, {MAX_ORDER}]"
            )));
        }
        if n_phi == 0 || n_phi > 4 * MAX_ORDER {
            return Err(Error::InvalidParameter(format!("phi order {n_phi} out of range")));
        }
        let (x, gl_weights) = gauss_legendre(n_theta);
        let theta: Vec<f64> = x.iter().map(|v| v.acos()).collect();
        let sin_theta: Vec<f64> = x.iter().map(|v| (1.0 - v * v).sqrt()).collect();
        let bary: Vec<f64> = (0..n_theta)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * ((1.0 - x[i] * x[i]) * gl_weights[i]).sqrt()
            })
            .collect();
        let diff_x = barycentric_diff_matrix(&x, &bary);
        let phi: Vec<f64> = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        let modes = n_phi / 2 + 1;
        let mut cos_table = vec![0.0; modes * n_phi];
        let mut sin_table = vec![0.0; modes * n_phi];
        for m in 0..modes {
            for j in 0..n_phi {
                let a = m as f64 * phi[j];
                cos_table[m * n_phi + j] = a.cos();
                sin_table[m * n_phi + j] = a.sin();
            }
        }
        Ok(Self {
            n_theta,
            n_phi,
            x,
            theta,
            sin_theta,
            gl_weights,
            phi,
            diff_x,
            cos_table,
            sin_table,
        })
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.x
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn gl_weights(&self) -> &[f64] {
        &self.gl_weights
    }

    /// `(θ, φ)` of every node in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.len()).map(move |k| (k, self.theta[k / self.n_phi], self.phi[k % self.n_phi]))
    }

    fn apply_dx(&self, col: &[f64]) -> Vec<f64> {
        let n = self.n_theta;
        (0..n)
            .map(|i| {
                let row = &self.diff_x[i * n..(i + 1) * n];
                row.iter().zip(col).map(|(d, v)| d * v).sum()
            })
            .collect()
    }

    /// θ-derivative of a φ-independent column of length `n_theta`.
    pub fn d_theta_column(&self, col: &[f64], parity: Parity) -> Vec<f64> {
        assert_eq!(col.len(), self.n_theta);
        match parity {
            Parity::Even => {
                let dx = self.apply_dx(col);
                dx.iter().zip(&self.sin_theta).map(|(d, s)| -s * d).collect()
            }
            Parity::Odd => {
                let h: Vec<f64> = col.iter().zip(&self.sin_theta).map(|(v, s)| v / s).collect();
                let dh = self.apply_dx(&h);
                (0..self.n_theta)
                    .map(|i| {
                        let s = self.sin_theta[i];
                        self.x[i] * h[i] - s * s * dh[i]
                    })
                    .collect()
            }
        }
    }

    /// Real Fourier coefficients of each θ-row: `(a[m][i], b[m][i])`.
    fn row_modes(&self, field: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let np = self.n_phi;
        let modes = np / 2 + 1;
        let mut a = vec![vec![0.0; self.n_theta]; modes];
        let mut b = vec![vec![0.0; self.n_theta]; modes];
        for i in 0..self.n_theta {
            let row = &field[i * np..(i + 1) * np];
            for m in 0..modes {
                let c = &self.cos_table[m * np..(m + 1) * np];
                let s = &self.sin_table[m * np..(m + 1) * np];
                let nyquist = np.is_multiple_of(2) && m == np / 2;
                let scale = if m == 0 || nyquist { 1.0 } else { 2.0 } / np as f64;
                a[m][i] = scale * row.iter().zip(c).map(|(v, c)| v * c).sum::<f64>();
                b[m][i] = if nyquist {
                    0.0
                } else {
                    scale * row.iter().zip(s).map(|(v, s)| v * s).sum::<f64>()
                };
            }
        }
        (a, b)
    }

    fn synthesize(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
        let np = self.n_phi;
        let mut out = vec![0.0; self.len()];
        for i in 0..self.n_theta {
            for j in 0..np {
                let mut v = 0.0;
                for m in 0..a.len() {
                    v += a[m][i] * self.cos_table[m * np + j] + b[m][i] * self.sin_table[m * np + j];
                }
                out[i * np + j] = v;
            }
        }
        out
    }

    /// ∂/∂θ of a grid field whose `m = 0` part has the given parity.
    pub fn d_theta(&self, field: &[f64], parity: Parity) -> Vec<f64> {
        assert_eq!(field.len(), self.len());
        if self.n_phi == 1 {
            return self.d_theta_column(field, parity);
        }
        let (a, b) = self.row_modes(field);
        let diff = |cols: &[Vec<f64>]| -> Vec<Vec<f64>> {
            cols.iter()
                .enumerate()
                .map(|(m, col)| {
                    if col.iter().all(|v| *v == 0.0) {
                        col.clone()
                    } else {
                        self.d_theta_column(col, parity.for_mode(m))
                    }
                })
                .collect()
        };
        self.synthesize(&diff(&a), &diff(&b))
    }

    /// ∂/∂φ by Fourier differentiation (Nyquist mode dropped).
    pub fn d_phi(&self, field: &[f64]) -> Vec<f64> {
        assert_eq!(field.len(), self.len());
        let np = self.n_phi;
        if np == 1 {
            return vec![0.0; field.len()];
        }
        let (a, b) = self.row_modes(field);
        let mut da = vec![vec![0.0; self.n_theta]; a.len()];
        let mut db = vec![vec![0.0; self.n_theta]; a.len()];
        for m in 1..a.len() {
            if np.is_multiple_of(2) && m == np / 2 {
                continue;
            }
            for i in 0..self.n_theta {
                da[m][i] = m as f64 * b[m][i];
                db[m][i] = -(m as f64) * a[m][i];
            }
        }
        self.synthesize(&da, &db)
    }

    /// `∫ f dA` with `dA = area_density dθ dφ` (`area_density = √det σ`).
    pub fn integrate(&self, f: &[f64], area_density: &[f64]) -> f64 {
        assert_eq!(f.len(), self.len());
        assert_eq!(area_density.len(), self.len());
        let dphi = 2.0 * PI / self.n_phi as f64;
        let mut total = 0.0;
        for i in 0..self.n_theta {
            let w = self.gl_weights[i] * dphi / self.sin_theta[i];
            let row: f64 = (0..self.n_phi)
                .map(|j| f[i * self.n_phi + j] * area_density[i * self.n_phi + j])
                .sum();
            total += w * row;
        }
        total
    }

    /// `∫_{-1}^{1} g dx` of a column.
    pub fn integrate_x(&self, col: &[f64]) -> f64 {
        col.iter().zip(&self.gl_weights).map(|(v, w)| v * w).sum()
    }

    /// Antiderivative in `x` of a column, normalised to vanish at `x = x0`.
    pub fn antiderivative_x(&self, col: &[f64], x0: f64) -> Vec<f64> {
        let n = self.n_theta;
        let tables: Vec<Vec<f64>> = self.x.iter().map(|&z| legendre_values(n, z)).collect();
        let coeffs: Vec<f64> = (0..n)
            .map(|k| {
                let s: f64 = (0..n).map(|j| self.gl_weights[j] * col[j] * tables[j][k]).sum();
                0.5 * (2 * k + 1) as f64 * s
            })
            .collect();
        let primitive = |p: &[f64], z: f64| -> f64 {
            let mut v = coeffs[0] * (z + 1.0);
            for k in 1..n {
                v += coeffs[k] * (p[k + 1] - p[k - 1]) / (2 * k + 1) as f64;
            }
            v
        };
        let base = primitive(&legendre_values(n, x0), x0);
        (0..n).map(|i| primitive(&tables[i], self.x[i]) - base).collect()
    }

    /// Broadcast a θ-column to every φ.
    pub fn broadcast(&self, col: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for v in col {
            out.extend(std::iter::repeat_n(*v, self.n_phi));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(20);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for k in 0..39usize {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            let want = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((got - want).abs() < 1e-14, "k = {k}");
        }
        assert!(x.windows(2).all(|p| p[0] > p[1]));
        assert!(x[0] < 1.0 && x[19] > -1.0);
    }

    #[test]
    fn area_and_odd_moment() {
        let g = SphereGrid::new(32, 8).unwrap();
        let r = 3.0;
        let dens: Vec<f64> = g.nodes().map(|(_, t, _)| r * r * t.sin()).collect();
        let ones = vec![1.0; g.len()];
        assert!((g.integrate(&ones, &dens) - 4.0 * PI * r * r).abs() < 1e-10 * r * r);
        let cos: Vec<f64> = g.nodes().map(|(_, t, _)| t.cos()).collect();
        assert!(g.integrate(&cos, &dens).abs() < 1e-12);
        let sin2phi: Vec<f64> = g.nodes().map(|(_, t, p)| t.sin() * p.sin()).collect();
        assert!(g.integrate(&sin2phi, &dens).abs() < 1e-12);
    }

    #[test]
    fn theta_derivatives_of_both_parities() {
        let g = SphereGrid::new(48, 1).unwrap();
        let th = g.theta().to_vec();
        // even: exp(cos θ)
        let f: Vec<f64> = th.iter().map(|t| t.cos().exp()).collect();
        let df = g.d_theta_column(&f, Parity::Even);
        for (i, t) in th.iter().enumerate() {
            assert!((df[i] + t.sin() * t.cos().exp()).abs() < 1e-12);
        }
        // odd: sin θ / (2 + cos θ)
        let f: Vec<f64> = th.iter().map(|t| t.sin() / (2.0 + t.cos())).collect();
        let df = g.d_theta_column(&f, Parity::Odd);
        for (i, t) in th.iter().enumerate() {
            let want = (t.cos() * (2.0 + t.cos()) + t.sin() * t.sin()) / (2.0 + t.cos()).powi(2);
            assert!((df[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn modal_derivatives_on_nonaxisymmetric_fields() {
        let g = SphereGrid::new(40, 16).unwrap();
        // Cartesian coordinates of the unit sphere, and a product of them
        let f: Vec<f64> = g
            .nodes()
            .map(|(_, t, p)| t.sin() * p.sin() + (t.sin() * p.cos()) * t.cos() + t.cos().powi(3))
            .collect();
        let dt = g.d_theta(&f, Parity::Even);
        let dp = g.d_phi(&f);
        for (k, t, p) in g.nodes() {
            let want_t = t.cos() * p.sin() + p.cos() * (t.cos().powi(2) - t.sin().powi(2))
                - 3.0 * t.cos().powi(2) * t.sin();
            let want_p = t.sin() * p.cos() - t.sin() * t.cos() * p.sin();
            assert!((dt[k] - want_t).abs() < 1e-11, "dθ at {t},{p}");
            assert!((dp[k] - want_p).abs() < 1e-11, "dφ at {t},{p}");
        }
    }

    #[test]
    fn antiderivative_recovers_cosine() {
        let g = SphereGrid::new(32, 1).unwrap();
        // d/dx of (x + x^3) with gauge zero at x = 0
        let col: Vec<f64> = g.cos_theta().iter().map(|x| 1.0 + 3.0 * x * x).collect();
        let f = g.antiderivative_x(&col, 0.0);
        for (i, x) in g.cos_theta().iter().enumerate() {
            assert!((f[i] - (x + x * x * x)).abs() < 1e-13);
        }
    }

    #[test]
    fn order_bounds() {
        assert!(SphereGrid::new(8, 4).is_err());
        assert!(SphereGrid::new(1024, 4).is_err());
        assert!(SphereGrid::new(16, 0).is_err());
    }
}
