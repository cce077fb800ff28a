use std::collections::BTreeMap;

use super::expr::{Compiled, Expr, ExprError};
use crate::error::{Error, Result};
use crate::spacetime::{check_lorentzian, fd_metric_derivs, Metric4, MetricDerivs, MetricProvider, Point4};

const COORDS: [&str; 4] = ["y0", "y1", "y2", "y3"];

/// Component expressions keyed by `(a, b)` with `a <= b`; unlisted entries are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricSource {
    pub components: BTreeMap<(usize, usize), String>,
    pub params: BTreeMap<String, f64>,
}

impl MetricSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn component(mut self, a: usize, b: usize, expr: impl Into<String>) -> Self {
        self.components.insert((a.min(b), a.max(b)), expr.into());
        self
    }

    pub fn param(mut self, name: impl Into<String>, value: f64) -> Self {
        self.params.insert(name.into(), value);
        self
    }
}

/// Parses keys of the form `(a,b)` or `a,b` into an ordered index pair.
pub fn parse_index_pair(key: &str) -> Option<(usize, usize)> {
    let inner = key.trim();
    let inner = inner
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .unwrap_or(inner);
    let (a, b) = inner.split_once(',')?;
    let a: usize = a.trim().parse().ok()?;
    let b: usize = b.trim().parse().ok()?;
    (a < 4 && b < 4).then_some((a.min(b), a.max(b)))
}

/// Metric backed by compiled component expressions; derivatives by finite
/// differences (see [`fd_metric_derivs`]).
#[derive(Debug, Clone)]
pub struct DslMetric {
    entries: Vec<((usize, usize), Compiled)>,
    params: BTreeMap<String, f64>,
    param_values: Vec<f64>,
}

pub fn parse_metric(src: &MetricSource) -> Result<DslMetric> {
    for name in src.params.keys() {
        let valid = name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid || COORDS.contains(&name.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "parameter name `{name}` is not a free identifier"
            )));
        }
        if !src.params[name].is_finite() {
            return Err(Error::InvalidParameter(format!("parameter `{name}` is not finite")));
        }
    }
    let names: Vec<&str> = src.params.keys().map(String::as_str).collect();
    let slot_of = |n: &str| {
        COORDS
            .iter()
            .position(|c| *c == n)
            .or_else(|| names.iter().position(|p| *p == n).map(|i| i + 4))
    };
    let mut entries = Vec::with_capacity(src.components.len());
    for (&(a, b), text) in &src.components {
        if a > 3 || b > 3 {
            return Err(Error::InvalidParameter(format!("component index ({a},{b}) out of range")));
        }
        let expr = Expr::parse(text)?;
        entries.push(((a.min(b), a.max(b)), expr.compile(&slot_of)?));
    }
    Ok(DslMetric {
        entries,
        param_values: src.params.values().copied().collect(),
        params: src.params.clone(),
    })
}

impl DslMetric {
    fn raw_metric(&self, y: &Point4) -> Result<Metric4> {
        let mut slots = Vec::with_capacity(4 + self.param_values.len());
        slots.extend_from_slice(y);
        slots.extend_from_slice(&self.param_values);
        let mut g = [[0.0; 4]; 4];
        for ((a, b), e) in &self.entries {
            let v = e.eval(&slots).map_err(|err| match err {
                ExprError::Domain(msg) => Error::Domain {
                    point: *y,
                    reason: format!("component ({a},{b}): {msg}"),
                },
                other => Error::Expr(other),
            })?;
            g[*a][*b] = v;
            g[*b][*a] = v;
        }
        Ok(g)
    }
}

impl MetricProvider for DslMetric {
    fn metric(&self, y: &Point4) -> Result<Metric4> {
        let g = self.raw_metric(y)?;
        check_lorentzian(y, &g)?;
        Ok(g)
    }

    fn metric_derivs(&self, y: &Point4) -> Result<MetricDerivs> {
        fd_metric_derivs(|p| self.raw_metric(p), y)
    }

    fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    fn name(&self) -> &str {
        "dsl"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{minkowski, schwarzschild_isotropic, MINKOWSKI};
    use rand::{Rng, SeedableRng};

    pub(crate) fn schwarzschild_source(mass: f64) -> MetricSource {
        let rho = "sqrt(y1^2 + y2^2 + y3^2)";
        MetricSource::new()
            .component(0, 0, format!("-((1 - M/(2*{rho}))/(1 + M/(2*{rho})))^2"))
            .component(1, 1, format!("(1 + M/(2*{rho}))^4"))
            .component(2, 2, format!("(1 + M/(2*{rho}))^4"))
            .component(3, 3, format!("(1 + M/(2*{rho}))^4"))
            .param("M", mass)
    }

    #[test]
    fn flat_source_matches_minkowski() {
        let src = MetricSource::new()
            .component(0, 0, "-1")
            .component(1, 1, "1")
            .component(2, 2, "1")
            .component(3, 3, "1");
        let m = parse_metric(&src).unwrap();
        let flat = minkowski();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let y: Point4 = std::array::from_fn(|_| rng.gen_range(-10.0..10.0));
            assert_eq!(m.metric(&y).unwrap(), MINKOWSKI);
            assert_eq!(m.metric(&y).unwrap(), flat.metric(&y).unwrap());
            let d = m.metric_derivs(&y).unwrap();
            assert!(d.iter().flatten().flatten().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn schwarzschild_round_trip() {
        let dsl = parse_metric(&schwarzschild_source(1.0)).unwrap();
        let built = schwarzschild_isotropic(1.0).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let mut n = 0;
        while n < 100 {
            let y: Point4 = std::array::from_fn(|_| rng.gen_range(-20.0..20.0));
            let rho = (y[1] * y[1] + y[2] * y[2] + y[3] * y[3]).sqrt();
            if rho < 1.0 {
                continue;
            }
            n += 1;
            let a = dsl.metric(&y).unwrap();
            let b = built.metric(&y).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!((a[i][j] - b[i][j]).abs() <= 1e-12 * b[i][j].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn syntax_error_surfaces_position() {
        let src = MetricSource::new().component(0, 0, "-1 +");
        match parse_metric(&src) {
            Err(Error::Expr(ExprError::Syntax { offset, .. })) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_rejected() {
        let src = MetricSource::new().component(0, 0, "-1 + q*y1");
        assert!(matches!(
            parse_metric(&src),
            Err(Error::Expr(ExprError::UnknownIdentifier(name))) if name == "q"
        ));
        let bad_param = MetricSource::new().component(0, 0, "-1").param("y1", 2.0);
        assert!(parse_metric(&bad_param).is_err());
    }

    #[test]
    fn non_lorentzian_detected_on_use() {
        let src = MetricSource::new()
            .component(0, 0, "1")
            .component(1, 1, "1")
            .component(2, 2, "1")
            .component(3, 3, "1");
        let m = parse_metric(&src).unwrap();
        assert!(matches!(m.metric(&[0.0; 4]), Err(Error::Signature { .. })));
    }

    #[test]
    fn index_pair_keys() {
        assert_eq!(parse_index_pair("(0,0)"), Some((0, 0)));
        assert_eq!(parse_index_pair(" ( 3 , 1 ) "), Some((1, 3)));
        assert_eq!(parse_index_pair("2,2"), Some((2, 2)));
        assert_eq!(parse_index_pair("(4,0)"), None);
        assert_eq!(parse_index_pair("x"), None);
    }
}
