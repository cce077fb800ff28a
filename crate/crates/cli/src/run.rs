use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use qlm_core::adm::{adm_energy_momentum, AdmResult, SliceData};
use qlm_core::dsl::parse_metric;
use qlm_core::grid::SphereGrid;
use qlm_core::quasilocal::{
    boosted_family, energy_momentum, minimize_over_observers, Extrapolant, FamilyFit, Tolerance,
};
use qlm_core::spacetime::{minkowski, schwarzschild_isotropic, MetricProvider};
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, RunConfig, Scenario};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(qlm_core::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<qlm_core::Error> for RunError {
    fn from(e: qlm_core::Error) -> Self {
        RunError::Numerical(e)
    }
}

fn out_error(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Config(ConfigError {
        field: "out".into(),
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn provider(cfg: &RunConfig) -> Result<Box<dyn MetricProvider>, RunError> {
    Ok(match cfg.scenario {
        Scenario::Minkowski => Box::new(minkowski()),
        Scenario::Schwarzschild | Scenario::BoostedSchwarzschild => Box::new(schwarzschild_isotropic(cfg.mass)?),
        Scenario::CustomDsl => {
            let src = cfg.metric.as_ref().expect("validated custom-dsl config has a metric");
            Box::new(parse_metric(src)?)
        }
    })
}

fn grid(cfg: &RunConfig) -> Result<Arc<SphereGrid>, RunError> {
    Ok(Arc::new(SphereGrid::new(cfg.order, cfg.phi_order)?))
}

fn out_dir(cfg: &RunConfig) -> Result<Option<&Path>, RunError> {
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| out_error(dir, e))?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

#[derive(Serialize)]
struct FitJson {
    limit: f64,
    residual: f64,
    converged: bool,
    coefficients: [f64; 3],
}

fn fit_json(f: &Extrapolant, tol: &Tolerance) -> FitJson {
    FitJson {
        limit: f.limit(),
        residual: f.residual,
        converged: f.converged(tol),
        coefficients: f.coeffs,
    }
}

fn header(cfg: &RunConfig, command: &str) -> serde_json::Map<String, serde_json::Value> {
    let v = json!({
        "command": command,
        "scenario": cfg.scenario.name(),
        "mass": cfg.mass,
        "beta": cfg.beta,
        "gamma": cfg.gamma,
        "order": cfg.order,
        "phi_order": cfg.phi_order,
        "radii": cfg.ladder.radii(),
        "tolerance": { "rel": cfg.tolerance.rel, "abs": cfg.tolerance.abs },
    });
    match v {
        serde_json::Value::Object(m) => m,
        _ => unreachable!(),
    }
}

fn conventions() -> serde_json::Value {
    json!({
        "units": "G = c = 1",
        "observer": "T0 = (sqrt(1+|a|^2), a1, a2, a3)",
        "tau": "tau = -<X, T0> = -(a . X)",
        "e": "(1/8pi) int (|H0| - |H|) dv",
        "p_i": "(1/8pi) int <nabla^N_{-grad X^i} J/|H|, H/|H|> dv",
        "E_limit": "(1/8pi) int sqrt(1+|a|^2)(|H0| - |H|) + <nabla^N_{grad tau} J/|H|, H/|H|> dv",
        "v_gauge": "v(pi/2) = 0",
        "extrapolation": "least squares c0 + c1/r + c2/r^2; converged when residual <= rel*|c0| + abs",
        "extrinsic_curvature": "p_ij = <nabla_{d_i} e0, d_j>, so p(nu,nu) - tr p = <H, e0>",
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    fs::write(path, text + "\n").map_err(|e| out_error(path, e))
}

/// Shortest round-trip text, in exponent form for very small or large values.
fn number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, RunError> {
    csv::Writer::from_path(path).map_err(|e| out_error(path, e))
}

fn qle_fit(cfg: &RunConfig) -> Result<FamilyFit, RunError> {
    let metric = provider(cfg)?;
    let family = boosted_family(metric.as_ref(), cfg.beta, grid(cfg)?);
    Ok(energy_momentum(family, &cfg.ladder, &cfg.observers)?)
}

fn write_qle_tables(dir: &Path, fit: &FamilyFit) -> Result<Vec<String>, RunError> {
    let mut names = Vec::new();
    for j in 0..fit.observers.len() {
        let name = format!("qle_obs{j}.csv");
        let path = dir.join(&name);
        let mut w = csv_writer(&path)?;
        let io = |e: csv::Error| out_error(&path, e);
        w.write_record(["r0", "E_finite", "E_limit", "e_integrand", "p1", "p2", "p3"])
            .map_err(io)?;
        for s in &fit.samples {
            let o = &s.observers[j];
            let p = s.four_vector.p;
            w.write_record(
                [s.r0, o.finite, o.limit_form, s.four_vector.e, p[0], p[1], p[2]].map(number),
            )
            .map_err(io)?;
        }
        w.flush().map_err(|e| out_error(&path, e))?;
        names.push(name);
    }
    Ok(names)
}

/// Quasilocal energy table and summary; returns the JSON summary.
pub fn run_qle(cfg: &RunConfig) -> Result<serde_json::Value, RunError> {
    let fit = qle_fit(cfg)?;
    let dir = out_dir(cfg)?;
    let tables = match dir {
        Some(d) => write_qle_tables(d, &fit)?,
        None => Vec::new(),
    };
    let tol = &cfg.tolerance;
    let limit = fit.limit();
    let minimum = match minimize_over_observers(&limit) {
        Ok(m) => json!({ "m": m.mass, "a_min": m.a_min }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let observers: Vec<serde_json::Value> = fit
        .observers
        .iter()
        .enumerate()
        .map(|(j, (o, finite, limit_form))| {
            json!({
                "a": o.a,
                "table": tables.get(j),
                "E_finite": fit_json(finite, tol),
                "E_limit": fit_json(limit_form, tol),
                "from_four_vector": limit.energy_for(o),
            })
        })
        .collect();
    let converged = fit.converged(tol)
        && fit
            .observers
            .iter()
            .all(|(_, a, b)| a.converged(tol) && b.converged(tol));
    let mut summary = header(cfg, "qle");
    summary.insert(
        "four_vector".into(),
        json!({
            "e": fit_json(&fit.e, tol),
            "p": fit.p.iter().map(|f| fit_json(f, tol)).collect::<Vec<_>>(),
        }),
    );
    summary.insert("minimum".into(), minimum);
    summary.insert("observers".into(), json!(observers));
    summary.insert("converged".into(), json!(converged));
    summary.insert("conventions".into(), conventions());
    let summary = serde_json::Value::Object(summary);
    if let Some(d) = dir {
        write_json(&d.join("qle_summary.json"), &summary)?;
    }
    Ok(summary)
}

fn adm_for(cfg: &RunConfig) -> Result<AdmResult, RunError> {
    let g = grid(cfg)?;
    Ok(match cfg.scenario {
        Scenario::Minkowski => adm_energy_momentum(&SliceData::new(minkowski(), cfg.beta, cfg.gamma)?, &cfg.ladder, &g)?,
        Scenario::Schwarzschild | Scenario::BoostedSchwarzschild => adm_energy_momentum(
            &SliceData::new(schwarzschild_isotropic(cfg.mass)?, cfg.beta, cfg.gamma)?,
            &cfg.ladder,
            &g,
        )?,
        Scenario::CustomDsl => {
            return Err(RunError::Config(ConfigError {
                field: "scenario".into(),
                message: "adm needs slice data, which the custom-dsl scenario does not provide".into(),
            }))
        }
    })
}

/// ADM integrals, extrapolated `(E, P)` and residuals against a paired qle run.
pub fn run_adm(cfg: &RunConfig) -> Result<serde_json::Value, RunError> {
    let adm = adm_for(cfg)?;
    let fit = qle_fit(cfg)?;
    let dir = out_dir(cfg)?;
    if let Some(d) = dir {
        let path = d.join("adm.csv");
        let mut w = csv_writer(&path)?;
        let io = |e: csv::Error| out_error(&path, e);
        w.write_record(["r0", "E", "P1", "P2", "P3"]).map_err(io)?;
        for (r, em) in &adm.samples {
            w.write_record([*r, em.e, em.p[0], em.p[1], em.p[2]].map(number))
                .map_err(io)?;
        }
        w.flush().map_err(|e| out_error(&path, e))?;
    }
    let tol = &cfg.tolerance;
    let adm_prediction: Vec<serde_json::Value> = fit
        .observers
        .iter()
        .map(|(o, finite, _)| {
            let predicted = adm.predicted_energy(o.a);
            json!({
                "a": o.a,
                "qle_limit": finite.limit(),
                "adm_prediction": predicted,
                "residual": (finite.limit() - predicted).abs(),
            })
        })
        .collect();
    let mut summary = header(cfg, "adm");
    summary.insert(
        "adm".into(),
        json!({
            "E": fit_json(&adm.e, tol),
            "P": adm.p.iter().map(|f| fit_json(f, tol)).collect::<Vec<_>>(),
            "future_timelike": adm.future_timelike(),
        }),
    );
    summary.insert("adm_prediction".into(), json!(adm_prediction));
    summary.insert(
        "converged".into(),
        json!(adm.e.converged(tol) && adm.p.iter().all(|f| f.converged(tol)) && fit.converged(tol)),
    );
    summary.insert("conventions".into(), conventions());
    let summary = serde_json::Value::Object(summary);
    if let Some(d) = dir {
        write_json(&d.join("adm_summary.json"), &summary)?;
    }
    Ok(summary)
}

/// Embedding profiles `u, v, H₀` per radius as CSV, to `out/embed.csv` or `sink`.
pub fn run_embed(cfg: &RunConfig, sink: &mut dyn Write) -> Result<Option<PathBuf>, RunError> {
    let metric = provider(cfg)?;
    let family = boosted_family(metric.as_ref(), cfg.beta, grid(cfg)?);
    let mut rows = Vec::new();
    for &r in cfg.ladder.radii() {
        let s = family(r)?;
        let e = &s.profile;
        for (i, t) in e.grid().theta().iter().enumerate() {
            rows.push([r, *t, e.u[i], e.v[i], e.h0[i]]);
        }
    }
    let header = ["r0", "theta", "u", "v", "H0"];
    let write_all = |w: &mut csv::Writer<&mut dyn Write>| -> csv::Result<()> {
        w.write_record(header)?;
        for row in &rows {
            w.write_record(row.map(number))?;
        }
        w.flush()?;
        Ok(())
    };
    match out_dir(cfg)? {
        Some(d) => {
            let path = d.join("embed.csv");
            let mut file = fs::File::create(&path).map_err(|e| out_error(&path, e))?;
            let mut w = csv::Writer::from_writer(&mut file as &mut dyn Write);
            write_all(&mut w).map_err(|e| out_error(&path, e))?;
            Ok(Some(path))
        }
        None => {
            let mut w = csv::Writer::from_writer(sink);
            match write_all(&mut w) {
                Err(e) if !matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe) => {
                    Err(out_error(Path::new("<stdout>"), e))
                }
                _ => Ok(None),
            }
        }
    }
}
