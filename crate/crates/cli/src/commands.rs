use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;
use svj_core::charfn::CharModel;
use svj_core::jumps::{compensator, PreparedJumps};
use svj_core::montecarlo::{mc_density, simulate_terminal};
use num_complex::Complex64;
use svj_core::pricing::{FourierPricer, PriceResult};
use svj_core::validation::kbe::{default_grid, figure_one_settings};
use svj_core::validation::{
    figure_report, kbe_residual, table1_report, validity_scan, FdSteps, ScanGrid, ValidationConfig, Which,
};
use svj_core::{validate, Error, JumpSpec, MarketRequest, SvModel, ValidationError};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// A rendered result: one primary document, plus a CSV twin for reports.
pub struct Artifact {
    /// File stem used when writing into a directory.
    pub name: String,
    pub body: String,
    pub format: Format,
    pub companion_csv: Option<String>,
}

fn check_model(model: &SvModel, jumps: &JumpSpec) -> Result<(), CliError> {
    validate(model.clone(), jumps)?;
    Ok(())
}

fn ensure(errs: Vec<ValidationError>) -> Result<(), CliError> {
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::invalid(errs).into())
    }
}

fn json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn artifact(name: &str, format: Format, json: impl FnOnce() -> String, csv: impl FnOnce() -> String, md: impl FnOnce() -> String) -> Artifact {
    let body = match format {
        Format::Json => json(),
        Format::Csv => csv(),
        Format::Md => md(),
    };
    Artifact {
        name: name.to_string(),
        body,
        format,
        companion_csv: None,
    }
}

#[derive(Serialize)]
struct PriceRow {
    kind: &'static str,
    s0: f64,
    k: f64,
    t: f64,
    #[serde(flatten)]
    result: PriceResult,
}

pub fn price(cfg: &RunConfig, put: bool, strikes: &[f64], format: Format) -> Result<Artifact, CliError> {
    let model = cfg.model()?;
    let market = cfg.market()?;
    check_model(model, &cfg.jump_spec)?;
    let pricer = FourierPricer::new(model, &cfg.jump_spec, cfg.controls())?;
    let strikes: Vec<f64> = if strikes.is_empty() { vec![market.k] } else { strikes.to_vec() };
    let kind = if put { "put" } else { "call" };
    let rows = strikes
        .iter()
        .map(|&k| {
            let req = MarketRequest::new(market.s0, k, market.t);
            let result = if put { pricer.put(&req)? } else { pricer.call(&req)? };
            Ok(PriceRow {
                kind,
                s0: market.s0,
                k,
                t: market.t,
                result,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(artifact(
        "price",
        format,
        || if rows.len() == 1 { json_text(&rows[0]) } else { json_text(&rows) },
        || {
            let mut out = String::from("kind,s0,k,t,price,est_error,p_max_used,martingale_deviation,branch_continuous\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:.6},{:e},{},{:e},{}",
                    r.kind,
                    r.s0,
                    r.k,
                    r.t,
                    r.result.price,
                    r.result.est_error,
                    r.result.p_max_used,
                    r.result.diagnostics.martingale_deviation,
                    r.result.diagnostics.branch_continuous
                );
            }
            out
        },
        || {
            let mut out = String::from("| kind | K | T | price | est. error |\n|---|---:|---:|---:|---:|\n");
            for r in &rows {
                let _ = writeln!(out, "| {} | {} | {} | {:.6} | {:.1e} |", r.kind, r.k, r.t, r.result.price, r.result.est_error);
            }
            out
        },
    ))
}

pub fn grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if points < 2 || !(to > from) || !from.is_finite() || !to.is_finite() {
        return Err(CliError::Config(format!(
            "grid needs at least 2 points and from < to (got {points} points on [{from}, {to}])"
        )));
    }
    Ok((0..points).map(|i| from + (to - from) * i as f64 / (points - 1) as f64).collect())
}

pub fn density(cfg: &RunConfig, returns: &[f64], format: Format) -> Result<Artifact, CliError> {
    let model = cfg.model()?;
    let market = cfg.market()?;
    check_model(model, &cfg.jump_spec)?;
    let x0 = market.x0();
    let pdf = FourierPricer::new(model, &cfg.jump_spec, cfg.controls())?.log_return_density(market.t, returns)?;
    Ok(artifact(
        "density",
        format,
        || {
            json_text(&json!({
                "t": market.t,
                "x0": x0,
                "log_return": returns,
                "x_t": returns.iter().map(|y| x0 + y).collect::<Vec<_>>(),
                "density": pdf,
            }))
        },
        || {
            let mut out = String::from("log_return,x_t,density\n");
            for (y, v) in returns.iter().zip(&pdf) {
                let _ = writeln!(out, "{y:.6},{:.6},{v:.10}", x0 + y);
            }
            out
        },
        || {
            let mut out = String::from("| x_T − x0 | density |\n|---:|---:|\n");
            for (y, v) in returns.iter().zip(&pdf) {
                let _ = writeln!(out, "| {y:.4} | {v:.8} |");
            }
            out
        },
    ))
}

pub fn charfn(cfg: &RunConfig, p_grid: &[f64], t: f64, format: Format) -> Result<Artifact, CliError> {
    let model = cfg.model()?;
    check_model(model, &cfg.jump_spec)?;
    let jumps = PreparedJumps::new(&cfg.jump_spec)?;
    let rows = p_grid
        .iter()
        .map(|&p| {
            let p = Complex64::new(p, 0.0);
            let f = model.char_fn(p, t)?;
            let u = jumps.u(p, t)?;
            Ok((p.re, f, u, f * u.exp()))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(artifact(
        "charfn",
        format,
        || {
            json_text(
                &rows
                    .iter()
                    .map(|(p, f, u, phi)| json!({"p": p, "f": [f.re, f.im], "u": [u.re, u.im], "propagator": [phi.re, phi.im]}))
                    .collect::<Vec<_>>(),
            )
        },
        || {
            let mut out = String::from("p,f_re,f_im,u_re,u_im,propagator_re,propagator_im\n");
            for (p, f, u, phi) in &rows {
                let _ = writeln!(out, "{p},{:e},{:e},{:e},{:e},{:e},{:e}", f.re, f.im, u.re, u.im, phi.re, phi.im);
            }
            out
        },
        || {
            let mut out = String::from("| p | F | U | F·e^U |\n|---:|---|---|---|\n");
            for (p, f, u, phi) in &rows {
                let _ = writeln!(out, "| {p} | {f:.6e} | {u:.6e} | {phi:.6e} |");
            }
            out
        },
    ))
}

pub fn jumps(cfg: &RunConfig, p_grid: &[f64], t: f64, format: Format) -> Result<Artifact, CliError> {
    ensure(cfg.jump_spec.violations())?;
    let m_j = if cfg.jump_spec.is_trivial() { 0.0 } else { compensator(&cfg.jump_spec)? };
    let prepared = PreparedJumps::new(&cfg.jump_spec)?;
    let rows = p_grid
        .iter()
        .map(|&p| Ok((p, prepared.u(Complex64::new(p, 0.0), t)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(artifact(
        "jumps",
        format,
        || {
            json_text(&json!({
                "lambda": cfg.jump_spec.lambda,
                "compensator": m_j,
                "t": t,
                "u": rows.iter().map(|(p, u)| json!({"p": p, "u": [u.re, u.im]})).collect::<Vec<_>>(),
            }))
        },
        || {
            let mut out = format!("# compensator={m_j:e}\np,u_re,u_im\n");
            for (p, u) in &rows {
                let _ = writeln!(out, "{p},{:e},{:e}", u.re, u.im);
            }
            out
        },
        || {
            let mut out = format!("compensator m = {m_j:.10e}\n\n| p | U(p, T) |\n|---:|---|\n");
            for (p, u) in &rows {
                let _ = writeln!(out, "| {p} | {u:.6e} |");
            }
            out
        },
    ))
}

pub fn mc(cfg: &RunConfig, histogram: Option<usize>, format: Format) -> Result<Artifact, CliError> {
    let model = cfg.model()?;
    let market = cfg.market()?;
    let paths = cfg.paths();
    if let Some(bins) = histogram {
        let hist = mc_density(model, &cfg.jump_spec, market.t, &paths, bins)?;
        return Ok(artifact(
            "histogram",
            format,
            || json_text(&hist),
            || {
                let mut out = String::from("lower,upper,mass,density,stderr\n");
                for (i, w) in hist.edges.windows(2).enumerate() {
                    let _ = writeln!(out, "{:.6},{:.6},{:.8},{:.8},{:.8}", w[0], w[1], hist.mass[i], hist.density[i], hist.stderr[i]);
                }
                out
            },
            || {
                let mut out = String::from("| bin | mass | stderr |\n|---|---:|---:|\n");
                for (i, w) in hist.edges.windows(2).enumerate() {
                    let _ = writeln!(out, "| [{:.4}, {:.4}) | {:.6} | {:.6} |", w[0], w[1], hist.mass[i], hist.stderr[i]);
                }
                out
            },
        ));
    }
    ensure(market.violations())?;
    let est = simulate_terminal(model, &cfg.jump_spec, market.t, &paths)?.call(market.s0, market.k, model.rate());
    Ok(artifact(
        "mc",
        format,
        || json_text(&est),
        || {
            format!(
                "mean,stderr,n_effective,seed\n{:.6},{:.6},{},{}\n",
                est.mean, est.stderr, est.n_effective, est.seed
            )
        },
        || format!("MC call price: {:.6} ± {:.6} ({} paths, seed {})\n", est.mean, est.stderr, est.n_effective, est.seed),
    ))
}

pub fn validate_kbe(points: usize, format: Format) -> Result<Artifact, CliError> {
    let results = figure_one_settings()
        .iter()
        .map(|(t, params)| {
            let grid = default_grid(params, *t, points);
            Ok((*t, params.rho, kbe_residual(params, *t, &grid, &FdSteps::default())?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(artifact(
        "kbe",
        format,
        || {
            json_text(
                &results
                    .iter()
                    .map(|(t, rho, r)| json!({"t": t, "rho": rho, "residual": r}))
                    .collect::<Vec<_>>(),
            )
        },
        || {
            let mut out = String::from("t,rho,log_return,density,residual\n");
            for (t, rho, r) in &results {
                for i in 0..r.x_grid.len() {
                    let _ = writeln!(out, "{t},{rho},{:.6},{:.8},{:e}", r.x_grid[i], r.density[i], r.residual[i]);
                }
            }
            out
        },
        || {
            let mut out = String::from("| T | ρ | max abs residual |\n|---:|---:|---:|\n");
            for (t, rho, r) in &results {
                let _ = writeln!(out, "| {t} | {rho} | {:.3e} |", r.max_abs);
            }
            out
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportKind {
    Table1,
    Fig1,
    Fig2,
    Validity,
}

/// Reports render Markdown (or JSON) with a CSV twin.
pub fn report(cfg: &RunConfig, kind: ReportKind, format: Format) -> Result<Artifact, CliError> {
    let vcfg = ValidationConfig {
        paths: Some(cfg.paths()),
        controls: cfg.quadrature.unwrap_or_default(),
    };
    let (name, md, csv, json) = match kind {
        ReportKind::Table1 => {
            let r = table1_report(&vcfg);
            ("table1", r.to_markdown(), r.to_csv(), json_text(&r))
        }
        ReportKind::Validity => {
            let r = validity_scan(&ScanGrid::default(), &vcfg)?;
            ("validity", r.to_markdown(), r.to_csv(), json_text(&r))
        }
        ReportKind::Fig1 | ReportKind::Fig2 => {
            let which = if kind == ReportKind::Fig1 { Which::Fig1 } else { Which::Fig2 };
            let r = figure_report(which, &vcfg)?;
            (if which == Which::Fig1 { "fig1" } else { "fig2" }, r.to_markdown(), r.to_csv(), json_text(&r))
        }
    };
    let body = match format {
        Format::Json => json,
        Format::Csv => csv.clone(),
        Format::Md => md,
    };
    Ok(Artifact {
        name: name.to_string(),
        body,
        format,
        companion_csv: (format != Format::Csv).then_some(csv),
    })
}
