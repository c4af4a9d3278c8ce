//! Acceptance gate. Runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line each and exits non-zero if any criterion fails.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svj_core::charfn::ln_char_fn;
use svj_core::jumps::{u_kou, u_merton, u_numeric};
use svj_core::montecarlo::{simulate_terminal, PathConfig};
use svj_core::pricing::{call_price, call_prices, put_price, FourierPricer, QuadratureControls};
use svj_core::validation::figures::{density_comparison, density_edges, figure_two_model};
use svj_core::validation::kbe::{default_grid, figure_one_settings};
use svj_core::validation::oracles::merton_series_call;
use svj_core::validation::{
    figure_report, kbe_residual, table1_report, FdSteps, ValidationConfig, Which,
};
use svj_core::{JumpKind, JumpSpec, LnParams, MarketRequest, SvModel};

const SEED: u64 = 42;

// Pinned tolerances.
const TABLE_ABS_TOL: f64 = 1e-3;
const TABLE_REL_PCT: f64 = 3.0;
const TABLE_PATHS: usize = 2_000_000;
const KBE_TOL: f64 = 1e-6;
const JUMP_REL_PCT: f64 = 2.0;
const JUMP_PATHS: usize = 5_000_000;
const MERTON_REL_TOL: f64 = 1e-6;
const BIN_SIGMAS: f64 = 3.0;
const BIN_PATHS: usize = 1_000_000;
const BINS: usize = 40;
const IDENTITY_TOL: f64 = 1e-13;
const NORMALIZATION_TOL: f64 = 1e-6;
const PARITY_TOL: f64 = 1e-12;
const NUMERIC_U_TOL: f64 = 1e-10;
const PROPERTY_BUDGET_SECS: f64 = 60.0;
const TABLE_ANALYTIC_BUDGET_SECS: f64 = 10.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fig2_params() -> LnParams {
    figure_two_model()
}

fn paths(n_paths: usize) -> PathConfig {
    PathConfig {
        n_paths,
        n_steps: 252,
        seed: SEED,
        antithetic: true,
        workers: None,
    }
}

fn table_analytic() -> Outcome {
    let start = Instant::now();
    let report = table1_report(&ValidationConfig {
        paths: None,
        controls: QuadratureControls::for_spot(100.0),
    });
    let secs = start.elapsed().as_secs_f64();
    let worst = report.summary.max_abs_reference_diff.unwrap_or(f64::INFINITY);
    let priced = report.rows.iter().filter(|r| r.analytic.is_some()).count();
    outcome(
        priced == 54 && worst <= TABLE_ABS_TOL && secs < TABLE_ANALYTIC_BUDGET_SECS,
        format!("{priced}/54 rows, max |analytic - published| = {worst:.2e} (tol {TABLE_ABS_TOL:e}), {secs:.2} s"),
    )
}

fn table_statistical() -> Outcome {
    let report = table1_report(&ValidationConfig {
        paths: Some(paths(TABLE_PATHS)),
        controls: QuadratureControls::for_spot(100.0),
    });
    let worst = report
        .rows
        .iter()
        .filter_map(|r| r.rel_dev_pct.map(|d| (d, r)))
        .max_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    let complete = report.rows.iter().all(|r| r.rel_dev_pct.is_some());
    match worst {
        Some((d, r)) => outcome(
            complete && d.abs() < TABLE_REL_PCT,
            format!(
                "max |(analytic - mc)/mc| = {:.3}% at K={} rho={} gamma={} beta={} (tol {TABLE_REL_PCT}%)",
                d.abs(),
                r.k,
                r.rho,
                r.gamma,
                r.beta
            ),
        ),
        None => outcome(false, "no simulated rows".into()),
    }
}

fn kbe() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (t, params) in figure_one_settings() {
        let grid = default_grid(&params, t, 41);
        match kbe_residual(&params, t, &grid, &FdSteps::default()) {
            Ok(res) => {
                pass &= res.max_abs <= KBE_TOL;
                parts.push(format!("T={t} rho={}: {:.2e}", params.rho, res.max_abs));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("T={t}: error {e}"));
            }
        }
    }
    outcome(pass, format!("max |residual| {} (tol {KBE_TOL:e})", parts.join(", ")))
}

fn jump_prices() -> Outcome {
    let report = match figure_report(
        Which::Fig2,
        &ValidationConfig {
            paths: Some(paths(JUMP_PATHS)),
            controls: QuadratureControls::for_spot(100.0),
        },
    ) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error {e}")),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for curve in report.prices.iter().filter(|c| c.label != "LN") {
        let d = curve.max_abs_dev_in_band().unwrap_or(f64::INFINITY);
        pass &= d < JUMP_REL_PCT;
        parts.push(format!("{}: {d:.3}%", curve.label));
    }
    outcome(pass, format!("max |rel dev| on 0.9 <= K/S0 <= 1.1 {} (tol {JUMP_REL_PCT}%)", parts.join(", ")))
}

fn merton_series() -> Outcome {
    let (sigma, r, nu, delta) = (0.2, 0.015, -0.05, 0.1);
    let model = SvModel::ConstVol { sigma, r };
    let controls = QuadratureControls::for_spot(100.0).with_abs_tol(1e-10);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for k in [80.0, 100.0, 120.0] {
        for (t, lambda) in [(0.25, 1.0), (1.0, 5.0), (2.0, 10.0)] {
            let jumps = JumpSpec::merton(lambda, nu, delta);
            let price = match call_price(&model, &jumps, &MarketRequest::new(100.0, k, t), &controls) {
                Ok(p) => p.price,
                Err(e) => return outcome(false, format!("K={k} T={t} lambda={lambda}: {e}")),
            };
            let oracle = merton_series_call(100.0, k, t, r, sigma, lambda, nu, delta);
            worst = worst.max(((price - oracle) / oracle).abs());
            cases += 1;
        }
    }
    outcome(
        cases == 9 && worst <= MERTON_REL_TOL,
        format!("{cases} cases, max relative gap {worst:.2e} (tol {MERTON_REL_TOL:e})"),
    )
}

fn jump_densities() -> Outcome {
    // the jump extension is exact for any diffusion; an exact propagator
    // isolates it from the stochastic-volatility approximation
    let params = fig2_params();
    let diffusion = SvModel::ConstVol {
        sigma: params.sigma0,
        r: params.r,
    };
    let edges = density_edges(&params, 1.0, BINS);
    let controls = QuadratureControls::default().with_abs_tol(1e-10);
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, jumps) in [
        ("Merton", JumpSpec::merton(10.0, -0.01, 0.03)),
        ("Kou", JumpSpec::kou(10.0, 0.3, 0.7, 0.02, 0.04)),
    ] {
        match density_comparison(label, &diffusion, &jumps, 1.0, &edges, Some(&paths(BIN_PATHS)), &controls) {
            Ok(curve) => {
                let z = curve.max_abs_z().unwrap_or(f64::INFINITY);
                pass &= z <= BIN_SIGMAS;
                parts.push(format!("{label}: max |z| {z:.2}"));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{label}: error {e}"));
            }
        }
    }
    outcome(
        pass,
        format!("{BINS} bins, {} (tol {BIN_SIGMAS} stderr)", parts.join(", ")),
    )
}

// Same comparison on the stochastic-volatility diffusion; reported only.
fn jump_densities_sv_diagnostic() -> String {
    let params = fig2_params();
    let edges = density_edges(&params, 1.0, BINS);
    let controls = QuadratureControls::default().with_abs_tol(1e-10);
    let mut parts = Vec::new();
    for (label, jumps) in [
        ("none", JumpSpec::none()),
        ("Merton", JumpSpec::merton(10.0, -0.01, 0.03)),
        ("Kou", JumpSpec::kou(10.0, 0.3, 0.7, 0.02, 0.04)),
    ] {
        if let Ok(curve) = density_comparison(
            label,
            &SvModel::Ln(params),
            &jumps,
            1.0,
            &edges,
            Some(&paths(BIN_PATHS)),
            &controls,
        ) {
            parts.push(format!("{label}: {:.2}", curve.max_abs_z().unwrap_or(f64::NAN)));
        }
    }
    format!("max |z| with LN diffusion {}", parts.join(", "))
}

fn properties() -> Outcome {
    let start = Instant::now();
    let mut failures: Vec<String> = Vec::new();
    let mut fail = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    let zero = Complex64::new(0.0, 0.0);
    let models: Vec<LnParams> = figure_one_settings().iter().map(|(_, p)| *p).collect();
    let specs = [
        JumpSpec::merton(10.0, -0.01, 0.03),
        JumpSpec::kou(10.0, 0.3, 0.7, 0.02, 0.04),
    ];

    // F(0, T) = 1 and U(0, T) = 0
    for p in &models {
        for t in [0.25, 1.0, 5.0] {
            let f = ln_char_fn(p, zero, t).unwrap();
            fail("F(0)=1", (f - 1.0).norm() <= IDENTITY_TOL);
        }
    }
    fail("U_M(0)=0", u_merton(10.0, -0.01, 0.03, zero, 1.0).norm() <= IDENTITY_TOL);
    fail("U_K(0)=0", u_kou(10.0, 0.3, 0.7, 0.02, 0.04, zero, 1.0).unwrap().norm() <= IDENTITY_TOL);

    // conjugate symmetry on random real p
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sym_ok = true;
    for _ in 0..100 {
        let p = Complex64::new(rng.gen_range(-50.0..50.0), 0.0);
        let t = rng.gen_range(0.1..5.0);
        for m in &models {
            let (a, b) = (ln_char_fn(m, p, t).unwrap(), ln_char_fn(m, -p, t).unwrap());
            sym_ok &= (a.conj() - b).norm() <= 1e-12 * a.norm().max(1e-300) + 1e-300;
        }
        let (a, b) = (u_merton(10.0, -0.01, 0.03, p, t), u_merton(10.0, -0.01, 0.03, -p, t));
        sym_ok &= (a.conj() - b).norm() <= 1e-12 * (1.0 + a.norm());
        let (a, b) = (
            u_kou(10.0, 0.3, 0.7, 0.02, 0.04, p, t).unwrap(),
            u_kou(10.0, 0.3, 0.7, 0.02, 0.04, -p, t).unwrap(),
        );
        sym_ok &= (a.conj() - b).norm() <= 1e-12 * (1.0 + a.norm());
    }
    fail("conjugate symmetry", sym_ok);

    // density normalization (Simpson on a grid covering the support)
    let model = SvModel::Ln(fig2_params());
    let pricer = FourierPricer::new(&model, &specs[1], QuadratureControls::default().with_abs_tol(1e-11)).unwrap();
    let n = 1201;
    let h = 6.0 / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| -3.0 + h * i as f64).collect();
    let pdf = pricer.log_return_density(1.0, &grid).unwrap();
    let mass = pdf
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * v
        })
        .sum::<f64>()
        * h
        / 3.0;
    fail("density normalization", (mass - 1.0).abs() <= NORMALIZATION_TOL);

    // put-call parity and convexity
    let controls = QuadratureControls::for_spot(100.0);
    for jumps in &specs {
        let req = MarketRequest::new(100.0, 95.0, 1.0);
        let c = call_price(&model, jumps, &req, &controls).unwrap().price;
        let p = put_price(&model, jumps, &req, &controls).unwrap().price;
        fail("parity", (c - p - (100.0 - 95.0 * (-0.015f64).exp())).abs() <= PARITY_TOL);
        let strikes: Vec<f64> = (0..21).map(|i| 80.0 + 2.0 * i as f64).collect();
        let prices: Vec<f64> = call_prices(&model, jumps, 100.0, 1.0, &strikes, &controls)
            .unwrap()
            .iter()
            .map(|r| r.price)
            .collect();
        fail(
            "convexity",
            prices.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -2.0 * controls.abs_tol),
        );
    }

    // numeric jump exponent against closed forms
    let mut gap: f64 = 0.0;
    for spec in &specs {
        let density = spec.density();
        for i in 0..=100 {
            let p = Complex64::new(-50.0 + i as f64, 0.0);
            for q in [p, p + Complex64::new(0.0, 1.0)] {
                let closed = match spec.kind {
                    JumpKind::Merton { nu, delta } => u_merton(spec.lambda, nu, delta, q, 1.0),
                    JumpKind::Kou {
                        p_plus,
                        p_minus,
                        eta_plus,
                        eta_minus,
                    } => u_kou(spec.lambda, p_plus, p_minus, eta_plus, eta_minus, q, 1.0).unwrap(),
                    JumpKind::Custom(_) => unreachable!(),
                };
                gap = gap.max((u_numeric(&density, spec.lambda, q, 1.0).unwrap() - closed).norm());
            }
        }
    }
    fail("numeric U", gap <= NUMERIC_U_TOL);

    // simulation determinism across worker counts
    let run = |workers| {
        simulate_terminal(
            &model,
            &specs[1],
            1.0,
            &PathConfig {
                n_paths: 20_000,
                workers: Some(workers),
                ..paths(20_000)
            },
        )
        .unwrap()
    };
    let reference = run(1);
    fail("determinism", [2, 4].into_iter().all(|w| run(w) == reference));

    let secs = start.elapsed().as_secs_f64();
    fail("runtime", secs < PROPERTY_BUDGET_SECS);
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("all properties hold, numeric U gap {gap:.1e}, {secs:.1} s")
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 table analytic reproduction", table_analytic),
        ("2 table vs simulation, 2M antithetic paths", table_statistical),
        ("3 backward-equation residual", kbe),
        ("4 jump-model prices vs simulation, 5M paths", jump_prices),
        ("5 Merton series oracle", merton_series),
        ("6 jump-extended density vs histogram, 1M paths", jump_densities),
        ("7 property suite", properties),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if name.starts_with('6') {
            println!("       note: {}", jump_densities_sv_diagnostic());
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
