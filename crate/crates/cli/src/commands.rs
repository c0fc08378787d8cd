use serde_json::json;
use sparse_noma::baselines::{baseline_rate, sweep_load, Baseline, Scheme};
use sparse_noma::capacity::{capacity_lmmse, capacity_optimum};
use sparse_noma::montecarlo::{
    empirical_capacity_lmmse, empirical_capacity_opt, empirical_spectrum, feasible_n, generate_trial_signature,
    ks_distance_to, McEstimate, PhaseScheme,
};
use sparse_noma::units::{db_to_linear, linear_to_db};
use sparse_noma::validation::{run_validation, Fault, ValidationOptions};
use sparse_noma::{Ensemble, SpectralDensity, SystemConfig};

use crate::output::{rows_csv, svg_plot, Row, Series, SCHEMA};
use crate::{
    CapacityArgs, CliError, DensityArgs, Format, MonteCarloArgs, ParamsArgs, ReceiverArg, Report, SweepArgs,
    ValidateArgs,
};

fn format_of(requested: Option<Format>, default: Format, allowed: &[Format], command: &str) -> Result<Format, CliError> {
    let f = requested.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Usage(format!("{command} does not support --format {f:?}").to_lowercase()))
    }
}

fn pretty(v: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn ok(body: String) -> Result<Report, CliError> {
    Ok(Report { body, ok: true })
}

/// `Eb/N0` in dB implied by `β·snr = R·Eb/N0`; absent when the rate is zero.
fn implied_ebn0_db(beta: f64, snr: f64, rate: f64) -> Option<f64> {
    (rate > 0.0).then(|| linear_to_db(beta * snr / rate))
}

pub fn params(a: &ParamsArgs) -> Result<Report, CliError> {
    let format = format_of(a.common.format, Format::Json, &[Format::Json, Format::Csv], "params")?;
    let p = Ensemble::new(a.ensemble.d, a.ensemble.beta_d)?.derive();
    let mut value = serde_json::to_value(p).expect("params serialize");
    value["point_mass_at_zero"] = json!(p.point_mass_at_zero());
    match format {
        Format::Json => ok(pretty(json!({ "schema": SCHEMA, "command": "params", "params": value }))),
        _ => {
            let mut body = format!("# schema={SCHEMA}\nkey,value\n");
            for (k, v) in value.as_object().expect("params serialize to an object") {
                body.push_str(&format!("{k},{v}\n"));
            }
            ok(body)
        }
    }
}

pub fn density(a: &DensityArgs) -> Result<Report, CliError> {
    let format = format_of(a.common.format, Format::Csv, &[Format::Csv, Format::Json, Format::Svg], "density")?;
    if a.points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let p = Ensemble::new(a.ensemble.d, a.ensemble.beta_d)?.derive();
    let dens = SpectralDensity::new(p);
    let width = p.lambda_plus - p.lambda_minus;
    let samples: Vec<(f64, f64)> = (1..=a.points)
        .map(|i| {
            let l = p.lambda_minus + width * i as f64 / (a.points + 1) as f64;
            (l, dens.density_at(l).value())
        })
        .collect();
    let atom = p.point_mass_at_zero();
    match format {
        Format::Csv => {
            let mut body = format!("# schema={SCHEMA}\n# point_mass_at_zero={atom}\nlambda,rho\n");
            for (l, r) in &samples {
                body.push_str(&format!("{l},{r}\n"));
            }
            ok(body)
        }
        Format::Json => ok(pretty(json!({
            "schema": SCHEMA,
            "command": "density",
            "d": p.d,
            "beta_d": p.beta_d,
            "point_mass_at_zero": atom,
            "lambda_minus": p.lambda_minus,
            "lambda_plus": p.lambda_plus,
            "samples": samples.iter().map(|(l, r)| json!({"lambda": l, "rho": r})).collect::<Vec<_>>(),
        }))),
        Format::Svg => ok(svg_plot(
            &format!("Limiting density, d = {}, beta_d = {} (atom at 0: {atom:.4})", p.d, p.beta_d),
            "lambda",
            "density",
            &[Series { name: "rho".into(), points: samples, dashed: false, markers: false }],
        )),
    }
}

pub fn capacity(a: &CapacityArgs) -> Result<Report, CliError> {
    let format = format_of(a.common.format, Format::Csv, &[Format::Csv, Format::Json], "capacity")?;
    let snr = db_to_linear(a.snr_db);
    let cfg = SystemConfig::new(a.ensemble.d, a.ensemble.beta_d, snr)?;
    let beta = cfg.beta();
    let mut rows = Vec::new();
    for (scheme, rate) in [
        (Scheme::SparseOpt, capacity_optimum(&cfg)?.spectral_efficiency),
        (Scheme::SparseLmmse, capacity_lmmse(&cfg)?.spectral_efficiency),
    ] {
        rows.push(Row {
            scheme: scheme.to_string(),
            d: Some(cfg.d()),
            beta_d: Some(cfg.beta_d()),
            beta,
            ebn0_db: implied_ebn0_db(beta, snr, rate),
            snr: Some(snr),
            rate,
            route: "closed_form".into(),
            stderr: None,
        });
    }
    for b in Baseline::ALL.into_iter().filter(|b| b.supports(beta)) {
        let rate = baseline_rate(b, beta, snr)?;
        rows.push(Row {
            scheme: b.scheme().to_string(),
            d: None,
            beta_d: None,
            beta,
            ebn0_db: implied_ebn0_db(beta, snr, rate),
            snr: Some(snr),
            rate,
            route: "closed_form".into(),
            stderr: None,
        });
    }
    match format {
        Format::Json => ok(pretty(json!({ "schema": SCHEMA, "command": "capacity", "rows": rows }))),
        _ => ok(rows_csv(&[], &rows)),
    }
}

fn load_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(min > 0.0 && max >= min && step > 0.0 && max.is_finite()) {
        return Err(CliError::Usage(format!(
            "need 0 < beta-min <= beta-max and beta-step > 0 (got {min}, {max}, {step})"
        )));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize;
    if count > 100_000 {
        return Err(CliError::Usage("load grid has more than 100000 points".into()));
    }
    let mut grid: Vec<f64> = (0..=count).map(|i| min + step * i as f64).collect();
    if max - grid[grid.len() - 1] > 1e-9 {
        grid.push(max);
    }
    Ok(grid)
}

pub fn sweep(a: &SweepArgs) -> Result<Report, CliError> {
    let format = format_of(a.common.format, Format::Csv, &[Format::Csv, Format::Json, Format::Svg], "sweep")?;
    let grid = load_grid(a.beta_min, a.beta_max, a.beta_step)?;
    let ebn0 = db_to_linear(a.ebn0_db);
    let table = sweep_load(a.d, ebn0, &grid)?;
    let rows: Vec<Row> = table
        .rows
        .iter()
        .map(|r| Row {
            scheme: r.scheme.to_string(),
            d: r.d,
            beta_d: r.beta_d,
            beta: r.beta,
            ebn0_db: Some(a.ebn0_db),
            snr: Some(r.snr),
            rate: r.rate,
            route: match (r.envelope_of, r.d) {
                (Some(of), _) => format!("envelope_{of}"),
                (None, Some(_)) => "lattice".into(),
                (None, None) => "closed_form".into(),
            },
            stderr: None,
        })
        .collect();
    match format {
        Format::Csv => ok(rows_csv(&[], &rows)),
        Format::Json => ok(pretty(json!({ "schema": SCHEMA, "command": "sweep", "rows": rows }))),
        Format::Svg => {
            let pts = |v: Vec<sparse_noma::baselines::RatePoint>| v.iter().map(|p| (p.beta, p.rate)).collect();
            let mut series = vec![
                Series { name: "sparse opt".into(), points: pts(table.series(Scheme::SparseOpt)), dashed: false, markers: true },
                Series { name: "sparse opt envelope".into(), points: pts(table.envelope(Scheme::SparseOpt)), dashed: true, markers: false },
                Series { name: "sparse LMMSE".into(), points: pts(table.series(Scheme::SparseLmmse)), dashed: false, markers: true },
                Series { name: "sparse LMMSE envelope".into(), points: pts(table.envelope(Scheme::SparseLmmse)), dashed: true, markers: false },
            ];
            for b in Baseline::ALL {
                let points = pts(table.series(b.scheme()));
                series.push(Series { name: b.scheme().to_string(), points, dashed: false, markers: false });
            }
            series.retain(|s| !s.points.is_empty());
            for s in series.iter_mut().filter(|s| s.markers) {
                s.points.sort_by(|x, y| x.0.total_cmp(&y.0));
            }
            ok(svg_plot(
                &format!("Spectral efficiency vs load, d = {}, Eb/N0 = {} dB", a.d, a.ebn0_db),
                "load beta",
                "bits/s/Hz per dimension",
                &series,
            ))
        }
    }
}

struct McCheck {
    name: &'static str,
    passed: bool,
    value: f64,
    tolerance: f64,
}

fn mc_rows(scheme: Scheme, cfg: &SystemConfig, exact: f64, est: &McEstimate) -> [Row; 2] {
    let (beta, snr) = (cfg.beta(), cfg.snr);
    let base = Row {
        scheme: scheme.to_string(),
        d: Some(cfg.d()),
        beta_d: Some(cfg.beta_d()),
        beta,
        ebn0_db: implied_ebn0_db(beta, snr, exact),
        snr: Some(snr),
        rate: exact,
        route: "closed_form".into(),
        stderr: None,
    };
    let mc = Row {
        ebn0_db: implied_ebn0_db(beta, snr, est.mean),
        rate: est.mean,
        route: "monte_carlo".into(),
        stderr: Some(est.stderr),
        ..base.clone()
    };
    [base, mc]
}

fn deviation_check(name: &'static str, est: &McEstimate, exact: f64) -> McCheck {
    McCheck {
        name,
        passed: est.agrees_with(exact, 0.01),
        value: (est.mean - exact).abs(),
        tolerance: (3.0 * est.stderr).max(0.01 * exact.abs()),
    }
}

pub fn montecarlo(a: &MonteCarloArgs) -> Result<Report, CliError> {
    let format = format_of(a.common.format, Format::Csv, &[Format::Csv, Format::Json], "montecarlo")?;
    let phase: PhaseScheme = a.phase.parse()?;
    let (d, bd) = (a.ensemble.d, a.ensemble.beta_d);
    let cfg = SystemConfig::new(d, bd, db_to_linear(a.snr_db))?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut sizes = Vec::new();

    if a.receiver != ReceiverArg::Lmmse {
        let n = feasible_n(a.n.unwrap_or(1200), d, bd)?;
        let trials = a.trials.unwrap_or(50);
        let est = empirical_capacity_opt(n, &cfg, trials, a.seed, phase)?;
        let exact = capacity_optimum(&cfg)?.spectral_efficiency;
        rows.extend(mc_rows(Scheme::SparseOpt, &cfg, exact, &est));
        checks.push(deviation_check("capacity_optimum", &est, exact));

        let spectrum = empirical_spectrum(&generate_trial_signature(n, d, bd, phase, a.seed, 0)?)?;
        let ks = ks_distance_to(&spectrum, &SpectralDensity::new(cfg.ensemble.derive()));
        let tolerance = 0.02 * (2000.0 / n as f64).sqrt().max(1.0);
        checks.push(McCheck { name: "ks_distance", passed: ks < tolerance, value: ks, tolerance });
        sizes.push(json!({"receiver": "optimum", "n": n, "trials": trials}));
    }
    if a.receiver != ReceiverArg::Opt {
        let n = feasible_n(a.n.unwrap_or(2000), d, bd)?;
        let trials = a.trials.unwrap_or(20);
        let est = empirical_capacity_lmmse(n, &cfg, trials, a.seed, phase)?;
        let exact = capacity_lmmse(&cfg)?.spectral_efficiency;
        rows.extend(mc_rows(Scheme::SparseLmmse, &cfg, exact, &est.capacity));
        checks.push(deviation_check("capacity_lmmse", &est.capacity, exact));
        checks.push(McCheck {
            name: "mmse_diagonal_in_unit_interval",
            passed: est.m_min > 0.0 && est.m_max <= 1.0 + 1e-12,
            value: est.m_max,
            tolerance: 1.0,
        });
        sizes.push(json!({"receiver": "lmmse", "n": n, "trials": trials}));
    }

    let all_ok = checks.iter().all(|c| c.passed);
    let body = match format {
        Format::Json => pretty(json!({
            "schema": SCHEMA,
            "command": "montecarlo",
            "seed": a.seed,
            "phase": phase.as_str(),
            "runs": sizes,
            "rows": rows,
            "checks": checks.iter().map(|c| json!({
                "name": c.name, "passed": c.passed, "value": c.value, "tolerance": c.tolerance
            })).collect::<Vec<_>>(),
            "passed": all_ok,
        })),
        _ => {
            let mut comments = vec![format!("seed={} phase={}", a.seed, phase)];
            comments.extend(sizes.iter().map(|s| format!("receiver={} n={} trials={}", s["receiver"].as_str().unwrap_or(""), s["n"], s["trials"])));
            comments.extend(checks.iter().map(|c| {
                format!("check={} passed={} value={:e} tolerance={:e}", c.name, c.passed, c.value, c.tolerance)
            }));
            rows_csv(&comments, &rows)
        }
    };
    Ok(Report { body, ok: all_ok })
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub fn validate(a: &ValidateArgs) -> Result<Report, CliError> {
    let format = format_of(a.common.format, Format::Csv, &[Format::Csv, Format::Json], "validate")?;
    let fault = a.inject_fault.as_deref().map(str::parse::<Fault>).transpose()?;
    let report = run_validation(&ValidationOptions { quick: a.quick, fault, seed: a.seed });
    for c in &report.checks {
        eprintln!("{} {:<26} {:>7.2}s  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.seconds, c.detail);
    }
    let body = match format {
        Format::Json => pretty(json!({
            "schema": SCHEMA,
            "command": "validate",
            "quick": a.quick,
            "fault": fault,
            "passed": report.passed(),
            "checks": report.checks,
        })),
        _ => {
            let mut body = format!("# schema={SCHEMA}\ncheck,passed,seconds,detail\n");
            for c in &report.checks {
                body.push_str(&format!("{},{},{:.3},{}\n", c.name, c.passed, c.seconds, csv_quote(&c.detail)));
            }
            body
        }
    };
    Ok(Report { body, ok: report.passed() })
}
