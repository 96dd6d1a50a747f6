//! The five batch verbs.  Every command reads a config, computes its
//! artifacts completely, and only then writes files.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde_json::json;

use uncert_core::analytic::{c_22, c_inf2, c_from_energy, meanfield_curve};
use uncert_core::cloning::{cloner_uncertainty_pair, ClonerParams};
use uncert_core::covariant::{measurement_uncertainty, mur_equals_pur_check, povm_from_generator};
use uncert_core::groundstate::{build_hamiltonian, sweep_tradeoff, Scenario};
use uncert_core::metrics::{Exponent, Metric, MetricSpec};
use uncert_core::operators::DensityOperator;
use uncert_core::state::StateVector;
use uncert_core::{Error, Group, Side};

use crate::config::{self, ScenarioConfig};
use crate::output::{line_plot_svg, write_csv, Series};
use crate::RunArgs;

/// Failure classes mapped to exit codes.
pub enum Failure {
    /// Exit 2: unusable configuration or arguments.
    Config(String),
    /// Exit 3: the numerical machinery failed on a valid request.
    Solver(String),
    /// Exit 4: a branch the tool does not cover.
    Unsupported(String),
    /// Exit 5: a verification command found a violation.
    Check(String),
    /// Exit 1: filesystem trouble writing artifacts.
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Unsupported(_) => 4,
            Failure::Check(_) => 5,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m)
            | Failure::Solver(m)
            | Failure::Unsupported(m)
            | Failure::Check(m)
            | Failure::Io(m) => m,
        }
    }
}

fn solver_err(e: Error) -> Failure {
    match e {
        Error::Unsupported(m) => Failure::Unsupported(m),
        other => Failure::Solver(other.to_string()),
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Io(e.to_string())
}

struct Run {
    cfg: ScenarioConfig,
    out: PathBuf,
    svg: bool,
    seed: u64,
}

fn prepare(args: &RunArgs) -> Result<Run, Failure> {
    let cfg = config::load(&args.config, &args.set).map_err(Failure::Config)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(io_err)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(7);
    Ok(Run {
        cfg,
        out,
        svg: args.svg,
        seed,
    })
}

fn finite(e: Exponent) -> f64 {
    match e {
        Exponent::Finite(a) => a,
        Exponent::Infinity => f64::INFINITY,
    }
}

/// `curve`: trade-off sweep to curve.csv (t, energy, dq, dp, envelope
/// bound in the same units as dp) and an optional plot.
pub fn curve(args: &RunArgs) -> Result<(), Failure> {
    let run = prepare(args)?;
    let scenario = config::scenario(&run.cfg).map_err(Failure::Config)?;
    let ts = config::t_grid(&run.cfg).map_err(Failure::Config)?;
    let region = sweep_tradeoff(&scenario, &ts).map_err(solver_err)?;
    let alpha = finite(scenario.metric_q.exponent);
    let beta = finite(scenario.metric_p.exponent);

    let rows: Vec<Vec<f64>> = region
        .points
        .iter()
        .map(|p| {
            let bound = region.bound(p.dq.powf(alpha)).powf(1.0 / beta);
            vec![p.t, p.energy, p.dq, p.dp, bound]
        })
        .collect();
    write_csv(
        &run.out.join("curve.csv"),
        &["t", "energy", "dq", "dp", "envelope_bound"],
        &rows,
    )
    .map_err(io_err)?;

    if run.svg {
        let pts: Vec<(f64, f64)> = region.points.iter().map(|p| (p.dq, p.dp)).collect();
        let env: Vec<(f64, f64)> = region
            .envelope
            .iter()
            .map(|(d, b)| (d.powf(1.0 / alpha), b.powf(1.0 / beta)))
            .collect();
        let svg = line_plot_svg(
            "Uncertainty trade-off",
            "position spread",
            "momentum spread",
            &[
                Series {
                    label: "sweep",
                    points: pts,
                },
                Series {
                    label: "envelope",
                    points: env,
                },
            ],
        );
        crate::output::atomic_write(&run.out.join("curve.svg"), svg.as_bytes()).map_err(io_err)?;
    }
    println!("wrote {} sweep points", region.points.len());
    Ok(())
}

/// `constant`: print one sharp constant with a method tag and an error
/// estimate.
pub fn constant(args: &RunArgs) -> Result<(), Failure> {
    let run = prepare(args)?;
    let spec = run
        .cfg
        .constant
        .as_ref()
        .ok_or_else(|| Failure::Config("config needs a 'constant' section".into()))?;
    let alpha = config::parse_exponent(&spec.alpha).map_err(Failure::Config)?;
    let beta = config::parse_exponent(&spec.beta).map_err(Failure::Config)?;
    if spec.n == 0 {
        return Err(Failure::Config("dimension n must be positive".into()));
    }

    let (value, method, err): (f64, &str, f64) = match (alpha, beta) {
        (Exponent::Infinity, Exponent::Infinity) => (f64::INFINITY, "closed-form", 0.0),
        (Exponent::Finite(a), Exponent::Finite(b)) if a == 2.0 && b == 2.0 => {
            (c_22(spec.n), "closed-form", 0.0)
        }
        (Exponent::Infinity, Exponent::Finite(2.0)) => {
            (c_inf2(spec.n).map_err(solver_err)?, "closed-form", 1e-10)
        }
        (Exponent::Finite(_), Exponent::Finite(_)) if spec.n == 1 => {
            let solver = run.cfg.solver.unwrap_or_default();
            let points = solver.line_points.unwrap_or(512);
            let half_width = solver.line_half_width.unwrap_or(12.0);
            let c_at = |pts: usize| -> Result<f64, Failure> {
                let g = Group::discretized_line(pts, half_width)
                    .map_err(|e| Failure::Config(e.to_string()))?;
                let s = Scenario::new(
                    g,
                    MetricSpec::new(Metric::Absolute, alpha),
                    MetricSpec::new(Metric::Absolute, beta),
                )
                .map_err(|e| Failure::Config(e.to_string()))?;
                let h = build_hamiltonian(&s, 1.0).map_err(solver_err)?;
                let (e, _) = h.ground_pair(run.seed).map_err(solver_err)?;
                c_from_energy(e, alpha, beta).map_err(solver_err)
            };
            if points < 32 || points % 2 != 0 {
                return Err(Failure::Config(format!(
                    "line_points {points} must be even and at least 32"
                )));
            }
            let fine = c_at(points)?;
            let coarse = c_at(points / 2)?;
            (fine, "numeric", (fine - coarse).abs().max(1e-12))
        }
        _ => {
            return Err(Failure::Unsupported(format!(
                "no method for exponents ({}, {}) at n = {}",
                finite(alpha),
                finite(beta),
                spec.n
            )))
        }
    };
    println!(
        "c[{},{}]({}) = {value} method={method} error<={err:e}",
        finite(alpha),
        finite(beta),
        spec.n
    );
    Ok(())
}

/// `mur-check`: compare worst-case measurement errors of random covariant
/// observables against the spreads of their noise marginals.
pub fn mur_check(args: &RunArgs) -> Result<(), Failure> {
    let run = prepare(args)?;
    let scenario = config::scenario(&run.cfg).map_err(Failure::Config)?;
    let samples = run
        .cfg
        .mur_check
        .as_ref()
        .and_then(|m| m.samples)
        .unwrap_or(100);
    if samples == 0 {
        return Err(Failure::Config("samples must be positive".into()));
    }
    let report = mur_equals_pur_check(&scenario, samples, run.seed).map_err(solver_err)?;

    // the sharpest observable: measure position exactly, never momentum
    let point = DensityOperator::from_pure(&StateVector::point(scenario.group.clone(), 0));
    let sharp = povm_from_generator(point).map_err(solver_err)?;
    let end_q =
        measurement_uncertainty(&sharp, Side::Position, &scenario.metric_q).map_err(solver_err)?;
    let end_p =
        measurement_uncertainty(&sharp, Side::Momentum, &scenario.metric_p).map_err(solver_err)?;

    let doc = json!({
        "samples": report.samples,
        "max_abs_deviation": report.max_deviation_q.max(report.max_deviation_p),
        "pass": report.pass,
        "endpoint_pair": [end_q, end_p],
    });
    let text = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
    crate::output::atomic_write(&run.out.join("mur_check.json"), text.as_bytes())
        .map_err(io_err)?;
    println!(
        "samples={} max_abs_deviation={:e} pass={}",
        report.samples,
        report.max_deviation_q.max(report.max_deviation_p),
        report.pass
    );
    if !report.pass {
        return Err(Failure::Check(
            "measurement and preparation uncertainties disagree".into(),
        ));
    }
    Ok(())
}

/// `clone`: sweep the two-copy amplitude family and write its uncertainty
/// ellipse next to the optimal boundary.
pub fn clone(args: &RunArgs) -> Result<(), Failure> {
    let run = prepare(args)?;
    let spec = run
        .cfg
        .clone
        .as_ref()
        .ok_or_else(|| Failure::Config("config needs a 'clone' section".into()))?;
    if !(2..=8).contains(&spec.n) {
        return Err(Failure::Config(format!(
            "clone dimension {} outside 2..=8",
            spec.n
        )));
    }
    let steps = spec.steps.unwrap_or(101);
    if !(2..=100_000).contains(&steps) {
        return Err(Failure::Config(format!("bad step count {steps}")));
    }
    let metric = MetricSpec::new(Metric::Discrete, Exponent::Finite(1.0));

    let mut ellipse = Vec::with_capacity(steps);
    for k in 0..steps {
        let phi = PI / 2.0 * k as f64 / (steps - 1) as f64;
        let p = ClonerParams::real_at_angle(spec.n, phi).map_err(solver_err)?;
        let (dp, dq) = cloner_uncertainty_pair(&p, &metric).map_err(solver_err)?;
        ellipse.push(vec![p.a.re, p.b.re, dq, dp]);
    }

    let g = Group::cyclic(spec.n).map_err(|e| Failure::Config(e.to_string()))?;
    let scenario =
        Scenario::new(g, metric, metric).map_err(|e| Failure::Config(e.to_string()))?;
    let region = sweep_tradeoff(&scenario, &uncert_core::groundstate::default_t_grid())
        .map_err(solver_err)?;
    let boundary: Vec<Vec<f64>> = region.points.iter().map(|p| vec![p.dq, p.dp]).collect();

    write_csv(
        &run.out.join("clone_ellipse.csv"),
        &["a", "b", "dq", "dp"],
        &ellipse,
    )
    .map_err(io_err)?;
    write_csv(&run.out.join("optimal_boundary.csv"), &["dq", "dp"], &boundary)
        .map_err(io_err)?;

    if run.svg {
        let svg = line_plot_svg(
            "Cloning measurements against the sharp boundary",
            "position error",
            "momentum error",
            &[
                Series {
                    label: "optimal boundary",
                    points: region.points.iter().map(|p| (p.dq, p.dp)).collect(),
                },
                Series {
                    label: "cloning family",
                    points: ellipse.iter().map(|r| (r[2], r[3])).collect(),
                },
            ],
        );
        crate::output::atomic_write(&run.out.join("clone.svg"), svg.as_bytes()).map_err(io_err)?;
    }
    println!("wrote {} ellipse points for n = {}", steps, spec.n);
    Ok(())
}

/// `meanfield`: finite bit-string boundaries against the large-n curve,
/// with the largest per-n gap reported.
pub fn meanfield(args: &RunArgs) -> Result<(), Failure> {
    let run = prepare(args)?;
    let spec = run
        .cfg
        .meanfield
        .as_ref()
        .ok_or_else(|| Failure::Config("config needs a 'meanfield' section".into()))?;
    if spec.n_list.is_empty() {
        return Err(Failure::Config("empty n_list".into()));
    }
    if spec.n_list.iter().any(|n| !(1..=12).contains(n)) {
        return Err(Failure::Config(
            "n_list entries must lie in 1..=12 (dimension 2^n)".into(),
        ));
    }
    if !(spec.alpha >= 1.0 && spec.alpha.is_finite() && spec.beta >= 1.0 && spec.beta.is_finite())
    {
        return Err(Failure::Config("exponents must be finite and >= 1".into()));
    }
    let ts = config::t_grid(&run.cfg).map_err(Failure::Config)?;

    let mut curves = Vec::new();
    let mut gaps = Vec::new();
    for &n in &spec.n_list {
        let g = Group::bits(n).map_err(|e| Failure::Config(e.to_string()))?;
        let s = Scenario::new(
            g,
            MetricSpec::new(Metric::HammingPerSite, Exponent::Finite(spec.alpha)),
            MetricSpec::new(Metric::HammingPerSite, Exponent::Finite(spec.beta)),
        )
        .map_err(|e| Failure::Config(e.to_string()))?;
        let region = sweep_tradeoff(&s, &ts).map_err(solver_err)?;
        // distance to the limit circle in per-site fraction coordinates
        let gap = region
            .points
            .iter()
            .map(|p| {
                let r = (1.0 - 2.0 * p.dq).hypot(1.0 - 2.0 * p.dp);
                0.5 * (r - 1.0).abs()
            })
            .fold(0.0f64, f64::max);
        gaps.push(vec![n as f64, gap]);
        curves.push((n, region));
    }

    // the limit curve, sampled on the branch with both fractions <= 1/2
    let limit: Vec<Vec<f64>> = (0..=128)
        .map(|i| {
            let t = PI + PI / 2.0 * i as f64 / 128.0;
            let (mq, mp) = meanfield_curve(spec.alpha, spec.beta, t);
            vec![
                mq.powf(1.0 / spec.alpha),
                mp.powf(1.0 / spec.beta),
                mq,
                mp,
            ]
        })
        .collect();

    for (n, region) in &curves {
        let rows: Vec<Vec<f64>> = region
            .points
            .iter()
            .map(|p| vec![p.t, p.energy, p.dq, p.dp])
            .collect();
        write_csv(
            &run.out.join(format!("meanfield_n{n}.csv")),
            &["t", "energy", "dq", "dp"],
            &rows,
        )
        .map_err(io_err)?;
    }
    write_csv(
        &run.out.join("meanfield_limit.csv"),
        &["dq", "dp", "moment_q", "moment_p"],
        &limit,
    )
    .map_err(io_err)?;
    write_csv(&run.out.join("meanfield_gaps.csv"), &["n", "max_gap"], &gaps).map_err(io_err)?;

    if run.svg {
        let mut series = Vec::new();
        let labels: Vec<String> = curves.iter().map(|(n, _)| format!("n = {n}")).collect();
        for ((_, region), label) in curves.iter().zip(&labels) {
            series.push(Series {
                label,
                points: region.points.iter().map(|p| (p.dq, p.dp)).collect(),
            });
        }
        series.push(Series {
            label: "limit",
            points: limit.iter().map(|r| (r[0], r[1])).collect(),
        });
        let svg = line_plot_svg(
            "Bit strings against the mean-field curve",
            "position spread",
            "momentum spread",
            &series,
        );
        crate::output::atomic_write(&run.out.join("meanfield.svg"), svg.as_bytes())
            .map_err(io_err)?;
    }
    for row in &gaps {
        println!("n={} max_gap={:e}", row[0] as usize, row[1]);
    }
    Ok(())
}
