use std::f64::consts::PI;

use nalgebra::DMatrix;

use stiefel_core::bounds;
use stiefel_core::curves;
use stiefel_core::logmap::{self, Certificate, LogOptions};
use stiefel_core::manifold::{self, BetaMetric, StiefelPoint};
use stiefel_core::numerics::RandomSource;
use stiefel_core::textio;
use stiefel_core::verify;

use crate::svg::{render, Series};
use crate::tables::{fmt, write_output, Table};
use crate::{
    BoundsArgs, BranchDemoArgs, CliError, ExpArgs, FamiliesArgs, FamilyKind, LogArgs, OutputFormat,
    SampleArgs, SampleMode, SlopeArgs, VerifyArgs, EXIT_FAILURE, EXIT_NOT_CONVERGED, EXIT_OK,
};

const MAX_N: usize = 64;
const MAX_SAMPLES: usize = 1_000_000;

fn check_scale(n: usize, p: usize, samples: usize) -> Result<(), CliError> {
    if n > MAX_N {
        return Err(CliError::usage(format!(
            "n = {n} exceeds the desk-scale cap {MAX_N}"
        )));
    }
    if samples > MAX_SAMPLES {
        return Err(CliError::usage(format!(
            "samples = {samples} exceeds the cap {MAX_SAMPLES}"
        )));
    }
    // experiments need a connected manifold; n = p splits into the two
    // components of the orthogonal group
    if p == 0 || n <= p {
        return Err(CliError::usage(format!(
            "experiments need n > p >= 1, got n={n} p={p}"
        )));
    }
    if n > 20 {
        eprintln!("warning: n = {n} is above the tuned desk scale (n <= 20); expect slower runs");
    }
    Ok(())
}

fn load_point(path: &std::path::Path) -> Result<StiefelPoint, CliError> {
    let m = textio::read_matrix_file(path).map_err(|e| CliError::usage(e.to_string()))?;
    StiefelPoint::new(m).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn cmd_exp(args: &ExpArgs) -> Result<u8, CliError> {
    let metric = BetaMetric::new(args.beta)?;
    let point = load_point(&args.point)?;
    let z = textio::read_matrix_file(&args.tangent).map_err(|e| CliError::usage(e.to_string()))?;
    let tangent = manifold::decompose(&point, &z)?;
    let out = manifold::exp(&metric, &tangent)?;
    let mut buf = Vec::new();
    textio::write_matrix(&mut buf, out.matrix())?;
    write_output(
        args.out.as_deref(),
        std::str::from_utf8(&buf).expect("matrix text is ascii"),
    )?;
    Ok(EXIT_OK)
}

pub fn cmd_log(args: &LogArgs) -> Result<u8, CliError> {
    let metric = BetaMetric::new(args.beta)?;
    let u = load_point(&args.u)?;
    let target = load_point(&args.utilde)?;
    let opts = LogOptions {
        max_iter: args.max_iter,
        residual_tol: args.tol,
        ..Default::default()
    };
    let res = logmap::log_shooting(&metric, &u, &target, &opts)?;
    println!(
        "length={} residual={} iterations={} certificate={}",
        res.length,
        res.residual,
        res.iterations,
        res.certificate.as_str()
    );
    if res.certificate == Certificate::ExceedsUpperBound && !res.upper_bound_proven {
        println!(
            "note: upper envelope is proven for n >= 2p only; here n = {} < {} so the verdict is advisory",
            u.n(),
            2 * u.p()
        );
    }
    if let Some(path) = &args.out {
        textio::write_matrix_file(path, res.tangent.ambient())?;
    }
    Ok(if res.certificate.converged() {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

pub fn cmd_bounds(args: &BoundsArgs) -> Result<u8, CliError> {
    check_scale(args.n, args.p, 0)?;
    let cap = 2.0 * (args.p as f64).sqrt();
    let deltas: Vec<f64> = match (args.grid, args.delta) {
        (Some(k), _) => {
            if k < 2 {
                return Err(CliError::usage("--grid needs at least 2 points"));
            }
            (0..k).map(|i| cap * i as f64 / (k - 1) as f64).collect()
        }
        (None, Some(d)) => vec![d],
        (None, None) => {
            return Err(CliError::usage("provide --delta or --grid"));
        }
    };
    let mut config = format!("cmd=bounds beta={} n={} p={}", args.beta, args.n, args.p);
    match args.grid {
        Some(k) => config.push_str(&format!(" grid={k}")),
        None => config.push_str(&format!(" delta={}", args.delta.unwrap())),
    }
    let mut table = Table::new(
        &config,
        vec!["delta", "lower", "upper", "w_upper_on_lower", "attainment"],
    );
    if !bounds::upper_bound_proven(args.n, args.p) {
        table.comment.push_str(&format!(
            "\n# note: upper envelope proven for n >= 2p; here n = {} < {} so it is advisory",
            args.n,
            2 * args.p
        ));
    }
    for d in deltas {
        let report = bounds::bounds_report(args.beta, args.n, args.p, d)?;
        table.push(vec![
            fmt(report.delta),
            fmt(report.lower),
            fmt(report.upper),
            report.w_upper_on_lower.map(fmt).unwrap_or_default(),
            report.attainment.as_str().to_string(),
        ]);
    }
    match args.format {
        OutputFormat::Csv => write_output(args.out.as_deref(), &table.to_csv())?,
        OutputFormat::Svg => {
            let deltas = table.numeric_column("delta");
            let lower = table.numeric_column("lower");
            let upper = table.numeric_column("upper");
            let pair = |vals: Vec<(usize, f64)>| -> Vec<(f64, f64)> {
                vals.iter().map(|(i, v)| (deltas[*i].1, *v)).collect()
            };
            let mut series = vec![
                Series {
                    label: "lower envelope".into(),
                    points: pair(lower),
                    color: "black",
                    line: true,
                },
                Series {
                    label: "upper envelope".into(),
                    points: pair(upper),
                    color: "green",
                    line: true,
                },
            ];
            let w = table.numeric_column("w_upper_on_lower");
            if !w.is_empty() {
                series.push(Series {
                    label: "w bound on exact lower envelope".into(),
                    points: w.iter().map(|(i, v)| (deltas[*i].1, *v)).collect(),
                    color: "orange",
                    line: true,
                });
            }
            let svg = render(
                &format!(
                    "envelopes at beta={} on St({},{})",
                    args.beta, args.n, args.p
                ),
                "frobenius distance",
                "geodesic distance",
                &series,
            );
            write_output(args.out.as_deref(), &svg)?;
        }
    }
    Ok(EXIT_OK)
}

struct PairRow {
    frob: f64,
    length: f64,
    certificate: Certificate,
    length2: Option<f64>,
    certificate2: Option<Certificate>,
    lower: f64,
    upper: f64,
}

pub fn cmd_sample(args: &SampleArgs) -> Result<u8, CliError> {
    check_scale(args.n, args.p, args.samples)?;
    if args.samples == 0 {
        return Err(CliError::usage("need at least one sample"));
    }
    let metric = BetaMetric::new(args.beta)?;
    let metric2 = args.beta2.map(BetaMetric::new).transpose()?;
    let opts = LogOptions {
        max_iter: args.max_iter,
        ..Default::default()
    };
    let base_rng = RandomSource::new(args.seed);
    let mut rows = Vec::with_capacity(args.samples);
    for pair_id in 0..args.samples {
        let mut rng = base_rng.fork(pair_id as u64);
        let u = StiefelPoint::random(args.n, args.p, &mut rng)
            .map_err(|e| CliError::usage(e.to_string()))?;
        let mut target = match args.mode {
            SampleMode::Haar => StiefelPoint::random(args.n, args.p, &mut rng)
                .map_err(|e| CliError::usage(e.to_string()))?,
            SampleMode::Roundtrip => {
                let z = rng.gaussian_matrix(args.n, args.p);
                let mut t = manifold::project_tangent(&u, &z)?;
                let cap = 0.8 * metric.beta().sqrt().min(1.0) * PI;
                let scale = cap * rng.uniform(0.01, 1.0);
                t = t.scaled(scale / manifold::norm(&metric, &t));
                manifold::exp(&metric, &t)?
            }
        };
        if args.inject_antipodal && pair_id == args.samples - 1 {
            target = u.negated();
        }
        let frob = manifold::frobenius_distance(&u, &target)?.value();
        let res = logmap::log_shooting(&metric, &u, &target, &opts)?;
        let (length2, certificate2) = match &metric2 {
            Some(m2) => {
                let r2 = logmap::log_shooting(m2, &u, &target, &opts)?;
                (Some(r2.length), Some(r2.certificate))
            }
            None => (None, None),
        };
        rows.push(PairRow {
            frob,
            length: res.length,
            certificate: res.certificate,
            length2,
            certificate2,
            lower: bounds::lower_envelope(metric.beta(), args.p, frob)?,
            upper: bounds::upper_envelope(metric.beta(), args.p, frob)?,
        });
    }

    let mut config = format!(
        "cmd=sample n={} p={} beta={} samples={} seed={} mode={}",
        args.n,
        args.p,
        args.beta,
        args.samples,
        args.seed,
        match args.mode {
            SampleMode::Haar => "haar",
            SampleMode::Roundtrip => "roundtrip",
        }
    );
    if let Some(b2) = args.beta2 {
        config.push_str(&format!(" beta2={b2}"));
    }
    if args.inject_antipodal {
        config.push_str(" inject_antipodal=true");
    }
    let mut table = Table::new(
        &config,
        vec![
            "pair_id",
            "frob_dist",
            "length_beta",
            "certificate",
            "length_beta2",
            "certificate2",
            "m_hat",
            "M_hat",
        ],
    );
    for (i, r) in rows.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            fmt(r.frob),
            fmt(r.length),
            r.certificate.as_str().to_string(),
            r.length2.map(fmt).unwrap_or_default(),
            r.certificate2
                .map(|c| c.as_str().to_string())
                .unwrap_or_default(),
            fmt(r.lower),
            fmt(r.upper),
        ]);
    }
    match args.format {
        OutputFormat::Csv => write_output(args.out.as_deref(), &table.to_csv())?,
        OutputFormat::Svg => {
            let converged: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.certificate.converged())
                .map(|r| (r.frob, r.length))
                .collect();
            let mut envelope: Vec<&PairRow> = rows.iter().collect();
            envelope.sort_by(|a, b| a.frob.total_cmp(&b.frob));
            let series = vec![
                Series {
                    label: format!("samples (beta={})", args.beta),
                    points: converged,
                    color: "steelblue",
                    line: false,
                },
                Series {
                    label: "lower envelope".into(),
                    points: envelope.iter().map(|r| (r.frob, r.lower)).collect(),
                    color: "black",
                    line: true,
                },
                Series {
                    label: "upper envelope".into(),
                    points: envelope.iter().map(|r| (r.frob, r.upper)).collect(),
                    color: "green",
                    line: true,
                },
            ];
            let svg = render(
                &format!(
                    "distances on St({},{}) at beta={} ({} samples)",
                    args.n, args.p, args.beta, args.samples
                ),
                "frobenius distance",
                "geodesic distance",
                &series,
            );
            write_output(args.out.as_deref(), &svg)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_families(args: &FamiliesArgs) -> Result<u8, CliError> {
    check_scale(args.n, args.p, 0)?;
    if args.grid < 2 {
        return Err(CliError::usage("--grid needs at least 2 points"));
    }
    let ks: Vec<usize> = match args.k {
        Some(k) => {
            if k == 0 || k > args.p {
                return Err(CliError::usage(format!(
                    "k must lie in 1..={}, got {k}",
                    args.p
                )));
            }
            vec![k]
        }
        None => (1..=args.p).collect(),
    };
    let mut rng = RandomSource::new(args.seed);
    let u = StiefelPoint::random(args.n, args.p, &mut rng)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let metric = BetaMetric::new(args.beta)?;

    let mut config = format!(
        "cmd=families family={} n={} p={} beta={} grid={} seed={}",
        match args.family {
            FamilyKind::Gamma => "gamma",
            FamilyKind::Rotation => "rotation",
        },
        args.n,
        args.p,
        args.beta,
        args.grid,
        args.seed
    );
    if let Some(k) = args.k {
        config.push_str(&format!(" k={k}"));
    }
    let mut table = Table::new(
        &config,
        vec!["t", "frob_dist", "geodesic_dist", "curve_family"],
    );
    let mut traces: Vec<(String, curves::Curve)> = Vec::new();
    match args.family {
        FamilyKind::Gamma => {
            for &k in &ks {
                traces.push((format!("gamma_{k}"), curves::gamma_k(&u, k)?));
            }
        }
        FamilyKind::Rotation => {
            // the full planar rotation to -U; minimal for beta <= 1
            let q = DMatrix::identity(args.p, args.p);
            traces.push((
                "planar_rotation".to_string(),
                curves::planar_rotation_curve(&u, &q, PI)?,
            ));
        }
    }
    for (label, curve) in &traces {
        // all these families have constant speed, so the arc length up to
        // time t is t times the total beta-length
        let beta_len = curves::curve_length(curve, &metric, 64)?;
        for i in 0..args.grid {
            let t = i as f64 / (args.grid - 1) as f64;
            let pt = curve.eval_matrix(t)?;
            let frob = (pt - u.matrix()).norm();
            let geo = t * beta_len;
            table.push(vec![fmt(t), fmt(frob), fmt(geo), label.clone()]);
        }
    }
    match args.format {
        OutputFormat::Csv => write_output(args.out.as_deref(), &table.to_csv())?,
        OutputFormat::Svg => {
            let mut series = Vec::new();
            let colors = ["black", "steelblue", "green", "orange", "purple", "brown"];
            for (ti, (label, _)) in traces.iter().enumerate() {
                let pts: Vec<(f64, f64)> = table
                    .rows
                    .iter()
                    .filter(|r| &r[3] == label)
                    .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
                    .collect();
                series.push(Series {
                    label: label.clone(),
                    points: pts,
                    color: colors[ti % colors.len()],
                    line: true,
                });
            }
            let svg = render(
                &format!("geodesic family traces on St({},{})", args.n, args.p),
                "frobenius distance",
                "geodesic distance",
                &series,
            );
            write_output(args.out.as_deref(), &svg)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_branch_demo(args: &BranchDemoArgs) -> Result<u8, CliError> {
    if args.beta <= 1.0 {
        println!(
            "not applicable: the shorter branch to -U exists only for beta > 1 (got beta = {})",
            args.beta
        );
        return Ok(EXIT_OK);
    }
    let metric = BetaMetric::new(args.beta)?;
    let mut rng = RandomSource::new(args.seed);
    let u = StiefelPoint::random(3, 2, &mut rng).map_err(|e| CliError::usage(e.to_string()))?;
    let (g1, g2) = curves::branch_pair(&u, args.beta)?;
    let (w1, w2) = curves::branch_lengths(args.beta)?;
    let l1 = curves::curve_length(&g1, &metric, 64)?;
    let l2 = curves::curve_length(&g2, &metric, 64)?;
    let e1 = (g1.end()?.matrix() + u.matrix()).norm();
    let e2 = (g2.end()?.matrix() + u.matrix()).norm();
    println!("beta = {}", args.beta);
    println!("l(gamma1) = {l1:.5}  (closed form {w1:.5}), endpoint error {e1:.2e}");
    println!("l(gamma2) = {l2:.5}  (closed form {w2:.5}), endpoint error {e2:.2e}");
    println!(
        "gamma2 is shorter by {:.5}; both curves join U to -U on St(3,2)",
        l1 - l2
    );
    Ok(EXIT_OK)
}

pub fn cmd_slope(args: &SlopeArgs) -> Result<u8, CliError> {
    check_scale(args.n, args.p, args.samples)?;
    if args.betas.is_empty() {
        return Err(CliError::usage("need at least one beta"));
    }
    let betas_str: Vec<String> = args.betas.iter().map(|b| b.to_string()).collect();
    let config = format!(
        "cmd=slope n={} p={} betas={} samples={} seed={} delta_small={}",
        args.n,
        args.p,
        betas_str.join(";"),
        args.samples,
        args.seed,
        args.delta_small
    );
    let mut table = Table::new(
        &config,
        vec![
            "beta",
            "draw_id",
            "tangent_kind",
            "ratio",
            "lower_bound",
            "upper_bound",
        ],
    );
    let base_rng = RandomSource::new(args.seed);
    let mut stream = 0u64;
    for &beta in &args.betas {
        let metric = BetaMetric::new(beta)?;
        let lo = beta.sqrt().min(1.0);
        let hi = beta.sqrt().max(1.0);
        for draw in 0..args.samples + 2 {
            let mut rng = base_rng.fork(stream);
            stream += 1;
            let u = StiefelPoint::random(args.n, args.p, &mut rng)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let (kind, tangent) = if draw == args.samples {
                // pure vertical block, spanning as many columns as possible
                let even = args.p - args.p % 2;
                if even == 0 {
                    continue;
                }
                let mut a = DMatrix::zeros(args.p, args.p);
                a.view_mut((0, 0), (even, even))
                    .copy_from(&curves::skew_generator(even, 1.0)?);
                ("pure_a", manifold::decompose(&u, &(u.matrix() * a))?)
            } else if draw == args.samples + 1 {
                let z = rng.gaussian_matrix(args.n, args.p);
                let horiz = &z - u.matrix() * (u.matrix().transpose() * &z);
                ("pure_b", manifold::decompose(&u, &horiz)?)
            } else {
                let z = rng.gaussian_matrix(args.n, args.p);
                ("random", manifold::project_tangent(&u, &z)?)
            };
            let unit = tangent.scaled(1.0 / manifold::norm(&metric, &tangent));
            let ratio = curves::slope_ratio(&metric, &unit, args.delta_small)?;
            table.push(vec![
                fmt(beta),
                draw.to_string(),
                kind.to_string(),
                fmt(ratio),
                fmt(lo),
                fmt(hi),
            ]);
        }
    }
    match args.format {
        OutputFormat::Csv => write_output(args.out.as_deref(), &table.to_csv())?,
        OutputFormat::Svg => {
            let pts: Vec<(f64, f64)> = table
                .rows
                .iter()
                .map(|r| (r[0].parse().unwrap(), r[3].parse().unwrap()))
                .collect();
            let mut betas = args.betas.clone();
            betas.sort_by(f64::total_cmp);
            let lower: Vec<(f64, f64)> = betas.iter().map(|b| (*b, b.sqrt().min(1.0))).collect();
            let upper: Vec<(f64, f64)> = betas.iter().map(|b| (*b, b.sqrt().max(1.0))).collect();
            let svg = render(
                &format!("initial distance-ratio slopes on St({},{})", args.n, args.p),
                "beta",
                "d_beta / frobenius ratio",
                &[
                    Series {
                        label: "draws".into(),
                        points: pts,
                        color: "steelblue",
                        line: false,
                    },
                    Series {
                        label: "min(1, sqrt(beta))".into(),
                        points: lower,
                        color: "black",
                        line: true,
                    },
                    Series {
                        label: "max(1, sqrt(beta))".into(),
                        points: upper,
                        color: "green",
                        line: true,
                    },
                ],
            );
            write_output(args.out.as_deref(), &svg)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<u8, CliError> {
    let results = verify::run_all(args.seed);
    let mut failed = 0;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {} ({:.2}s)", r.name, r.detail, r.seconds);
        if !r.passed {
            failed += 1;
        }
    }
    println!("{} checks, {} failed", results.len(), failed);
    Ok(verify_verdict(&results))
}

pub fn verify_verdict(results: &[verify::CheckResult]) -> u8 {
    if results.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}
