use std::path::{Path, PathBuf};

use fastkm::diagnostics::{self, DiagnoseSettings, DiagnosticsReport};
use fastkm::experiments::{
    make_batch_methods, run_feasibility_batch, run_rotation_experiment, BatchConfig,
    FeasibilityInstance, RotationSettings,
};
use fastkm::operators::{
    check_cocoercivity, make_davis_yin, make_douglas_rachford, make_feasibility_operator,
    make_forward_backward, make_rotation_resolvent, max_pointwise_gap, project_nonnegative,
    AveragedOperator, ForwardTerm, Mapping, Vector,
};
use fastkm::schemes::{run, Recording, SchemeConfig};
use serde::Serialize;

use crate::args::{CheckArgs, CheckOperator, DiagnoseArgs, FeasibilityArgs, RotationArgs};
use crate::sidecar::{create_dir, write_json, write_run_json};
use crate::CliError;

fn join_names<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Serialize)]
struct RotationParams {
    n: usize,
    m_const: f64,
    methods: String,
    alpha: f64,
    step: Option<f64>,
    kmax: usize,
}

pub fn rotation(a: RotationArgs) -> Result<(), CliError> {
    let out = a.out.resolve();
    let settings = RotationSettings {
        n: a.n,
        m_const: a.m_const,
        methods: a.methods,
        alpha: a.alpha,
        step: a.step,
        kmax: a.kmax,
    };
    // Validate before touching the file system.
    let op = make_rotation_resolvent(settings.n, settings.m_const)?;
    for m in &settings.methods {
        settings.scheme(*m).validate(op.theta())?;
    }
    create_dir(&out)?;
    let outputs = run_rotation_experiment(&settings, Some(&out))?;
    write_run_json(
        &out,
        "rotation",
        &RotationParams {
            n: settings.n,
            m_const: settings.m_const,
            methods: join_names(&settings.methods),
            alpha: settings.alpha,
            step: settings.step,
            kmax: settings.kmax,
        },
    )?;
    for t in &outputs.traces {
        println!(
            "{:<10} residual[{}] = {:e}",
            t.method.name(),
            t.last().k,
            t.last().residual
        );
    }
    println!(
        "wrote {} files to {}",
        outputs.files.len() + 1,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct FeasibilityParams {
    n: usize,
    ntest: usize,
    ninit: usize,
    tol: f64,
    kmax: usize,
    seed: u64,
    methods: String,
    alpha: String,
    jobs: usize,
}

pub fn feasibility(a: FeasibilityArgs) -> Result<(), CliError> {
    let out = a.out.resolve();
    let config = BatchConfig {
        n: a.n,
        n_test: a.ntest,
        n_init: a.ninit,
        tol: a.tol,
        kmax: a.kmax,
        methods: make_batch_methods(&a.methods, &a.alpha)?,
        seed: a.seed,
    };
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let result = pool.install(|| run_feasibility_batch(&config))?;
    create_dir(&out)?;
    result.save_csv(&out.join("feasibility.csv"))?;
    write_run_json(
        &out,
        "feasibility",
        &FeasibilityParams {
            n: a.n,
            ntest: a.ntest,
            ninit: a.ninit,
            tol: a.tol,
            kmax: a.kmax,
            seed: a.seed,
            methods: a.methods.join(","),
            alpha: join_names(&a.alpha),
            jobs: a.jobs,
        },
    )?;
    print!("{}", result.summary_table());
    Ok(())
}

#[derive(Serialize)]
struct DiagnoseParams {
    alpha: f64,
    lambda: f64,
    trace: Option<PathBuf>,
    n: Option<usize>,
    m_const: Option<f64>,
    kmax: Option<usize>,
    step: Option<f64>,
    burn_in: usize,
}

pub const DIAGNOSE_DEFAULT_N: usize = 50;
pub const DIAGNOSE_DEFAULT_KMAX: usize = 10_000;

/// Reads the `residual` column of a trace CSV, checking `k` runs 0, 1, ….
fn read_trace_residuals(path: &Path) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::Usage(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let (k_col, res_col) = (col("k")?, col("residual")?);
    let mut residuals = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let k: usize = row[k_col]
            .parse()
            .map_err(|_| bad(format!("row {i}: bad k")))?;
        if k != i {
            return Err(bad(format!("row {i} has k = {k}")));
        }
        residuals.push(
            row[res_col]
                .parse()
                .map_err(|_| bad(format!("row {i}: bad residual")))?,
        );
    }
    Ok(residuals)
}

pub fn diagnose(a: DiagnoseArgs) -> Result<(), CliError> {
    let out = a.out.resolve();
    // Window and threshold first: λ outside the window is a usage error.
    let base = DiagnosticsReport::parameters_only(a.alpha, a.lambda)?;
    let lambda = base.lambda;
    let (report, params) = match &a.trace {
        Some(path) => {
            let residuals = read_trace_residuals(path)?;
            let burn_in = a.burn_in.unwrap_or(diagnostics::default_burn_in(
                residuals.len().saturating_sub(1),
            ));
            let fit = diagnostics::rate_fit_residuals(&residuals, burn_in)?;
            let params = DiagnoseParams {
                alpha: a.alpha,
                lambda,
                trace: Some(path.clone()),
                n: None,
                m_const: None,
                kmax: None,
                step: None,
                burn_in,
            };
            (base.with_rate_fit(fit), params)
        }
        None => {
            let n = a.n.unwrap_or(DIAGNOSE_DEFAULT_N);
            let m_const = a.m_const.unwrap_or(2.0);
            let kmax = a.kmax.unwrap_or(DIAGNOSE_DEFAULT_KMAX);
            let op = make_rotation_resolvent(n, m_const)?;
            let step = a.step.unwrap_or(1.0 / op.theta());
            let burn_in = a.burn_in.unwrap_or(diagnostics::default_burn_in(kmax));
            let scheme = SchemeConfig::fast_km(a.alpha, step, kmax).with_recording(Recording::Full);
            scheme.validate(op.theta())?;
            let x0 = fastkm::schemes::ones_then_zeros(n);
            let trace = run(&op, &scheme, &x0, None)?;
            let settings = DiagnoseSettings {
                alpha: a.alpha,
                lambda: Some(lambda),
                s: step,
                theta: op.theta(),
                burn_in,
            };
            let report = diagnostics::diagnose(&trace, &Vector::zeros(2 * n), &settings)?;
            let params = DiagnoseParams {
                alpha: a.alpha,
                lambda,
                trace: None,
                n: Some(n),
                m_const: Some(m_const),
                kmax: Some(kmax),
                step: Some(step),
                burn_in,
            };
            (report, params)
        }
    };
    create_dir(&out)?;
    write_json(&out.join("diagnostics.json"), &report)?;
    write_run_json(&out, "diagnose", &params)?;
    let w = report.lambda_window;
    println!("lambda window ({}, {})", w.lower, w.upper);
    println!(
        "lambda {}  k(lambda) {}",
        report.lambda,
        report.k_lambda.unwrap_or(0)
    );
    if let Some(s) = report.loglog_slope {
        println!(
            "log-log slope {}",
            serde_json::to_string(&s).unwrap_or_default()
        );
    }
    if let Some(v) = report.descent_violations {
        println!("descent violations {v}");
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckParams {
    operator: CheckOperator,
    pairs: usize,
    seed: u64,
    n: usize,
}

#[derive(Serialize)]
struct CheckReport {
    operator: CheckOperator,
    theta: f64,
    pairs: usize,
    violations: usize,
    worst_margin: f64,
    /// Largest gap between an operator and the splitting it reduces to.
    reduction_gap: Option<f64>,
}

/// Tolerance on reduction identities such as Davis-Yin with `C = 0`
/// against Douglas-Rachford.
const REDUCTION_TOL: f64 = 1e-12;

fn reduction_gap(a: &CheckArgs) -> Result<(AveragedOperator, Option<f64>), CliError> {
    Ok(match a.operator {
        CheckOperator::Rotation => {
            let op = make_rotation_resolvent(a.n, 2.0)?;
            let fb = make_forward_backward(op.mapping(), ForwardTerm::None, 1.0, op.dim())?;
            let gap = max_pointwise_gap(&op, &fb, a.pairs, a.seed)?;
            (op, Some(gap))
        }
        CheckOperator::DrFeasibility => {
            let inst = FeasibilityInstance::from_seed(a.n, a.seed)?;
            let op = make_feasibility_operator(&inst.hyperplane)?;
            let pos: Mapping = fastkm::operators::mapping(project_nonnegative);
            let dim = op.dim();
            let dr = make_douglas_rachford(pos.clone(), inst.hyperplane.projection_mapping(), dim)?;
            let dy = make_davis_yin(
                pos,
                inst.hyperplane.projection_mapping(),
                ForwardTerm::None,
                1.0,
                dim,
            )?;
            let gap = max_pointwise_gap(&op, &dr, a.pairs, a.seed)?
                .max(max_pointwise_gap(&dr, &dy, a.pairs, a.seed)?);
            (op, Some(gap))
        }
        CheckOperator::Misdeclared => {
            let op = AveragedOperator::new(2 * a.n, 0.5, |x: &Vector| -x)?.with_label("negation");
            (op, None)
        }
    })
}

pub fn check(a: CheckArgs) -> Result<(), CliError> {
    let out = a.out.resolve();
    let (op, gap) = reduction_gap(&a)?;
    let coco = check_cocoercivity(&op, a.pairs, a.seed)?;
    let report = CheckReport {
        operator: a.operator,
        theta: op.theta(),
        pairs: coco.pairs,
        violations: coco.violations,
        worst_margin: coco.worst_margin,
        reduction_gap: gap,
    };
    create_dir(&out)?;
    write_json(&out.join("check.json"), &report)?;
    write_run_json(
        &out,
        "check",
        &CheckParams {
            operator: a.operator,
            pairs: a.pairs,
            seed: a.seed,
            n: a.n,
        },
    )?;
    println!(
        "{}: theta {} pairs {} violations {} worst margin {:e}",
        op.label(),
        report.theta,
        report.pairs,
        report.violations,
        report.worst_margin
    );
    if report.violations > 0 {
        return Err(CliError::Violation(format!(
            "{} cocoercivity violations, worst margin {:e}",
            report.violations, report.worst_margin
        )));
    }
    if let Some(g) = gap.filter(|g| *g > REDUCTION_TOL) {
        return Err(CliError::Violation(format!(
            "reduction identity off by {g:e}"
        )));
    }
    Ok(())
}
