use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{make_feasibility_operator, Hyperplane, Vector};
use crate::output::fmt_float;
use crate::schemes::{run, Method, SchemeConfig, StepSchedule, StopRule};

/// Starting points are standard normal samples times this factor.
pub const START_SCALE: f64 = 100.0;

pub const BATCH_CSV_HEADER: [&str; 10] = [
    "method",
    "ratio",
    "mean_iters",
    "std_iters",
    "n",
    "n_test",
    "n_init",
    "tol",
    "kmax",
    "seed",
];

/// Stream offset separating start-point streams from instance streams.
const START_STREAM_BASE: u64 = 1 << 63;

/// Find `x ≥ 0` in `R^{2n}` with `<u, x> = ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityInstance {
    pub n: usize,
    pub hyperplane: Hyperplane,
    /// A nonnegative point on the hyperplane, kept as proof of consistency.
    pub witness: Vector,
}

impl FeasibilityInstance {
    pub fn u(&self) -> &Vector {
        self.hyperplane.normal()
    }

    pub fn nu(&self) -> f64 {
        self.hyperplane.offset()
    }

    /// [`gen_feasibility`] on a ChaCha8 stream seeded with `seed`.
    pub fn from_seed(n: usize, seed: u64) -> Result<Self> {
        gen_feasibility(n, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

fn half_normal(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
        .collect()
}

/// `u` and the witness `z` are drawn entrywise from `|N(0,1)|`, then
/// `ν = <u, z>`.
pub fn gen_feasibility(n: usize, rng: &mut impl Rng) -> Result<FeasibilityInstance> {
    if n == 0 {
        return Err(Error::invalid("n = 0 violates n ≥ 1"));
    }
    let u = loop {
        let u = half_normal(rng, 2 * n);
        if u.iter().any(|c| *c > 0.0) {
            break Vector::new(u)?;
        }
    };
    let witness = Vector::new(half_normal(rng, 2 * n))?;
    let nu = u.inner(&witness);
    Ok(FeasibilityInstance {
        n,
        hyperplane: Hyperplane::new(u, nu)?,
        witness,
    })
}

pub fn gen_start(n: usize, rng: &mut impl Rng) -> Vector {
    Vector::from_fn(2 * n, |_| {
        START_SCALE * rng.sample::<f64, _>(StandardNormal)
    })
}

/// `||Proj_H(x) − Proj_+(Proj_H(x))|| ≤ tol`
pub fn feasibility_stop(x: &Vector, inst: &FeasibilityInstance, tol: f64) -> Result<bool> {
    Ok(inst.hyperplane.shadow_distance(x)? <= tol)
}

/// The nine relaxation presets for Douglas-Rachford, named `dr1`..`dr9`.
pub fn dr_step_schedules() -> Vec<(String, StepSchedule)> {
    use StepSchedule::*;
    [
        ConstantMinusInverse(1.0),
        Constant(1.0),
        ConstantPlusInverse(1.0),
        Constant(1.4),
        Constant(1.5),
        Constant(1.75),
        ConstantMinusInverse(1.8),
        Constant(1.8),
        ConstantPlusInverse(1.8),
    ]
    .into_iter()
    .enumerate()
    .map(|(i, s)| (format!("dr{}", i + 1), s))
    .collect()
}

/// A scheme applied to the Douglas-Rachford feasibility operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BatchMethod {
    /// KM with relaxation `s_k`. Relaxation values up to `limit` are
    /// accepted; `dr9` needs 2.3 because its first value exceeds 2.
    Dr {
        name: String,
        schedule: StepSchedule,
        limit: f64,
    },
    Halpern,
    FastKm {
        alpha: f64,
        step: f64,
    },
}

impl BatchMethod {
    /// Looks up `dr1`..`dr9`.
    pub fn dr_preset(name: &str) -> Option<Self> {
        dr_step_schedules()
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(name, schedule)| {
                let (_, hi) = schedule.range(0);
                BatchMethod::Dr {
                    name,
                    schedule,
                    limit: hi.max(2.0),
                }
            })
    }

    pub fn fast_km(alpha: f64) -> Self {
        BatchMethod::FastKm { alpha, step: 2.0 }
    }

    pub fn label(&self) -> String {
        match self {
            BatchMethod::Dr { name, .. } => name.clone(),
            BatchMethod::Halpern => "halpern".into(),
            BatchMethod::FastKm { alpha, step } if *step == 2.0 => {
                format!("fast-km(alpha={alpha})")
            }
            BatchMethod::FastKm { alpha, step } => format!("fast-km(alpha={alpha};s={step})"),
        }
    }

    fn scheme(&self, kmax: usize) -> SchemeConfig {
        match self {
            BatchMethod::Dr {
                schedule, limit, ..
            } => SchemeConfig {
                relaxation_limit: Some(*limit),
                ..SchemeConfig::km(*schedule, kmax)
            },
            BatchMethod::Halpern => SchemeConfig::new(Method::Halpern, kmax),
            BatchMethod::FastKm { alpha, step } => SchemeConfig::fast_km(*alpha, *step, kmax),
        }
    }
}

/// Expands method tokens (`dr1`..`dr9`, `halpern`, `fast-km`) into batch
/// methods; `fast-km` yields one entry per momentum value, each with `s = 2`.
pub fn make_batch_methods<S: AsRef<str>>(tokens: &[S], alphas: &[f64]) -> Result<Vec<BatchMethod>> {
    let mut out = Vec::new();
    for token in tokens {
        match token.as_ref() {
            "halpern" => out.push(BatchMethod::Halpern),
            "fast-km" | "fast_km" => {
                if alphas.is_empty() {
                    return Err(Error::invalid("fast-km needs at least one α"));
                }
                out.extend(alphas.iter().map(|&a| BatchMethod::fast_km(a)));
            }
            other => out.push(
                BatchMethod::dr_preset(other)
                    .ok_or_else(|| Error::invalid(format!("unknown batch method `{other}`")))?,
            ),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub n: usize,
    pub n_test: usize,
    pub n_init: usize,
    pub tol: f64,
    pub kmax: usize,
    pub methods: Vec<BatchMethod>,
    pub seed: u64,
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n = 0 violates n ≥ 1"));
        }
        if self.n_test == 0 || self.n_init == 0 {
            return Err(Error::invalid("n_test, n_init ≥ 1 violated"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!(
                "tol = {} violates tol > 0",
                self.tol
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods requested"));
        }
        for m in &self.methods {
            m.scheme(self.kmax).validate(0.5)?;
        }
        Ok(())
    }

    fn instance_rng(&self, test: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(test as u64);
        rng
    }

    fn start_rng(&self, test: usize, init: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(START_STREAM_BASE | (test * self.n_init + init) as u64);
        rng
    }
}

/// Statistics of one method over all trials. `mean_iters` and `std_iters`
/// cover successful trials only and are `None` when there are none.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRow {
    pub method: String,
    pub ratio: f64,
    pub successes: usize,
    pub trials: usize,
    pub mean_iters: Option<f64>,
    pub std_iters: Option<f64>,
}

impl BatchRow {
    fn from_outcomes(method: String, outcomes: &[Option<usize>]) -> Self {
        let hits: Vec<f64> = outcomes.iter().flatten().map(|&k| k as f64).collect();
        let (mean, std) = if hits.is_empty() {
            (None, None)
        } else {
            let m = hits.iter().sum::<f64>() / hits.len() as f64;
            let var = hits.iter().map(|h| (h - m).powi(2)).sum::<f64>() / hits.len() as f64;
            (Some(m), Some(var.sqrt()))
        };
        Self {
            method,
            ratio: hits.len() as f64 / outcomes.len() as f64,
            successes: hits.len(),
            trials: outcomes.len(),
            mean_iters: mean,
            std_iters: std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchResult {
    pub config: BatchConfig,
    pub rows: Vec<BatchRow>,
}

fn stat_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-//-".to_string(), fmt_float)
}

impl BatchResult {
    pub fn row(&self, label: &str) -> Option<&BatchRow> {
        self.rows.iter().find(|r| r.method == label)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let c = &self.config;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(BATCH_CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.method.clone(),
                fmt_float(r.ratio),
                stat_cell(r.mean_iters),
                stat_cell(r.std_iters),
                c.n.to_string(),
                c.n_test.to_string(),
                c.n_init.to_string(),
                fmt_float(c.tol),
                c.kmax.to_string(),
                c.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::csv(path, e))
    }

    /// Plain-text table with `mean ± std` per method.
    pub fn summary_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.method.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut out = format!("{:<width$}  {:>6}  {}\n", "method", "ratio", "iterations");
        for r in &self.rows {
            let iters = match (r.mean_iters, r.std_iters) {
                (Some(m), Some(s)) => format!("{m:.2} ± {s:.2}"),
                _ => "-//-".to_string(),
            };
            out.push_str(&format!(
                "{:<width$}  {:>6.4}  {iters}\n",
                r.method, r.ratio
            ));
        }
        out
    }
}

/// Runs every method on every `(instance, start)` pair. A trial succeeds
/// when the shadow test fires at some `k ≤ kmax`; its iteration count is
/// that `k`.
///
/// Instances and starts come from per-index ChaCha streams of the master
/// seed, so the method list never perturbs sampling. Trials run on the
/// current rayon pool and are reduced in index order.
pub fn run_feasibility_batch(config: &BatchConfig) -> Result<BatchResult> {
    config.validate()?;
    let instances: Vec<FeasibilityInstance> = (0..config.n_test)
        .map(|i| gen_feasibility(config.n, &mut config.instance_rng(i)))
        .collect::<Result<_>>()?;
    let operators = instances
        .iter()
        .map(|inst| make_feasibility_operator(&inst.hyperplane))
        .collect::<Result<Vec<_>>>()?;
    let schemes: Vec<SchemeConfig> = config
        .methods
        .iter()
        .map(|m| m.scheme(config.kmax))
        .collect();

    let outcomes: Vec<Vec<Option<usize>>> = (0..config.n_test * config.n_init)
        .into_par_iter()
        .map(|trial| {
            let (i, j) = (trial / config.n_init, trial % config.n_init);
            let x0 = gen_start(config.n, &mut config.start_rng(i, j));
            let stop = StopRule::FeasibilityShadow(instances[i].hyperplane.clone());
            schemes
                .iter()
                .map(|scheme| {
                    let scheme = scheme.clone().with_stop(stop.clone(), config.tol);
                    match run(&operators[i], &scheme, &x0, None) {
                        Ok(trace) => Ok(trace.terminated_at),
                        Err(Error::Diverged { .. }) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let rows = config
        .methods
        .iter()
        .enumerate()
        .map(|(m, method)| {
            let column: Vec<Option<usize>> = outcomes.iter().map(|o| o[m]).collect();
            BatchRow::from_outcomes(method.label(), &column)
        })
        .collect();
    Ok(BatchResult {
        config: config.clone(),
        rows,
    })
}
