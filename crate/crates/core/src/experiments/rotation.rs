use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::make_rotation_resolvent;
use crate::output::fmt_float;
use crate::schemes::{
    ones_then_zeros, run, Method, Recording, SchemeConfig, Trace, COORDINATE_COLUMNS_MAX_DIM,
};

pub const DEFAULT_ROTATION_METHODS: [Method; 5] = [
    Method::BanachPicard,
    Method::Km,
    Method::Halpern,
    Method::Appm,
    Method::FastKm,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSettings {
    pub n: usize,
    pub m_const: f64,
    pub methods: Vec<Method>,
    pub alpha: f64,
    /// Step for Fast KM and Fast OGDA; `None` takes the largest admissible.
    pub step: Option<f64>,
    pub kmax: usize,
}

impl Default for RotationSettings {
    fn default() -> Self {
        Self {
            n: 5000,
            m_const: 2.0,
            methods: DEFAULT_ROTATION_METHODS.to_vec(),
            alpha: 3.0,
            step: None,
            kmax: 10_000,
        }
    }
}

impl RotationSettings {
    /// Scheme settings per method; KM relaxes with `s_k ≡ 1/2`.
    pub fn scheme(&self, method: Method) -> SchemeConfig {
        let recording = if 2 * self.n <= COORDINATE_COLUMNS_MAX_DIM {
            Recording::Full
        } else {
            Recording::Summary
        };
        SchemeConfig {
            alpha: self.alpha,
            step: self.step.filter(|_| method.uses_momentum()),
            ..SchemeConfig::new(method, self.kmax)
        }
        .with_recording(recording)
    }
}

#[derive(Debug, Clone)]
pub struct RotationOutputs {
    pub traces: Vec<Trace>,
    pub files: Vec<PathBuf>,
}

/// Runs each method from `(1_n; 0_n)` on the rotation resolvent. With an
/// output directory, writes `<method>.csv` per method and a combined
/// `residuals.csv` with one residual column per method.
pub fn run_rotation_experiment(
    settings: &RotationSettings,
    out_dir: Option<&Path>,
) -> Result<RotationOutputs> {
    if settings.methods.is_empty() {
        return Err(Error::invalid("no methods requested"));
    }
    let op = make_rotation_resolvent(settings.n, settings.m_const)?;
    let configs: Vec<SchemeConfig> = settings
        .methods
        .iter()
        .map(|m| settings.scheme(*m))
        .collect();
    for c in &configs {
        c.validate(op.theta())?;
    }
    let x0 = ones_then_zeros(settings.n);
    let traces = configs
        .iter()
        .map(|c| run(&op, c, &x0, None))
        .collect::<Result<Vec<_>>>()?;

    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for t in &traces {
            let path = dir.join(format!("{}.csv", t.method.name()));
            t.save_csv(&path)?;
            files.push(path);
        }
        let path = dir.join("residuals.csv");
        write_residual_table(&traces, &path)?;
        files.push(path);
    }
    Ok(RotationOutputs { traces, files })
}

fn write_residual_table(traces: &[Trace], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header = vec!["k".to_string()];
    header.extend(traces.iter().map(|t| t.method.name().to_string()));
    let rows = traces.iter().map(Trace::len).max().unwrap_or(0);
    let write = |w: &mut csv::Writer<_>| -> std::result::Result<(), csv::Error> {
        w.write_record(&header)?;
        for k in 0..rows {
            let mut row = vec![k.to_string()];
            row.extend(
                traces
                    .iter()
                    .map(|t| t.residual_at(k).map(fmt_float).unwrap_or_default()),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    };
    write(&mut w).map_err(|e| Error::csv(path, e))
}
