use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::solve::{Exogenous, Init, Solver};
use super::{Mscm, SimError};
use crate::exec::{map_range, Execution};

/// `n` samples of one regime, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    /// Intervention targets; empty for observational data.
    pub targets: Vec<String>,
    pub seed: u64,
    pub model: Option<String>,
    pub max_iterations: usize,
    pub max_residual: f64,
    n: usize,
    values: Vec<f64>,
}

/// JSON companion of a dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub data: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub targets: Vec<String>,
    pub n: usize,
    pub seed: u64,
    pub columns: Vec<String>,
    #[serde(default)]
    pub max_iterations: usize,
    #[serde(default)]
    pub max_residual: f64,
}

impl Dataset {
    pub fn from_rows(columns: Vec<String>, targets: Vec<String>, rows: &[Vec<f64>]) -> Result<Dataset, SimError> {
        let d = columns.len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(SimError::Format(format!("row of length {} for {d} columns", r.len())));
        }
        Ok(Dataset {
            columns,
            targets,
            seed: 0,
            model: None,
            max_iterations: 0,
            max_residual: 0.0,
            n: rows.len(),
            values: rows.concat(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.d();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.values[i * self.d() + j]).collect()
    }

    pub fn is_observational(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), SimError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns).map_err(csv_err)?;
        for i in 0..self.n {
            out.write_record(self.row(i).iter().map(|v| format!("{v:?}"))).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R, targets: Vec<String>) -> Result<Dataset, SimError> {
        let mut input = csv::Reader::from_reader(r);
        let columns: Vec<String> = input.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in input.records() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| SimError::Format(format!("value '{f}': {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Dataset::from_rows(columns, targets, &rows)
    }

    pub fn manifest(&self, data_file: &str) -> DatasetManifest {
        DatasetManifest {
            data: data_file.to_string(),
            model: self.model.clone(),
            targets: self.targets.clone(),
            n: self.n,
            seed: self.seed,
            columns: self.columns.clone(),
            max_iterations: self.max_iterations,
            max_residual: self.max_residual,
        }
    }

    /// Write `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(), SimError> {
        let csv_name = format!("{stem}.csv");
        self.write_csv(std::fs::File::create(dir.join(&csv_name))?)?;
        let manifest = serde_json::to_string_pretty(&self.manifest(&csv_name)).expect("manifest serialises");
        std::fs::write(dir.join(format!("{stem}.json")), manifest)?;
        Ok(())
    }

    /// Load a dataset from its manifest; the CSV path is relative to the manifest.
    pub fn load(manifest_path: &Path) -> Result<Dataset, SimError> {
        let text = std::fs::read_to_string(manifest_path)?;
        let m: DatasetManifest = serde_json::from_str(&text).map_err(|e| SimError::Format(e.to_string()))?;
        let csv_path = manifest_path.parent().unwrap_or(Path::new(".")).join(&m.data);
        let mut ds = Dataset::read_csv(std::fs::File::open(csv_path)?, m.targets)?;
        if ds.columns != m.columns || ds.n != m.n {
            return Err(SimError::Format("manifest does not match data file".into()));
        }
        ds.seed = m.seed;
        ds.model = m.model;
        ds.max_iterations = m.max_iterations;
        ds.max_residual = m.max_residual;
        Ok(ds)
    }
}

fn csv_err(e: csv::Error) -> SimError {
    SimError::Format(e.to_string())
}

/// Draw `n` independent samples from `m` (intervened or not). Row `i` uses its
/// own random stream derived from `seed`, so results do not depend on `exec`.
pub fn sample(m: &Mscm, n: usize, seed: u64, exec: Execution) -> Result<Dataset, SimError> {
    let solver = Solver::new(m);
    let rows = map_range(exec, n, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let ex = Exogenous::draw(m, &mut rng);
        solver.solve(&ex, Init::Zero)
    });
    let d = m.d();
    let mut values = Vec::with_capacity(n * d);
    let mut max_iterations = 0;
    let mut max_residual: f64 = 0.0;
    for r in rows {
        let fp = r?;
        max_iterations = max_iterations.max(fp.iterations);
        max_residual = max_residual.max(fp.residual);
        values.extend(fp.x);
    }
    Ok(Dataset {
        columns: m.observed().to_vec(),
        targets: m.names_of(m.targets()),
        seed,
        model: None,
        max_iterations,
        max_residual,
        n,
        values,
    })
}
