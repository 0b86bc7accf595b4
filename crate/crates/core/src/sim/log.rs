use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of the trajectory CSV.
pub const TRAJECTORY_HEADER: &str =
    "t,v_d,v_v,x1,x2,u,delta_hjb,p_batt,wc_norm,wa_norm,xtilde_norm,lambda_min_P,reset_count";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub v_d: f64,
    pub v_v: f64,
    pub x1: f64,
    pub x2: f64,
    /// Applied control (after exploration and saturation).
    pub u: f64,
    pub delta_hjb: f64,
    pub p_batt: f64,
    pub wc_norm: f64,
    pub wa_norm: f64,
    pub xtilde_norm: f64,
    #[serde(rename = "lambda_min_P")]
    pub lambda_min_p: f64,
    pub reset_count: u64,
}

/// One row per controller step, uniformly spaced by `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryLog {
    pub fn new(dt: f64) -> Self {
        Self { dt, rows: Vec::new() }
    }

    pub fn push(&mut self, row: TrajectoryRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, f: impl Fn(&TrajectoryRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            let mut out = TRAJECTORY_HEADER.as_bytes().to_vec();
            out.push(b'\n');
            return Ok(out);
        }
        w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
        if header != TRAJECTORY_HEADER {
            return Err(Error::InvalidInput(format!(
                "{}: unexpected trajectory header `{header}`",
                path.display()
            )));
        }
        let rows = reader.deserialize().collect::<std::result::Result<Vec<TrajectoryRow>, _>>()?;
        let dt = if rows.len() > 1 { rows[1].t - rows[0].t } else { 0.0 };
        Ok(Self { dt, rows })
    }
}
