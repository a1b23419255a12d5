use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{CorrespondenceMap, Direction, StageFlags};
use crate::error::Result;
use crate::mobius::MobiusTransform;

/// Outcome of one off-diagonal matrix entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub i: usize,
    pub j: usize,
    /// NaN when the pair failed.
    #[serde(with = "nan_as_null")]
    pub dpc: f64,
    pub direction: Option<Direction>,
    pub candidate: Option<MobiusTransform>,
    pub flags: Option<StageFlags>,
    pub error: Option<String>,
}

impl PairSummary {
    pub fn new(i: usize, j: usize, result: std::result::Result<CorrespondenceMap, String>) -> Self {
        match result {
            Ok(c) => Self {
                i,
                j,
                dpc: c.dpc_value,
                direction: Some(c.direction),
                candidate: Some(c.candidate),
                flags: Some(c.stage_flags),
                error: None,
            },
            Err(e) => Self { i, j, dpc: f64::NAN, direction: None, candidate: None, flags: None, error: Some(e) },
        }
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub pairs: Vec<PairSummary>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// Header row of names, then one row per surface led by its name.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| if v.is_nan() { "NaN".to_string() } else { format!("{v:.17e}") }));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_pairs_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.pairs)?;
        Ok(())
    }
}

impl CorrespondenceMap {
    /// One row per sample: position, image, weight and residual after the rigid fit.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sample", "vertex", "x", "y", "z", "image_x", "image_y", "image_z", "area", "residual"])?;
        for (l, r) in self.residuals().into_iter().enumerate() {
            let q = self.sample_points[l];
            let c = self.image_points[l];
            w.write_record(&[
                l.to_string(),
                self.sample_indices[l].to_string(),
                q[0].to_string(),
                q[1].to_string(),
                q[2].to_string(),
                c[0].to_string(),
                c[1].to_string(),
                c[2].to_string(),
                self.sample_areas[l].to_string(),
                r.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
