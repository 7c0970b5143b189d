//! On-disk instance format.
//!
//! A JSON document with a version tag. Dense measurements are stored as the
//! packed row-major lower triangle (`A[0][0], A[1][0], A[1][1], A[2][0], ...`)
//! so the symmetric reconstruction is exact by construction; rank-one
//! measurements `a a^T` store the factor `a`. Floats are written in their
//! shortest round-trip decimal form and parsed with correct rounding, so a
//! write/read cycle is bit-exact.

use std::fs;
use std::path::Path;

use bpg::{Measurements, QipInstance, Regularizer};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    DenseLower,
    RankOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizerSpec {
    L1 { theta: f64 },
    L0 { s: usize },
}

impl From<Regularizer> for RegularizerSpec {
    fn from(reg: Regularizer) -> Self {
        match reg {
            Regularizer::L1 { theta } => RegularizerSpec::L1 { theta },
            Regularizer::L0Ball { s } => RegularizerSpec::L0 { s },
        }
    }
}

impl From<RegularizerSpec> for Regularizer {
    fn from(spec: RegularizerSpec) -> Self {
        match spec {
            RegularizerSpec::L1 { theta } => Regularizer::L1 { theta },
            RegularizerSpec::L0 { s } => Regularizer::L0Ball { s },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub d: usize,
    pub m: usize,
    pub encoding: Encoding,
    pub matrices: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub regularizer: RegularizerSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<f64>>,
}

fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

fn pack_lower(a: &Array2<f64>) -> Vec<f64> {
    let d = a.nrows();
    let mut out = Vec::with_capacity(packed_len(d));
    for i in 0..d {
        for j in 0..=i {
            out.push(a[[i, j]]);
        }
    }
    out
}

fn unpack_lower(packed: &[f64], d: usize) -> Array2<f64> {
    let mut a = Array2::zeros((d, d));
    let mut it = packed.iter();
    for i in 0..d {
        for j in 0..=i {
            let v = *it.next().expect("length checked");
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    a
}

impl InstanceFile {
    pub fn from_instance(inst: &QipInstance, ground_truth: Option<&Array1<f64>>) -> Self {
        let (encoding, matrices) = match inst.measurements() {
            Measurements::Dense(ms) => (Encoding::DenseLower, ms.iter().map(pack_lower).collect()),
            Measurements::RankOne(fs) => (Encoding::RankOne, fs.iter().map(|a| a.to_vec()).collect()),
        };
        InstanceFile {
            schema_version: SCHEMA_VERSION,
            d: inst.dim(),
            m: inst.num_measurements(),
            encoding,
            matrices,
            b: inst.b().to_vec(),
            regularizer: inst.regularizer().into(),
            ground_truth: ground_truth.map(|x| x.to_vec()),
        }
    }

    /// Checks the structural invariants that the JSON types cannot express.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Schema(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.d < 1 {
            return bad("d must be at least 1".into());
        }
        if self.m < 1 {
            return bad("m must be at least 1".into());
        }
        if self.matrices.len() != self.m {
            return bad(format!("matrices has {} entries but m = {}", self.matrices.len(), self.m));
        }
        if self.b.len() != self.m {
            return bad(format!("b has {} entries but m = {}", self.b.len(), self.m));
        }
        let expected = match self.encoding {
            Encoding::DenseLower => packed_len(self.d),
            Encoding::RankOne => self.d,
        };
        for (i, row) in self.matrices.iter().enumerate() {
            if row.len() != expected {
                return bad(format!(
                    "matrices[{i}] has {} entries, expected {expected} for d = {} ({:?})",
                    row.len(),
                    self.d,
                    self.encoding
                ));
            }
        }
        if let Some(x) = &self.ground_truth {
            if x.len() != self.d {
                return bad(format!("ground_truth has {} entries but d = {}", x.len(), self.d));
            }
        }
        match self.regularizer {
            RegularizerSpec::L0 { s } if s == 0 || s >= self.d => {
                bad(format!("regularizer.s = {s} must satisfy 1 <= s < d = {}", self.d))
            }
            RegularizerSpec::L1 { theta } if !(theta.is_finite() && theta > 0.0) => {
                bad(format!("regularizer.theta = {theta} must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn to_instance(&self) -> Result<QipInstance> {
        self.validate()?;
        let b = Array1::from(self.b.clone());
        let reg = self.regularizer.into();
        let inst = match self.encoding {
            Encoding::DenseLower => {
                QipInstance::dense(self.matrices.iter().map(|p| unpack_lower(p, self.d)).collect(), b, reg)
            }
            Encoding::RankOne => {
                QipInstance::rank_one(self.matrices.iter().map(|a| Array1::from(a.clone())).collect(), b, reg)
            }
        };
        Ok(inst?)
    }

    pub fn ground_truth(&self) -> Option<Array1<f64>> {
        self.ground_truth.as_ref().map(|x| Array1::from(x.clone()))
    }

    /// Parses and validates; `origin` names the source in error messages.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|source| CliError::Parse { path: origin.to_path_buf(), source })?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("instance files always serialize");
        text.push('\n');
        text
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn lower_triangle_layout() {
        let a = array![[1.0, 2.0, 4.0], [2.0, 3.0, 5.0], [4.0, 5.0, 6.0]];
        assert_eq!(pack_lower(&a), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(unpack_lower(&pack_lower(&a), 3), a);
    }

    #[test]
    fn parse_error_has_position() {
        let err = InstanceFile::from_json("{\n  \"schema_version\": 1,\n  \"d\": \"two\"\n}", Path::new("x.json"))
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"schema_version":1,"d":2,"m":1,"encoding":"rank_one","matrices":[[1,0]],"b":[1],
            "regularizer":{"kind":"l1","theta":0.1},"extra":0}"#;
        let msg = InstanceFile::from_json(text, Path::new("x.json")).unwrap_err().to_string();
        assert!(msg.contains("extra") && msg.contains("line 2"), "{msg}");
    }
}
