use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::DatasetError;
use crate::profile::ProfileKind;

pub const RECORD_HEADER: [&str; 8] = [
    "t", "I", "V_true", "V_spmt", "T_spmt", "soc0", "soc_bulk", "soc_surf",
];

/// One aligned sample of truth and SPMT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    #[serde(rename = "I")]
    pub current: f64,
    #[serde(rename = "V_true")]
    pub v_true: f64,
    #[serde(rename = "V_spmt")]
    pub v_spmt: f64,
    #[serde(rename = "T_spmt")]
    pub t_spmt: f64,
    pub soc0: f64,
    pub soc_bulk: f64,
    pub soc_surf: f64,
}

/// Rows of one (profile, soc0) pair, ending at the earlier cutoff of truth and
/// SPMT.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub label: String,
    pub soc0: f64,
    pub profile: ProfileKind,
    pub records: Vec<Record>,
    /// How the source runs ended, for the manifest.
    pub termination: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// File stem used on disk, e.g. `CC-0.5C_soc0.46`.
    pub fn stem(&self) -> String {
        format!("{}_soc{}", self.label, self.soc0)
    }

    pub fn column(&self, f: impl Fn(&Record) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut csv = csv::Writer::from_writer(writer);
        if self.records.is_empty() {
            csv.write_record(RECORD_HEADER)?;
        }
        for r in &self.records {
            csv.serialize(r)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>, DatasetError> {
        let mut out = Vec::new();
        self.write_csv(&mut out)?;
        Ok(out)
    }

    /// Parse rows written by [`Dataset::write_csv`]; label and profile come
    /// from the caller (normally the manifest).
    pub fn read_csv<R: Read>(
        reader: R,
        label: impl Into<String>,
        soc0: f64,
        profile: ProfileKind,
    ) -> Result<Self, DatasetError> {
        let mut csv = csv::Reader::from_reader(reader);
        let headers = csv.headers()?.clone();
        for name in RECORD_HEADER {
            if !headers.iter().any(|h| h == name) {
                return Err(DatasetError::MissingColumn(name.to_string()));
            }
        }
        let records = csv.deserialize().collect::<Result<Vec<Record>, _>>()?;
        Ok(Self {
            label: label.into(),
            soc0,
            profile,
            records,
            termination: String::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = Dataset {
            label: "CC-1C".into(),
            soc0: 0.46,
            profile: ProfileKind::Constant { c_rate: 1.0 },
            records: vec![Record {
                t: 0.0,
                current: 2.300_428_173_1,
                v_true: 3.769_123_456_789_012,
                v_spmt: 3.771,
                t_spmt: 298.15,
                soc0: 0.46,
                soc_bulk: 0.1 + 0.2,
                soc_surf: 1.0 / 3.0,
            }],
            termination: String::new(),
        };
        let bytes = ds.to_csv_bytes().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("t,I,V_true,V_spmt,T_spmt,soc0,soc_bulk,soc_surf\n"));
        let back = Dataset::read_csv(&bytes[..], "CC-1C", 0.46, ds.profile.clone()).unwrap();
        assert_eq!(back.records, ds.records);
    }

    #[test]
    fn missing_column_is_named() {
        let text = "t,I,V_true\n0,1,3.7\n";
        match Dataset::read_csv(
            text.as_bytes(),
            "x",
            0.5,
            ProfileKind::Constant { c_rate: 1.0 },
        ) {
            Err(DatasetError::MissingColumn(c)) => assert_eq!(c, "V_spmt"),
            other => panic!("{other:?}"),
        }
    }
}
