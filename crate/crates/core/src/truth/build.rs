use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Record};
use super::{truth_voltage, TruthParameters};
use crate::error::{DatasetError, SpmtError};
use crate::hash::sha256_hex;
use crate::params::{CellParameters, ParameterFile, SolverSettings};
use crate::profile::{make_constant_profile, make_drive_cycle, CurrentProfile, DriveFamily};
use crate::spmt::{simulate, Termination, Trace};

/// Initial and ambient temperature of every generated run (K).
pub const AMBIENT: f64 = 298.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveCycleSpec {
    pub label: String,
    pub family: DriveFamily,
    pub seed: u64,
}

/// Profiles of one side of the split; each runs from every listed soc0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartSpec {
    pub c_rates: Vec<f64>,
    pub soc0s: Vec<f64>,
    pub drive_cycles: Vec<DriveCycleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub drive_cycle_seconds: usize,
    pub train: PartSpec,
    pub test: PartSpec,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self::with_seed(1)
    }
}

impl SplitSpec {
    /// The standard protocol with drive-cycle seeds derived from `seed`
    /// (`seed = 1` gives 11/12 for training and 21/22 for testing).
    pub fn with_seed(seed: u64) -> Self {
        let cycle = |label: &str, family, seed| DriveCycleSpec {
            label: label.into(),
            family,
            seed,
        };
        Self {
            drive_cycle_seconds: 1800,
            train: PartSpec {
                c_rates: vec![0.1, 0.2, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
                soc0s: vec![0.27, 0.52, 0.67, 0.74],
                drive_cycles: vec![
                    cycle("UDDS-A", DriveFamily::UddsLike, 10 * seed + 1),
                    cycle("US06-A", DriveFamily::Us06Like, 10 * seed + 2),
                ],
            },
            test: PartSpec {
                c_rates: vec![0.5, 1.0, 3.0, 5.0, 7.0, 10.0],
                soc0s: vec![0.46, 0.58, 0.70],
                drive_cycles: vec![
                    cycle("UDDS-B", DriveFamily::UddsLike, 20 * seed + 1),
                    cycle("US06-B", DriveFamily::Us06Like, 20 * seed + 2),
                ],
            },
        }
    }

    /// Every (profile, soc0) pair of one part, constant currents first.
    pub fn profiles(
        &self,
        part: &PartSpec,
        capacity_ah: f64,
    ) -> Result<Vec<(CurrentProfile, f64)>, SpmtError> {
        let mut out = Vec::new();
        for &rate in &part.c_rates {
            let t_end = (3600.0 / rate).ceil() as usize;
            let profile = make_constant_profile(rate, capacity_ah, t_end)?;
            out.extend(part.soc0s.iter().map(|&s| (profile.clone(), s)));
        }
        for cycle in &part.drive_cycles {
            let mut profile = make_drive_cycle(
                cycle.seed,
                cycle.family,
                capacity_ah,
                self.drive_cycle_seconds,
            )?;
            profile.label = cycle.label.clone();
            out.extend(part.soc0s.iter().map(|&s| (profile.clone(), s)));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSplit {
    pub train: Vec<Dataset>,
    pub test: Vec<Dataset>,
}

fn saturation_error(
    label: &str,
    soc0: f64,
    trace: &Trace,
    params: &CellParameters,
) -> DatasetError {
    let Termination::Saturated {
        t,
        electrode,
        node,
        value,
    } = trace.termination
    else {
        unreachable!("only called for saturated traces")
    };
    DatasetError::Simulation {
        label: label.into(),
        soc0,
        t,
        source: SpmtError::Saturation {
            electrode,
            node,
            value,
            c_max: params.electrode(electrode).c_s_max,
        },
    }
}

/// Simulate the truth and the model for one (profile, soc0) pair and join
/// them up to the earlier voltage cutoff.
pub fn build_one(
    truth: &TruthParameters,
    model: &ParameterFile,
    profile: &CurrentProfile,
    soc0: f64,
) -> Result<Dataset, DatasetError> {
    let wrap = |source: SpmtError| DatasetError::Simulation {
        label: profile.label.clone(),
        soc0,
        t: 0.0,
        source,
    };
    let t_end = profile.duration();
    let plain = simulate(
        &model.cell,
        model.solver,
        soc0,
        profile,
        AMBIENT,
        AMBIENT,
        t_end,
    )
    .map_err(wrap)?;
    let reference = match &truth.base {
        Some(base) => {
            simulate(base, model.solver, soc0, profile, AMBIENT, AMBIENT, t_end).map_err(wrap)?
        }
        None => plain.clone(),
    };
    let v_true = truth_voltage(&reference, truth);
    let window = model.cell.v_min..=model.cell.v_max;
    let truth_rows = v_true
        .iter()
        .position(|v| !window.contains(v))
        .unwrap_or(v_true.len());
    let n = truth_rows.min(plain.len());

    for (trace, params) in [
        (&plain, &model.cell),
        (&reference, truth.base_or(&model.cell)),
    ] {
        if trace.termination.is_saturation() && trace.len() <= n {
            return Err(saturation_error(&profile.label, soc0, trace, params));
        }
    }
    let termination = if n == truth_rows && truth_rows < v_true.len() {
        format!(
            "truth voltage cutoff at t={} s: V={}",
            reference.rows[truth_rows].t, v_true[truth_rows]
        )
    } else if n == plain.len() {
        plain.termination.describe()
    } else {
        reference.termination.describe()
    };

    let records = plain.rows[..n]
        .iter()
        .zip(&v_true)
        .map(|(row, &v)| Record {
            t: row.t,
            current: row.current,
            v_true: v,
            v_spmt: row.output.voltage,
            t_spmt: row.output.temperature,
            soc0,
            soc_bulk: row.output.soc_bulk,
            soc_surf: row.output.soc_surf,
        })
        .collect();
    Ok(Dataset {
        label: profile.label.clone(),
        soc0,
        profile: profile.kind.clone(),
        records,
        termination,
    })
}

/// All training and test datasets of `split`.
pub fn build_datasets(
    truth: &TruthParameters,
    model: &ParameterFile,
    split: &SplitSpec,
) -> Result<DatasetSplit, DatasetError> {
    truth
        .validate()
        .map_err(|e| DatasetError::Invalid(e.to_string()))?;
    let capacity = model.cell.capacity_ah();
    let mut out = DatasetSplit::default();
    for (part, sink) in [(&split.train, &mut out.train), (&split.test, &mut out.test)] {
        let pairs = split
            .profiles(part, capacity)
            .map_err(|source| DatasetError::Simulation {
                label: "profile synthesis".into(),
                soc0: f64::NAN,
                t: 0.0,
                source,
            })?;
        for (profile, soc0) in pairs {
            sink.push(build_one(truth, model, &profile, soc0)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub split: SplitRole,
    pub label: String,
    pub soc0: f64,
    pub profile: crate::profile::ProfileKind,
    pub file: String,
    pub rows: usize,
    pub sha256: String,
    pub termination: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub params_file: String,
    pub params_hash: String,
    pub truth_file: String,
    pub truth_hash: String,
    pub solver: SolverSettings,
    pub split_spec: SplitSpec,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
const MANIFEST_FORMAT: &str = "spmt-hybrid-datasets/1";
const PARAMS_FILE: &str = "params.json";
const TRUTH_FILE: &str = "truth.json";

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }
}

/// Everything read back from a dataset directory.
#[derive(Debug, Clone)]
pub struct LoadedDatasets {
    pub manifest: Manifest,
    pub manifest_hash: String,
    pub params: ParameterFile,
    pub truth: TruthParameters,
    pub split: DatasetSplit,
}

fn io_err(path: &Path, e: std::io::Error) -> DatasetError {
    DatasetError::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// Write datasets, the parameter files they were built from and the
/// manifest. Files are staged next to `out` and moved into place only once
/// all of them have been written, so a failure leaves no partial directory.
pub fn write_dataset_dir(
    out: &Path,
    split: &DatasetSplit,
    model: &ParameterFile,
    truth: &TruthParameters,
    spec: &SplitSpec,
) -> Result<Manifest, DatasetError> {
    if out.exists()
        && !out.join(MANIFEST_FILE).exists()
        && out.read_dir().map_err(|e| io_err(out, e))?.next().is_some()
    {
        return Err(DatasetError::Invalid(format!(
            "{} exists and is not a dataset directory; refusing to replace it",
            out.display()
        )));
    }
    let staging = staging_path(out);
    if staging.exists() {
        std::fs::remove_dir_all(&staging).map_err(|e| io_err(&staging, e))?;
    }
    let result = write_into(&staging, split, model, truth, spec);
    let manifest = match result {
        Ok(m) => m,
        Err(e) => {
            let _ = std::fs::remove_dir_all(&staging);
            return Err(e);
        }
    };
    if out.exists() {
        std::fs::remove_dir_all(out).map_err(|e| io_err(out, e))?;
    }
    std::fs::rename(&staging, out).map_err(|e| io_err(out, e))?;
    Ok(manifest)
}

fn staging_path(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "datasets".into());
    out.with_file_name(format!(".{name}.partial"))
}

fn write_into(
    dir: &Path,
    split: &DatasetSplit,
    model: &ParameterFile,
    truth: &TruthParameters,
    spec: &SplitSpec,
) -> Result<Manifest, DatasetError> {
    for sub in ["train", "test"] {
        std::fs::create_dir_all(dir.join(sub)).map_err(|e| io_err(dir, e))?;
    }
    let write = |name: &str, bytes: &[u8]| -> Result<(), DatasetError> {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))
    };
    write(PARAMS_FILE, model.to_json().as_bytes())?;
    write(TRUTH_FILE, truth.to_json().as_bytes())?;

    let mut entries = Vec::new();
    for (role, sets) in [
        (SplitRole::Train, &split.train),
        (SplitRole::Test, &split.test),
    ] {
        let sub = match role {
            SplitRole::Train => "train",
            SplitRole::Test => "test",
        };
        for ds in sets {
            let file = format!("{sub}/{}.csv", ds.stem());
            let bytes = ds.to_csv_bytes()?;
            write(&file, &bytes)?;
            entries.push(ManifestEntry {
                split: role.clone(),
                label: ds.label.clone(),
                soc0: ds.soc0,
                profile: ds.profile.clone(),
                file,
                rows: ds.len(),
                sha256: sha256_hex(&bytes),
                termination: ds.termination.clone(),
            });
        }
    }
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        params_file: PARAMS_FILE.into(),
        params_hash: model.hash(),
        truth_file: TRUTH_FILE.into(),
        truth_hash: truth.hash(),
        solver: model.solver,
        split_spec: spec.clone(),
        entries,
    };
    write(MANIFEST_FILE, manifest.to_json().as_bytes())?;
    Ok(manifest)
}

/// Read a directory produced by [`write_dataset_dir`], checking every file
/// against the manifest's hashes.
pub fn load_dataset_dir(dir: &Path) -> Result<LoadedDatasets, DatasetError> {
    let read = |name: &str| -> Result<Vec<u8>, DatasetError> {
        let path = dir.join(name);
        std::fs::read(&path).map_err(|e| io_err(&path, e))
    };
    let manifest_bytes = read(MANIFEST_FILE)?;
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(DatasetError::Invalid(format!(
            "unsupported manifest format `{}`",
            manifest.format
        )));
    }
    let params = ParameterFile::from_json(&String::from_utf8_lossy(&read(&manifest.params_file)?))
        .map_err(|e| DatasetError::Invalid(e.to_string()))?;
    let truth = TruthParameters::from_json(&String::from_utf8_lossy(&read(&manifest.truth_file)?))
        .map_err(|e| DatasetError::Invalid(e.to_string()))?;
    let mut split = DatasetSplit::default();
    for entry in &manifest.entries {
        let bytes = read(&entry.file)?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(DatasetError::Invalid(format!(
                "{} does not match its manifest hash",
                entry.file
            )));
        }
        let mut ds = Dataset::read_csv(
            &bytes[..],
            entry.label.clone(),
            entry.soc0,
            entry.profile.clone(),
        )?;
        ds.termination = entry.termination.clone();
        match entry.split {
            SplitRole::Train => split.train.push(ds),
            SplitRole::Test => split.test.push(ds),
        }
    }
    Ok(LoadedDatasets {
        manifest_hash: sha256_hex(&manifest_bytes),
        manifest,
        params,
        truth,
        split,
    })
}
