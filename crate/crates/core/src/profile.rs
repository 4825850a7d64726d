//! Applied-current profiles sampled at 1 s.
//!
//! A profile holds one current per integer second, and the current is held
//! constant until the next sample. Positive current discharges the cell.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SpmtError;

/// Shortest drive cycle that still contains several pulses (s).
pub const MIN_DRIVE_CYCLE_SECONDS: usize = 600;

/// Largest regenerative (charging) current, as a fraction of the peak.
const MAX_REGEN_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveFamily {
    /// Frequent moderate pulses separated by rests.
    UddsLike,
    /// Longer, higher pulses with short gaps.
    Us06Like,
}

impl DriveFamily {
    pub fn tag(self) -> &'static str {
        match self {
            DriveFamily::UddsLike => "UDDS",
            DriveFamily::Us06Like => "US06",
        }
    }

    fn shape(self) -> PulseShape {
        match self {
            DriveFamily::UddsLike => PulseShape {
                width: (8.0, 30.0),
                gap: (15.0, 60.0),
                amplitude: (0.15, 1.0),
                regen_probability: 0.25,
            },
            DriveFamily::Us06Like => PulseShape {
                width: (20.0, 60.0),
                gap: (8.0, 30.0),
                amplitude: (0.3, 1.0),
                regen_probability: 0.2,
            },
        }
    }
}

impl std::str::FromStr for DriveFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "udds" | "udds-like" => Ok(DriveFamily::UddsLike),
            "us06" | "us06-like" => Ok(DriveFamily::Us06Like),
            other => Err(format!("unknown drive-cycle family `{other}`")),
        }
    }
}

struct PulseShape {
    width: (f64, f64),
    gap: (f64, f64),
    amplitude: (f64, f64),
    regen_probability: f64,
}

/// How a profile was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileKind {
    Constant { c_rate: f64 },
    DriveCycle { family: DriveFamily, seed: u64 },
    Tabulated { source: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentProfile {
    pub label: String,
    pub kind: ProfileKind,
    /// Current (A) at t = 0, 1, 2, ... s.
    pub samples: Vec<f64>,
}

impl CurrentProfile {
    /// Last sampled time (s).
    pub fn duration(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64
    }

    /// Current at time `t`, held from the preceding sample.
    pub fn current_at(&self, t: f64) -> f64 {
        let index = (t + 1e-9).floor().max(0.0) as usize;
        self.samples[index.min(self.samples.len() - 1)]
    }

    /// Constant current `current` (A) for `t_end` seconds.
    pub fn constant_current(label: impl Into<String>, current: f64, t_end: usize) -> Self {
        Self {
            label: label.into(),
            kind: ProfileKind::Tabulated {
                source: format!("constant {current} A"),
            },
            samples: vec![current; t_end + 1],
        }
    }

    pub fn max_current(&self) -> f64 {
        self.samples
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean_abs_current(&self) -> f64 {
        self.samples.iter().map(|i| i.abs()).sum::<f64>() / self.samples.len() as f64
    }

    /// Read a `t,I` CSV with one row per integer second starting at 0.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self, SpmtError> {
        let path = path.as_ref();
        let bad = |msg: String| SpmtError::Input(format!("{}: {msg}", path.display()));
        let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
        let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| bad(format!("missing column `{name}`")))
        };
        let (t_col, i_col) = (column("t")?, column("I")?);
        let mut samples = Vec::new();
        for (k, record) in reader.records().enumerate() {
            let record = record.map_err(|e| bad(e.to_string()))?;
            let parse = |col: usize| -> Result<f64, SpmtError> {
                record
                    .get(col)
                    .unwrap_or("")
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| bad(format!("row {}: {e}", k + 1)))
            };
            let t = parse(t_col)?;
            if t != k as f64 {
                return Err(bad(format!(
                    "row {} has t = {t}; expected one sample per second from 0",
                    k + 1
                )));
            }
            samples.push(parse(i_col)?);
        }
        if samples.is_empty() {
            return Err(bad("profile has no samples".into()));
        }
        Ok(Self {
            label: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "profile".into()),
            kind: ProfileKind::Tabulated {
                source: path.display().to_string(),
            },
            samples,
        })
    }
}

/// Label used for a constant-current profile, e.g. `CC-0.5C`.
pub fn constant_label(c_rate: f64) -> String {
    format!("CC-{c_rate}C")
}

/// Constant discharge at `c_rate` times the capacity for `t_end` seconds.
pub fn make_constant_profile(
    c_rate: f64,
    capacity_ah: f64,
    t_end: usize,
) -> Result<CurrentProfile, SpmtError> {
    if !(c_rate > 0.0 && c_rate.is_finite()) {
        return Err(SpmtError::Input(format!(
            "C-rate must be positive, got {c_rate}"
        )));
    }
    Ok(CurrentProfile {
        label: constant_label(c_rate),
        kind: ProfileKind::Constant { c_rate },
        samples: vec![c_rate * capacity_ah; t_end + 1],
    })
}

/// Seeded synthetic drive cycle: raised-cosine pulses separated by rests,
/// rescaled so that the peak discharge current is exactly 10C.
pub fn make_drive_cycle(
    seed: u64,
    family: DriveFamily,
    capacity_ah: f64,
    t_end: usize,
) -> Result<CurrentProfile, SpmtError> {
    if t_end < MIN_DRIVE_CYCLE_SECONDS {
        return Err(SpmtError::Input(format!(
            "drive cycles need at least {MIN_DRIVE_CYCLE_SECONDS} s, got {t_end}"
        )));
    }
    let shape = family.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![0.0; t_end + 1];

    let mut start = rng.random_range(shape.gap.0..shape.gap.1);
    while start < t_end as f64 {
        let width = rng.random_range(shape.width.0..shape.width.1);
        let regen = rng.random_bool(shape.regen_probability);
        let level = if regen {
            -rng.random_range(0.05..MAX_REGEN_FRACTION)
        } else {
            rng.random_range(shape.amplitude.0..shape.amplitude.1)
        };
        let ramp = (width / 3.0).min(5.0);
        let first = start.ceil() as usize;
        let last = ((start + width).floor() as usize).min(t_end);
        for (k, sample) in samples.iter_mut().enumerate().take(last + 1).skip(first) {
            let s = k as f64 - start;
            let edge = s.min(width - s);
            let envelope = if edge >= ramp {
                1.0
            } else {
                0.5 * (1.0 - (PI * edge / ramp).cos())
            };
            *sample += level * envelope;
        }
        start += width + rng.random_range(shape.gap.0..shape.gap.1);
    }

    let peak = samples.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(SpmtError::Input(format!(
            "seed {seed} produced no discharge pulse"
        )));
    }
    let i_max = 10.0 * capacity_ah;
    for sample in &mut samples {
        *sample = (*sample / peak * i_max).max(-MAX_REGEN_FRACTION * i_max);
    }
    Ok(CurrentProfile {
        label: format!("{}-seed{seed}", family.tag()),
        kind: ProfileKind::DriveCycle { family, seed },
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_currents() {
        for (rate, expected) in [(1.0, 2.3), (0.1, 0.23), (10.0, 23.0)] {
            let p = make_constant_profile(rate, 2.3, 10).unwrap();
            assert!((p.samples[0] - expected).abs() < 1e-12);
            assert_eq!(p.samples.len(), 11);
            assert_eq!(p.duration(), 10.0);
        }
        assert!(make_constant_profile(0.0, 2.3, 10).is_err());
        assert_eq!(constant_label(0.5), "CC-0.5C");
        assert_eq!(constant_label(10.0), "CC-10C");
    }

    #[test]
    fn zero_order_hold_between_samples() {
        let p = CurrentProfile {
            label: "x".into(),
            kind: ProfileKind::Tabulated {
                source: "test".into(),
            },
            samples: vec![1.0, 2.0, 3.0],
        };
        assert_eq!(p.current_at(0.0), 1.0);
        assert_eq!(p.current_at(0.5), 1.0);
        assert_eq!(p.current_at(1.0), 2.0);
        assert_eq!(p.current_at(1.999), 2.0);
        assert_eq!(p.current_at(50.0), 3.0);
    }

    #[test]
    fn drive_cycle_is_deterministic_and_peaks_at_ten_c() {
        for family in [DriveFamily::UddsLike, DriveFamily::Us06Like] {
            let a = make_drive_cycle(7, family, 2.3, 1200).unwrap();
            let b = make_drive_cycle(7, family, 2.3, 1200).unwrap();
            assert_eq!(a, b);
            let c = make_drive_cycle(8, family, 2.3, 1200).unwrap();
            assert_ne!(a.samples, c.samples);
            let max = a.max_current();
            assert!((9.9 * 2.3..=10.0 * 2.3).contains(&max), "{max}");
            assert!(a.samples.iter().all(|&i| i >= -0.2 * 23.0 - 1e-12));
        }
        assert!(make_drive_cycle(1, DriveFamily::UddsLike, 2.3, 599).is_err());
    }

    #[test]
    fn udds_is_milder_than_us06() {
        for seed in 0..20 {
            let udds = make_drive_cycle(seed, DriveFamily::UddsLike, 2.3, 1200).unwrap();
            let us06 = make_drive_cycle(seed, DriveFamily::Us06Like, 2.3, 1200).unwrap();
            assert!(
                udds.mean_abs_current() < us06.mean_abs_current(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("steps.csv");
        std::fs::write(&path, "t,I\n0,1.5\n1,-0.5\n2,0\n").unwrap();
        let p = CurrentProfile::from_csv(&path).unwrap();
        assert_eq!(p.samples, vec![1.5, -0.5, 0.0]);
        assert_eq!(p.label, "steps");

        std::fs::write(&path, "t,I\n0,1.5\n2,-0.5\n").unwrap();
        assert!(CurrentProfile::from_csv(&path).is_err());
    }
}
