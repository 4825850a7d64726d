//! Hybrid models: the SPMT runs open loop and its state feeds a network that
//! either corrects its voltage (hybrid-1) or replaces it (hybrid-2).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FnnError, HybridError, ParamError};
use crate::fnn::{
    fit_normalization, split_validation, train, EpochRecord, FnnModel, Samples, TrainConfig,
    TrainedModel, TrainingProvenance,
};
use crate::params::ParameterFile;
use crate::profile::CurrentProfile;
use crate::spmt::{Spmt, Termination, Trace};
use crate::truth::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wiring {
    /// `V = V_spmt + fnn(x)`.
    #[serde(rename = "hybrid-1")]
    Residual,
    /// `V = fnn(x)`.
    #[serde(rename = "hybrid-2")]
    Cascade,
}

impl Wiring {
    pub fn tag(self) -> &'static str {
        match self {
            Wiring::Residual => "hybrid-1",
            Wiring::Cascade => "hybrid-2",
        }
    }
}

impl std::fmt::Display for Wiring {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Wiring {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hybrid-1" => Ok(Wiring::Residual),
            "hybrid-2" => Ok(Wiring::Cascade),
            other => Err(format!(
                "unknown wiring `{other}`; expected hybrid-1 or hybrid-2"
            )),
        }
    }
}

/// Which SPMT quantities enter the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSet {
    /// `[I, T, soc0, soc_bulk, soc_surf]`.
    Full,
    /// `[I, T, soc0]`: the state-of-charge inputs removed.
    WithoutSoc,
}

impl FeatureSet {
    pub fn width(self) -> usize {
        match self {
            FeatureSet::Full => 5,
            FeatureSet::WithoutSoc => 3,
        }
    }
}

/// Network inputs at one sample, all taken from the SPMT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub current: f64,
    pub temperature: f64,
    pub soc0: f64,
    pub soc_bulk: f64,
    pub soc_surf: f64,
}

impl FeatureVector {
    pub fn values(&self, set: FeatureSet) -> Vec<f64> {
        match set {
            FeatureSet::Full => vec![
                self.current,
                self.temperature,
                self.soc0,
                self.soc_bulk,
                self.soc_surf,
            ],
            FeatureSet::WithoutSoc => vec![self.current, self.temperature, self.soc0],
        }
    }

    pub fn from_record(r: &crate::truth::Record) -> Self {
        Self {
            current: r.current,
            temperature: r.t_spmt,
            soc0: r.soc0,
            soc_bulk: r.soc_bulk,
            soc_surf: r.soc_surf,
        }
    }
}

/// One network row per dataset record; targets are `V_true - V_spmt` for
/// hybrid-1 and `V_true` for hybrid-2.
pub fn make_training_table(dataset: &Dataset, wiring: Wiring, features: FeatureSet) -> Samples {
    let mut samples = Samples::new(features.width());
    for r in &dataset.records {
        let y = match wiring {
            Wiring::Residual => r.v_true - r.v_spmt,
            Wiring::Cascade => r.v_true,
        };
        samples
            .push(&FeatureVector::from_record(r).values(features), y)
            .expect("feature width matches the table");
    }
    samples
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub wiring: Wiring,
    pub features: FeatureSet,
    pub spmt_params_hash: String,
    pub spmt: ParameterFile,
    pub fnn: FnnModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<TrainingProvenance>,
}

/// Output of [`HybridModel::predict`].
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// The SPMT run that produced the features.
    pub trace: Trace,
    pub v_hybrid: Vec<f64>,
}

impl Prediction {
    pub fn v_spmt(&self) -> Vec<f64> {
        self.trace.voltages()
    }

    /// True when the SPMT stopped before the end of the profile.
    pub fn truncated(&self) -> bool {
        !matches!(self.trace.termination, Termination::Completed)
    }
}

impl HybridModel {
    /// Bind a network to an SPMT parameter set.
    pub fn new(
        wiring: Wiring,
        features: FeatureSet,
        spmt: ParameterFile,
        fnn: FnnModel,
    ) -> Result<Self, HybridError> {
        fnn.validate()?;
        if fnn.input_dim() != features.width() {
            return Err(HybridError::Invalid(format!(
                "network takes {} inputs but the feature set has {}",
                fnn.input_dim(),
                features.width()
            )));
        }
        Ok(Self {
            wiring,
            features,
            spmt_params_hash: spmt.hash(),
            spmt,
            fnn,
            provenance: None,
        })
    }

    /// Combine the SPMT voltage and the network output for one feature row.
    pub fn combine(&self, v_spmt: f64, x: &FeatureVector) -> Result<f64, HybridError> {
        let out = self.fnn.forward(&x.values(self.features))?;
        Ok(match self.wiring {
            Wiring::Residual => v_spmt + out,
            Wiring::Cascade => out,
        })
    }

    /// Run the SPMT on `profile` from `soc0` and map every sample through the
    /// network. The network never feeds back into the SPMT. The SPMT's
    /// voltage window still applies; a cutoff shortens the prediction and is
    /// reported on the trace.
    pub fn predict(
        &self,
        soc0: f64,
        profile: &CurrentProfile,
        t0: f64,
        t_amb: f64,
    ) -> Result<Prediction, HybridError> {
        let spmt = Spmt::new(self.spmt.cell.clone(), self.spmt.solver)?;
        let trace = spmt.simulate(soc0, profile, t0, t_amb, profile.duration())?;
        let v_hybrid = trace
            .rows
            .iter()
            .map(|row| {
                let x = FeatureVector {
                    current: row.current,
                    temperature: row.output.temperature,
                    soc0,
                    soc_bulk: row.output.soc_bulk,
                    soc_surf: row.output.soc_surf,
                };
                self.combine(row.output.voltage, &x)
            })
            .collect::<Result<_, _>>()?;
        Ok(Prediction { trace, v_hybrid })
    }

    /// Hybrid voltage at every record of a dataset, using the stored SPMT
    /// columns as features.
    pub fn predict_dataset(&self, dataset: &Dataset) -> Result<Vec<f64>, HybridError> {
        dataset
            .records
            .iter()
            .map(|r| self.combine(r.v_spmt, &FeatureVector::from_record(r)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hybrid model serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, HybridError> {
        let model: HybridModel = serde_json::from_str(text)
            .map_err(|e| HybridError::Invalid(format!("malformed model file: {e}")))?;
        model.spmt.cell.validate().map_err(invalid)?;
        model.spmt.solver.validate().map_err(invalid)?;
        if model.spmt.hash() != model.spmt_params_hash {
            return Err(HybridError::Invalid(
                "embedded SPMT parameters do not match their recorded hash".into(),
            ));
        }
        model.fnn.validate()?;
        if model.fnn.input_dim() != model.features.width() {
            return Err(HybridError::Invalid(
                "network input width does not match the feature set".into(),
            ));
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HybridError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HybridError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn hash(&self) -> String {
        crate::hash::sha256_hex(self.to_json().as_bytes())
    }
}

fn invalid(e: ParamError) -> HybridError {
    HybridError::Invalid(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridTrainConfig {
    pub hidden: Vec<usize>,
    /// Seed of the initial weights.
    pub init_seed: u64,
    /// Fraction of each dataset held out for early stopping.
    pub val_fraction: f64,
    /// Train on standardized targets and fold the scaling into the output
    /// layer afterwards. The stored network predicts volts either way.
    #[serde(default = "enabled")]
    pub standardize_targets: bool,
    pub fnn: TrainConfig,
}

fn enabled() -> bool {
    true
}

impl Default for HybridTrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32],
            init_seed: 0,
            val_fraction: 0.1,
            standardize_targets: true,
            fnn: TrainConfig::default(),
        }
    }
}

impl HybridTrainConfig {
    /// Every seed (initial weights, validation split, shuffling) derived from one.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.init_seed = seed;
        self.fnn.seed = seed;
        self
    }
}

/// Mean and population standard deviation of the targets.
fn target_scaling(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let std = (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    (mean, std)
}

fn unscale_history(history: &mut [EpochRecord], scale: f64) {
    for r in history {
        r.train_loss *= scale * scale;
        r.val_rmse *= scale;
    }
}

/// Result of [`train_hybrid`].
#[derive(Debug, Clone)]
pub struct TrainedHybrid {
    pub model: HybridModel,
    pub training: TrainedModel,
}

/// Train one network over all training datasets jointly and bind it to the
/// SPMT parameters the datasets were generated with.
pub fn train_hybrid(
    wiring: Wiring,
    features: FeatureSet,
    datasets: &[Dataset],
    spmt: &ParameterFile,
    config: &HybridTrainConfig,
    manifest_hash: Option<String>,
) -> Result<TrainedHybrid, HybridError> {
    if !(0.0..1.0).contains(&config.val_fraction) {
        return Err(HybridError::Invalid(format!(
            "validation fraction must lie in [0, 1), got {}",
            config.val_fraction
        )));
    }
    let mut table = Samples::new(features.width());
    let mut sizes = Vec::with_capacity(datasets.len());
    for ds in datasets {
        let part = make_training_table(ds, wiring, features);
        for i in 0..part.len() {
            table.push(part.row(i), part.target(i))?;
        }
        sizes.push(part.len());
    }
    if table.len() < 2 {
        return Err(HybridError::Invalid(
            "training datasets hold fewer than two rows".into(),
        ));
    }
    let (train_idx, val_idx) = split_validation(&sizes, config.val_fraction, config.fnn.seed);
    let train_set = table.subset(&train_idx);
    let val_set = table.subset(&val_idx);

    let mut widths = vec![features.width()];
    widths.extend(&config.hidden);
    widths.push(1);
    let mut fnn = FnnModel::he_init(&widths, config.init_seed)?;
    fnn.norm = fit_normalization(&train_set)?;
    let (offset, scale) = if config.standardize_targets {
        target_scaling(train_set.targets())
    } else {
        (0.0, 1.0)
    };
    // Constant targets train against zeros; folding with the true scale of 0
    // then maps every output back onto the constant.
    let divisor = if scale > 0.0 { scale } else { 1.0 };
    let scaled = |set: &Samples| set.map_targets(|y| (y - offset) / divisor);
    let mut trained =
        train(fnn, &scaled(&train_set), &scaled(&val_set), &config.fnn).map_err(|e| match e {
            FnnError::Diverged {
                epoch,
                loss,
                mut history,
            } => {
                unscale_history(&mut history, divisor);
                FnnError::Diverged {
                    epoch,
                    loss: loss * divisor * divisor,
                    history,
                }
            }
            other => other,
        })?;
    trained.model.rescale_output(scale, offset);
    unscale_history(&mut trained.history, scale);
    trained.best_val_rmse *= scale;

    let mut model = HybridModel::new(wiring, features, spmt.clone(), trained.model.clone())?;
    model.provenance = Some(TrainingProvenance::new(config.fnn, &trained, manifest_hash));
    Ok(TrainedHybrid {
        model,
        training: trained,
    })
}
