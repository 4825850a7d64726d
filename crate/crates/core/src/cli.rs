//! Command layer behind the `spmt-hybrid` binary. Numeric settings live in
//! files (parameters, truth, training config); flags only override them.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, FnnError, HybridError};
use crate::eval::run_matrix;
use crate::fnn::EpochRecord;
use crate::hybrid::{train_hybrid, FeatureSet, HybridModel, HybridTrainConfig, Wiring};
use crate::params::{ParameterFile, SolverSettings};
use crate::profile::{make_constant_profile, make_drive_cycle, CurrentProfile, DriveFamily};
use crate::spmt::{write_trace_csv, Spmt};
use crate::truth::{
    build_datasets, load_dataset_dir, write_dataset_dir, SplitSpec, TruthParameters, AMBIENT,
};

#[derive(Debug, Parser)]
#[command(
    name = "spmt-hybrid",
    version,
    about = "SPMT simulation and hybrid voltage models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the train/test datasets and their manifest.
    GenData(GenDataArgs),
    /// Train a hybrid model on a dataset directory.
    Train(TrainArgs),
    /// Score a hybrid model against a dataset split.
    Eval(EvalArgs),
    /// Simulate one current profile and write its trace.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SolverOverrides {
    /// Radial nodes per particle.
    #[arg(long)]
    pub n_r: Option<usize>,
    /// Time step (s).
    #[arg(long)]
    pub dt: Option<f64>,
}

impl SolverOverrides {
    fn apply(&self, mut solver: SolverSettings) -> SolverSettings {
        if let Some(n) = self.n_r {
            solver.n_r = n;
        }
        if let Some(dt) = self.dt {
            solver.dt = dt;
        }
        solver
    }
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Cell parameter file; the bundled LCO/graphite set when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Truth (polarization) parameter file; bundled defaults when omitted.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Drive-cycle seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Dataset directory to create or replace.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureArg {
    Full,
    NoSoc,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory written by gen-data.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "hybrid-1")]
    pub wiring: Wiring,
    /// Training configuration (JSON); defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for the initial weights, validation split and shuffling.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Gradient worker threads (results do not depend on this).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "full")]
    pub features: FeatureArg,
    /// Output directory for model.json and history.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// Output directory for reports and plot data.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Cell parameter file; ignored in favour of the model's with --model.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Hybrid model; adds a V_hybrid column.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Constant discharge at this C-rate.
    #[arg(long, group = "input")]
    pub c_rate: Option<f64>,
    /// Constant current in amperes (discharge positive).
    #[arg(long, group = "input", allow_hyphen_values = true)]
    pub current: Option<f64>,
    /// `t,I` CSV sampled every second.
    #[arg(long, group = "input")]
    pub profile: Option<PathBuf>,
    /// Synthetic drive cycle of this family, seeded by --seed.
    #[arg(long, group = "input")]
    pub drive: Option<DriveFamily>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.9)]
    pub soc0: f64,
    /// End time (s); defaults to a full discharge, 1800 s for drive cycles,
    /// or the length of a profile file.
    #[arg(long)]
    pub t_end: Option<usize>,
    /// Initial cell temperature (K).
    #[arg(long, default_value_t = AMBIENT)]
    pub t0: f64,
    /// Ambient temperature (K).
    #[arg(long, default_value_t = AMBIENT)]
    pub t_amb: f64,
    #[command(flatten)]
    pub solver: SolverOverrides,
    /// Trace CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GenData(a) => gen_data(&a),
        Command::Train(a) => train(&a),
        Command::Eval(a) => eval(&a),
        Command::Simulate(a) => simulate(&a),
    }
}

fn read_to_string(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Write through a sibling temporary file so readers never see half a file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn load_params(path: Option<&Path>) -> Result<ParameterFile, Error> {
    Ok(match path {
        Some(p) => ParameterFile::load(p)?,
        None => ParameterFile::lco_graphite(),
    })
}

fn gen_data(a: &GenDataArgs) -> Result<(), Error> {
    let mut params = load_params(a.params.as_deref())?;
    params.solver = a.solver.apply(params.solver);
    params.solver.validate()?;
    let truth = match &a.truth {
        Some(p) => TruthParameters::load(p)?,
        None => TruthParameters::default(),
    };
    let spec = SplitSpec::with_seed(a.seed);
    let split = build_datasets(&truth, &params, &spec)?;
    let manifest = write_dataset_dir(&a.out, &split, &params, &truth, &spec)?;
    for (name, part) in [("train", &split.train), ("test", &split.test)] {
        let rows: usize = part.iter().map(|d| d.len()).sum();
        println!("{name}: {} datasets, {rows} rows", part.len());
    }
    println!(
        "wrote {} (manifest {})",
        a.out.display(),
        &manifest.hash()[..12]
    );
    Ok(())
}

fn history_csv(history: &[EpochRecord]) -> Vec<u8> {
    let mut csv = csv::Writer::from_writer(Vec::new());
    for record in history {
        csv.serialize(record).expect("in-memory write");
    }
    if history.is_empty() {
        csv.write_record(["epoch", "train_loss", "val_rmse"])
            .expect("in-memory write");
    }
    csv.into_inner().expect("in-memory flush")
}

fn train(a: &TrainArgs) -> Result<(), Error> {
    let mut config = match &a.config {
        Some(p) => serde_json::from_str::<HybridTrainConfig>(&read_to_string(p)?)?,
        None => HybridTrainConfig::default(),
    };
    if let Some(seed) = a.seed {
        config = config.with_seed(seed);
    }
    if let Some(e) = a.epochs {
        config.fnn.epochs = e;
    }
    if let Some(lr) = a.learning_rate {
        config.fnn.learning_rate = lr;
    }
    if let Some(b) = a.batch_size {
        config.fnn.batch_size = b;
    }
    if let Some(t) = a.threads {
        config.fnn.threads = t;
    }
    if config.fnn.epochs == 0 {
        eprintln!("warning: --epochs 0 writes the untrained initial network");
    }
    let features = match a.features {
        FeatureArg::Full => FeatureSet::Full,
        FeatureArg::NoSoc => FeatureSet::WithoutSoc,
    };
    let data = load_dataset_dir(&a.data)?;
    create_dir(&a.out)?;
    let history_path = a.out.join("history.csv");
    let trained = match train_hybrid(
        a.wiring,
        features,
        &data.split.train,
        &data.params,
        &config,
        Some(data.manifest_hash.clone()),
    ) {
        Ok(t) => t,
        Err(HybridError::Fnn(FnnError::Diverged {
            epoch,
            loss,
            history,
        })) => {
            write_atomic(&history_path, &history_csv(&history))?;
            eprintln!("history up to the divergence: {}", history_path.display());
            return Err(HybridError::Fnn(FnnError::Diverged {
                epoch,
                loss,
                history,
            })
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    write_atomic(&history_path, &history_csv(&trained.training.history))?;
    write_atomic(
        &a.out.join("model.json"),
        trained.model.to_json().as_bytes(),
    )?;
    println!(
        "{}: {} epochs, best epoch {} with validation RMSE {:.3} mV",
        a.wiring,
        trained.training.history.len(),
        trained.training.best_epoch,
        trained.training.best_val_rmse * 1e3
    );
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<(), Error> {
    let model = HybridModel::load(&a.model)?;
    let data = load_dataset_dir(&a.data)?;
    if data.params.hash() != model.spmt_params_hash {
        eprintln!("warning: the model's SPMT parameters differ from the dataset's");
    }
    let parts: Vec<(&str, &[crate::truth::Dataset])> = match a.split {
        SplitArg::Train => vec![("train", &data.split.train)],
        SplitArg::Test => vec![("test", &data.split.test)],
        SplitArg::All => vec![("train", &data.split.train), ("test", &data.split.test)],
    };
    create_dir(&a.out)?;
    let mut failed = true;
    for (name, datasets) in parts {
        let (report, series) = run_matrix(&model, datasets, name);
        write_atomic(
            &a.out.join(format!("report_{name}.csv")),
            report.to_csv().as_bytes(),
        )?;
        let table = report.to_table();
        write_atomic(&a.out.join(format!("report_{name}.txt")), table.as_bytes())?;
        let plots = a.out.join(format!("plots_{name}"));
        create_dir(&plots)?;
        for s in &series {
            let mut bytes = Vec::new();
            s.write_csv(&mut bytes)
                .map_err(|e| Error::Usage(format!("plot data: {e}")))?;
            write_atomic(&plots.join(format!("{}.csv", s.stem())), &bytes)?;
        }
        print!("{table}");
        failed &= report.all_failed();
    }
    if failed {
        return Err(crate::error::EvalError::AllRowsFailed.into());
    }
    Ok(())
}

fn full_discharge_seconds(c_rate: f64) -> usize {
    (3600.0 / c_rate).ceil() as usize
}

fn simulate(a: &SimulateArgs) -> Result<(), Error> {
    let model = a.model.as_deref().map(HybridModel::load).transpose()?;
    let mut params = match &model {
        Some(m) => {
            if a.params.is_some() {
                eprintln!("warning: --params ignored; the model carries its own SPMT parameters");
            }
            m.spmt.clone()
        }
        None => load_params(a.params.as_deref())?,
    };
    params.solver = a.solver.apply(params.solver);
    let capacity = params.cell.capacity_ah();
    let profile = if let Some(c) = a.c_rate {
        make_constant_profile(
            c,
            capacity,
            a.t_end.unwrap_or_else(|| full_discharge_seconds(c)),
        )?
    } else if let Some(i) = a.current {
        let t_end = a.t_end.unwrap_or(3600);
        CurrentProfile::constant_current(format!("{i}A"), i, t_end)
    } else if let Some(path) = &a.profile {
        let mut p = CurrentProfile::from_csv(path)?;
        if let Some(t_end) = a.t_end {
            p.samples.truncate(t_end + 1);
        }
        p
    } else if let Some(family) = a.drive {
        make_drive_cycle(a.seed, family, capacity, a.t_end.unwrap_or(1800))?
    } else {
        return Err(Error::Usage(
            "give one of --c-rate, --current, --profile or --drive".into(),
        ));
    };
    let t_end = a.t_end.map_or(profile.duration(), |t| t as f64);
    if t_end > profile.duration() {
        return Err(Error::Usage(format!(
            "--t-end {t_end} exceeds the profile's {} s",
            profile.duration()
        )));
    }

    let mut out = Vec::new();
    match model {
        Some(mut m) => {
            m.spmt.solver = params.solver;
            let prediction = m.predict(a.soc0, &profile, a.t0, a.t_amb)?;
            write_trace_csv(
                &mut out,
                &prediction.trace,
                Some(("V_hybrid", &prediction.v_hybrid)),
            )
        }
        None => {
            let spmt = Spmt::new(params.cell, params.solver)?;
            let trace = spmt.simulate(a.soc0, &profile, a.t0, a.t_amb, t_end)?;
            write_trace_csv(&mut out, &trace, None)
        }
    }
    .map_err(|e| Error::Usage(format!("trace output: {e}")))?;
    match &a.out {
        Some(path) => write_atomic(path, &out),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&out)
                .map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}
