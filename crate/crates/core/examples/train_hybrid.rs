//! Train hybrid-1 (SPMT voltage plus a learned correction), score it on the
//! test split and optionally save the model.
//!
//! ```text
//! cargo run --release --example train_hybrid [model.json]
//! ```

use spmt_hybrid::eval::run_matrix;
use spmt_hybrid::hybrid::{train_hybrid, FeatureSet, HybridTrainConfig, Wiring};
use spmt_hybrid::truth::{build_datasets, SplitSpec, TruthParameters};
use spmt_hybrid::ParameterFile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ParameterFile::lco_graphite();
    let split = build_datasets(&TruthParameters::default(), &params, &SplitSpec::default())?;
    let rows: usize = split.train.iter().map(|d| d.len()).sum();
    println!("{} training datasets, {rows} rows", split.train.len());

    let config = HybridTrainConfig::default();
    let started = std::time::Instant::now();
    let trained = train_hybrid(
        Wiring::Residual,
        FeatureSet::Full,
        &split.train,
        &params,
        &config,
        None,
    )?;
    println!(
        "trained {} epochs in {:.0} s; best epoch {} (validation RMSE {:.2} mV)",
        trained.training.history.len(),
        started.elapsed().as_secs_f64(),
        trained.training.best_epoch,
        trained.training.best_val_rmse * 1e3
    );

    let (report, _) = run_matrix(&trained.model, &split.test, "test");
    print!("{}", report.to_table());

    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, trained.model.to_json())?;
        println!("wrote {path}");
    }
    Ok(())
}
