//! hybrid-1 (learned correction) against hybrid-2 (learned voltage) on the
//! same data and training budget.
//!
//! ```text
//! cargo run --release --example compare_wirings
//! ```

use spmt_hybrid::eval::run_matrix;
use spmt_hybrid::hybrid::{train_hybrid, FeatureSet, HybridTrainConfig, Wiring};
use spmt_hybrid::truth::{build_datasets, SplitSpec, TruthParameters};
use spmt_hybrid::ParameterFile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ParameterFile::lco_graphite();
    let split = build_datasets(&TruthParameters::default(), &params, &SplitSpec::default())?;
    let config = HybridTrainConfig::default();

    let mut reports = Vec::new();
    for wiring in [Wiring::Residual, Wiring::Cascade] {
        let trained = train_hybrid(
            wiring,
            FeatureSet::Full,
            &split.train,
            &params,
            &config,
            None,
        )?;
        let (report, _) = run_matrix(&trained.model, &split.test, "test");
        println!("{}", report.to_table());
        reports.push(report);
    }
    println!("{:<10} {:>10} {:>10}", "profile", "hybrid-1", "hybrid-2");
    for row in &reports[0].pooled {
        let other = reports[1].pooled_row(&row.profile).and_then(|r| r.rer);
        println!(
            "{:<10} {:>9.2}% {:>9.2}%",
            row.profile,
            row.rer.unwrap_or(f64::NAN),
            other.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
