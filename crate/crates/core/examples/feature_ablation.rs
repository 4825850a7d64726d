//! Remove the SPMT state-of-charge inputs from hybrid-1 and compare the
//! high-rate test error over a few seeds.
//!
//! ```text
//! cargo run --release --example feature_ablation [n-seeds]
//! ```

use spmt_hybrid::eval::run_matrix;
use spmt_hybrid::hybrid::{train_hybrid, FeatureSet, HybridTrainConfig, Wiring};
use spmt_hybrid::truth::{build_datasets, SplitSpec, TruthParameters};
use spmt_hybrid::ParameterFile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: u64 = std::env::args().nth(1).map_or(Ok(3), |s| s.parse())?;
    let params = ParameterFile::lco_graphite();
    let split = build_datasets(&TruthParameters::default(), &params, &SplitSpec::default())?;

    println!("mean hybrid RMSE over CC >= 3C test profiles (mV)");
    println!("{:>5} {:>12} {:>14}", "seed", "[I,T,soc0,", "[I,T,soc0]");
    println!("{:>5} {:>12}", "", "bulk,surf]");
    for seed in 0..seeds {
        let config = HybridTrainConfig::default().with_seed(seed);
        let mut rmse = Vec::new();
        for features in [FeatureSet::Full, FeatureSet::WithoutSoc] {
            let trained = train_hybrid(
                Wiring::Residual,
                features,
                &split.train,
                &params,
                &config,
                None,
            )?;
            let (report, _) = run_matrix(&trained.model, &split.test, "test");
            rmse.push(report.mean_high_c_rmse.unwrap_or(f64::NAN));
        }
        println!("{seed:>5} {:>12.2} {:>14.2}", rmse[0], rmse[1]);
    }
    Ok(())
}
