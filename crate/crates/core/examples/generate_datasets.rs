//! Build the train/test datasets (truth + SPMT columns) and write them with
//! their manifest.
//!
//! ```text
//! cargo run --release --example generate_datasets [out-dir]
//! ```

use std::path::PathBuf;

use spmt_hybrid::truth::{build_datasets, write_dataset_dir, SplitSpec, TruthParameters};
use spmt_hybrid::ParameterFile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("spmt-hybrid-datasets"));
    let params = ParameterFile::lco_graphite();
    let truth = TruthParameters::default();
    let spec = SplitSpec::default();

    let split = build_datasets(&truth, &params, &spec)?;
    for (name, part) in [("train", &split.train), ("test", &split.test)] {
        println!("{name}:");
        for ds in part {
            let worst = ds
                .records
                .iter()
                .map(|r| (r.v_true - r.v_spmt).abs())
                .fold(0.0, f64::max);
            println!(
                "  {:<26} {:>6} rows  max|V_true - V_spmt| {:6.1} mV",
                ds.stem(),
                ds.len(),
                worst * 1e3
            );
        }
    }
    let manifest = write_dataset_dir(&out, &split, &params, &truth, &spec)?;
    println!(
        "wrote {} ({} files, manifest {})",
        out.display(),
        manifest.entries.len(),
        &manifest.hash()[..12]
    );
    Ok(())
}
