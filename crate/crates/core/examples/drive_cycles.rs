//! Synthetic drive cycles and the SPMT response to them.
//!
//! ```text
//! cargo run --release --example drive_cycles
//! ```

use spmt_hybrid::{make_drive_cycle, DriveFamily, ParameterFile, Spmt};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ParameterFile::lco_graphite();
    let capacity = params.cell.capacity_ah();
    let spmt = Spmt::new(params.cell.clone(), params.solver)?;

    for family in [DriveFamily::UddsLike, DriveFamily::Us06Like] {
        for seed in [11, 21] {
            let profile = make_drive_cycle(seed, family, capacity, 1800)?;
            let regen = profile.samples.iter().filter(|&&i| i < 0.0).count();
            let trace = spmt.simulate(0.7, &profile, 298.15, 298.15, profile.duration())?;
            let v = trace.voltages();
            let v_min = v.iter().copied().fold(f64::INFINITY, f64::min);
            println!(
                "{:<18} peak {:5.2} A ({:.1}C)  mean|I| {:5.2} A  regen {:4} s  V_min {:.3} V  {}",
                profile.label,
                profile.max_current(),
                profile.max_current() / capacity,
                profile.mean_abs_current(),
                regen,
                v_min,
                trace.termination.describe()
            );
        }
    }
    Ok(())
}
