//! Constant-current discharges at several C-rates from the bundled cell.
//!
//! ```text
//! cargo run --release --example simulate_discharge [out.csv]
//! ```
//!
//! With an argument, the 5C trace is also written as CSV.

use spmt_hybrid::spmt::write_trace_csv;
use spmt_hybrid::{make_constant_profile, ParameterFile, Spmt};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ParameterFile::lco_graphite();
    let capacity = params.cell.capacity_ah();
    let spmt = Spmt::new(params.cell.clone(), params.solver)?;
    println!(
        "capacity {capacity:.3} Ah, N_r = {}, dt = {} s",
        params.solver.n_r, params.solver.dt
    );
    println!(
        "{:>6} {:>8} {:>9} {:>9} {:>8}  end",
        "rate", "t (s)", "V0 (V)", "Vend (V)", "dT (K)"
    );

    for rate in [0.5f64, 1.0, 2.0, 5.0, 10.0] {
        let t_end = (3600.0 / rate).ceil() as usize;
        let profile = make_constant_profile(rate, capacity, t_end)?;
        let trace = spmt.simulate(0.95, &profile, 298.15, 298.15, t_end as f64)?;
        let first = &trace.rows[0];
        let last = trace.rows.last().expect("at least one row");
        println!(
            "{:>5}C {:>8} {:>9.4} {:>9.4} {:>8.2}  {}",
            rate,
            last.t,
            first.output.voltage,
            last.output.voltage,
            last.output.temperature - 298.15,
            trace.termination.describe()
        );
        if rate == 5.0 {
            if let Some(path) = std::env::args().nth(1) {
                write_trace_csv(std::fs::File::create(&path)?, &trace, None)?;
                println!("       wrote {path}");
            }
        }
    }
    Ok(())
}
