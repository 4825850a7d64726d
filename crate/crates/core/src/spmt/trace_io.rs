use std::io::Write;

use super::model::Trace;

pub const TRACE_HEADER: [&str; 9] = [
    "t", "I", "V", "T", "soc_surf", "soc_bulk", "eta_pos", "eta_neg", "q_gen",
];

/// Write a trace as CSV, optionally with one extra trailing column (for
/// example a hybrid voltage prediction aligned with the rows). The last line
/// is a `#` comment describing how the run ended.
pub fn write_trace_csv<W: Write>(
    writer: W,
    trace: &Trace,
    extra: Option<(&str, &[f64])>,
) -> std::io::Result<()> {
    if let Some((_, values)) = extra {
        if values.len() != trace.rows.len() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!(
                    "extra column has {} values for {} rows",
                    values.len(),
                    trace.rows.len()
                ),
            ));
        }
    }
    let mut csv = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = TRACE_HEADER.to_vec();
    if let Some((name, _)) = extra {
        header.push(name);
    }
    csv.write_record(&header)?;
    for (k, row) in trace.rows.iter().enumerate() {
        let o = &row.output;
        let mut record = vec![
            row.t.to_string(),
            row.current.to_string(),
            o.voltage.to_string(),
            o.temperature.to_string(),
            o.soc_surf.to_string(),
            o.soc_bulk.to_string(),
            o.eta_pos.to_string(),
            o.eta_neg.to_string(),
            o.q_gen.to_string(),
        ];
        if let Some((_, values)) = extra {
            record.push(values[k].to_string());
        }
        csv.write_record(&record)?;
    }
    let mut inner = csv.into_inner().map_err(|e| e.into_error())?;
    writeln!(inner, "# {}", trace.termination.describe())?;
    inner.flush()
}
