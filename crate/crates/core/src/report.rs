//! Plain-text table output shared by the sweeps and the CLI.

use std::io::Write;

/// Float with 17 significant digits, so the value round-trips exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header row and then every record, one line each.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}
