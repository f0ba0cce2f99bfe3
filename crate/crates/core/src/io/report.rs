use std::path::Path;

use crate::analysis::Table;
use crate::error::{Error, Result};

/// `key = value` lines, one per entry, in order.
pub fn format_report(entries: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in entries {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(v);
        s.push('\n');
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_table_csv<W: std::io::Write>(table: &Table, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::invalid(format!("writing table: {e}"));
    w.write_record(&table.columns).map_err(err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::invalid(format!("writing table: {e}")))?;
    Ok(())
}
