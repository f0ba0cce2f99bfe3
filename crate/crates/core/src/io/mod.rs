//! Config files, trace CSVs and key = value reports.

mod config;
mod report;
mod traces;

pub use config::{load_config, parse_config, Config, FitConfig, KNOWN_KEYS};
pub use report::{format_report, write_table_csv, write_text};
pub use traces::{
    format_ghz, read_measured_csv, read_measured_file, read_trace_csv, read_trace_file,
    write_measured_csv, write_trace_csv, write_trace_file, PHASE_SANITY_BAND, TRACE_COLUMNS,
};
