//! Convergence studies: configuration, orchestration, order fitting and the
//! CSV, JSON and SVG outputs.

mod fit;
mod output;
mod study;

pub use fit::{fit_order, local_orders, OrderFit};
pub use output::{
    csv_string, emit_csv, emit_json, emit_svg_loglog, svg_string, write_atomic, write_outputs,
    CSV_HEADER,
};
pub use study::{
    run_convergence_study, ConvergenceReport, Measurement, SchemeResult, StudyConfig, Workbench,
    FLOOR_FACTOR, GAP_TOLERANCE,
};
