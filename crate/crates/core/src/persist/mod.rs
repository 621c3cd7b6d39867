//! Configuration files, checkpoints and CSV export.

mod checkpoint;
mod config;
mod export;

pub use checkpoint::{
    fnv1a, load_checkpoint, save_checkpoint, Block, Checkpoint, FORMAT_VERSION, MAGIC,
};
pub use config::{parse_goal, EnvKind, EvalConfig, InterpConfig, RunConfig};
pub use export::{
    fmt_f64, metrics_header, write_curve_csv, write_metrics, write_metrics_csv, write_plan_csv,
    write_trace_csv,
};
