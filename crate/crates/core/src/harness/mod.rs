//! Reproducible experiments: configuration, ε-sweeps with mesh
//! certification, rate regressions, asymptotics-versus-FEM tables and CSV/SVG
//! artifacts.

mod analysis;
mod config;
mod output;
mod sweep;

pub use analysis::{
    bounds_table, compare_asymptotics, constants_table, fit_rate, rate_checks, BoundsRow, BoundsTable, Check,
    ComparisonRow, ComparisonTable, ConstantRow, Quantity, RateCheck,
};
pub use config::{ExperimentConfig, GeometryConfig, OutputOptions, PhiConfig, Regime, SweepOptions};
pub use output::{read_csv, write_csv, write_loglog_svg, Series};
pub use sweep::{
    center_point, edge_point, mesh_change, run_sweep, solve_point, starred_from_records, LevelSolution, PointSolution,
    SweepOutput, SweepRecord, Timing,
};
