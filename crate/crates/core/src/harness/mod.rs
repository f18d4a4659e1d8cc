//! Config-driven Monte-Carlo experiments with deterministic seeding and CSV
//! output.

pub mod config;
pub mod experiments;
pub mod pipeline;
pub mod seed;
pub mod table;

pub use config::{CompositeRule, Estimator, ExperimentConfig, Link, ReceiveArray, System};
pub use experiments::{run, Experiment, ExperimentResult, MetricRecord};
pub use pipeline::{LinkSetup, Summary};
pub use seed::{seed_stream, SeedStream};
pub use table::{format_float, Cell, Table};
