// Negated float comparisons deliberately reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod pipeline;
pub mod synth;
pub mod table;

pub use config::{EnhanceStage, PipelineConfig};
pub use error::CliError;
pub use pipeline::{pipeline_run, Step};
