// Negated float comparisons deliberately reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod eval;
pub mod features;
pub mod gabor;
pub mod imgcore;
pub mod qap;
pub mod stats;
