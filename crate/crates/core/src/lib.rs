//! Local metric entropy and adaptive least-squares rates over convex classes.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classes;
pub mod estimator;
pub mod harness;
pub mod metric;
pub mod rates;
pub mod seed;
