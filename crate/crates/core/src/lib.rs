#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod acquisition;
pub mod benchmarks;
pub mod bo;
pub mod ep;
pub mod error;
pub mod gpcr;
pub mod kernels;
pub mod regression;
pub mod trunc_gauss;

pub use error::{Error, Result};
