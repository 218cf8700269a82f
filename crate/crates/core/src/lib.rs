#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::manual_range_contains,
    clippy::too_many_arguments
)]

pub mod barcode2d;
pub mod curves;
pub mod dynamics;
pub mod entropy;
pub mod experiment;
pub mod measures;
