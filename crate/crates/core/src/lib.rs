#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod discretize;
pub mod experiments;
pub mod functions;
pub mod linalg;
pub mod poles;
pub mod rkm;
pub mod specfun;
