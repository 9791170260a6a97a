//! Linear smoothers whose hyperparameters are chosen without looking at the
//! responses.
//!
//! Every model family in this crate is expressed as `f* = S* y` where the
//! smoother `S*` is built from covariates (and, for networks and forests, a
//! non-informative build response) only. Selection criteria such as y-free
//! MSV then pick the hyperparameters, and the true `y` is attached afterwards
//! through [`smoothers::predict`].

pub mod asymptotics;
pub mod criteria;
pub mod data;
pub mod error;
pub mod io;
pub mod linalg;
pub mod ntk;
pub mod selection;
pub mod smoothers;
pub mod workbench;

pub use error::{Error, Result};
pub use linalg::{Mat, MatrixNorm, Vector};
