//! Fast polynomial kernel classification.
//!
//! Binary classification by un-regularized hinge-loss minimization over a
//! low-dimensional polynomial-kernel feature space. The feature space is
//! spanned by kernel sections at n = C(s+d, d) centers chosen from the
//! data; training solves the resulting nonsmooth convex problem with a
//! proximal ADMM whose updates are all closed form, so a handful of
//! iterations suffices at the default stopping tolerance.
//!
//! Modules:
//! - [`poly_features`]: kernel, centers, design matrix and its cached
//!   normal-equation factorization
//! - [`hinge_prox`]: the scalar/vector hinge proximal operator
//! - [`admm`]: the solver loop, stopping rule and iteration trace
//! - [`model`]: train / predict / evaluate / degree selection
//! - [`synthetic`]: 2-D toy data with three label-noise topologies
//! - [`oracles`]: dual-LP, KKT and subgradient validation oracles
//! - [`io`]: CSV datasets and binary model files

pub mod admm;
pub mod dataset;
pub mod error;
pub mod hinge_prox;
pub mod io;
pub mod model;
pub mod oracles;
pub mod poly_features;
pub mod synthetic;

pub use dataset::{Dataset, MinMaxScaler};
pub use error::{Error, Result};
pub use model::{EvalReport, FpcModel, TrainOptions};
pub use poly_features::{CenterScheme, CenterSet, DesignMatrix, KernelDegree};
