//! Variance-reduced stochastic optimizers with random hedge Barzilai-Borwein
//! step sizes.
//!
//! The core is generic over [`Scalar`] (`f32` or `f64`). The aliases at the
//! crate root fix it to `f64`, which is what the harness uses.
//!
//! ```
//! use rhbb_core::{optimizers, parse_libsvm_str, Problem, RunConfig};
//!
//! let data = parse_libsvm_str("1 1:1 2:0.5\n-1 1:-0.5 3:1\n1 2:1\n-1 3:-1\n", None).unwrap();
//! let problem = Problem::new(data, 0.01).unwrap();
//! let cfg = RunConfig { batch: 2, epochs: 3, ..RunConfig::default() };
//! let cfg = RunConfig { hedge: rhbb_core::HedgeConfig { b1: 2, b2: 2, ..cfg.hedge.clone() }, ..cfg };
//! let trace = optimizers::run(&problem, &cfg, None).unwrap();
//! assert_eq!(trace.records.len(), 4);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod model;
pub mod optimizers;
pub mod sampling;
pub mod scalar;
pub mod stepsize;
pub mod synth;
pub mod theory;

pub use data::{load_libsvm, parse_libsvm, parse_libsvm_str, remap_labels, SparseDataset, SparseExample};
pub use error::{Error, Result};
pub use model::{DiagonalQuadratic, FiniteSum, LogisticL2Problem};
pub use optimizers::{
    run, run_inner_only, run_observed, DistributionChoice, Engine, InnerStep, RunConfig, RunError, RunTrace, StepRule,
    TraceRecord,
};
pub use sampling::SamplingDistribution;
pub use scalar::Scalar;
pub use stepsize::{hedge_bounds, Adaptor, CurvatureSnapshot, HedgeBounds, HedgeConfig, StepScale};
pub use theory::TheoryConstants;

pub type Dataset = SparseDataset<f64>;
pub type Example = SparseExample<f64>;
pub type Problem = LogisticL2Problem<f64>;
pub type Distribution = SamplingDistribution<f64>;
pub type Snapshot = CurvatureSnapshot<f64>;
