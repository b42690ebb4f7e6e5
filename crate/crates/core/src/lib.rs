//! Low-dimensional embeddings learned from similar/dissimilar pair
//! constraints.
//!
//! The central model embeds a vector `x ∈ R^D` as its kernel values against
//! `d` learned landmarks, `[k(ℓ_1, x), …, k(ℓ_d, x)]`, and compares embeddings
//! with squared Euclidean distance. Landmarks are trained by stochastic
//! subgradient descent on a margin/bias hinge loss over sampled pairs. Test
//! cost is `O(dD)` regardless of how much training data was used.
//!
//! Alongside it live a linear projection baseline, an exact kernelized
//! baseline whose cost grows with the training set, PCA, and a leave-one-out
//! category retrieval evaluator (mean precision@K).
//!
//! ```
//! use nlembed::data::{generate_pairs, synth_blobs};
//! use nlembed::eval::{eval_pipeline, RetrievalConfig, RetrievalDistance};
//! use nlembed::kernel::KernelId;
//! use nlembed::train::{train_nml, TrainConfig};
//!
//! let (x, y) = synth_blobs(3, 20, 12, 3.0, 1)?;
//! let pairs = generate_pairs(&y, 500, 0.5, 1)?;
//! let cfg = TrainConfig::nml().with_iterations(5_000);
//! let (model, _report) = train_nml(&x, &pairs, 4, KernelId::Chi2, &cfg)?;
//! let rc = RetrievalConfig::new(vec![1, 5], RetrievalDistance::L2OnEmbedding)?;
//! let report = eval_pipeline(Some(&model.into()), &x, &y, &rc)?;
//! assert!(report.mprec_at(1).unwrap() > 0.5);
//! # Ok::<(), nlembed::Error>(())
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod io;
pub mod kernel;
pub mod matrix;
pub mod model;
pub mod pca;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
pub use kernel::KernelId;
pub use matrix::Matrix;
pub use model::{Embedding, KernelizedModel, LinearModel, Model, NonlinearModel};
