//! Reverse-mode automatic differentiation on a Wengert tape, plus the small
//! neural-network toolkit built on it: dense layers with Glorot init, named
//! parameter storage, Adam, and checkpoint round-trips.
//!
//! Values are computed eagerly as operations are recorded; `backward` walks
//! the tape once in reverse and accumulates parameter gradients into the
//! [`ParamStore`] by name. Everything is `f64` and single-threaded, which
//! keeps runs bit-reproducible.

mod adam;
mod checkpoint;
mod nn;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig};
pub use checkpoint::{load_params, load_params_json, save_params, save_params_json};
pub use nn::{glorot_init, normal_head_forward, GaussianHead, LinearHead, Mlp, ParamStore, STD_FLOOR};
pub use tape::{NodeId, Tape};
pub use tensor::Tensor;
