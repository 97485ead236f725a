//! The mean function `f(x; θ)`: a dense feed-forward network with exact
//! reverse-mode gradients, an Adam optimizer and JSON checkpoints.

mod adam;
mod checkpoint;
mod gradcheck;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use gradcheck::grad_check;
pub use mlp::{
    backward, backward_cached, forward_batch, forward_cached, init_params, Activation,
    ForwardCache, Gradients, MlpSpec, RegressorParams,
};
