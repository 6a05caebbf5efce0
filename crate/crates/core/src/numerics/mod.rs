//! Dense feed-forward networks with hand-written backpropagation, an Adam
//! optimizer, Polyak target averaging and a lossless checkpoint format.

mod adam;
mod checkpoint;
mod net;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{Checkpoint, Tensor, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use net::{polyak_update, Activation, DenseNet, Gradients, Layer, Trace};
