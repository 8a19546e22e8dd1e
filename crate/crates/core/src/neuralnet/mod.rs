//! Fixed-architecture double-input Q-network.
//!
//! Image branch: three same-padded convolutions with ReLU, each followed by
//! a 2×2 max-pool, then dense-256 (ReLU, dropout) and dense-10 (ReLU). Map
//! branch: dense-100 with a learnable PReLU slope. The 110-wide
//! concatenation feeds either the linear Q head directly or, in the
//! recurrent variant, a 110-unit LSTM cell whose rectified output feeds the
//! head. Gradients are computed analytically per sample and accumulated.

mod adam;
pub mod gradcheck;
mod layers;
mod loss;
mod network;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use loss::mse_loss;
pub use network::{
    Architecture, ArchitectureTag, GradientSet, LstmState, Mode, NetworkParams, QValues, SequenceSample,
    TrainingSample, CONCAT_FEATURES, IMAGE_FEATURES, MAP_FEATURES, N_ACTIONS,
};
pub use tensor::Tensor;
