//! Transformer-based Q-network over temporal lidar windows, built on a
//! minimal dense tensor and reverse-mode autodiff kernel. CPU only.

pub mod graph;
pub mod net;
pub mod params;
pub mod tensor;
pub mod twq;

pub use graph::{Graph, NodeId};
pub use net::{
    act_epsilon_greedy, argmax, forward, init_params, positional_encoding, q_values, Pooling,
    TransqerConfig,
};
pub use params::{CheckpointError, ParamSet, CHECKPOINT_SCHEMA};
pub use tensor::{Elem, Tensor};
pub use twq::Twq;
