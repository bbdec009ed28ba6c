//! Graph subdivision network: learned refinement of a subdivided template.

pub mod checkpoint;
pub mod layer;
pub mod loss;
pub mod mlp;
pub mod pointcloud;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use layer::{gsn_forward, gsn_layer, LayerTopology};
pub use loss::{chamfer_loss, laplacian_loss, total_loss, LossContext, LossParts, LossWeights};
pub use mlp::{mlp_forward, GsnStack, MlpParams, NUM_PARAMS};
pub use pointcloud::{extract_point_cloud, PointCloudSet, DEFAULT_MAX_POINTS};
pub use train::{backprop, backprop_with, frozen_loss, train, train_from, Case, TrainConfig, TrainResult};
