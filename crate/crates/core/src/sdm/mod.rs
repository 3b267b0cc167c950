//! Sound Direction Map: ground truth, the learned encoder, its training loop
//! and file formats.

pub mod encoder;
pub mod gradcheck;
pub mod io;
pub mod layers;
pub mod oracle;
pub mod train;

pub use encoder::{
    encoder_forward, loss_and_gradient, loss_only, ActionOneHot, EncoderInput, EncoderParams,
    SdmSample, MSE_COEFFICIENT,
};
pub use gradcheck::{check_gradients, GradientCheckReport};
pub use io::{read_params, read_sdm_dataset, write_params, write_sdm_dataset, SdmDataset};
pub use oracle::{node_value, sector_index, sector_of_bearing, true_sdm, true_sdm_with_distances, SdmVector, NUM_NODES};
pub use train::{
    closed_loop_predict, dataset_mse, init_for_dataset, mean_predictor_mse, predict_teacher_forced, train_encoder,
    TrainConfig, TrainReport,
};
