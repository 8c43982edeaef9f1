//! The three learning components: the allocation-predicting network,
//! the QoS-predicting network, and the DDPG shepherd agent, plus the
//! shared training/serialization machinery.

mod adam;
mod agent;
mod dataset;
mod mlp;
mod model_a;
mod model_b;
mod params_io;
mod replay;
mod reward;
mod train;

pub use adam::Adam;
pub use agent::{
    gaussian, AgentConfig, AgentState, SchedulingAction, UpdateLosses, ACTION_COUNT,
};
pub use dataset::{CorpusHeader, Dataset, CORPUS_SCHEMA_VERSION};
pub use mlp::{softmax, Activation, ForwardPass, MlpGrads, MlpParams, DEFAULT_DROPOUT, HIDDEN_DIMS};
pub use model_a::{label_scales, normalized_labels, ModelA, OaaPrediction, MODEL_A_LABELS};
pub use model_b::{indicator_accuracy, ModelB, QosPrediction, QOS_RATIO_CLIP};
pub use params_io::{
    decode_agent_file, decode_mlp_file, encode_agent_file, encode_mlp_file, load_agent, load_mlp,
    save_agent, save_mlp,
};
pub use replay::{ReplayPool, Transition};
pub use reward::{compute_reward, qos_reward, resource_reward, RewardInputs, RESOURCE_TYPES};
pub use train::{held_out_mae, mlp_train, transfer_mlp, TrainConfig, TrainReport, TRAIN_FRACTION};
