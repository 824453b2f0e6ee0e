//! Proximal policy optimisation for the irrigation environment.

pub mod adam;
pub mod checkpoint;
pub mod gae;
pub mod mlp;
pub mod normalizer;
pub mod policy;
pub mod ppo;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gae::gae_advantages;
pub use policy::{policy_forward, sample_action, GaussianPolicy, PolicyOutput, PolicyParameters};
pub use ppo::{ppo_loss, ppo_loss_and_grad, ppo_update, PpoConfig, TrajectoryBuffer};
pub use train::{train, train_with, HistoryRow, TrainOutcome};
