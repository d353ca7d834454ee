//! From-scratch deterministic-policy-gradient learner and the three training
//! configurations: the full algorithm trained inside the embedded
//! communication simulation, the stochastic-delay-model baseline, and the
//! no-state-augmentation ablation.

mod agent;
mod mlp;
mod noise;
mod optim;
mod persist;
mod replay;
mod train;

pub use agent::{td_target, DdpgAgent, Hyper};
pub use mlp::{
    soft_update_tensors, Actor, ActorCache, ActorGrads, Critic, CriticCache, CriticGrads, Linear,
    LinearGrads,
};
pub use noise::OuNoise;
pub use optim::{Optimizer, OptimizerKind};
pub use persist::{load_checkpoint, save_checkpoint, Checkpoint};
pub use replay::ReplayBuffer;
pub use train::{evaluate, train, EvalPoint, EvalReport, TrainConfig, TrainResult};

use serde::{Deserialize, Serialize};

use crate::env::{AugmentedState, DelayModel, StateNorm};
use crate::{Error, Result};

/// Which training configuration to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Augmented state, trained inside the embedded sidelink simulation.
    MtccPc,
    /// Augmented state, trained against i.i.d. uniform delays; the delay
    /// model the embedded simulation replaces.
    RdPc,
    /// Embedded simulation but the state is the delayed observation alone.
    PcWoAs,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::MtccPc, Variant::RdPc, Variant::PcWoAs];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::MtccPc => "mtcc-pc",
            Variant::RdPc => "rd-pc",
            Variant::PcWoAs => "pc-wo-as",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mtcc-pc" => Ok(Variant::MtccPc),
            "rd-pc" => Ok(Variant::RdPc),
            "pc-wo-as" => Ok(Variant::PcWoAs),
            other => Err(Error::InvalidConfig(format!(
                "unknown variant '{other}' (expected mtcc-pc, rd-pc, or pc-wo-as)"
            ))),
        }
    }

    /// Delay generation used during *training*; evaluation always runs the
    /// embedded simulation.
    pub fn train_delay_model(&self, tau_max: usize) -> DelayModel {
        match self {
            Variant::RdPc => DelayModel::IidUniform { lo: 1, hi: tau_max },
            _ => DelayModel::Embedded,
        }
    }

    pub fn state_dim(&self, norm: &StateNorm) -> usize {
        match self {
            Variant::PcWoAs => 4,
            _ => norm.augmented_dim(),
        }
    }

    pub fn encode(&self, norm: &StateNorm, state: &AugmentedState, out: &mut Vec<f64>) {
        match self {
            Variant::PcWoAs => {
                out.clear();
                norm.encode_obs(&state.obs, out);
            }
            _ => norm.encode(state, out),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
