//! Population-based automated reinforcement learning with a shared
//! experience replay.
//!
//! A population of off-policy RL agents (TD3 for continuous control,
//! double-DQN for discrete actions) is trained while an evolutionary loop
//! mutates their hyperparameters and network architectures online. All
//! rollouts feed one shared replay memory, so the meta-optimization costs
//! barely more environment interactions than training a single agent.
//!
//! Crate layout mirrors the moving parts:
//!
//! - [`evonet`] — evolvable MLPs: forward/backward, Adam, and
//!   weight-preserving architecture mutations
//! - [`replay`] — shared ring-buffer experience replay
//! - [`envs`] — small deterministic environments with exact oracles
//! - [`learners`] — TD3 and double-DQN agents over evolvable nets
//! - [`evolution`] — the evaluate/select/mutate/train loop
//! - [`baselines`] — random search and an architecture-mutating PBT
//! - [`exp`] — interaction accounting, CSV metrics, config files, plots
//!
//! The population phases run data-parallel via rayon when the `parallel`
//! feature (default) is enabled; [`exec::ExecMode::Sequential`] is the
//! fallback. Results are bit-identical across both modes because every
//! individual draws randomness from its own `(run_seed, generation, slot)`
//! derived stream.

pub mod baselines;
pub mod envs;
pub mod evolution;
pub mod evonet;
pub mod exec;
pub mod exp;
pub mod learners;
pub mod replay;
pub mod seeding;

pub use envs::{Action, ActionKind, EnvSignature, Environment};
pub use evolution::{Individual, Population, SearlConfig};
pub use evonet::{Activation, EvolvableNet, NetSpec, OutputTransform};
pub use exec::ExecMode;
pub use exp::InteractionLedger;
pub use learners::{Agent, Exploration, Hyperparams};
pub use replay::{SharedReplay, Transition};
