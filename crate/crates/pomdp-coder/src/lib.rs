//! Learns POMDP component models as short probabilistic programs and plans
//! with them.

pub mod baselines;
pub mod belief;
pub mod learner;
pub mod proposer;
pub mod envs;
pub mod harness;
pub mod model;
pub mod planner;
