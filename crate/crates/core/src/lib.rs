//! Total positivity, compound matrices and sign-variation tools for linear
//! and nonlinear time-varying systems.

pub mod compound;
pub mod expr;
pub mod floquet;
pub mod generators;
pub mod matrix;
pub mod ode;
pub mod sign_variation;
pub mod specfile;
pub mod system;
pub mod total_positivity;
pub mod tpds;
