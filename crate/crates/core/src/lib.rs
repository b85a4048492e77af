//! Worst-case optimal VCG redistribution mechanisms for the binary public
//! project problem, modelled as ReLU networks and certified exactly by
//! mixed-integer programming.

pub mod bounds;
pub mod certifier;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod lottery;
pub mod mechanism;
pub mod net;
pub mod trainer;

pub use certifier::{certify, certify_mechanism, certify_with, grid_oracle, Certificate, CertifyOptions};
pub use error::{Error, Result};
pub use mechanism::{Mechanism, TypeProfile, Violations};
pub use net::Mlp;
