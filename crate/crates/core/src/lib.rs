//! Analytical model, Monte-Carlo oracle and discrete-event simulator for the
//! OSMP-EO sleep-mode protocol on an EPON.

pub mod dtmc;
pub mod oracle;
pub mod params;
pub mod poisson;
pub mod policy;
pub mod sim;

pub use params::{cycle_time, load_config, packets_from_bits, ConfigError, NetworkConfig};
pub use policy::{Mode, Thresholds};
