pub mod analysis;
pub mod config_file;
pub mod error;
pub mod fragment;
pub mod model;
pub mod optimizer;
pub mod quadrature;
pub mod scalar;
pub mod sensing;
pub mod sim;

pub use config_file::Scenario;
pub use error::{ConfigIssue, Error, Result, Violation};
pub use scalar::Scalar;

pub type NetworkConfigF64 = model::NetworkConfig<f64>;
pub type NetworkConfigF32 = model::NetworkConfig<f32>;
pub type SensingCalibrationF64 = sensing::SensingCalibration<f64>;
pub type SensingCalibrationF32 = sensing::SensingCalibration<f32>;
pub type ThroughputReportF64 = analysis::ThroughputReport<f64>;
pub type ThroughputReportF32 = analysis::ThroughputReport<f32>;
