//! Numerical workbench for Bayesian object search and its physical analogues.
//!
//! * [`belief_search`]: discrete Bayes-filter search with entropy-minimising policies.
//! * [`elastic_net`]: elastic-net relaxation for planar tour problems.
//! * [`gp_noise`]: Gaussian-process noise sampling and a noise-driven oscillator.
//! * [`cavity`]: density-matrix simulation of a truncated cavity mode coupled to
//!   qubits that are sporadically reset to their ground state.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for `f32`
//! and `f64`); the aliases below fix the common double-precision case.

pub mod belief_search;
pub mod cavity;
pub mod elastic_net;
pub mod gp_noise;
pub mod linalg;
mod scalar;

pub use scalar::Real;

pub type Belief64 = belief_search::Belief<f64>;
pub type MeasurementModel64 = belief_search::MeasurementModel<f64>;
pub type TrajectoryRecord64 = belief_search::TrajectoryRecord<f64>;
pub type SearchConfig64 = belief_search::SearchConfig<f64>;

pub type City64 = elastic_net::City<f64>;
pub type ElasticNetParams64 = elastic_net::ElasticNetParams<f64>;
pub type AnnealSchedule64 = elastic_net::AnnealSchedule<f64>;
pub type Tour64 = elastic_net::Tour<f64>;

pub type GpKernel64 = gp_noise::GpKernel<f64>;
pub type TimeGrid64 = gp_noise::TimeGrid<f64>;
pub type SamplePath64 = gp_noise::SamplePath<f64>;

pub type CavityModel64 = cavity::CavityModel<f64>;
pub type DensityMatrix64 = cavity::DensityMatrix<f64>;
pub type SimConfig64 = cavity::SimConfig<f64>;
pub type ObservableSeries64 = cavity::ObservableSeries<f64>;
pub type CMatrix64 = linalg::CMatrix<f64>;
