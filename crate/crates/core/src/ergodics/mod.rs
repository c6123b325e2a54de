//! Lyapunov exponents, dynamical-ball entropy estimates and Mañé
//! partitions.

mod entropy;
mod lyapunov;
mod partition;

pub use entropy::{
    dynamical_ball_mass, entropy_lower_estimate, good_points_filter, CloudOrbits, EntropyEstimate, EntropyMethod, GoodPoints, RadiusFunctions,
};
pub use lyapunov::{log_abs_det, lyapunov_coded, lyapunov_qr, lyapunov_qr_with, LyapunovEstimate, LyapunovOptions, MIN_ORBITS};
pub use partition::{diameter_check, mane_partition, mesh, partition_entropy, singular_radius, AtomKey, DiameterCheck, ManePartition};
