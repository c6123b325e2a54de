//! Differentials, sampling of the equilibrium measures and observables.

mod check;
mod coding;
mod crofton;
mod differential;
mod observable;
mod sampling;

pub use check::{correlation, hypothesis_h_check, CorrelationTrace, HCheck, HEntry, Verdict, H_TOLERANCE};
pub use coding::Coding;
pub use differential::{
    binomial, chained, differential_from, elementary_symmetric, frame, mat_mul, projective_differential, singular_values_sq, step, to_dmatrix,
    u_from_norm, ProjectiveDifferential, Step, SENTINEL,
};
pub use observable::{Observable, BUILTINS};
pub use sampling::{
    empirical_integral, fs_uniform_cloud, fs_uniform_sample, orbit, sample_mu_n, sample_mu_n_with, sample_nu_n, sample_nu_n_with, CloudMeta,
    NuMethod, WeightedCloud,
};
