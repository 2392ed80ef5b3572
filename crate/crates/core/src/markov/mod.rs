//! Exact Markov-chain diagnostics for small instances.

pub mod decay;
pub mod kernel;
pub mod kl;
pub mod mixing;
pub mod spectral;

pub use decay::{decay_scaling_report, log_log_slope, DecayFamily, DecayRow};
pub use kernel::{build_kernel, check_gf_bound, dobrushin_tau1, GfBoundCheck, KernelMatrix};
pub use kl::{kl_bernoulli, kl_bernoulli_bound, kl_decomp_check, KlDecompCheck};
pub use mixing::{
    check_eta_bound, check_hinf_bound, eta_bound, eta_matrix, eta_mixing_exact, f_p_bound,
    h_inf_norm_exact, EtaBoundCheck, EtaBoundRow, HinfCheck,
};
pub use spectral::{
    autocorr_min_eig, autocovariance_matrix, psd_estimate, SpectralReport, DEFAULT_FREQ_POINTS,
};
