//! Privacy mechanisms applied on the client side: sparse differentially
//! private parameter release and k-anonymous generalization of inputs.

mod dp;
mod kanon;

pub use dp::{clip, dp_release, laplace_from_uniform, laplace_sample, DpConfig, Epsilon, SparseUpdate};
pub use kanon::{
    apply_mapping, fit_k_anonymity, merge_mappings, GeneralizationMapping, Interval, KAnonConfig,
};
