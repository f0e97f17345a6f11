//! Accelerated gradient-descent stepsize schedules built by concatenation.
//!
//! Schedules are assembled from smaller ones with one closed-form joint step
//! ([`con_pp`], [`con_pd`], [`con_gp`]). The dynamic programs in [`dp`] pick
//! the concatenation that maximizes the step sum, which gives the families
//! with the smallest worst-case bounds `1 / (2 sum(h) + 1)`.
//!
//! ```
//! use stepcat::{dom_pp, analysis::objective_bound};
//!
//! let family = dom_pp(7);
//! let h7 = family.schedule(7).unwrap();
//! assert!((objective_bound(&h7).unwrap() - 0.032662).abs() < 1e-6);
//! ```

pub mod analysis;
pub mod dp;
pub mod error;
pub mod gd;
pub mod par;
pub mod schedule;
pub mod sequences;

pub use dp::{
    dom_pp, midpoint_recursion, pri_dp, sum_recursion, tri_family, Family, FamilyStore, SumTable,
    TableOrigin,
};
pub use error::{Error, Result};
pub use par::Execution;
pub use schedule::{
    certificate_dominant, certificate_primitive, con_gp, con_pd, con_pp, phi, psi, reverse,
    Certificate, CertificateForm, ConcatOp, ConstructionTree, Kind, Schedule,
};
