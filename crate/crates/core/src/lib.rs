//! Bregman proximal gradient (BPG) method for nonconvex composite problems
//! `min f(x) + g(x)` where `g` has no globally Lipschitz gradient but is
//! smooth adaptable relative to a kernel `h`.
//!
//! * [`kernel`]: kernel generating distances and Bregman distances.
//! * [`smad`]: smooth adaptability constants and a sampled descent-lemma check.
//! * [`solver`]: the BPG iteration, its trace and diagnostics.
//! * [`qip`]: sparse quadratic inverse problems with closed-form prox maps.

pub mod cubic;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod qip;
pub mod smad;
pub mod solver;

pub use cubic::{cubic_root_l0, cubic_root_l1};
pub use error::{BpgError, Result};
pub use kernel::{Kernel, KernelKind};
pub use linalg::spectral_norm;
pub use qip::{
    hard_threshold, make_problem, p_lambda, prox_l0, prox_l1, soft_threshold, truncation_max, Measurements,
    QipInstance, QipProblem, Regularizer,
};
pub use smad::{check_descent_lemma, qip_smad_constant, DescentReport, SmadCertificate, SmadSource};
pub use solver::{
    bpg_step, estimate_rho2, min_gap_bound, rate_fit, run_bpg, subgradient_witness, BpgConfig, FnProblem,
    GapBound, IterateRecord, IterateTrace, Problem, RateRegime, RateReport, SolveResult, Termination,
};
