//! Goal-directed answer set programming with abduction.
//!
//! The pipeline is `syntax` (parse) → `grounder` (instantiate) → `engine`
//! (query-driven partial stable models). `abduction` layers hypothesis
//! generation on top of the engine, and `oracle` is an exhaustive
//! stable-model enumerator used to cross-check both.
//!
//! `hf_kb` and `compliance` apply the machinery to heart-failure guideline
//! adherence: enumerate the treatments a patient qualifies for and, for a
//! treatment that does not qualify, abduce the missing findings that would
//! make it guideline-compliant.

pub mod abduction;
pub mod compliance;
pub mod engine;
pub mod grounder;
pub mod hf_kb;
pub mod oracle;
pub mod syntax;
