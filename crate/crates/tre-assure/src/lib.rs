//! Tail-risk assurance toolkit for federated service paths.
//!
//! The crate turns signed per-domain service contracts into enforceable
//! end-to-end p99/p99.9 latency guarantees:
//!
//! - [`contracts`] — the disclosure-minimal contract data model (tail SLOs,
//!   arrival envelopes, tail-risk envelopes, domain offers), canonical
//!   serialization, and pluggable signing.
//! - [`snc`] — moment-generating-function delay-violation bounds for single
//!   domains and tandem paths, feasibility checks, and tilting-parameter
//!   selection.
//! - [`provision`] — federated path selection, risk-budget decomposition,
//!   per-tenant isolation reservations, and the distributed ADMM solve.
//! - [`sim`] — packet-level Monte-Carlo simulation of tandem FIFO domains
//!   plus a slotted validation mode that empirically checks the bounds.
//! - [`audit`] — peaks-over-threshold tail estimation from telemetry,
//!   compliance verdicts, conservative contract updates, attribution, and
//!   settlement.
//! - [`cli`] — batch front-end turning scenario/instance configs into CSV
//!   and JSON artifacts.
//!
//! All numeric work is deterministic: every random draw flows from a single
//! master seed through [`sim::derive_trial_seed`], and parallel reductions
//! are index-ordered so threaded and serial runs emit identical bytes.

pub mod audit;
pub mod cli;
pub mod contracts;
pub mod provision;
pub mod sim;
pub mod snc;
