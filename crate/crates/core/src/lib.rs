//! Sensitivity factors and interface-network design for transmission grids.
//!
//! The crate is organized bottom-up:
//!
//! - [`netmodel`]: immutable bus/line multigraph with incidence and Laplacian
//! - [`dcsens`]: PTDF, LODF, effective susceptance and their decompositions
//! - [`interfaces`]: series, parallel and complete-bipartite interface networks
//! - [`acflow`]: Newton-Raphson AC power flow and AC line-outage factors
//! - [`caseio`]: MATPOWER case parsing, experiment configs and CSV output
//! - [`harness`]: contingency sweeps, CCDFs, experiments and theorem checks

pub mod acflow;
pub mod caseio;
pub mod dcsens;
pub mod error;
pub mod harness;
pub mod interfaces;
pub mod netmodel;

pub use error::{Error, Result};
pub use netmodel::{build_network, BusId, Line, LineId, LineSpec, NetworkModel};
