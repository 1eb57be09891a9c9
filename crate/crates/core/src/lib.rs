//! Grover-search tooling for nonlinear boolean equation systems over F₂.
//!
//! The crate is organized bottom-up:
//!
//! * [`anf`] — boolean polynomials in algebraic normal form, random system
//!   generation and the brute-force reference solver.
//! * [`circuit`] — the gate-level IR and the layered depth metric.
//! * [`statevec`] — a dense state-vector simulator.
//! * [`oracle`] — function-controlled blocks, the stack oracle and the
//!   recursive (W-cycle) oracle, plus its capacity and block-count formulas.
//! * [`compress`] — the greedy cancel-and-relayer compression pass.
//! * [`grover`] — vanilla and randomized Grover drivers, the two-level
//!   expectation model and the shots/iterations optimizer.
//! * [`experiment`] — the experiment pipelines behind the command-line tool.
//!
//! Conventions shared by every module: variables and qubits are 0-based, data
//! qubit `i` carries variable `i`, and qubit 0 is the most significant bit of a
//! basis index (see [`statevec::qubit_mask`]).

pub mod anf;
pub mod circuit;
pub mod compress;
pub mod error;
pub mod experiment;
pub mod grover;
pub mod oracle;
pub mod statevec;

pub use error::{Error, Result};
