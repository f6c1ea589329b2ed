//! Circuit language: parsing, printing, classification and execution.

pub mod classify;
pub mod execute;
pub mod family;
pub mod ir;
pub mod parse;
pub mod print;
pub mod report;

pub use classify::{classify, SimulatabilityReport, Verdict};
pub use execute::{execute, execute_fock, run_shots, Backend, ExecOptions, RunResult, ShotStatistics};
pub use ir::CircuitIR;
pub use parse::parse;
pub use print::print;
