//! Linear objectives over real PSD blocks, second-order cones and linear
//! constraints, plus the Hermitian-to-real embedding that lets complex
//! semidefinite programs run on real conic solvers.

pub mod conformance;
pub mod dump;
pub mod error;
pub mod hermitian;
pub mod program;
pub mod solve;

pub use error::{ConicError, Result};
pub use hermitian::{embed_hermitian, extract_hermitian, HermitianVar};
pub use program::{
    AffineExpr, Constraint, ConicProgram, LabeledConstraint, LinExpr, Term, VarId, VarKind,
    VarValue, Variable,
};
pub use solve::{solve, ClarabelBackend, ConicBackend, SolveReport, SolveStatus, SolverSettings};
