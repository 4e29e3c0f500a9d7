//! Qudit variational-circuit simulator with exact cost gradients, Haar-measure
//! Monte Carlo checks, closed-form gradient-variance predictions and an
//! ensemble experiment harness.

pub mod circuit;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod gates;
pub mod gradient;
pub mod haar;
pub mod linalg;
pub mod seed;
pub mod theory;

pub use circuit::{
    apply_layer, build_random_circuit, cost, evolve, initial_state, AnsatzLabel, AnsatzMapping,
    AnsatzTemplate, Circuit, Entangler, GateOrdering, Layer, Observable, PureState,
};
pub use error::{Error, Result};
pub use gates::{
    cnot_apply, random_generator, rotation_matrix, Axis, GellMannGenerator, QuditCnot, RotationGate,
};
pub use gradient::{finite_difference, first_parameter_index, partial_derivative, ParamIndex};
pub use linalg::{ComplexMatrix, ComplexVector};
