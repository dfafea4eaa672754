//! Reverse-mode automatic differentiation over dense arrays.
//!
//! A [`Graph`] is an append-only tape: every operation pushes a node whose
//! operands already exist, so node order is a topological order and the graph
//! is acyclic by construction. [`Graph::backward`] walks the tape in reverse.
//!
//! Gradients accumulate. Calling `backward` twice without
//! [`Graph::zero_grad`] in between adds the second pass onto the first, the
//! same way an optimizer loop that forgets to zero would behave.
//!
//! Broadcasting is limited to a one-element operand against an array; layer
//! code reshapes explicitly.

pub mod cost;
mod graph;
mod ops;

pub use graph::{ElementwiseOp, Graph, Node, NormAxis};
