//! Exact codimension computations for upper-triangular matrix algebras with
//! gradings and involutions.

pub mod codim;
pub mod free_algebra;
pub mod groups;
pub mod linalg;
pub mod ut;
