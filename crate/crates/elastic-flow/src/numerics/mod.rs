//! Grid numerics shared by the geometry, flow and shooting code.

pub mod banded;
pub mod interp;
pub mod jet;
pub mod quadrature;
pub mod stencil;
