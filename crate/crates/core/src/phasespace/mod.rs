//! The model `dx/dt = A(t) x + F(t) x_t + f(t)` and its discretized phase
//! space `C([-r, 0], C^n)`.

mod cheb;
mod model;
mod segment;

pub use cheb::ChebGrid;
pub use model::{
    DelayStructure, DiscreteDelay, DistributedKernel, FdeModel, FdeModelBuilder, KernelFn,
    MatrixFn, DEFAULT_KERNEL_ORDER,
};
pub use segment::{FnHistory, History, Segment, ZeroHistory};

/// Default number of Chebyshev intervals on a segment grid.
pub const DEFAULT_M: usize = 32;
