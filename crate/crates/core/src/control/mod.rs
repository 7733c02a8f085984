//! Transfer-function toolbox and the three loop designs.

pub mod loops;
pub mod synthesis;
pub mod tf;

pub use synthesis::*;
pub use tf::{discretize, poly, tf_realize, DiscreteCompensator, RationalTransferFunction, Realization};
