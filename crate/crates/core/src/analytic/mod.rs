//! Closed-form reference objects: the Airy function and the linear group,
//! soliton profiles and mollified data.

mod airy;
mod dd;
mod linear;
mod mollify;
mod soliton;

pub use airy::{airy, airy_checked, airy_reference, AIRY_RANGE};
pub use linear::{linear_kernel_apply, linear_propagate};
pub use mollify::{bump, mollify_shift};
pub use soliton::{soliton, soliton_constant, SolitonSpec};
