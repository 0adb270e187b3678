//! Resource monotones, distillation bounds and golden states for convex
//! quantum resource theories.
//!
//! All optimization goes through a small dense conic solver ([`conic`]). Resource
//! theories are described by [`theory::TheoryDescriptor`], which emits conic
//! constraints for the free set, its cone, polar and affine hull.

#![no_std]

extern crate alloc;

pub mod channel;
pub mod conic;
pub mod distillation;
pub mod error;
pub mod linalg;
pub mod monotones;
pub mod random;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::{BlockStructure, DensityOperator, HermitianOperator, PureStateVector, SchmidtData, C64};
