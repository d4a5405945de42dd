//! The book under `book/` is the narrative companion to `epifront`. mdBook
//! does not run Rust snippets as tests, so each chapter is also included
//! here as rustdoc: `cargo test --doc` compiles and executes every code
//! block, and a chapter that drifts from the library fails the build. One
//! module per chapter keeps failures attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}

#[doc = include_str!("../../../book/src/growth.md")]
pub mod growth {}

#[doc = include_str!("../../../book/src/quadrature.md")]
pub mod quadrature {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/eigenvalues.md")]
pub mod eigenvalues {}

#[doc = include_str!("../../../book/src/thresholds.md")]
pub mod thresholds {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
