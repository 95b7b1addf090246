//! The guide in `book/` as doctests: one module per chapter, so a failing
//! listing points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/rg-flow.md")]
pub mod rg_flow {}
#[doc = include_str!("../../../book/src/two-site-dynamics.md")]
pub mod two_site_dynamics {}
#[doc = include_str!("../../../book/src/concurrence.md")]
pub mod concurrence {}
#[doc = include_str!("../../../book/src/block-projection.md")]
pub mod block_projection {}
#[doc = include_str!("../../../book/src/peak-scaling.md")]
pub mod peak_scaling {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
