//! Accuracy-constrained auto-tuning for mesh-Ewald style solvers.
//!
//! The tuner picks the cutoff, FFT grid, interpolation order and Ewald
//! parameter that meet a force-accuracy target in the least time:
//!
//! 1. [`param_space`] discretizes the four-dimensional parameter space.
//! 2. [`accuracy`] keeps only configurations whose error bounds meet the
//!    target and extracts their Pareto frontier.
//! 3. [`sampling`] measures the target code at few, adaptively chosen points.
//! 4. [`modeling`] fits cost models to those samples and ranks the frontier.
//!
//! [`synth_sim`] is a synthetic solver used for desk-scale runs and as a
//! brute-force oracle, and [`pipeline`] ties everything together behind the
//! `paretune` command-line tool.

pub mod accuracy;
pub mod config;
pub mod modeling;
pub mod param_space;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod synth_sim;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/search-space.md")]
    mod search_space {}
    #[doc = include_str!("../../../book/src/accuracy.md")]
    mod accuracy {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/modeling.md")]
    mod modeling {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
