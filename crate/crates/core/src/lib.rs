//! Multiverse analysis for regression-discontinuity-in-time (RDiT) studies.
//!
//! A declared decision space ([`spec`]) expands into universes. Each universe
//! turns the event dataset ([`data`]) into a panel ([`pipeline`]), fits one
//! random-intercept RDiT model per dependent variable ([`rdit`], [`stats`]),
//! and is bucketed against a baseline study result ([`outcomes`]). The
//! [`runner`] executes whole multiverses into a deterministic results store,
//! and [`analysis`] / [`report`] summarise the store.

pub mod analysis;
pub mod data;
pub mod json;
pub mod outcomes;
pub mod pipeline;
pub mod rdit;
pub mod report;
pub mod runner;
pub mod spec;
pub mod stats;
pub mod store;
