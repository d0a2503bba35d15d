//! Command-line experiments for the multiscale elasticity solver: error
//! studies against fine references, corrector localization studies, and a
//! binary basis cache.

pub mod cache;
pub mod config;
pub mod presets;
pub mod report;
pub mod runner;
