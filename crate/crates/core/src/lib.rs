pub mod cli;
pub mod data;
pub mod error;
pub mod features;
pub mod geometry;
pub mod io;
pub mod kpkm;
pub mod powermeans;
pub mod metrics;
pub mod oracles;
pub mod mkpkm;
