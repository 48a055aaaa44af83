//! Link-level and system-level campaigns for LTE sidelink, with their file formats and CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod link;
pub mod ll_campaign;
pub mod phy;
pub mod sl_campaign;

pub use error::{Error, Result};
