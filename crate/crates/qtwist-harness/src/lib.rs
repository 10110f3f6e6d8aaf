//! Experiments on top of `qtwist`: asymptotic-expansion fits, growth rates,
//! cached JSON/CSV reports and the `qtwist` command line.

pub mod config;
pub mod error;
pub mod fit;
pub mod growth;
pub mod report;

pub use config::Config;
pub use error::{HarnessError, Result};
pub use fit::{fit_expansion, AsymptoticFit};
pub use growth::{growth_rate, GrowthRate};
pub use report::{run_report, Command, ReportOutcome, ReportRecord};
