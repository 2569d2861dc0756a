pub mod backfit;
pub mod cli;
pub mod error;
pub mod modelsel;
pub mod numeric;
pub mod oracle;
pub mod pava;
pub mod shrink;
pub mod sim;
pub mod stepfn;
pub mod variants;

pub use backfit::{AdditiveModel, Dataset, Direction, LisoConfig};
pub use error::{LisoError, Result};
