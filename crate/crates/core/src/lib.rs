pub mod approx;
pub mod error;
pub mod eval;
pub mod io;
pub mod lptype;
pub mod meb;
pub mod metric;
pub mod parallel;
pub mod sdp;

pub use error::{Error, Result};
