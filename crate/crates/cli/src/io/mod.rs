pub mod dataset;
pub mod results;
pub mod trace;
pub mod trees;

pub use dataset::{load_csv, write_csv, LabelColumn};
