pub mod dataset;
pub mod results;
pub mod sbm;

pub use dataset::{load_dataset, DatasetBundle, LoadedDataset};
pub use results::{read_results, write_results, ResultsFile};
pub use sbm::{generate_sbm, SbmSpec};
