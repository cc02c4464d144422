//! Dataset machinery: bit-exact tensor serialization, frame downsampling,
//! corpus normalization and stratified splits.

pub mod manifest;
pub mod pool;
pub mod sample;
pub mod split;
pub mod tensorfile;

pub use manifest::DatasetManifest;
pub use pool::{area_downsample, downsample_frames};
pub use sample::{load_sample, normalize_corpus, save_sample, NormConstants, Sample, SampleMeta};
pub use split::{split_corpus, CorpusSplit};
pub use tensorfile::{load_tensor, parse_tensor, save_tensor, TensorData, TensorPayload};
