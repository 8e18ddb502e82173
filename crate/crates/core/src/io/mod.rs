//! File formats: matrix files, dataset manifests and CSV tables.

mod dataset;
mod matrix_file;
pub mod tables;
mod triplets;

pub use dataset::{
    load_dataset, numbered_queries, parse_manifest, save_dataset, DatasetManifest,
    EmbeddingDataset, ModelRecord, QueryRecord, Split, MANIFEST_NAME,
};
pub use matrix_file::{
    decode_binary, decode_csv, encode_binary, encode_csv, format_sig9, read_matrix, write_matrix,
    FloatWidth, MatrixEncoding, HEADER_LEN, MAGIC, VERSION,
};
pub use triplets::dataset_from_triplets;
