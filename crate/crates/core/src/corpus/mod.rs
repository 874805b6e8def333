//! Data model, manifest loading, validation and result persistence.

pub mod io;
mod manifest;
mod results;
mod summary;
mod types;

pub use manifest::{
    load_corpus, AdEntry, Corpus, EegEntry, FeatureEntry, FeatureSet, Manifest, ProgramEntry, SceneEntry,
};
pub use results::{read_eval_runs, write_results, EmittedFile, ResultSet};
pub use summary::{quadrant_summary, QuadrantRow, QuadrantSummary};
pub use types::*;

use std::path::{Path, PathBuf};

use thiserror::Error;

fn fmt_line(line: &Option<usize>) -> String {
    line.map(|l| format!(":{l}")).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}{}: field `{field}`: {message}", file.display(), fmt_line(line))]
    SchemaViolation { file: PathBuf, line: Option<usize>, field: String, message: String },
    #[error("{}{}: dangling reference: {message}", file.display(), fmt_line(line))]
    DanglingReference { file: PathBuf, line: Option<usize>, message: String },
    #[error("{}{}: field `{field}` out of scale: {message}", file.display(), fmt_line(line))]
    ScaleViolation { file: PathBuf, line: Option<usize>, field: String, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}
