// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch in {context}: expected {expected:?}, got {actual:?}")]
    Shape {
        context: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("grid mismatch: {field} differs ({left} vs {right})")]
    GridMismatch {
        field: &'static str,
        left: String,
        right: String,
    },

    #[error("frame {frame_id}: invalid field `{field}`: {reason}")]
    Schema {
        frame_id: String,
        field: String,
        reason: String,
    },

    #[error("blob {path}: {len} bytes is not a multiple of the {record} byte point record")]
    BlobSize {
        path: PathBuf,
        len: u64,
        record: usize,
    },

    #[error("tensor format: {0}")]
    Format(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
