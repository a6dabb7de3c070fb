//! Loading and writing balance sheets and trade matrices, building reconstruction
//! problems from them, and the bundled synthetic datasets.

mod balance;
mod synthetic;
mod trade;

use thiserror::Error;

use crate::model::ModelError;

pub use balance::{
    build_bank_problem, category_census, load_balance_sheets, read_balance_sheets,
    write_balance_sheets, BalanceSheetRecord,
};
pub use synthetic::{
    synthetic_trade_matrix, two_tier_records, SYNTHETIC_SEED, SYNTHETIC_SIZE, SYNTHETIC_TRADE_CSV,
};
pub use trade::{
    build_trade_problem, load_trade_matrix, make_q2_cut, read_trade_matrix, write_flow_matrix,
    CutSummary, TradeDataset, TradeVariant,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {field} = {value} is negative or not finite")]
    InvalidAmount { line: u64, field: &'static str, value: f64 },
    #[error("line {line}: duplicate record for year {year}, bank `{bank_id}`")]
    Duplicate { line: u64, year: i32, bank_id: String },
    #[error("no records")]
    NoRecords,
    #[error("records span several years ({0:?}); a problem covers one year")]
    MixedYears(Vec<i32>),
    #[error("matrix is not square: {rows} rows, {cols} columns")]
    NotSquare { rows: usize, cols: usize },
    #[error("row {row} is labeled `{got}` but column {row} is `{expected}`")]
    LabelMismatch { row: usize, expected: String, got: String },
    #[error("no strictly positive entries")]
    NoPositiveEntries,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IoError {
    pub(crate) fn file(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Self::File {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub(crate) fn from_csv(err: csv::Error) -> Self {
        let line = err.position().map_or(0, |p| p.line());
        let message = match err.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                format!("ragged row: expected {expected_len} fields, found {len}")
            }
            _ => err.to_string(),
        };
        Self::Parse { line, message }
    }
}
