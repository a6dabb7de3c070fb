use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use super::IoError;
use crate::model::{FlowMatrix, Marginals, NodeInfo, ReconstructionProblem};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeVariant {
    NoCut,
    Q2Cut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeDataset<T> {
    pub matrix: FlowMatrix<T>,
    pub variant: TradeVariant,
    pub link_constraints_enabled: bool,
}

impl<T: Scalar> TradeDataset<T> {
    pub fn no_cut(matrix: FlowMatrix<T>) -> Self {
        Self {
            matrix,
            variant: TradeVariant::NoCut,
            link_constraints_enabled: false,
        }
    }

    /// Off-diagonal support density of the data.
    pub fn density(&self) -> f64 {
        self.matrix.support_density()
    }
}

pub fn load_trade_matrix<T: Scalar>(path: &Path) -> Result<TradeDataset<T>, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::file(path, e))?;
    read_trade_matrix(file)
}

/// Dense labeled CSV: the header row is an empty cell followed by the node labels,
/// each data row starts with its label. Lines starting with `#` are ignored.
pub fn read_trade_matrix<T: Scalar, R: Read>(reader: R) -> Result<TradeDataset<T>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(h) => h.map_err(IoError::from_csv)?,
        None => return Err(IoError::NoRecords),
    };
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    let mut weights = Vec::with_capacity(n * n);
    let mut count = 0;
    for row in rows {
        let row = row.map_err(IoError::from_csv)?;
        let line = row.position().map_or(0, |p| p.line());
        if count >= n {
            return Err(IoError::NotSquare { rows: count + 1, cols: n });
        }
        if &row[0] != labels[count].as_str() {
            return Err(IoError::LabelMismatch {
                row: count,
                expected: labels[count].clone(),
                got: row[0].to_string(),
            });
        }
        for (j, cell) in row.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| IoError::Parse {
                line,
                message: format!("column {}: `{cell}` is not a number", j + 1),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(IoError::Parse {
                    line,
                    message: format!("column {}: entry {v} is negative or not finite", j + 1),
                });
            }
            weights.push(T::lit(v));
        }
        count += 1;
    }
    if count != n {
        return Err(IoError::NotSquare { rows: count, cols: n });
    }
    if n < 2 {
        return Err(IoError::NotSquare { rows: count, cols: n });
    }
    let nodes = labels.into_iter().map(NodeInfo::generic).collect();
    Ok(TradeDataset::no_cut(FlowMatrix::new(nodes, weights)?))
}

/// Writes `matrix` in the canonical layout read by [`read_trade_matrix`]; values use
/// the shortest representation that parses back to the same number.
pub fn write_flow_matrix<T: Scalar, W: Write>(matrix: &FlowMatrix<T>, writer: W) -> Result<(), IoError> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let err = |e: csv::Error| IoError::Parse {
        line: 0,
        message: e.to_string(),
    };
    let header = std::iter::once(String::new()).chain(matrix.nodes().iter().map(|n| n.id.clone()));
    wtr.write_record(header).map_err(err)?;
    for (i, node) in matrix.nodes().iter().enumerate() {
        let row = std::iter::once(node.id.clone()).chain(matrix.row(i).iter().map(|v| v.to_string()));
        wtr.write_record(row).map_err(err)?;
    }
    wtr.flush().map_err(|e| err(e.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutSummary {
    pub median: f64,
    pub removed: usize,
    pub density_before: f64,
    pub density_after: f64,
}

/// Zeroes every entry strictly below the median of the strictly positive entries
/// (midpoint of the two central values for an even count).
pub fn make_q2_cut<T: Scalar>(dataset: &TradeDataset<T>) -> Result<(TradeDataset<T>, CutSummary), IoError> {
    let mut positives: Vec<T> = dataset
        .matrix
        .weights()
        .iter()
        .copied()
        .filter(|&w| w > T::zero())
        .collect();
    if positives.is_empty() {
        return Err(IoError::NoPositiveEntries);
    }
    positives.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = positives.len();
    let median = if k % 2 == 1 {
        positives[k / 2]
    } else {
        (positives[k / 2 - 1] + positives[k / 2]) / T::lit(2.0)
    };
    let mut removed = 0;
    let matrix = dataset.matrix.map_cells(|_, _, w| {
        if w > T::zero() && w < median {
            removed += 1;
            T::zero()
        } else {
            w
        }
    })?;
    let cut = TradeDataset {
        matrix,
        variant: TradeVariant::Q2Cut,
        link_constraints_enabled: dataset.link_constraints_enabled,
    };
    let summary = CutSummary {
        median: median.to_f64_lossy(),
        removed,
        density_before: dataset.density(),
        density_after: cut.density(),
    };
    Ok((cut, summary))
}

/// Reconstruction problem with the data's off-diagonal row and column sums as
/// marginals. Self-flows are not modeled: the diagonal is excluded from the
/// marginals and forbidden. With link constraints every zero data cell is forced
/// to zero.
pub fn build_trade_problem<T: Scalar>(
    dataset: &TradeDataset<T>,
    beta: T,
    with_link_constraints: bool,
) -> Result<ReconstructionProblem<T>, IoError> {
    let m = &dataset.matrix;
    let off = m.map_cells(|i, j, w| if i == j { T::zero() } else { w })?;
    let marginals = Marginals::from_matrix(&off)?;
    let mut zero_cells = BTreeSet::new();
    if with_link_constraints {
        let n = m.n();
        for i in 0..n {
            for j in 0..n {
                if off.get(i, j) == T::zero() {
                    zero_cells.insert((i, j));
                }
            }
        }
    }
    Ok(ReconstructionProblem::new(
        m.nodes().to_vec(),
        marginals,
        Vec::new(),
        zero_cells,
        beta,
        true,
    )?)
}
