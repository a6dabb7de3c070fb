use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::model::{
    add_slack_node, assemble_category_rules, Category, CategoryRuleSet, NodeInfo,
    ReconstructionProblem, SlackPolicy,
};
use crate::scalar::Scalar;

const HEADER: [&str; 6] = ["year", "bank_id", "bank_name", "category", "call_loan", "call_money"];

/// One bank-year: lending (`call_loan`) and borrowing (`call_money`) in currency units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSheetRecord {
    pub year: i32,
    pub bank_id: String,
    pub bank_name: String,
    pub category: Category,
    pub call_loan: f64,
    pub call_money: f64,
}

pub fn load_balance_sheets(path: &Path, year: Option<i32>) -> Result<Vec<BalanceSheetRecord>, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::file(path, e))?;
    read_balance_sheets(file, year)
}

/// Parses and validates balance-sheet CSV, keeping the records of `year` (all years
/// when `None`). Errors name the offending line.
pub fn read_balance_sheets<R: Read>(reader: R, year: Option<i32>) -> Result<Vec<BalanceSheetRecord>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = rdr.headers().map_err(IoError::from_csv)?.clone();
    if header.is_empty() {
        return Err(IoError::NoRecords);
    }
    if header.iter().ne(HEADER) {
        return Err(IoError::Parse {
            line: 1,
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(IoError::from_csv)?;
        let line = row.position().map_or(0, |p| p.line());
        let parse_err = |message: String| IoError::Parse { line, message };
        let rec_year: i32 = row[0]
            .parse()
            .map_err(|_| parse_err(format!("invalid year `{}`", &row[0])))?;
        let category: Category = row[3]
            .parse()
            .map_err(|_| parse_err(format!("unknown category `{}`", &row[3])))?;
        let amount = |idx: usize, field: &'static str| -> Result<f64, IoError> {
            let value: f64 = row[idx]
                .parse()
                .map_err(|_| parse_err(format!("{field}: `{}` is not a number", &row[idx])))?;
            if !value.is_finite() || value < 0.0 {
                return Err(IoError::InvalidAmount { line, field, value });
            }
            Ok(value)
        };
        let record = BalanceSheetRecord {
            year: rec_year,
            bank_id: row[1].to_string(),
            bank_name: row[2].to_string(),
            category,
            call_loan: amount(4, "call_loan")?,
            call_money: amount(5, "call_money")?,
        };
        if record.bank_id.is_empty() {
            return Err(parse_err("empty bank_id".into()));
        }
        if !seen.insert((record.year, record.bank_id.clone())) {
            return Err(IoError::Duplicate {
                line,
                year: record.year,
                bank_id: record.bank_id,
            });
        }
        if year.is_none_or(|y| y == record.year) {
            records.push(record);
        }
    }
    if records.is_empty() {
        return Err(IoError::NoRecords);
    }
    Ok(records)
}

pub fn write_balance_sheets<W: Write>(records: &[BalanceSheetRecord], writer: W) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| IoError::Parse {
        line: 0,
        message: e.to_string(),
    };
    wtr.write_record(HEADER).map_err(io)?;
    for r in records {
        wtr.write_record([
            r.year.to_string(),
            r.bank_id.clone(),
            r.bank_name.clone(),
            r.category.as_str().to_string(),
            r.call_loan.to_string(),
            r.call_money.to_string(),
        ])
        .map_err(io)?;
    }
    wtr.flush().map_err(|e| io(e.into()))
}

/// Number of banks per category.
pub fn category_census(records: &[BalanceSheetRecord]) -> BTreeMap<Category, usize> {
    let mut census = BTreeMap::new();
    for r in records {
        *census.entry(r.category).or_insert(0) += 1;
    }
    census
}

/// Reconstruction problem for one year of balance sheets: call loans as
/// out-strengths, call money as in-strengths, a slack node appended to balance the
/// totals, and the category rules applied. Bans naming a category with no banks
/// are skipped.
pub fn build_bank_problem<T: Scalar>(
    records: &[BalanceSheetRecord],
    rules: &CategoryRuleSet<T>,
    beta: T,
) -> Result<ReconstructionProblem<T>, IoError> {
    if records.is_empty() {
        return Err(IoError::NoRecords);
    }
    let years: BTreeSet<i32> = records.iter().map(|r| r.year).collect();
    if years.len() > 1 {
        return Err(IoError::MixedYears(years.into_iter().collect()));
    }
    let out: Vec<T> = records.iter().map(|r| T::lit(r.call_loan)).collect();
    let inn: Vec<T> = records.iter().map(|r| T::lit(r.call_money)).collect();
    let (marginals, slack) = add_slack_node(&out, &inn, SlackPolicy::Always)?;
    let mut nodes: Vec<NodeInfo> = records
        .iter()
        .map(|r| NodeInfo::new(r.bank_id.clone(), r.bank_name.clone(), r.category))
        .collect();
    nodes.extend(slack);
    // a ban on an absent category is vacuous; a total on one stays an error
    let present: BTreeSet<Category> = nodes.iter().map(|n| n.category).collect();
    let mut rules = rules.clone();
    rules
        .forbidden
        .retain(|(a, b)| present.contains(a) && present.contains(b));
    let (groups, mut zero_cells) = assemble_category_rules(&nodes, &rules)?;
    let last = nodes.len() - 1;
    zero_cells.insert((last, last));
    Ok(ReconstructionProblem::new(
        nodes,
        marginals,
        groups,
        zero_cells,
        beta,
        rules.forbid_diagonal,
    )?)
}
