//! Domain types and constraint assembly shared by the solver, analysis and I/O layers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{compensated_sum, Scalar};

/// Relative tolerance within which out- and in-strength totals count as balanced.
pub const BALANCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown category name `{0}`")]
    UnknownCategory(String),
    #[error("rule references category `{0}` which has no nodes")]
    EmptyCategory(Category),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("matrix has {got} entries, expected {n}x{n}")]
    Shape { n: usize, got: usize },
    #[error("entry ({row}, {col}) = {value} is negative or not finite")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("strength vectors have lengths {out} and {inn}")]
    LengthMismatch { out: usize, inn: usize },
    #[error("strength of node {index} is negative or not finite ({value})")]
    InvalidStrength { index: usize, value: f64 },
    #[error("both strength totals are zero")]
    Degenerate,
    #[error("out-strength total {out} and in-strength total {inn} are not balanced")]
    Unbalanced { out: f64, inn: f64 },
    #[error("zero cell ({0}, {1}) is out of range")]
    CellOutOfRange(usize, usize),
    #[error("group constraint {index}: {reason}")]
    InvalidGroup { index: usize, reason: String },
    #[error("beta must be finite and nonnegative, got {0}")]
    InvalidBeta(f64),
    #[error("node list has {nodes} entries but marginals have {marginals}")]
    NodeCount { nodes: usize, marginals: usize },
}

/// Institutional category of a node. `Other` is reserved for the slack node,
/// `Generic` is used for datasets without categories (trade).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Major,
    Trust,
    LeadingRegional,
    SecondTierRegional,
    Other,
    Generic,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Major,
        Category::Trust,
        Category::LeadingRegional,
        Category::SecondTierRegional,
        Category::Other,
        Category::Generic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Major => "major",
            Category::Trust => "trust",
            Category::LeadingRegional => "leading_regional",
            Category::SecondTierRegional => "second_tier_regional",
            Category::Other => "other",
            Category::Generic => "generic",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| ModelError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub id: String,
    pub name: String,
    pub category: Category,
}

impl NodeInfo {
    pub fn new(id: impl Into<String>, name: impl Into<String>, category: Category) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            category,
        }
    }

    /// A node without a display name or category.
    pub fn generic(id: impl Into<String>) -> Self {
        let id = id.into();
        Self {
            name: id.clone(),
            id,
            category: Category::Generic,
        }
    }
}

fn check_unique_ids(nodes: &[NodeInfo]) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for node in nodes {
        if !seen.insert(node.id.as_str()) {
            return Err(ModelError::DuplicateNode(node.id.clone()));
        }
    }
    Ok(())
}

/// Dense nonnegative weighted directed matrix with labelled rows and columns.
/// Stored row-major; entry `(i, j)` is the flow from node `i` to node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix<T> {
    nodes: Vec<NodeInfo>,
    weights: Vec<T>,
}

impl<T: Scalar> FlowMatrix<T> {
    pub fn new(nodes: Vec<NodeInfo>, weights: Vec<T>) -> Result<Self, ModelError> {
        let n = nodes.len();
        if weights.len() != n * n {
            return Err(ModelError::Shape {
                n,
                got: weights.len(),
            });
        }
        check_unique_ids(&nodes)?;
        for (k, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < T::zero() {
                return Err(ModelError::InvalidEntry {
                    row: k / n,
                    col: k % n,
                    value: w.to_f64_lossy(),
                });
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn zeros(nodes: Vec<NodeInfo>) -> Result<Self, ModelError> {
        let n = nodes.len();
        Self::new(nodes, vec![T::zero(); n * n])
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(nodes: Vec<NodeInfo>, rows: &[Vec<T>]) -> Result<Self, ModelError> {
        let n = nodes.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(ModelError::Shape {
                n,
                got: rows.iter().map(Vec::len).sum(),
            });
        }
        Self::new(nodes, rows.concat())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeInfo] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.weights[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let n = self.n();
        &self.weights[i * n..(i + 1) * n]
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n())
            .map(|i| compensated_sum(self.row(i).iter().copied()))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let n = self.n();
        (0..n)
            .map(|j| compensated_sum((0..n).map(|i| self.get(i, j))))
            .collect()
    }

    pub fn total(&self) -> T {
        compensated_sum(self.weights.iter().copied())
    }

    /// Largest entry, or zero for an empty matrix.
    pub fn max(&self) -> T {
        self.weights.iter().copied().fold(T::zero(), T::max)
    }

    /// Multiplies every entry by `factor` (which must be finite and nonnegative).
    pub fn scaled(&self, factor: T) -> Result<Self, ModelError> {
        Self::new(
            self.nodes.clone(),
            self.weights.iter().map(|&w| w * factor).collect(),
        )
    }

    /// Returns a copy with `f(i, j, w)` applied to every entry.
    pub fn map_cells(&self, mut f: impl FnMut(usize, usize, T) -> T) -> Result<Self, ModelError> {
        let n = self.n();
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(k, &w)| f(k / n, k % n, w))
            .collect();
        Self::new(self.nodes.clone(), weights)
    }

    /// Off-diagonal entries that are strictly positive, in row-major order.
    pub fn positive_off_diagonal(&self) -> Vec<T> {
        let n = self.n();
        self.weights
            .iter()
            .enumerate()
            .filter(|&(k, &w)| k / n != k % n && w > T::zero())
            .map(|(_, &w)| w)
            .collect()
    }

    /// Fraction of off-diagonal cells carrying a strictly positive weight.
    pub fn support_density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        self.positive_off_diagonal().len() as f64 / (n * (n - 1)) as f64
    }

    pub fn into_parts(self) -> (Vec<NodeInfo>, Vec<T>) {
        (self.nodes, self.weights)
    }
}

/// Out-strengths, in-strengths and the grand total `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Marginals<T> {
    pub out_strength: Vec<T>,
    pub in_strength: Vec<T>,
    pub total: T,
}

fn check_strengths<T: Scalar>(values: &[T]) -> Result<(), ModelError> {
    for (index, v) in values.iter().enumerate() {
        if !v.is_finite() || *v < T::zero() {
            return Err(ModelError::InvalidStrength {
                index,
                value: v.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

impl<T: Scalar> Marginals<T> {
    /// Balanced marginals; `G` is the common total of both sides.
    pub fn new(out_strength: Vec<T>, in_strength: Vec<T>) -> Result<Self, ModelError> {
        if out_strength.len() != in_strength.len() {
            return Err(ModelError::LengthMismatch {
                out: out_strength.len(),
                inn: in_strength.len(),
            });
        }
        check_strengths(&out_strength)?;
        check_strengths(&in_strength)?;
        let out = compensated_sum(out_strength.iter().copied());
        let inn = compensated_sum(in_strength.iter().copied());
        if out <= T::zero() && inn <= T::zero() {
            return Err(ModelError::Degenerate);
        }
        let total = out.max(inn);
        let tol = T::lit(BALANCE_TOLERANCE).max(T::epsilon() * T::lit(4.0)) * total;
        if (out - inn).abs() > tol {
            return Err(ModelError::Unbalanced {
                out: out.to_f64_lossy(),
                inn: inn.to_f64_lossy(),
            });
        }
        Ok(Self {
            out_strength,
            in_strength,
            total,
        })
    }

    /// Marginals read off a weight matrix: row sums out, column sums in.
    pub fn from_matrix(matrix: &FlowMatrix<T>) -> Result<Self, ModelError> {
        Self::new(matrix.row_sums(), matrix.col_sums())
    }

    pub fn len(&self) -> usize {
        self.out_strength.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out_strength.is_empty()
    }
}

/// Known total flow `amount` from every node of `source` to every node of `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GroupConstraint<T> {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub amount: T,
}

impl<T: Scalar> GroupConstraint<T> {
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.source
            .iter()
            .flat_map(move |&i| self.target.iter().map(move |&j| (i, j)))
    }
}

/// Full input of one reconstruction: marginals, group totals, cells forced to zero and `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionProblem<T> {
    pub nodes: Vec<NodeInfo>,
    pub marginals: Marginals<T>,
    pub group_constraints: Vec<GroupConstraint<T>>,
    pub zero_cells: BTreeSet<(usize, usize)>,
    pub beta: T,
    pub forbid_diagonal: bool,
}

impl<T: Scalar> ReconstructionProblem<T> {
    /// Validates and canonicalizes a problem. Group constraints with a zero amount are
    /// folded into `zero_cells`; the diagonal is added when `forbid_diagonal` is set.
    pub fn new(
        nodes: Vec<NodeInfo>,
        marginals: Marginals<T>,
        group_constraints: Vec<GroupConstraint<T>>,
        zero_cells: BTreeSet<(usize, usize)>,
        beta: T,
        forbid_diagonal: bool,
    ) -> Result<Self, ModelError> {
        let n = nodes.len();
        if n != marginals.len() {
            return Err(ModelError::NodeCount {
                nodes: n,
                marginals: marginals.len(),
            });
        }
        check_unique_ids(&nodes)?;
        if !beta.is_finite() || beta < T::zero() {
            return Err(ModelError::InvalidBeta(beta.to_f64_lossy()));
        }
        if let Some(&(i, j)) = zero_cells.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(ModelError::CellOutOfRange(i, j));
        }
        let mut zero_cells = zero_cells;
        if forbid_diagonal {
            zero_cells.extend((0..n).map(|i| (i, i)));
        }
        let mut groups = Vec::with_capacity(group_constraints.len());
        for (index, g) in group_constraints.into_iter().enumerate() {
            let bad = |reason: &str| ModelError::InvalidGroup {
                index,
                reason: reason.to_string(),
            };
            if g.source.is_empty() || g.target.is_empty() {
                return Err(bad("empty group"));
            }
            if g.source.iter().chain(&g.target).any(|&k| k >= n) {
                return Err(bad("node index out of range"));
            }
            if !g.amount.is_finite() || g.amount < T::zero() {
                return Err(bad("amount must be finite and nonnegative"));
            }
            if g.amount > marginals.total * (T::one() + T::lit(BALANCE_TOLERANCE)) {
                return Err(bad("amount exceeds the grand total"));
            }
            let mut g = g;
            g.source.sort_unstable();
            g.source.dedup();
            g.target.sort_unstable();
            g.target.dedup();
            if g.amount == T::zero() {
                zero_cells.extend(g.cells());
            } else {
                groups.push(g);
            }
        }
        Ok(Self {
            nodes,
            marginals,
            group_constraints: groups,
            zero_cells,
            beta,
            forbid_diagonal,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn with_beta(&self, beta: T) -> Result<Self, ModelError> {
        if !beta.is_finite() || beta < T::zero() {
            return Err(ModelError::InvalidBeta(beta.to_f64_lossy()));
        }
        let mut p = self.clone();
        p.beta = beta;
        Ok(p)
    }
}

/// Which (category, category) blocks are forbidden and which carry a known total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CategoryRuleSet<T> {
    #[serde(default)]
    pub forbidden: Vec<(Category, Category)>,
    #[serde(default)]
    pub totals: Vec<(Category, Category, T)>,
    #[serde(default)]
    pub forbid_diagonal: bool,
}

impl<T: Scalar> Default for CategoryRuleSet<T> {
    fn default() -> Self {
        Self {
            forbidden: Vec::new(),
            totals: Vec::new(),
            forbid_diagonal: false,
        }
    }
}

impl<T: Scalar> CategoryRuleSet<T> {
    /// No transactions within a category except among major banks; no self-loops.
    pub fn bank_default() -> Self {
        Self {
            forbidden: vec![
                (Category::Trust, Category::Trust),
                (Category::LeadingRegional, Category::LeadingRegional),
                (Category::SecondTierRegional, Category::SecondTierRegional),
            ],
            totals: Vec::new(),
            forbid_diagonal: true,
        }
    }

    /// Parses rules written with category names, e.g. `("trust", "trust")`.
    pub fn from_names(
        forbidden: &[(&str, &str)],
        totals: &[(&str, &str, T)],
        forbid_diagonal: bool,
    ) -> Result<Self, ModelError> {
        let forbidden = forbidden
            .iter()
            .map(|(a, b)| Ok((a.parse()?, b.parse()?)))
            .collect::<Result<_, ModelError>>()?;
        let totals = totals
            .iter()
            .map(|(a, b, q)| Ok((a.parse()?, b.parse()?, *q)))
            .collect::<Result<_, ModelError>>()?;
        Ok(Self {
            forbidden,
            totals,
            forbid_diagonal,
        })
    }
}

/// Translates category rules into group constraints and zero cells.
/// Totals of zero become zero cells.
pub fn assemble_category_rules<T: Scalar>(
    nodes: &[NodeInfo],
    rules: &CategoryRuleSet<T>,
) -> Result<(Vec<GroupConstraint<T>>, BTreeSet<(usize, usize)>), ModelError> {
    let mut members: BTreeMap<Category, Vec<usize>> = BTreeMap::new();
    for (k, node) in nodes.iter().enumerate() {
        members.entry(node.category).or_default().push(k);
    }
    let group = |c: Category| -> Result<&Vec<usize>, ModelError> {
        members
            .get(&c)
            .filter(|m| !m.is_empty())
            .ok_or(ModelError::EmptyCategory(c))
    };

    let mut zero_cells = BTreeSet::new();
    for &(a, b) in &rules.forbidden {
        let (src, dst) = (group(a)?, group(b)?);
        for &i in src {
            zero_cells.extend(dst.iter().map(|&j| (i, j)));
        }
    }
    let mut groups = Vec::new();
    for &(a, b, amount) in &rules.totals {
        let (src, dst) = (group(a)?, group(b)?);
        if amount == T::zero() {
            for &i in src {
                zero_cells.extend(dst.iter().map(|&j| (i, j)));
            }
        } else {
            groups.push(GroupConstraint {
                source: src.clone(),
                target: dst.clone(),
                amount,
            });
        }
    }
    if rules.forbid_diagonal {
        zero_cells.extend((0..nodes.len()).map(|i| (i, i)));
    }
    Ok((groups, zero_cells))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlackPolicy {
    /// Append the slack node even when the input is balanced (it is then isolated).
    #[default]
    Always,
    /// Append the slack node only when the totals differ.
    WhenUnbalanced,
}

/// Id of the slack node appended by [`add_slack_node`].
pub const SLACK_ID: &str = "other";

/// Balances raw strengths by appending a single slack node that absorbs the
/// difference between total out- and in-strength.
///
/// Returns the balanced marginals and the appended node, if any. The caller is
/// responsible for forbidding the slack self-loop.
pub fn add_slack_node<T: Scalar>(
    out_strength: &[T],
    in_strength: &[T],
    policy: SlackPolicy,
) -> Result<(Marginals<T>, Option<NodeInfo>), ModelError> {
    if out_strength.len() != in_strength.len() {
        return Err(ModelError::LengthMismatch {
            out: out_strength.len(),
            inn: in_strength.len(),
        });
    }
    check_strengths(out_strength)?;
    check_strengths(in_strength)?;
    let out = compensated_sum(out_strength.iter().copied());
    let inn = compensated_sum(in_strength.iter().copied());
    if out <= T::zero() && inn <= T::zero() {
        return Err(ModelError::Degenerate);
    }
    let total = out.max(inn);
    let balanced = (out - inn).abs() <= T::lit(BALANCE_TOLERANCE) * total;
    if balanced && policy == SlackPolicy::WhenUnbalanced {
        return Ok((
            Marginals::new(out_strength.to_vec(), in_strength.to_vec())?,
            None,
        ));
    }
    let (slack_out, slack_in) = if balanced {
        (T::zero(), T::zero())
    } else {
        ((inn - out).max(T::zero()), (out - inn).max(T::zero()))
    };
    let mut s_out = out_strength.to_vec();
    let mut s_in = in_strength.to_vec();
    s_out.push(slack_out);
    s_in.push(slack_in);
    let marginals = Marginals {
        out_strength: s_out,
        in_strength: s_in,
        total,
    };
    Ok((
        marginals,
        Some(NodeInfo::new(SLACK_ID, "other", Category::Other)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(cats: &[Category]) -> Vec<NodeInfo> {
        cats.iter()
            .enumerate()
            .map(|(k, &c)| NodeInfo::new(format!("n{k}"), format!("node {k}"), c))
            .collect()
    }

    #[test]
    fn category_names_round_trip() {
        for c in Category::ALL {
            assert_eq!(c.as_str().parse::<Category>().unwrap(), c);
        }
        assert!(matches!(
            "regional".parse::<Category>(),
            Err(ModelError::UnknownCategory(_))
        ));
    }

    #[test]
    fn trust_pair_forbidden_with_and_without_diagonal() {
        let ns = nodes(&[Category::Trust, Category::Trust]);
        let mut rules = CategoryRuleSet::<f64>::from_names(&[("trust", "trust")], &[], false).unwrap();
        let (groups, zeros) = assemble_category_rules(&ns, &rules).unwrap();
        assert!(groups.is_empty());
        // Same-category block includes the self pairs.
        assert_eq!(zeros, BTreeSet::from([(0, 0), (0, 1), (1, 0), (1, 1)]));

        rules.forbidden.clear();
        rules.forbid_diagonal = true;
        let (_, zeros) = assemble_category_rules(&ns, &rules).unwrap();
        assert_eq!(zeros, BTreeSet::from([(0, 0), (1, 1)]));
    }

    #[test]
    fn bank_rules_block_every_category_but_major() {
        let ns = nodes(&[
            Category::Major,
            Category::Major,
            Category::Trust,
            Category::Trust,
            Category::LeadingRegional,
            Category::LeadingRegional,
            Category::SecondTierRegional,
            Category::SecondTierRegional,
        ]);
        let (_, zeros) = assemble_category_rules(&ns, &CategoryRuleSet::<f64>::bank_default()).unwrap();
        assert!(!zeros.contains(&(0, 1)) && !zeros.contains(&(1, 0)));
        for block in [2, 4, 6] {
            for i in block..block + 2 {
                for j in block..block + 2 {
                    assert!(zeros.contains(&(i, j)));
                }
            }
        }
        // 4 diagonal-free cells per banned block plus 8 diagonal cells
        assert_eq!(zeros.len(), 3 * 2 + 8);
    }

    #[test]
    fn known_total_becomes_group_constraint() {
        let ns = nodes(&[Category::Major, Category::LeadingRegional, Category::LeadingRegional]);
        let rules = CategoryRuleSet {
            forbidden: vec![],
            totals: vec![(Category::LeadingRegional, Category::Major, 7.4e12)],
            forbid_diagonal: false,
        };
        let (groups, zeros) = assemble_category_rules(&ns, &rules).unwrap();
        assert!(zeros.is_empty());
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].amount, 7.4e12);
        assert_eq!(groups[0].source, vec![1, 2]);
        assert_eq!(groups[0].target, vec![0]);
    }

    #[test]
    fn zero_total_is_normalized_to_zero_cells() {
        let ns = nodes(&[Category::Major, Category::Trust]);
        let rules = CategoryRuleSet {
            forbidden: vec![],
            totals: vec![(Category::Trust, Category::Major, 0.0)],
            forbid_diagonal: false,
        };
        let (groups, zeros) = assemble_category_rules(&ns, &rules).unwrap();
        assert!(groups.is_empty());
        assert_eq!(zeros, BTreeSet::from([(1, 0)]));
    }

    #[test]
    fn rules_on_missing_category_fail() {
        let ns = nodes(&[Category::Major]);
        let err = assemble_category_rules(&ns, &CategoryRuleSet::<f64>::bank_default()).unwrap_err();
        assert_eq!(err, ModelError::EmptyCategory(Category::Trust));
        assert!(CategoryRuleSet::<f64>::from_names(&[("banks", "trust")], &[], true).is_err());
    }

    #[test]
    fn slack_absorbs_excess_lending() {
        let (m, node) = add_slack_node(&[6.0, 4.0], &[5.0, 3.0], SlackPolicy::Always).unwrap();
        assert_eq!(node.unwrap().category, Category::Other);
        assert_eq!(m.out_strength[2], 0.0);
        assert_eq!(m.in_strength[2], 2.0);
        assert_eq!(m.total, 10.0);
    }

    #[test]
    fn balanced_input_gets_isolated_slack() {
        let (m, node) = add_slack_node(&[2.0, 3.0], &[4.0, 1.0], SlackPolicy::Always).unwrap();
        assert!(node.is_some());
        assert_eq!((m.out_strength[2], m.in_strength[2]), (0.0, 0.0));
        assert_eq!(m.total, 5.0);
        let (m, node) = add_slack_node(&[2.0, 3.0], &[4.0, 1.0], SlackPolicy::WhenUnbalanced).unwrap();
        assert!(node.is_none());
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn balance_sheet_aggregates_need_slack_lending() {
        // call loan vs call money by category, 10^12 JPY
        let loan: [f64; 4] = [1.5e12, 0.5e12, 2.7e12, 0.4e12];
        let money = [9.4e12, 0.6e12, 1.5e12, 0.1e12];
        let (m, _) = add_slack_node(&loan, &money, SlackPolicy::Always).unwrap();
        assert!((m.out_strength[4] - 6.5e12).abs() < 1e-3);
        assert_eq!(m.in_strength[4], 0.0);
        assert!((m.total - 11.6e12).abs() < 1e-3);
        let out: f64 = m.out_strength.iter().sum();
        let inn: f64 = m.in_strength.iter().sum();
        assert!((out - inn).abs() <= 1e-12 * m.total);
    }

    #[test]
    fn all_zero_strengths_are_degenerate() {
        assert_eq!(
            add_slack_node(&[0.0, 0.0], &[0.0, 0.0], SlackPolicy::Always).unwrap_err(),
            ModelError::Degenerate
        );
    }

    #[test]
    fn problem_rejects_bad_inputs() {
        let ns = nodes(&[Category::Generic, Category::Generic]);
        let m = Marginals::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let bad_cell = ReconstructionProblem::new(
            ns.clone(),
            m.clone(),
            vec![],
            BTreeSet::from([(0, 5)]),
            1.0,
            false,
        );
        assert_eq!(bad_cell.unwrap_err(), ModelError::CellOutOfRange(0, 5));
        let bad_beta = ReconstructionProblem::new(ns.clone(), m.clone(), vec![], BTreeSet::new(), -1.0, false);
        assert!(matches!(bad_beta, Err(ModelError::InvalidBeta(_))));
        let empty_group = GroupConstraint {
            source: vec![],
            target: vec![0],
            amount: 1.0,
        };
        let err = ReconstructionProblem::new(ns, m, vec![empty_group], BTreeSet::new(), 1.0, false);
        assert!(matches!(err, Err(ModelError::InvalidGroup { .. })));
    }

    #[test]
    fn unbalanced_marginals_rejected() {
        assert!(matches!(
            Marginals::new(vec![1.0, 2.0], vec![1.0, 1.0]),
            Err(ModelError::Unbalanced { .. })
        ));
    }

    #[test]
    fn flow_matrix_validates_entries() {
        let ns = nodes(&[Category::Generic, Category::Generic]);
        assert!(FlowMatrix::new(ns.clone(), vec![1.0, -1.0, 0.0, 0.0]).is_err());
        assert!(FlowMatrix::new(ns.clone(), vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(FlowMatrix::new(ns.clone(), vec![1.0]).is_err());
        let m = FlowMatrix::new(ns, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.row_sums(), vec![3.0, 7.0]);
        assert_eq!(m.col_sums(), vec![4.0, 6.0]);
        assert_eq!(m.positive_off_diagonal(), vec![2.0, 3.0]);
        assert_eq!(m.support_density(), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cat() -> impl Strategy<Value = Category> {
            prop_oneof![
                Just(Category::Major),
                Just(Category::Trust),
                Just(Category::LeadingRegional),
                Just(Category::SecondTierRegional),
            ]
        }

        proptest! {
            #[test]
            fn rule_assembly_commutes_with_relabeling(
                cats in proptest::collection::vec(cat(), 4..10),
                seed in any::<u64>(),
            ) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let ns = nodes(&cats);
                let rules = CategoryRuleSet::<f64> {
                    forbidden: vec![(Category::Major, Category::Major), (Category::Trust, Category::LeadingRegional)],
                    totals: vec![],
                    forbid_diagonal: true,
                };
                let present = |c| cats.contains(&c);
                prop_assume!(present(Category::Major) && present(Category::Trust) && present(Category::LeadingRegional));
                let (_, zeros) = assemble_category_rules(&ns, &rules).unwrap();

                let mut perm: Vec<usize> = (0..ns.len()).collect();
                perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                // node k of the permuted list is original node perm[k]
                let permuted: Vec<NodeInfo> = perm.iter().map(|&k| ns[k].clone()).collect();
                let (_, pz) = assemble_category_rules(&permuted, &rules).unwrap();
                let mapped: BTreeSet<_> = pz.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
                prop_assert_eq!(mapped, zeros);
            }

            #[test]
            fn slack_balances_any_input(
                out in proptest::collection::vec(0.0f64..1e6, 1..20),
                inn_scale in 0.1f64..3.0,
            ) {
                let inn: Vec<f64> = out.iter().rev().map(|v| v * inn_scale).collect();
                prop_assume!(out.iter().sum::<f64>() > 0.0);
                let (m, _) = add_slack_node(&out, &inn, SlackPolicy::Always).unwrap();
                let so: f64 = compensated_sum(m.out_strength.iter().copied());
                let si: f64 = compensated_sum(m.in_strength.iter().copied());
                prop_assert!((so - si).abs() <= 1e-12 * m.total);
                prop_assert!((so - m.total).abs() <= 1e-12 * m.total);
                // second application on balanced input adds only zero strengths
                let (m2, _) = add_slack_node(&m.out_strength, &m.in_strength, SlackPolicy::Always).unwrap();
                prop_assert_eq!(m2.out_strength.last().copied(), Some(0.0));
                prop_assert_eq!(m2.in_strength.last().copied(), Some(0.0));
            }
        }
    }
}
