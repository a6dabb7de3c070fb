//! Linear constraint structure over the free cells of a problem, plus the
//! transportation feasibility presolve.

use std::collections::VecDeque;

use crate::model::ReconstructionProblem;
use crate::scalar::{compensated_sum, Scalar};

use super::SolveError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ConstraintKind {
    Row(usize),
    Col(usize),
    Group(usize),
}

/// Equality constraints `A p = b` restricted to the cells that are not forced to zero.
#[derive(Debug, Clone)]
pub(crate) struct Structure<T> {
    pub n: usize,
    /// Row-major cell index `i * n + j` of each free cell.
    pub free: Vec<usize>,
    /// Constraint indices touching each free cell.
    pub membership: Vec<Vec<usize>>,
    pub kinds: Vec<ConstraintKind>,
    pub targets: Vec<T>,
}

impl<T: Scalar> Structure<T> {
    pub fn build(problem: &ReconstructionProblem<T>) -> Result<Self, SolveError> {
        let n = problem.n();
        let g = problem.marginals.total;
        if g.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
            return Err(SolveError::NonPositiveTotal);
        }
        let rows: Vec<T> = problem.marginals.out_strength.iter().map(|&s| s / g).collect();
        let cols: Vec<T> = problem.marginals.in_strength.iter().map(|&s| s / g).collect();

        let mut kinds = Vec::new();
        let mut targets = Vec::new();
        let mut row_con = vec![None; n];
        let mut col_con = vec![None; n];
        for (i, &r) in rows.iter().enumerate() {
            if r > T::zero() {
                row_con[i] = Some(kinds.len());
                kinds.push(ConstraintKind::Row(i));
                targets.push(r);
            }
        }
        for (j, &c) in cols.iter().enumerate() {
            if c > T::zero() {
                col_con[j] = Some(kinds.len());
                kinds.push(ConstraintKind::Col(j));
                targets.push(c);
            }
        }

        let mut cell_pos = vec![usize::MAX; n * n];
        let mut free = Vec::new();
        let mut membership = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (Some(rc), Some(cc)) = (row_con[i], col_con[j]) else {
                    continue;
                };
                if problem.zero_cells.contains(&(i, j)) {
                    continue;
                }
                cell_pos[i * n + j] = free.len();
                free.push(i * n + j);
                membership.push(vec![rc, cc]);
            }
        }

        for (gi, group) in problem.group_constraints.iter().enumerate() {
            let con = kinds.len();
            let mut touched = 0usize;
            for (i, j) in group.cells() {
                let pos = cell_pos[i * n + j];
                if pos != usize::MAX {
                    membership[pos].push(con);
                    touched += 1;
                }
            }
            if touched == 0 {
                return Err(SolveError::Infeasible {
                    aggregate: format!("group constraint {gi}"),
                    detail: "positive total but every cell in the block is forced to zero".into(),
                });
            }
            kinds.push(ConstraintKind::Group(gi));
            targets.push(group.amount / g);
        }

        let structure = Self {
            n,
            free,
            membership,
            kinds,
            targets,
        };
        structure.check_coverage(problem)?;
        Ok(structure)
    }

    pub fn m(&self) -> usize {
        self.kinds.len()
    }

    pub fn describe(&self, con: usize, problem: &ReconstructionProblem<T>) -> String {
        match self.kinds[con] {
            ConstraintKind::Row(i) => format!("out-strength of `{}`", problem.nodes[i].id),
            ConstraintKind::Col(j) => format!("in-strength of `{}`", problem.nodes[j].id),
            ConstraintKind::Group(g) => format!("group constraint {g}"),
        }
    }

    fn check_coverage(&self, problem: &ReconstructionProblem<T>) -> Result<(), SolveError> {
        let mut covered = vec![false; self.m()];
        for cons in &self.membership {
            for &c in cons {
                covered[c] = true;
            }
        }
        if let Some(c) = covered.iter().position(|c| !c) {
            return Err(SolveError::Infeasible {
                aggregate: self.describe(c, problem),
                detail: "positive total but no cell is allowed to carry it".into(),
            });
        }
        Ok(())
    }

    /// `A p`, accumulated per constraint with compensated summation.
    pub fn apply(&self, p: &[T]) -> Vec<T> {
        let mut terms: Vec<Vec<T>> = vec![Vec::new(); self.m()];
        for (k, cons) in self.membership.iter().enumerate() {
            for &c in cons {
                terms[c].push(p[k]);
            }
        }
        terms.into_iter().map(compensated_sum).collect()
    }

    /// `A^T lambda` for every free cell.
    pub fn transpose_apply(&self, lambda: &[T]) -> Vec<T> {
        self.membership
            .iter()
            .map(|cons| cons.iter().fold(T::zero(), |acc, &c| acc + lambda[c]))
            .collect()
    }

    /// Checks that the row and column targets can be routed through the free cells
    /// (max-flow on the bipartite transportation network) and that every group total
    /// fits inside the marginals of its block.
    pub fn presolve(&self, problem: &ReconstructionProblem<T>) -> Result<(), SolveError> {
        let n = self.n;
        let g = problem.marginals.total;
        let rows: Vec<T> = problem.marginals.out_strength.iter().map(|&s| s / g).collect();
        let cols: Vec<T> = problem.marginals.in_strength.iter().map(|&s| s / g).collect();
        let need = compensated_sum(rows.iter().copied());
        let tol = T::lit(1e-10).max(T::tolerance_floor());

        let mut net = FlowNetwork::new(2 * n + 2);
        let (source, sink) = (2 * n, 2 * n + 1);
        let unbounded = T::lit(4.0);
        for i in 0..n {
            if rows[i] > T::zero() {
                net.add_edge(source, i, rows[i]);
            }
            if cols[i] > T::zero() {
                net.add_edge(n + i, sink, cols[i]);
            }
        }
        for &cell in &self.free {
            net.add_edge(cell / n, n + cell % n, unbounded);
        }
        let flow = net.max_flow(source, sink, tol * T::lit(1e-3));
        if flow < need - tol {
            let reach = net.residual_reachable(source, tol * T::lit(1e-3));
            let stuck: Vec<&str> = (0..n)
                .filter(|&i| reach[i] && rows[i] > T::zero())
                .map(|i| problem.nodes[i].id.as_str())
                .collect();
            return Err(SolveError::Infeasible {
                aggregate: format!("out-strength of {{{}}}", stuck.join(", ")),
                detail: format!(
                    "marginals cannot be routed through the allowed cells: routable share {} < 1",
                    flow
                ),
            });
        }

        for (gi, group) in problem.group_constraints.iter().enumerate() {
            let q = group.amount / g;
            let src: T = compensated_sum(group.source.iter().map(|&i| rows[i]));
            let dst: T = compensated_sum(group.target.iter().map(|&j| cols[j]));
            if q > src.min(dst) + tol {
                return Err(SolveError::Infeasible {
                    aggregate: format!("group constraint {gi}"),
                    detail: format!(
                        "total share {} exceeds block marginals (out {}, in {})",
                        q, src, dst
                    ),
                });
            }
        }
        Ok(())
    }
}

struct FlowEdge<T> {
    to: usize,
    cap: T,
}

/// Dinic max-flow on real capacities.
struct FlowNetwork<T> {
    adj: Vec<Vec<usize>>,
    edges: Vec<FlowEdge<T>>,
}

impl<T: Scalar> FlowNetwork<T> {
    fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            edges: Vec::new(),
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: T) {
        self.adj[from].push(self.edges.len());
        self.edges.push(FlowEdge { to, cap });
        self.adj[to].push(self.edges.len());
        self.edges.push(FlowEdge {
            to: from,
            cap: T::zero(),
        });
    }

    fn levels(&self, source: usize, eps: T) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let edge = &self.edges[e];
                if edge.cap > eps && level[edge.to] == usize::MAX {
                    level[edge.to] = level[u] + 1;
                    queue.push_back(edge.to);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, sink: usize, pushed: T, level: &[usize], next: &mut [usize], eps: T) -> T {
        if u == sink {
            return pushed;
        }
        while next[u] < self.adj[u].len() {
            let e = self.adj[u][next[u]];
            let (to, cap) = (self.edges[e].to, self.edges[e].cap);
            if cap > eps && level[to] == level[u] + 1 {
                let got = self.augment(to, sink, pushed.min(cap), level, next, eps);
                if got > T::zero() {
                    self.edges[e].cap = self.edges[e].cap - got;
                    self.edges[e ^ 1].cap = self.edges[e ^ 1].cap + got;
                    return got;
                }
            }
            next[u] += 1;
        }
        T::zero()
    }

    fn max_flow(&mut self, source: usize, sink: usize, eps: T) -> T {
        let mut total = T::zero();
        loop {
            let level = self.levels(source, eps);
            if level[sink] == usize::MAX {
                return total;
            }
            let mut next = vec![0usize; self.adj.len()];
            loop {
                let pushed = self.augment(source, sink, T::infinity(), &level, &mut next, eps);
                if pushed <= T::zero() {
                    break;
                }
                total = total + pushed;
            }
        }
    }

    fn residual_reachable(&self, source: usize, eps: T) -> Vec<bool> {
        self.levels(source, eps)
            .into_iter()
            .map(|l| l != usize::MAX)
            .collect()
    }
}
