//! Benchmark inputs: 0/1 knapsack instances and least-squares regression data.

use std::path::Path;

use qubo_forge::expression::{CmpOp, Comparison, Monomial, Polynomial};
use qubo_forge::problem::{ConstraintDecl, Direction, Problem, ProblemError, VariableKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("header announces {expected} items but {found} were given")]
    CountMismatch { expected: usize, found: usize },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("need at least {needed} rows for {features} features, got {rows}")]
    TooFewRows { needed: usize, features: usize, rows: usize },
    #[error("need {needed} columns, row {row} has {found}")]
    TooFewColumns { row: usize, needed: usize, found: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// A 0/1 knapsack: pick items maximizing total preference within capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackInstance {
    pub n_obj: usize,
    pub w_max: f64,
    /// Preference score of each item.
    pub p_arr: Vec<f64>,
    pub w_arr: Vec<f64>,
}

impl KnapsackInstance {
    /// Parses the usual layout: `n capacity`, then one `value weight` line
    /// per item. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (line, header) = lines.next().ok_or(DatasetError::Malformed { line: 1, reason: "empty file".into() })?;
        let [n, w_max] = numbers::<2>(header, line + 1)?;
        if n < 1.0 || n.fract() != 0.0 {
            return Err(DatasetError::Malformed { line: line + 1, reason: format!("item count {n} is not a positive integer") });
        }
        if !(w_max > 0.0) {
            return Err(DatasetError::Malformed { line: line + 1, reason: "capacity must be positive".into() });
        }
        let n_obj = n as usize;
        let mut p_arr = Vec::with_capacity(n_obj);
        let mut w_arr = Vec::with_capacity(n_obj);
        for (line, text) in lines {
            let [p, w] = numbers::<2>(text, line + 1)?;
            if !(w > 0.0) {
                return Err(DatasetError::Malformed { line: line + 1, reason: "weights must be positive".into() });
            }
            p_arr.push(p);
            w_arr.push(w);
        }
        if p_arr.len() != n_obj {
            return Err(DatasetError::CountMismatch { expected: n_obj, found: p_arr.len() });
        }
        Ok(KnapsackInstance { n_obj, w_max, p_arr, w_arr })
    }

    /// Binary array `obj`, objective `max Σ p_i obj_i` and the hard
    /// capacity constraint `Σ w_i obj_i <= W_max`.
    pub fn to_problem(&self) -> Result<Problem, DatasetError> {
        let mut problem = Problem::new();
        let names = problem.add_binary_array("obj", &[self.n_obj])?;
        let weighted = |coeffs: &[f64]| Polynomial::affine(names.iter().map(String::as_str).zip(coeffs.iter().copied()), 0.0);
        problem.add_objective_poly(weighted(&self.p_arr), Direction::Maximize, 1.0)?;
        let capacity = Comparison { lhs: weighted(&self.w_arr), op: CmpOp::Le, rhs: self.w_max };
        problem.add_constraint_decl(ConstraintDecl::hard(capacity))?;
        Ok(problem)
    }
}

fn numbers<const N: usize>(text: &str, line: usize) -> Result<[f64; N], DatasetError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != N {
        return Err(DatasetError::Malformed { line, reason: format!("expected {N} numbers, found {}", fields.len()) });
    }
    let mut out = [0.0; N];
    for (slot, field) in out.iter_mut().zip(fields) {
        *slot = field
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| DatasetError::Malformed { line, reason: format!("`{field}` is not a number") })?;
    }
    Ok(out)
}

/// Reads an instance file and builds its problem.
pub fn load_knapsack(path: &Path) -> Result<(KnapsackInstance, Problem), DatasetError> {
    let instance = KnapsackInstance::parse(&std::fs::read_to_string(path)?)?;
    let problem = instance.to_problem()?;
    Ok((instance, problem))
}

/// Range and step of every regression weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightGrid {
    pub min: f64,
    pub max: f64,
    pub precision: f64,
}

/// Least-squares data with the design matrix already augmented by a
/// trailing column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub grid: WeightGrid,
}

impl RegressionDataset {
    pub fn new(features: Vec<Vec<f64>>, y: Vec<f64>, grid: WeightGrid) -> Result<Self, DatasetError> {
        let d = features.first().map_or(0, Vec::len);
        if features.len() < d + 1 {
            return Err(DatasetError::TooFewRows { needed: d + 1, features: d, rows: features.len() });
        }
        if let Some(row) = features.iter().position(|r| r.len() != d) {
            return Err(DatasetError::TooFewColumns { row: row + 1, needed: d, found: features[row].len() });
        }
        let x = features.into_iter().map(|mut r| {
            r.push(1.0);
            r
        });
        Ok(RegressionDataset { x: x.collect(), y, grid })
    }

    /// Takes the first `features` columns as inputs and the last column as
    /// the label. The first row is a header.
    pub fn from_csv(path: &Path, features: usize, grid: WeightGrid) -> Result<Self, DatasetError> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (k, record) in reader.records().enumerate() {
            let record = record?;
            let row = k + 2;
            if record.len() < features + 1 {
                return Err(DatasetError::TooFewColumns { row, needed: features + 1, found: record.len() });
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| DatasetError::Malformed { line: row, reason: format!("`{s}` is not a number") })
            };
            xs.push((0..features).map(|j| parse(&record[j])).collect::<Result<Vec<_>, _>>()?);
            ys.push(parse(&record[record.len() - 1])?);
        }
        Self::new(xs, ys, grid)
    }

    /// Number of weights, the intercept included.
    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Squared residual `|Xw - Y|^2`.
    pub fn energy(&self, w: &[f64]) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(row, y)| {
                let fit: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
                (fit - y).powi(2)
            })
            .sum()
    }

    fn rank(&self) -> usize {
        let mut m = self.x.clone();
        let cols = self.dim();
        let mut rank = 0;
        for c in 0..cols {
            let Some(pivot) = (rank..m.len()).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())) else { break };
            if m[pivot][c].abs() < 1e-9 {
                continue;
            }
            m.swap(rank, pivot);
            for r in 0..m.len() {
                if r != rank {
                    let f = m[r][c] / m[rank][c];
                    for k in c..cols {
                        m[r][k] -= f * m[rank][k];
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Continuous array `w` over the grid, minimizing
/// `wᵀ(XᵀX)w - 2wᵀXᵀY + YᵀY`. Rank-deficient data only logs a warning.
pub fn build_regression(data: &RegressionDataset) -> Result<Problem, DatasetError> {
    let dim = data.dim();
    if data.rank() < dim {
        log::warn!("design matrix has rank {} < {dim}; the optimum is not unique", data.rank());
    }
    let mut problem = Problem::new();
    let kind = VariableKind::Continuous {
        lo: data.grid.min,
        hi: data.grid.max,
        precision: data.grid.precision,
        encoding: Default::default(),
    };
    let w = problem.add_variable_array("w", &[dim], kind)?;
    let mut energy = Polynomial::constant(data.y.iter().map(|y| y * y).sum());
    for i in 0..dim {
        let xty: f64 = data.x.iter().zip(&data.y).map(|(row, y)| row[i] * y).sum();
        energy.add_term(Monomial::var(w[i].clone()), -2.0 * xty);
        for j in 0..dim {
            let xtx: f64 = data.x.iter().map(|row| row[i] * row[j]).sum();
            energy.add_term(Monomial::from_vars([w[i].as_str(), w[j].as_str()]), xtx);
        }
    }
    problem.add_objective_poly(energy, Direction::Minimize, 1.0)?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_knapsack() {
        let k = KnapsackInstance::parse("2 4\n5 2\n\n10 3\n").unwrap();
        assert_eq!(k, KnapsackInstance { n_obj: 2, w_max: 4.0, p_arr: vec![5.0, 10.0], w_arr: vec![2.0, 3.0] });
        let p = k.to_problem().unwrap();
        assert_eq!(p.variables().len(), 2);
        assert_eq!(p.constraints().len(), 1);
    }

    #[test]
    fn knapsack_errors() {
        assert!(matches!(KnapsackInstance::parse(""), Err(DatasetError::Malformed { line: 1, .. })));
        assert!(matches!(KnapsackInstance::parse("3 4\n5 2\n"), Err(DatasetError::CountMismatch { expected: 3, found: 1 })));
        assert!(matches!(KnapsackInstance::parse("1 4\n5 x\n"), Err(DatasetError::Malformed { line: 2, .. })));
        assert!(matches!(KnapsackInstance::parse("1 4\n5 0\n"), Err(DatasetError::Malformed { line: 2, .. })));
        assert!(matches!(KnapsackInstance::parse("1 -4\n5 1\n"), Err(DatasetError::Malformed { line: 1, .. })));
        assert!(matches!(KnapsackInstance::parse("1.5 4\n"), Err(DatasetError::Malformed { line: 1, .. })));
    }

    #[test]
    fn regression_energy_is_the_objective() {
        let grid = WeightGrid { min: -1.0, max: 1.0, precision: 0.5 };
        let data = RegressionDataset::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.0, 1.0, 2.0], grid).unwrap();
        let p = build_regression(&data).unwrap();
        assert_eq!(p.variables().len(), 2);
        for w in [[1.0, 0.0], [0.5, -0.5], [-1.0, 1.0]] {
            let a = std::collections::HashMap::from([("w_0".to_string(), w[0]), ("w_1".to_string(), w[1])]);
            let obj = p.objectives()[0].expr.evaluate(&a).unwrap();
            assert!((obj - data.energy(&w)).abs() < 1e-9);
        }
        assert_eq!(data.energy(&[1.0, 0.0]), 0.0);
    }

    #[test]
    fn regression_shape_errors() {
        let grid = WeightGrid { min: -1.0, max: 1.0, precision: 0.5 };
        assert!(matches!(RegressionDataset::new(vec![vec![1.0, 2.0]], vec![1.0], grid), Err(DatasetError::TooFewRows { .. })));
        let ragged = vec![vec![1.0], vec![1.0, 2.0], vec![3.0]];
        assert!(matches!(RegressionDataset::new(ragged, vec![1.0; 3], grid), Err(DatasetError::TooFewColumns { row: 2, .. })));
        let collinear = RegressionDataset::new(vec![vec![1.0], vec![1.0]], vec![0.0, 1.0], grid).unwrap();
        assert_eq!(collinear.rank(), 1);
        assert!(build_regression(&collinear).is_ok());
    }
}
