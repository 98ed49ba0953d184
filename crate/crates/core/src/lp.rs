//! Thin wrapper over `microlp` for the small power-allocation LPs: minimize a
//! linear objective over nonnegative variables subject to linear rows.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::LpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Cmp, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    /// Minimize `objective · x` over `x ≥ 0`.
    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.rows.push((coeffs, cmp, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self
            .objective
            .iter()
            .map(|&c| problem.add_var(c, (0.0, f64::INFINITY)))
            .collect();
        for (coeffs, cmp, rhs) in &self.rows {
            let terms: Vec<_> = vars
                .iter()
                .zip(coeffs)
                .filter(|(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            let op = match cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
            };
            if terms.is_empty() {
                // A row without variables is a plain feasibility check.
                let ok = match cmp {
                    Cmp::Le => 0.0 <= *rhs,
                    Cmp::Ge => 0.0 >= *rhs,
                };
                if !ok {
                    return Err(LpError::Infeasible);
                }
                continue;
            }
            problem.add_constraint(terms, op, *rhs);
        }
        let outcome = problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => LpError::Infeasible,
            microlp::Error::Unbounded => LpError::Unbounded,
            other => LpError::Solver(format!("{other:?}")),
        })?;
        let solution = outcome
            .into_solution()
            .map_err(|_| LpError::Solver("solve interrupted".to_string()))?;
        let x: Vec<f64> = vars.iter().map(|&v| solution.var_value(v).max(0.0)).collect();
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, objective })
    }
}
