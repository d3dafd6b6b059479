//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! The solver is generic over the scalar field. Every caller inside this crate
//! instantiates it with [`crate::Rational`] so that feasibility decisions and
//! optimal values are exact; the pivot sequence is a deterministic function of
//! the input.

use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug)]
pub struct Constraint<F> {
    pub coeffs: Vec<F>,
    pub relation: Relation,
    pub rhs: F,
}

/// `optimize objective . x` subject to the constraints; variables are
/// nonnegative unless flagged free.
#[derive(Clone, Debug)]
pub struct LinearProgram<F> {
    pub num_vars: usize,
    pub sense: Sense,
    pub objective: Vec<F>,
    pub constraints: Vec<Constraint<F>>,
    pub free: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<F> {
    Optimal { value: F, x: Vec<F> },
    Infeasible,
    Unbounded,
}

impl<F> LpOutcome<F> {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }
}

impl<F: Scalar> LinearProgram<F> {
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        LinearProgram {
            num_vars,
            sense,
            objective: vec![F::zero(); num_vars],
            constraints: Vec::new(),
            free: vec![false; num_vars],
        }
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn set_objective(&mut self, objective: Vec<F>) {
        assert_eq!(objective.len(), self.num_vars);
        self.objective = objective;
    }

    pub fn add(&mut self, coeffs: Vec<F>, relation: Relation, rhs: F) {
        assert_eq!(coeffs.len(), self.num_vars, "constraint width mismatch");
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn solve(&self) -> LpOutcome<F> {
        // Column layout: one column per nonnegative variable, two per free one,
        // then slacks, then artificials.
        let mut col_of = Vec::with_capacity(self.num_vars);
        let mut ncols = 0;
        for &is_free in &self.free {
            col_of.push(ncols);
            ncols += if is_free { 2 } else { 1 };
        }
        let structural = ncols;
        let m = self.constraints.len();
        let slack_count = self
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let art_start = structural + slack_count;
        let total = art_start + m;

        let mut rows: Vec<Vec<F>> = Vec::with_capacity(m);
        let mut next_slack = structural;
        for (i, c) in self.constraints.iter().enumerate() {
            let mut row = vec![F::zero(); total + 1];
            for (j, a) in c.coeffs.iter().enumerate() {
                row[col_of[j]] = a.clone();
                if self.free[j] {
                    row[col_of[j] + 1] = -a.clone();
                }
            }
            match c.relation {
                Relation::Le => {
                    row[next_slack] = F::one();
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -F::one();
                    next_slack += 1;
                }
                Relation::Eq => {}
            }
            row[total] = c.rhs.clone();
            if row[total] < F::zero() {
                for v in row.iter_mut() {
                    *v = -v.clone();
                }
            }
            row[art_start + i] = F::one();
            rows.push(row);
        }
        let mut tableau = Tableau {
            rows,
            basis: (art_start..art_start + m).collect(),
            obj: vec![F::zero(); total + 1],
            width: total,
        };

        // Phase 1: maximize -(sum of artificials).
        let mut phase1 = vec![F::zero(); total];
        for c in phase1.iter_mut().skip(art_start) {
            *c = -F::one();
        }
        tableau.load_objective(&phase1);
        let allowed1: Vec<bool> = (0..total).map(|_| true).collect();
        if tableau.run(&allowed1).is_err() {
            unreachable!("phase 1 objective is bounded");
        }
        if tableau.value() < F::zero() {
            return LpOutcome::Infeasible;
        }
        // Drive zero-level artificials out of the basis.
        let mut r = 0;
        while r < tableau.rows.len() {
            if tableau.basis[r] >= art_start {
                let pivot_col = (0..art_start).find(|&j| !tableau.rows[r][j].is_zero());
                match pivot_col {
                    Some(j) => {
                        tableau.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        tableau.rows.remove(r);
                        tableau.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }

        // Phase 2 over the original columns only.
        let mut cost = vec![F::zero(); total];
        for j in 0..self.num_vars {
            let c = match self.sense {
                Sense::Maximize => self.objective[j].clone(),
                Sense::Minimize => -self.objective[j].clone(),
            };
            cost[col_of[j]] = c.clone();
            if self.free[j] {
                cost[col_of[j] + 1] = -c;
            }
        }
        tableau.load_objective(&cost);
        let allowed2: Vec<bool> = (0..total).map(|j| j < art_start).collect();
        if tableau.run(&allowed2).is_err() {
            return LpOutcome::Unbounded;
        }
        let mut colval = vec![F::zero(); total];
        for (r, &b) in tableau.basis.iter().enumerate() {
            colval[b] = tableau.rows[r][total].clone();
        }
        let x: Vec<F> = (0..self.num_vars)
            .map(|j| {
                if self.free[j] {
                    colval[col_of[j]].clone() - colval[col_of[j] + 1].clone()
                } else {
                    colval[col_of[j]].clone()
                }
            })
            .collect();
        let value = self
            .objective
            .iter()
            .zip(&x)
            .fold(F::zero(), |acc, (c, v)| acc + c.clone() * v.clone());
        LpOutcome::Optimal { value, x }
    }
}

struct Tableau<F> {
    rows: Vec<Vec<F>>,
    basis: Vec<usize>,
    /// Reduced profits; the last entry holds minus the objective value.
    obj: Vec<F>,
    width: usize,
}

struct Unbounded;

impl<F: Scalar> Tableau<F> {
    fn load_objective(&mut self, cost: &[F]) {
        let mut obj: Vec<F> = cost.to_vec();
        obj.push(F::zero());
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (j, v) in obj.iter_mut().enumerate() {
                *v = v.clone() - cb.clone() * self.rows[r][j].clone();
            }
        }
        self.obj = obj;
    }

    fn value(&self) -> F {
        -self.obj[self.width].clone()
    }

    fn run(&mut self, allowed: &[bool]) -> Result<(), Unbounded> {
        loop {
            // Bland: lowest-index improving column.
            let Some(enter) = (0..self.width).find(|&j| allowed[j] && self.obj[j] > F::zero())
            else {
                return Ok(());
            };
            let mut leave: Option<(usize, F)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][enter];
                if *a > F::zero() {
                    let ratio = self.rows[r][self.width].clone() / a.clone();
                    let better = match &leave {
                        None => true,
                        Some((lr, best)) => {
                            ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                None => return Err(Unbounded),
                Some((r, _)) => self.pivot(r, enter),
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v = v.clone() - f.clone() * pv.clone();
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v = v.clone() - f.clone() * pv.clone();
            }
        }
        self.basis[r] = c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, rat_frac};
    use crate::Rational;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
        let mut lp = LinearProgram::<Rational>::new(2, Sense::Maximize);
        lp.set_objective(vec![rat(3), rat(5)]);
        lp.add(vec![rat(1), rat(0)], Relation::Le, rat(4));
        lp.add(vec![rat(0), rat(2)], Relation::Le, rat(12));
        lp.add(vec![rat(3), rat(2)], Relation::Le, rat(18));
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal { value: rat(36), x: vec![rat(2), rat(6)] }
        );
    }

    #[test]
    fn float_instantiation_agrees() {
        let mut lp = LinearProgram::<f64>::new(2, Sense::Maximize);
        lp.set_objective(vec![3.0, 5.0]);
        lp.add(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add(vec![3.0, 2.0], Relation::Le, 18.0);
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert!((value - 36.0).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::<Rational>::new(1, Sense::Maximize);
        lp.add(vec![rat(1)], Relation::Ge, rat(2));
        lp.add(vec![rat(1)], Relation::Le, rat(1));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::<Rational>::new(1, Sense::Maximize);
        lp.set_objective(vec![rat(1)]);
        lp.add(vec![rat(1)], Relation::Ge, rat(0));
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x subject to x - y = -3/2, y >= 0 with x free  ->  x = -3/2
        let mut lp = LinearProgram::<Rational>::new(2, Sense::Minimize);
        lp.set_free(0);
        lp.set_objective(vec![rat(1), rat(0)]);
        lp.add(vec![rat(1), rat(-1)], Relation::Eq, rat_frac(-3, 2));
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, rat_frac(-3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example cycles under the textbook largest-coefficient rule.
        let mut lp = LinearProgram::<Rational>::new(4, Sense::Maximize);
        lp.set_objective(vec![rat_frac(3, 4), rat(-150), rat_frac(1, 50), rat(-6)]);
        lp.add(vec![rat_frac(1, 4), rat(-60), rat_frac(-1, 25), rat(9)], Relation::Le, rat(0));
        lp.add(vec![rat_frac(1, 2), rat(-90), rat_frac(-1, 50), rat(3)], Relation::Le, rat(0));
        lp.add(vec![rat(0), rat(0), rat(1), rat(0)], Relation::Le, rat(1));
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, rat_frac(1, 20)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
