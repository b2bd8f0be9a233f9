//! Dense two-phase simplex with Bland's rule.
//!
//! Sized for the small programs the NSP, `M⁺` and condition-number checks
//! generate (at most a few hundred columns). Bland's rule on both phases
//! makes cycling impossible; a pivot cap guards against numerical stalls.

use crate::ndcore::{DenseMatrix, LinalgError};

use super::SolveError;

const PIVOT_EPS: f64 = 1e-9;

/// `min cᵀx s.t. A_eq x = b_eq, lower ≤ x ≤ upper`; bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub a_eq: DenseMatrix,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// Standard form: `x ≥ 0`, no upper bounds.
    pub fn standard(c: Vec<f64>, a_eq: DenseMatrix, b_eq: Vec<f64>) -> Self {
        let n = c.len();
        Self { c, a_eq, b_eq, lower: vec![0.0; n], upper: vec![f64::INFINITY; n] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Pivot cap reached.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// Final basic point in the original variables; meaningful for `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = l + x'`.
    Shift { lower: f64, col: usize },
    /// `x = u − x'`.
    Reflect { upper: f64, col: usize },
    /// `x = x⁺ − x⁻`.
    Split { pos: usize, neg: usize },
}

struct Tableau {
    /// Row-major, `width = cols + 1`; last entry of each row is the rhs.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost rows; last entry is minus the objective value.
    phase1: Vec<f64>,
    phase2: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    first_artificial: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, q: usize) {
        let piv = self.rows[r][q];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        self.rows[r][q] = 1.0;
        let pivot_row = self.rows[r].clone();
        let eliminate = |row: &mut Vec<f64>| {
            let f = row[q];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[q] = 0.0;
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.phase1);
        eliminate(&mut self.phase2);
        self.basis[r] = q;
    }

    /// Bland: lowest-index column with negative reduced cost.
    fn entering(&self, cost: &[f64], allow_artificial: bool) -> Option<usize> {
        let limit = if allow_artificial { self.cols } else { self.first_artificial };
        (0..limit).find(|&j| cost[j] < -PIVOT_EPS && !self.basis.contains(&j))
    }

    /// Minimum ratio; ties go to the lowest basic-variable index.
    fn leaving(&self, q: usize) -> Option<usize> {
        let rhs = self.cols;
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            if row[q] > PIVOT_EPS {
                let ratio = row[rhs].max(0.0) / row[q];
                best = match best {
                    None => Some((i, ratio)),
                    Some((b, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * br.abs().max(1.0);
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[b] {
                            Some((i, ratio))
                        } else {
                            Some((b, br))
                        }
                    }
                };
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Solves an LP by the two-phase simplex method.
pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution, SolveError> {
    let n = problem.c.len();
    let m = problem.a_eq.rows();
    if problem.a_eq.cols() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, found: problem.a_eq.cols() }.into());
    }
    for (len, what) in [(problem.lower.len(), n), (problem.upper.len(), n), (problem.b_eq.len(), m)] {
        if len != what {
            return Err(LinalgError::DimensionMismatch { expected: what, found: len }.into());
        }
    }
    if problem.c.iter().chain(&problem.b_eq).any(|v| !v.is_finite()) {
        return Err(SolveError::InvalidParameter("non-finite LP data".into()));
    }
    for j in 0..n {
        let (l, u) = (problem.lower[j], problem.upper[j]);
        if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
            return Err(SolveError::InvalidParameter(format!("bad bounds for variable {j}")));
        }
        if l > u {
            return Ok(LpSolution { x: vec![], objective: f64::NAN, status: LpStatus::Infeasible, pivots: 0 });
        }
    }

    // map every variable onto nonnegative standard-form columns
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut bound_rows = Vec::new();
    for j in 0..n {
        let (l, u) = (problem.lower[j], problem.upper[j]);
        if l.is_finite() {
            maps.push(VarMap::Shift { lower: l, col: ncols });
            if u.is_finite() {
                bound_rows.push((ncols, u - l));
            }
            ncols += 1;
        } else if u.is_finite() {
            maps.push(VarMap::Reflect { upper: u, col: ncols });
            ncols += 1;
        } else {
            maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
            ncols += 2;
        }
    }
    let slack0 = ncols;
    let first_artificial = slack0 + bound_rows.len();
    let cols = first_artificial + m;
    let nrows = m + bound_rows.len();
    let width = cols + 1;

    let mut rows = vec![vec![0.0; width]; nrows];
    let mut cost = vec![0.0; width];
    for (j, map) in maps.iter().enumerate() {
        let cj = problem.c[j];
        match *map {
            VarMap::Shift { col, .. } => cost[col] = cj,
            VarMap::Reflect { col, .. } => cost[col] = -cj,
            VarMap::Split { pos, neg } => {
                cost[pos] = cj;
                cost[neg] = -cj;
            }
        }
    }
    for i in 0..m {
        let row = &mut rows[i];
        let mut rhs = problem.b_eq[i];
        for (j, map) in maps.iter().enumerate() {
            let a = problem.a_eq.get(i, j);
            if a == 0.0 {
                continue;
            }
            match *map {
                VarMap::Shift { lower, col } => {
                    row[col] += a;
                    rhs -= a * lower;
                }
                VarMap::Reflect { upper, col } => {
                    row[col] -= a;
                    rhs -= a * upper;
                }
                VarMap::Split { pos, neg } => {
                    row[pos] += a;
                    row[neg] -= a;
                }
            }
        }
        if rhs < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
            rhs = -rhs;
        }
        row[cols] = rhs;
        row[first_artificial + i] = 1.0;
    }
    let mut basis: Vec<usize> = (0..m).map(|i| first_artificial + i).collect();
    for (k, &(col, range)) in bound_rows.iter().enumerate() {
        let row = &mut rows[m + k];
        row[col] = 1.0;
        row[slack0 + k] = 1.0;
        row[cols] = range;
        basis.push(slack0 + k);
    }

    // reduced costs against the initial basis
    let mut phase1 = vec![0.0; width];
    for j in first_artificial..cols {
        phase1[j] = 1.0;
    }
    for i in 0..m {
        for (p, v) in phase1.iter_mut().zip(&rows[i]) {
            *p -= v;
        }
    }
    let phase2 = cost; // initial basis columns have zero cost in phase 2

    let mut t = Tableau { rows, phase1, phase2, basis, cols, first_artificial };
    let max_pivots = 50 * (nrows + cols) + 1000;
    let mut pivots = 0;
    let b_scale = problem.b_eq.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));

    while let Some(q) = t.entering(&t.phase1.clone(), false) {
        if pivots >= max_pivots {
            return Ok(finish(&t, &maps, problem, pivots, LpStatus::Stalled));
        }
        let Some(r) = t.leaving(q) else { break };
        t.pivot(r, q);
        pivots += 1;
    }
    let infeasibility = -t.phase1[cols];
    if infeasibility > 1e-9 * b_scale {
        return Ok(finish(&t, &maps, problem, pivots, LpStatus::Infeasible));
    }

    // drive zero-level artificials out; drop rows that are redundant
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= first_artificial {
            let q = (0..first_artificial).find(|&j| t.rows[r][j].abs() > PIVOT_EPS);
            match q {
                Some(q) => {
                    t.pivot(r, q);
                    pivots += 1;
                }
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    while let Some(q) = t.entering(&t.phase2.clone(), false) {
        if pivots >= max_pivots {
            return Ok(finish(&t, &maps, problem, pivots, LpStatus::Stalled));
        }
        let Some(r) = t.leaving(q) else {
            return Ok(finish(&t, &maps, problem, pivots, LpStatus::Unbounded));
        };
        t.pivot(r, q);
        pivots += 1;
    }
    Ok(finish(&t, &maps, problem, pivots, LpStatus::Optimal))
}

fn finish(t: &Tableau, maps: &[VarMap], problem: &LpProblem, pivots: usize, status: LpStatus) -> LpSolution {
    let mut z = vec![0.0; t.cols];
    for (i, &b) in t.basis.iter().enumerate() {
        z[b] = t.rows[i][t.cols].max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shift { lower, col } => lower + z[col],
            VarMap::Reflect { upper, col } => upper - z[col],
            VarMap::Split { pos, neg } => z[pos] - z[neg],
        })
        .collect();
    let objective = match status {
        LpStatus::Optimal | LpStatus::Stalled => x.iter().zip(&problem.c).map(|(a, b)| a * b).sum(),
        LpStatus::Infeasible => f64::NAN,
        LpStatus::Unbounded => f64::NEG_INFINITY,
    };
    LpSolution { x, objective, status, pivots }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::gen_gaussian;
    use crate::ndcore::{ls_solve, SeededRng};

    fn single(c: f64, lower: f64, upper: f64) -> LpProblem {
        LpProblem {
            c: vec![c],
            a_eq: DenseMatrix::zeros(0, 1),
            b_eq: vec![],
            lower: vec![lower],
            upper: vec![upper],
        }
    }

    #[test]
    fn lower_bound_is_attained() {
        let s = lp_solve(&single(1.0, 3.0, f64::INFINITY)).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
        assert!((s.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn crossed_bounds_are_infeasible() {
        let s = lp_solve(&single(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let a = DenseMatrix::from_row_major(2, 1, &[1.0, 1.0]).unwrap();
        let p = LpProblem::standard(vec![1.0], a, vec![0.0, 1.0]);
        assert_eq!(lp_solve(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn free_variable_unbounded_below() {
        let s = lp_solve(&single(1.0, f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn upper_only_and_boxed_variables() {
        // min −x₀ + x₁, x₀ ∈ [−1, 2], x₁ ≤ 5, x₀ + x₁ = 0
        let a = DenseMatrix::from_row_major(1, 2, &[1.0, 1.0]).unwrap();
        let p = LpProblem {
            c: vec![-1.0, 1.0],
            a_eq: a,
            b_eq: vec![0.0],
            lower: vec![-1.0, f64::NEG_INFINITY],
            upper: vec![2.0, 5.0],
        };
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] + 2.0).abs() < 1e-12);
        assert!((s.objective + 4.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let a = DenseMatrix::from_row_major(2, 2, &[1.0, 1.0, 2.0, 2.0]).unwrap();
        let p = LpProblem::standard(vec![1.0, 2.0], a, vec![1.0, 2.0]);
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for j in start..n {
                cur.push(j);
                rec(j + 1, n, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, k, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn matches_vertex_enumeration() {
        let (m, n) = (6, 10);
        let bases = subsets(n, m);
        for seed in 0..40 {
            let a = gen_gaussian(m, n, seed).unwrap();
            let mut rng = SeededRng::new(1000 + seed);
            let x0: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let b = a.mul_vec(&x0).unwrap().into_inner();
            let c: Vec<f64> = (0..n).map(|_| 0.1 + rng.uniform()).collect();
            let mut best = f64::INFINITY;
            for cols in &bases {
                let Ok(xb) = ls_solve(&a.select_columns(cols), &b) else { continue };
                if xb.iter().all(|&v| v >= -1e-10) {
                    let val: f64 = cols.iter().zip(xb.iter()).map(|(&j, v)| c[j] * v).sum();
                    best = best.min(val);
                }
            }
            let s = lp_solve(&LpProblem::standard(c.clone(), a.clone(), b.clone())).unwrap();
            assert_eq!(s.status, LpStatus::Optimal);
            assert!((s.objective - best).abs() <= 1e-8 * best.abs().max(1.0), "seed {seed}: {} vs {best}", s.objective);
            let ax = a.mul_vec(&s.x).unwrap();
            for (u, v) in ax.iter().zip(&b) {
                assert!((u - v).abs() < 1e-8);
            }
            assert!(s.x.iter().all(|&v| v >= 0.0));
        }
    }
}
