//! Small linear programs, backed by `minilp`.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::geom::{Hyperplane, Matrix, Vector};

/// Largest `t ≤ 1` such that some point lies at distance `≥ t` inside every
/// half-space `normal·x <= offset`. Negative when the system is infeasible.
pub fn max_inscribed_slack(planes: &[Hyperplane]) -> Option<f64> {
    let d = planes.first()?.dim();
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let xs: Vec<_> = (0..d)
        .map(|_| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let t = problem.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    for p in planes {
        let mut row: Vec<_> = xs.iter().zip(p.normal.iter()).map(|(&x, &c)| (x, c)).collect();
        row.push((t, 1.0));
        problem.add_constraint(&row, ComparisonOp::Le, p.offset);
    }
    problem.solve().ok().map(|s| s[t])
}

/// Maximizes the smallest entry of `basis·c` over coefficient vectors `c`
/// subject to the entries averaging one.
///
/// Returns the optimal point `basis·c` and its smallest entry, or `None`
/// when the mean constraint cannot be met (e.g. the span has zero sum).
pub fn max_min_entry(basis: &Matrix) -> Option<(Vector, f64)> {
    let (n, r) = basis.shape();
    if n == 0 || r == 0 {
        return None;
    }
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let cs: Vec<_> = (0..r)
        .map(|_| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let t = problem.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    for i in 0..n {
        let mut row: Vec<_> = cs
            .iter()
            .enumerate()
            .filter(|(j, _)| basis[(i, *j)] != 0.0)
            .map(|(j, &c)| (c, basis[(i, j)]))
            .collect();
        row.push((t, -1.0));
        problem.add_constraint(&row, ComparisonOp::Ge, 0.0);
    }
    let sums: Vec<_> = cs
        .iter()
        .enumerate()
        .map(|(j, &c)| (c, basis.column(j).sum() / n as f64))
        .collect();
    problem.add_constraint(&sums, ComparisonOp::Eq, 1.0);
    let solution = problem.solve().ok()?;
    let coeffs = Vector::from_iterator(r, cs.iter().map(|&c| solution[c]));
    Some((basis * coeffs, solution[t]))
}
