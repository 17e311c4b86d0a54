//! Dense two-phase simplex for the small linear programs behind the dual
//! transport norm and the polyhedral support/norming computations.
//!
//! Problems here have at most a few dozen variables and a few hundred
//! constraints, so a full-tableau method with Bland's rule (no cycling)
//! is plenty. Free variables are split into positive and negative parts.

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpSolution {
    Optimal { value: f64, point: Vec<f64> },
    Unbounded,
    Infeasible,
}

/// Maximize `objective . x` over `{ x in R^n : rows[i] . x <= rhs[i] }`
/// with all variables free.
pub(crate) fn maximize(objective: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> LpSolution {
    let n = objective.len();
    let m = rows.len();
    debug_assert!(rows.iter().all(|r| r.len() == n));
    debug_assert_eq!(rhs.len(), m);

    if m == 0 {
        return if objective.iter().all(|&c| c == 0.0) {
            LpSolution::Optimal {
                value: 0.0,
                point: vec![0.0; n],
            }
        } else {
            LpSolution::Unbounded
        };
    }

    // Normalize each row so pivot tolerances are scale-free.
    let mut scaled_rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut scaled_rhs: Vec<f64> = Vec::with_capacity(m);
    for (row, &b) in rows.iter().zip(rhs) {
        let scale = row
            .iter()
            .map(|c| c.abs())
            .fold(b.abs(), f64::max)
            .max(1e-30);
        scaled_rows.push(row.iter().map(|c| c / scale).collect());
        scaled_rhs.push(b / scale);
    }

    let split = 2 * n; // free x -> u - v with u, v >= 0
    let mut needs_artificial = vec![false; m];
    for (i, b) in scaled_rhs.iter_mut().enumerate() {
        if *b < 0.0 {
            for c in scaled_rows[i].iter_mut() {
                *c = -*c;
            }
            *b = -*b;
            needs_artificial[i] = true;
        }
    }
    let artificial_count = needs_artificial.iter().filter(|&&x| x).count();
    let width = split + m + artificial_count; // structural, slack, artificial
    let art_start = split + m;

    // tableau[i] = coefficients, tableau_rhs[i] = right-hand side
    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut tab_rhs: Vec<f64> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut art_index = 0;
    for i in 0..m {
        let mut row = vec![0.0; width];
        for j in 0..n {
            row[j] = scaled_rows[i][j];
            row[n + j] = -scaled_rows[i][j];
        }
        // slack carries -1 on rows that were flipped to make rhs nonnegative
        row[split + i] = if needs_artificial[i] { -1.0 } else { 1.0 };
        if needs_artificial[i] {
            row[art_start + art_index] = 1.0;
            basis.push(art_start + art_index);
            art_index += 1;
        } else {
            basis.push(split + i);
        }
        tab.push(row);
        tab_rhs.push(scaled_rhs[i]);
    }

    let mut alive: Vec<bool> = vec![true; m];

    if artificial_count > 0 {
        // Phase 1: maximize -(sum of artificials).
        let mut cost = vec![0.0; width];
        for j in art_start..width {
            cost[j] = -1.0;
        }
        let allow = |_j: usize| true;
        match run_simplex(
            &mut tab, &mut tab_rhs, &mut basis, &alive, &cost, width, allow,
        ) {
            SimplexOutcome::Optimal => {}
            SimplexOutcome::Unbounded => unreachable!("phase 1 objective is bounded above by 0"),
        }
        let phase1: f64 = (0..m)
            .filter(|&i| alive[i] && basis[i] >= art_start)
            .map(|i| tab_rhs[i])
            .sum();
        if phase1 > 1e-7 {
            return LpSolution::Infeasible;
        }
        // Drive remaining artificials out of the basis or drop their rows.
        for i in 0..m {
            if !alive[i] || basis[i] < art_start {
                continue;
            }
            let col = (0..art_start).find(|&j| tab[i][j].abs() > PIVOT_TOL);
            match col {
                Some(j) => pivot_row(&mut tab, &mut tab_rhs, &mut basis, &alive, i, j),
                None => alive[i] = false, // redundant constraint
            }
        }
    }

    // Phase 2: original objective on split variables, artificials banned.
    let mut cost = vec![0.0; width];
    for j in 0..n {
        cost[j] = objective[j];
        cost[n + j] = -objective[j];
    }
    let allow = |j: usize| j < art_start;
    match run_simplex(
        &mut tab, &mut tab_rhs, &mut basis, &alive, &cost, width, allow,
    ) {
        SimplexOutcome::Unbounded => LpSolution::Unbounded,
        SimplexOutcome::Optimal => {
            let mut y = vec![0.0; width];
            for i in 0..m {
                if alive[i] {
                    y[basis[i]] = tab_rhs[i];
                }
            }
            let point: Vec<f64> = (0..n).map(|j| y[j] - y[n + j]).collect();
            let value = objective
                .iter()
                .zip(&point)
                .map(|(c, x)| c * x)
                .sum::<f64>();
            LpSolution::Optimal { value, point }
        }
    }
}

enum SimplexOutcome {
    Optimal,
    Unbounded,
}

/// Tableau simplex with Bland's rule: enter the lowest-index improving
/// column, leave on the lowest-index basic variable among ratio ties.
fn run_simplex(
    tab: &mut [Vec<f64>],
    tab_rhs: &mut [f64],
    basis: &mut [usize],
    alive: &[bool],
    cost: &[f64],
    width: usize,
    allow: impl Fn(usize) -> bool,
) -> SimplexOutcome {
    let m = tab.len();
    // reduced[j] = z_j - c_j
    let mut reduced: Vec<f64> = (0..width).map(|j| -cost[j]).collect();
    for i in 0..m {
        if alive[i] && cost[basis[i]] != 0.0 {
            let cb = cost[basis[i]];
            for j in 0..width {
                reduced[j] += cb * tab[i][j];
            }
        }
    }

    loop {
        let entering = (0..width).find(|&j| allow(j) && reduced[j] < -COST_TOL);
        let Some(col) = entering else {
            return SimplexOutcome::Optimal;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if !alive[i] || tab[i][col] <= PIVOT_TOL {
                continue;
            }
            let ratio = tab_rhs[i] / tab[i][col];
            let better = match leave {
                None => true,
                Some((cur, best)) => ratio < best || (ratio == best && basis[i] < basis[cur]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let Some((row, _)) = leave else {
            return SimplexOutcome::Unbounded;
        };
        pivot_row(tab, tab_rhs, basis, alive, row, col);
        // price the freshly normalized pivot row out of the reduced costs
        let factor = reduced[col];
        for j in 0..width {
            reduced[j] -= factor * tab[row][j];
        }
        reduced[col] = 0.0;
    }
}

fn pivot_row(
    tab: &mut [Vec<f64>],
    tab_rhs: &mut [f64],
    basis: &mut [usize],
    alive: &[bool],
    row: usize,
    col: usize,
) {
    let m = tab.len();
    let width = tab[row].len();
    let p = tab[row][col];
    for j in 0..width {
        tab[row][j] /= p;
    }
    tab_rhs[row] /= p;
    tab[row][col] = 1.0;
    for i in 0..m {
        if i == row || !alive[i] {
            continue;
        }
        let factor = tab[i][col];
        if factor == 0.0 {
            continue;
        }
        for j in 0..width {
            tab[i][j] -= factor * tab[row][j];
        }
        tab[i][col] = 0.0;
        tab_rhs[i] -= factor * tab_rhs[row];
        if tab_rhs[i] < 0.0 && tab_rhs[i] > -1e-12 {
            tab_rhs[i] = 0.0;
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(solution: LpSolution) -> (f64, Vec<f64>) {
        match solution {
            LpSolution::Optimal { value, point } => (value, point),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn box_maximum() {
        // max x + 2y over |x| <= 1, |y| <= 1
        let (value, point) = optimal(maximize(
            &[1.0, 2.0],
            &[
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            &[1.0, 1.0, 1.0, 1.0],
        ));
        assert!((value - 3.0).abs() < 1e-9);
        assert!((point[0] - 1.0).abs() < 1e-9);
        assert!((point[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn strip_is_unbounded_in_the_free_direction() {
        let rows = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let rhs = vec![1.0, 1.0];
        assert_eq!(maximize(&[0.0, 1.0], &rows, &rhs), LpSolution::Unbounded);
        let (value, _) = optimal(maximize(&[1.0, 0.0], &rows, &rhs));
        assert_eq!(value, 1.0);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // max -x subject to -x <= -2  (x >= 2): optimum at x = 2
        let (value, point) = optimal(maximize(&[-1.0], &[vec![-1.0]], &[-2.0]));
        assert!((value + 2.0).abs() < 1e-9);
        assert!((point[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_system_is_detected() {
        // x <= -1 and -x <= 0 (x >= 0) cannot both hold
        let solution = maximize(&[1.0], &[vec![1.0], vec![-1.0]], &[-1.0, 0.0]);
        assert_eq!(solution, LpSolution::Infeasible);
    }

    #[test]
    fn equality_via_paired_inequalities() {
        // max x + y with x + y = 1, x, y in [0, 1]
        let rows = vec![
            vec![1.0, 1.0],
            vec![-1.0, -1.0],
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let rhs = vec![1.0, -1.0, 1.0, 0.0, 1.0, 0.0];
        let (value, _) = optimal(maximize(&[1.0, 1.0], &rows, &rhs));
        assert!((value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn min_of_max_abs_on_simplex() {
        // minimize t subject to x1 + x2 = 1, x >= 0, |x_i| <= t:
        // optimum t = 1/2. Encoded as max -t over (x1, x2, t).
        let rows = vec![
            vec![1.0, 1.0, 0.0],
            vec![-1.0, -1.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![1.0, 0.0, -1.0],
            vec![-1.0, 0.0, -1.0],
            vec![0.0, 1.0, -1.0],
            vec![0.0, -1.0, -1.0],
        ];
        let rhs = vec![1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let (value, point) = optimal(maximize(&[0.0, 0.0, -1.0], &rows, &rhs));
        assert!((value + 0.5).abs() < 1e-9);
        assert!((point[2] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn no_constraints() {
        assert_eq!(
            maximize(&[0.0, 0.0], &[], &[]),
            LpSolution::Optimal {
                value: 0.0,
                point: vec![0.0, 0.0]
            }
        );
        assert_eq!(maximize(&[1.0, 0.0], &[], &[]), LpSolution::Unbounded);
    }

    #[test]
    fn degenerate_ties_terminate() {
        // many redundant constraints through the optimum
        let rows = vec![
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![2.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let rhs = vec![1.0, 1.0, 1.0, 2.0, 0.0, 0.0];
        let (value, point) = optimal(maximize(&[1.0, 0.0], &rows, &rhs));
        assert!((value - 1.0).abs() < 1e-9);
        assert!(point[1].abs() < 1e-9);
    }
}
