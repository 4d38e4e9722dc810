//! Cross-checks the simplex solver against a brute-force vertex-enumeration
//! oracle on random small programs (bounded feasible regions only, so every
//! optimum sits on a vertex formed by n active constraints).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xhaul_core::lp::{LinearProgram, LpOutcome, Relation, Sense};

const VALUE_TOL: f64 = 1e-6;
const ORACLE_FEAS_TOL: f64 = 1e-7;

struct RandomProgram {
    nvars: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

fn random_program(rng: &mut ChaCha8Rng) -> RandomProgram {
    let nvars = rng.gen_range(1..=4);
    let nrows = rng.gen_range(0..=6);
    let lower: Vec<f64> = (0..nvars)
        .map(|_| if rng.gen_bool(0.3) { -1.0 } else { 0.0 })
        .collect();
    let upper: Vec<f64> = (0..nvars).map(|_| rng.gen_range(1..=3) as f64).collect();
    let objective: Vec<f64> = (0..nvars)
        .map(|_| rng.gen_range(-4..=4) as f64 / 2.0)
        .collect();
    let mut rows = Vec::new();
    let mut n_eq = 0;
    for _ in 0..nrows {
        let coeffs: Vec<f64> = (0..nvars)
            .map(|_| rng.gen_range(-4..=4) as f64 / 2.0)
            .collect();
        // At most one equality row, and never more rows than variables can
        // pin down; keeps the oracle's subset enumeration straightforward.
        let relation = if n_eq == 0 && nvars >= 2 && rng.gen_bool(0.15) {
            n_eq += 1;
            Relation::Eq
        } else {
            Relation::Le
        };
        let rhs = rng.gen_range(-6..=8) as f64 / 2.0;
        rows.push((coeffs, relation, rhs));
    }
    RandomProgram { nvars, lower, upper, objective, rows }
}

/// Solves a dense n x n system by Gaussian elimination with partial
/// pivoting; returns None when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot_row][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Enumerate all candidate vertices: every choice of `nvars` active
/// constraints among {rows, lower bounds, upper bounds}, with equality rows
/// always active. Returns the best feasible objective value, or None when no
/// feasible vertex exists (empty region, since the box bounds are finite).
fn oracle_best(p: &RandomProgram) -> Option<f64> {
    // Active-constraint pool: (coeff vector, rhs).
    let mut pool: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut forced: Vec<usize> = Vec::new();
    for (coeffs, rel, rhs) in &p.rows {
        if *rel == Relation::Eq {
            forced.push(pool.len());
        }
        pool.push((coeffs.clone(), *rhs));
    }
    for j in 0..p.nvars {
        let mut e = vec![0.0; p.nvars];
        e[j] = 1.0;
        pool.push((e.clone(), p.lower[j]));
        pool.push((e, p.upper[j]));
    }
    if forced.len() > p.nvars {
        return None; // not generated
    }

    let mut best: Option<f64> = None;
    let m = pool.len();
    let mut check_point = |x: &[f64]| {
        for j in 0..p.nvars {
            if x[j] < p.lower[j] - ORACLE_FEAS_TOL || x[j] > p.upper[j] + ORACLE_FEAS_TOL {
                return;
            }
        }
        for (coeffs, rel, rhs) in &p.rows {
            let lhs: f64 = coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
            let ok = match rel {
                Relation::Le => lhs <= rhs + ORACLE_FEAS_TOL,
                Relation::Eq => (lhs - rhs).abs() <= ORACLE_FEAS_TOL,
            };
            if !ok {
                return;
            }
        }
        let value: f64 = p.objective.iter().zip(x).map(|(c, v)| c * v).sum();
        best = Some(match best {
            None => value,
            Some(b) => b.max(value),
        });
    };

    let free_slots = p.nvars - forced.len();
    let mut subset: Vec<usize> = Vec::with_capacity(p.nvars);
    enumerate_subsets(m, free_slots, &forced, &mut subset, &mut |chosen| {
        let a: Vec<Vec<f64>> = chosen.iter().map(|&i| pool[i].0.clone()).collect();
        let b: Vec<f64> = chosen.iter().map(|&i| pool[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            check_point(&x);
        }
    });
    best
}

fn enumerate_subsets(
    m: usize,
    k: usize,
    forced: &[usize],
    scratch: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    fn rec(
        start: usize,
        m: usize,
        k: usize,
        forced: &[usize],
        scratch: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if scratch.len() == k {
            let mut full: Vec<usize> = forced.to_vec();
            full.extend_from_slice(scratch);
            visit(&full);
            return;
        }
        for i in start..m {
            if forced.contains(&i) {
                continue;
            }
            scratch.push(i);
            rec(i + 1, m, k, forced, scratch, visit);
            scratch.pop();
        }
    }
    rec(0, m, k, forced, scratch, visit);
}

#[test]
fn simplex_agrees_with_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1234_abcd_0001);
    let mut feasible_cases = 0;
    let mut infeasible_cases = 0;
    for case in 0..400 {
        let p = random_program(&mut rng);
        let mut lp = LinearProgram::new(Sense::Maximize);
        for j in 0..p.nvars {
            lp.add_var(p.lower[j], p.upper[j], p.objective[j]);
        }
        for (coeffs, rel, rhs) in &p.rows {
            let entries: Vec<(usize, f64)> =
                coeffs.iter().enumerate().map(|(j, &c)| (j, c)).collect();
            lp.add_row(*rel, *rhs, &entries);
        }
        let got = lp.solve().expect("well-formed program");
        let want = oracle_best(&p);
        match (got, want) {
            (LpOutcome::Optimal { value, .. }, Some(expected)) => {
                feasible_cases += 1;
                assert!(
                    (value - expected).abs() <= VALUE_TOL * (1.0 + expected.abs()),
                    "case {}: simplex {} vs oracle {}\n{}",
                    case,
                    value,
                    expected,
                    lp.dump()
                );
            }
            (LpOutcome::Infeasible, None) => infeasible_cases += 1,
            (got, want) => panic!(
                "case {}: simplex {:?} vs oracle {:?}\n{}",
                case,
                got,
                want,
                lp.dump()
            ),
        }
    }
    // Both branches must actually be exercised.
    assert!(feasible_cases > 100, "only {} feasible cases", feasible_cases);
    assert!(infeasible_cases > 10, "only {} infeasible cases", infeasible_cases);
}
