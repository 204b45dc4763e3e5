//! Brute-force reference implementations for the validation suites.
//!
//! Everything here is deliberately independent of the production solve
//! paths: the vertex enumerator never calls the simplex, and the grid
//! saddle search in [`crate::saddle`] never calls the LP. They exist to
//! cross-check, not to be fast.

use rand::Rng;
use rand::RngCore;

use crate::lp::{LinearProgram, Sense};

/// Exhaustive vertex enumeration for small LPs with a bounded feasible
/// region: tries every choice of n active constraints among rows and
/// variable bounds, solves the square system, and keeps the best feasible
/// point. Returns the minimal objective, or `None` if no feasible vertex
/// exists.
pub fn vertex_enumeration_optimum(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    // Candidate active constraints: (coeffs, rhs).
    let mut cands: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &lp.constraints {
        cands.push((c.coeffs.clone(), c.rhs));
    }
    for (j, (lo, up)) in lp.bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cands.push((e.clone(), *lo));
        if let Some(u) = up {
            cands.push((e, *u));
        }
    }

    let mut best: Option<f64> = None;
    let mut choice = vec![0usize; n];
    enumerate_combinations(cands.len(), n, &mut choice, 0, 0, &mut |sel| {
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for (row, &ci) in sel.iter().enumerate() {
            a[row * n..(row + 1) * n].copy_from_slice(&cands[ci].0);
            b[row] = cands[ci].1;
        }
        if let Some(x) = solve_square(&mut a, &mut b, n) {
            if feasible(lp, &x) {
                let obj: f64 = x.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
                best = Some(best.map_or(obj, |cur: f64| cur.min(obj)));
            }
        }
    });
    best
}

fn enumerate_combinations(
    total: usize,
    k: usize,
    choice: &mut [usize],
    depth: usize,
    start: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == k {
        visit(choice);
        return;
    }
    for i in start..total {
        choice[depth] = i;
        enumerate_combinations(total, k, choice, depth + 1, i + 1, visit);
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-10 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let inv = 1.0 / a[col * n + col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col] * inv;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i * n + i]).collect())
}

fn feasible(lp: &LinearProgram, x: &[f64]) -> bool {
    const TOL: f64 = 1e-7;
    for c in &lp.constraints {
        let ax: f64 = c.coeffs.iter().zip(x).map(|(a, x)| a * x).sum();
        let ok = match c.sense {
            Sense::Le => ax <= c.rhs + TOL * (1.0 + c.rhs.abs()),
            Sense::Ge => ax >= c.rhs - TOL * (1.0 + c.rhs.abs()),
            Sense::Eq => (ax - c.rhs).abs() <= TOL * (1.0 + c.rhs.abs()),
        };
        if !ok {
            return false;
        }
    }
    for ((lo, up), v) in lp.bounds.iter().zip(x) {
        if *v < lo - TOL || up.map(|u| *v > u + TOL).unwrap_or(false) {
            return false;
        }
    }
    true
}

/// Random LP with all variables boxed (so the region is bounded) and at
/// least one guaranteed-feasible interior point.
pub fn random_bounded_lp(rng: &mut dyn RngCore, max_vars: usize, max_rows: usize) -> LinearProgram {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(1..=max_rows);
    let mut lp = LinearProgram::minimize((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
    let mut anchor = Vec::with_capacity(n);
    for j in 0..n {
        let ub = rng.gen_range(0.5..3.0);
        lp.set_bounds(j, 0.0, Some(ub));
        anchor.push(rng.gen_range(0.0..ub));
    }
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let at_anchor: f64 = coeffs.iter().zip(&anchor).map(|(a, x)| a * x).sum();
        let slack = rng.gen_range(0.05..1.0);
        if rng.gen_bool(0.5) {
            lp.add_constraint(coeffs, Sense::Le, at_anchor + slack);
        } else {
            lp.add_constraint(coeffs, Sense::Ge, at_anchor - slack);
        }
    }
    lp
}
