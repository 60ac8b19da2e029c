//! Slow, obviously-correct reference computations.
//!
//! Everything here works on plain row-major `&[f64]` matrices so that it
//! shares no code with `flowrank`. The least-squares reference goes through
//! a dense symmetric eigendecomposition and the Moore-Penrose pseudo-inverse
//! rather than a factorization of the augmented system.

#![allow(clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};

fn at(a: &[f64], n: usize, i: usize, j: usize) -> f64 {
    a[i * n + j]
}

/// `s_i = sum_j (a_ij - a_ji)`, by a double loop.
pub fn net_scores(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    let mut s = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            s[i] += at(a, n, i, j) - at(a, n, j, i);
        }
    }
    s
}

/// `p_i = s_i / sum_j (a_ij + a_ji)`. Panics on an isolated entity.
pub fn ratio_scores(a: &[f64], n: usize) -> Vec<f64> {
    let s = net_scores(a, n);
    (0..n)
        .map(|i| {
            let vol: f64 = (0..n).map(|j| at(a, n, i, j) + at(a, n, j, i)).sum();
            assert!(vol > 0.0, "isolated entity {i}");
            s[i] / vol
        })
        .collect()
}

/// Graph Laplacian of the matches matrix `M = A + A^T`.
pub fn laplacian(a: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            (0..n).filter(|&k| k != i).map(|k| at(a, n, i, k) + at(a, n, k, i)).sum()
        } else {
            -(at(a, n, i, j) + at(a, n, j, i))
        }
    })
}

/// Least-squares weights as `L^+ s`, projected onto the sum-zero hyperplane.
pub fn least_squares_pinv(a: &[f64], n: usize) -> Vec<f64> {
    let l = laplacian(a, n);
    let s = DVector::from_vec(net_scores(a, n));
    let eig = SymmetricEigen::new(l);
    let max_ev = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = max_ev * (n as f64) * 1e-13;
    let mut q = DVector::zeros(n);
    for k in 0..n {
        let lambda = eig.eigenvalues[k];
        if lambda.abs() > cutoff {
            let v = eig.eigenvectors.column(k);
            q += v * (v.dot(&s) / lambda);
        }
    }
    let mean = q.sum() / n as f64;
    q.iter().map(|x| x - mean).collect()
}

/// Number of zero eigenvalues of the Laplacian, i.e. the number of connected
/// components of the matches graph.
pub fn laplacian_nullity(a: &[f64], n: usize) -> usize {
    let eig = SymmetricEigen::new(laplacian(a, n));
    let max_ev = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = max_ev.max(1.0) * (n as f64) * 1e-12;
    eig.eigenvalues.iter().filter(|v| v.abs() <= cutoff).count()
}

/// The least-squares objective `sum_{m_ij > 0} m_ij (r_ij / m_ij - q_i + q_j)^2`
/// summed over ordered pairs.
pub fn objective(a: &[f64], n: usize, q: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let m = at(a, n, i, j) + at(a, n, j, i);
            if m > 0.0 {
                let r = at(a, n, i, j) - at(a, n, j, i);
                let d = r / m - q[i] + q[j];
                total += m * d * d;
            }
        }
    }
    total
}

/// Kendall tau-b by enumerating every unordered pair.
///
/// Returns `None` when either input is constant (the coefficient is 0/0).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut untied_x, mut untied_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx != 0.0 {
                untied_x += 1;
            }
            if dy != 0.0 {
                untied_y += 1;
            }
            let prod = dx * dy;
            if prod > 0.0 {
                concordant += 1;
            } else if prod < 0.0 {
                discordant += 1;
            }
        }
    }
    if untied_x == 0 || untied_y == 0 {
        return None;
    }
    Some((concordant - discordant) as f64 / ((untied_x as f64) * (untied_y as f64)).sqrt())
}

/// Connected components of the graph with an edge wherever `m_ij > 0`,
/// found by repeated breadth-first search. Components are listed by their
/// smallest vertex; vertices inside a component are sorted.
pub fn components(m: &[f64], n: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            for w in 0..n {
                if !seen[w] && at(m, n, v, w) > 0.0 {
                    seen[w] = true;
                    comp.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: [f64; 16] = [
        0., 0., 15., 0., //
        0., 0., 30., 0., //
        5., 10., 0., 10., //
        0., 0., 10., 0.,
    ];

    #[test]
    fn reference_reproduces_four_country_example() {
        assert_eq!(net_scores(&EXAMPLE, 4), vec![10., 20., -30., 0.]);
        assert_eq!(ratio_scores(&EXAMPLE, 4), vec![0.5, 0.5, -0.375, 0.]);
        let q = least_squares_pinv(&EXAMPLE, 4);
        for (got, want) in q.iter().zip([0.25, 0.25, -0.25, -0.25]) {
            assert!((got - want).abs() < 1e-12, "{q:?}");
        }
        assert_eq!(laplacian_nullity(&EXAMPLE, 4), 1);
    }

    #[test]
    fn tau_b_of_reversal() {
        assert_eq!(kendall_tau_b(&[1., 2., 3.], &[3., 2., 1.]), Some(-1.0));
        assert_eq!(kendall_tau_b(&[1., 1.], &[1., 2.]), None);
    }
}
