use crate::error::{Error, Result};
use crate::linalg::matrix::{frobenius_norm, Matrix};

const SYMMETRY_TOL: f64 = 1e-10;
const OFF_DIAG_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix, sorted descending.
///
/// Cyclic Jacobi with round-robin ordering: each sweep visits every `(p, q)`
/// pair once, grouped into `n − 1` rounds of disjoint pairs. Rotations within
/// a round commute, so each round is applied as one pass over the rows. Sweeps
/// stop once the largest off-diagonal magnitude falls below `1e-12 · ‖m‖_F`.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::ShapeMismatch {
            op: "symmetric_eigenvalues",
            left: m.shape(),
            right: (n, n),
        });
    }
    let norm = frobenius_norm(m);
    let mut asymmetry = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asymmetry = asymmetry.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asymmetry > SYMMETRY_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric { asymmetry });
    }

    let mut a = m.clone();
    // Symmetrize so rotations act on an exactly symmetric matrix.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let tol = OFF_DIAG_TOL * norm;
    // An odd dimension gets a dummy slot; pairs touching it are skipped.
    let slots = n + n % 2;
    let mut order: Vec<usize> = (0..slots).collect();
    let mut round = Vec::with_capacity(slots / 2);
    for _ in 0..MAX_SWEEPS {
        if max_off_diagonal(&a) <= tol {
            break;
        }
        for _ in 1..slots {
            round.clear();
            for i in 0..slots / 2 {
                let (x, y) = (order[i], order[slots - 1 - i]);
                if x < n && y < n {
                    round.extend(Rotation::annihilating(&a, x.min(y), x.max(y)));
                }
            }
            apply_round(&mut a, &round);
            order[1..].rotate_right(1);
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

fn max_off_diagonal(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m = m.max(a[(i, j)].abs());
            }
        }
    }
    m
}

/// Plane rotation in the `(p, q)` plane, `p < q`.
struct Rotation {
    p: usize,
    q: usize,
    c: f64,
    s: f64,
}

impl Rotation {
    /// The rotation that zeroes `a[p][q]`, or `None` if it is already zero.
    fn annihilating(a: &Matrix, p: usize, q: usize) -> Option<Rotation> {
        let apq = a[(p, q)];
        if apq == 0.0 {
            return None;
        }
        let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
        let t = if tau == 0.0 {
            1.0
        } else {
            tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        Some(Rotation { p, q, c, s: t * c })
    }
}

/// `a ← Jᵀ a J` for the block-diagonal product `J` of disjoint rotations.
fn apply_round(a: &mut Matrix, round: &[Rotation]) {
    if round.is_empty() {
        return;
    }
    let n = a.rows();
    for k in 0..n {
        let row = a.row_mut(k);
        for r in round {
            let (akp, akq) = (row[r.p], row[r.q]);
            row[r.p] = r.c * akp - r.s * akq;
            row[r.q] = r.s * akp + r.c * akq;
        }
    }
    for r in round {
        let (head, tail) = a.as_mut_slice().split_at_mut(r.q * n);
        let row_p = &mut head[r.p * n..(r.p + 1) * n];
        let row_q = &mut tail[..n];
        for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
            let (apk, aqk) = (*x, *y);
            *x = r.c * apk - r.s * aqk;
            *y = r.s * apk + r.c * aqk;
        }
        a[(r.p, r.q)] = 0.0;
        a[(r.q, r.p)] = 0.0;
    }
}
