//! Small dense helpers on top of nalgebra, plus interval matrix checks.

use nalgebra::DMatrix;

use crate::poly::Interval;

pub fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

pub fn inverse(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let m = to_dmatrix(rows);
    let inv = m.try_inverse()?;
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

/// Numerical rank with relative singular-value threshold `rtol`.
pub fn rank(rows: &[Vec<f64>], rtol: f64) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let sv = to_dmatrix(rows).singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * top).count()
}

/// Least-squares coefficients `c` minimizing `|Σ c_i a_i - b|` over the
/// vectors `a_i`.
pub fn least_squares(vectors: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let k = vectors.len();
    if k == 0 {
        return Some(Vec::new());
    }
    let a = DMatrix::from_fn(n, k, |i, j| vectors[j][i]);
    let rhs = DMatrix::from_column_slice(n, 1, b);
    let svd = a.svd(true, true);
    let x = svd.solve(&rhs, 1e-14).ok()?;
    Some(x.column(0).iter().cloned().collect())
}

/// Orthonormal basis of the vectors orthogonal to all `rows` (length n).
pub fn null_space(rows: &[Vec<f64>], n: usize, rtol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    }
    // pad to a square matrix so the full right singular basis is returned
    let mut padded: Vec<Vec<f64>> = rows.to_vec();
    while padded.len() < n {
        padded.push(vec![0.0; n]);
    }
    let svd = to_dmatrix(&padded).svd(false, true);
    let vt = svd.v_t.expect("requested");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= rtol * top.max(f64::MIN_POSITIVE))
        .map(|i| vt.row(i).iter().cloned().collect())
        .collect()
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(rows: &[Vec<f64>]) -> Vec<f64> {
    if rows.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = to_dmatrix(rows).symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Proves that every matrix in the interval matrix `a` (r × m, r ≤ m ≤ 4)
/// has full row rank. Picks the r columns with the best-conditioned
/// midpoint, preconditions with its inverse and checks strict diagonal
/// dominance.
pub fn certify_full_row_rank(a: &[Vec<Interval>]) -> bool {
    let r = a.len();
    if r == 0 {
        return true;
    }
    let m = a[0].len();
    if r > m || m > 4 {
        return false;
    }
    let mut mid = [[0.0f64; 4]; 4];
    for i in 0..r {
        for j in 0..m {
            mid[i][j] = a[i][j].mid();
        }
    }
    let mut best: Option<(f64, [usize; 4])> = None;
    for_each_subset(m, r, &mut |cols| {
        let mut sub = [[0.0f64; 4]; 4];
        for i in 0..r {
            for (jj, &j) in cols.iter().enumerate() {
                sub[i][jj] = mid[i][j];
            }
        }
        let d = det_small(&sub, r).abs();
        if d > 0.0 && best.map_or(true, |(b, _)| d > b) {
            let mut c = [0usize; 4];
            c[..r].copy_from_slice(cols);
            best = Some((d, c));
        }
    });
    let Some((_, cols)) = best else { return false };
    let mut sub = [[0.0f64; 4]; 4];
    for i in 0..r {
        for jj in 0..r {
            sub[i][jj] = mid[i][cols[jj]];
        }
    }
    let Some(p) = inverse_small(&sub, r) else { return false };
    for i in 0..r {
        let mut diag = Interval::ZERO;
        let mut off = 0.0f64;
        for jj in 0..r {
            let j = cols[jj];
            let mut s = Interval::ZERO;
            for k in 0..r {
                s = s + a[k][j].scale(p[i][k]);
            }
            if jj == i {
                diag = s;
            } else {
                off += s.mag();
            }
        }
        if diag.mig() <= off * (1.0 + 1e-12) {
            return false;
        }
    }
    true
}

/// Determinant of the leading r × r block by partial pivoting.
fn det_small(a: &[[f64; 4]; 4], r: usize) -> f64 {
    let mut m = *a;
    let mut det = 1.0;
    for c in 0..r {
        let piv = (c..r).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap_or(c);
        if m[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
            det = -det;
        }
        det *= m[c][c];
        for i in c + 1..r {
            let f = m[i][c] / m[c][c];
            for j in c..r {
                m[i][j] -= f * m[c][j];
            }
        }
    }
    det
}

/// Gauss-Jordan inverse of the leading r × r block.
fn inverse_small(a: &[[f64; 4]; 4], r: usize) -> Option<[[f64; 4]; 4]> {
    let mut m = *a;
    let mut inv = [[0.0f64; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate().take(r) {
        row[i] = 1.0;
    }
    for c in 0..r {
        let piv = (c..r).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))?;
        if m[piv][c] == 0.0 || !m[piv][c].is_finite() {
            return None;
        }
        m.swap(piv, c);
        inv.swap(piv, c);
        let d = m[c][c];
        for j in 0..r {
            m[c][j] /= d;
            inv[c][j] /= d;
        }
        for i in 0..r {
            if i != c {
                let f = m[i][c];
                for j in 0..r {
                    m[i][j] -= f * m[c][j];
                    inv[i][j] -= f * inv[c][j];
                }
            }
        }
    }
    inv.iter().take(r).all(|row| row.iter().all(|v| v.is_finite())).then_some(inv)
}

pub fn for_each_subset(m: usize, r: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, m: usize, r: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == r {
            f(cur);
            return;
        }
        for j in start..m {
            if m - j < r - cur.len() {
                break;
            }
            cur.push(j);
            rec(j + 1, m, r, cur, f);
            cur.pop();
        }
    }
    rec(0, m, r, &mut Vec::with_capacity(r), f);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_a_plane_normal() {
        let ns = null_space(&[vec![0.0, 0.0, 2.0]], 3, 1e-12);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(v[2].abs() < 1e-15);
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        assert_eq!(null_space(&[], 2, 1e-12).len(), 2);
        let ev = symmetric_eigenvalues(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rank_of_dependent_rows() {
        assert_eq!(rank(&[vec![1.0, 2.0], vec![2.0, 4.0]], 1e-10), 1);
        assert_eq!(rank(&[vec![1.0, 0.0], vec![0.0, 1e-3]], 1e-10), 2);
    }

    #[test]
    fn least_squares_recovers_combination() {
        let c = least_squares(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]], &[2.0, -1.0, -1.0]).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_rank_certificate() {
        let iv = |a: f64, b: f64| Interval::new(a, b);
        let good = vec![vec![iv(0.9, 1.1), iv(-0.1, 0.1), iv(0.0, 0.0)]];
        assert!(certify_full_row_rank(&good));
        let straddle = vec![vec![iv(-0.1, 0.1), iv(-0.1, 0.1)]];
        assert!(!certify_full_row_rank(&straddle));
        let two = vec![
            vec![iv(1.0, 1.0), iv(0.0, 0.1)],
            vec![iv(0.9, 1.0), iv(0.0, 0.1)],
        ];
        assert!(!certify_full_row_rank(&two));
        let rotated = vec![
            vec![iv(0.0, 0.01), iv(1.0, 1.0), iv(0.0, 0.0)],
            vec![iv(2.0, 2.1), iv(0.0, 0.0), iv(0.5, 0.5)],
        ];
        assert!(certify_full_row_rank(&rotated));
    }

    #[test]
    fn small_inverse_and_determinant() {
        let mut a = [[0.0; 4]; 4];
        a[0][0] = 0.0;
        a[0][1] = 2.0;
        a[1][0] = 3.0;
        a[1][1] = 1.0;
        assert_eq!(det_small(&a, 2), -6.0);
        let inv = inverse_small(&a, 2).unwrap();
        assert!((inv[0][0] + 1.0 / 6.0).abs() < 1e-15 && (inv[0][1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn subsets_are_enumerated_in_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, &mut |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![0, 1]);
        assert_eq!(seen[5], vec![2, 3]);
    }
}
