//! Small dense routines for least squares and symmetric eigenproblems.

/// Column-major dense matrix.
#[derive(Debug, Clone)]
pub(crate) struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        Matrix {
            rows,
            cols: cols.len(),
            data: cols.concat(),
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for c in 0..self.cols {
            let x = v[c];
            for (o, a) in out.iter_mut().zip(self.column(c)) {
                *o += a * x;
            }
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Least squares by Householder QR without pivoting.
///
/// Returns the coefficients, or `Err(j)` when column `j` lies (numerically) in
/// the span of columns `0..j`.
pub(crate) fn least_squares(x: &Matrix, y: &[f64]) -> Result<Vec<f64>, usize> {
    let (n, p) = (x.rows, x.cols);
    let mut a = x.clone();
    let mut b = y.to_vec();
    let col_norms: Vec<f64> = (0..p).map(|j| norm(x.column(j))).collect();
    for j in 0..p {
        if j >= n {
            return Err(j);
        }
        let tail: Vec<f64> = (j..n).map(|i| a.get(i, j)).collect();
        let alpha = norm(&tail);
        if col_norms[j] == 0.0 || alpha <= 1e-10 * col_norms[j] {
            return Err(j);
        }
        let sign = if tail[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = tail;
        v[0] += sign * alpha;
        let vnorm2 = dot(&v, &v);
        for c in j..p {
            let s: f64 = (j..n).map(|i| v[i - j] * a.get(i, c)).sum::<f64>() * 2.0 / vnorm2;
            for i in j..n {
                a.set(i, c, a.get(i, c) - s * v[i - j]);
            }
        }
        let s: f64 = (j..n).map(|i| v[i - j] * b[i]).sum::<f64>() * 2.0 / vnorm2;
        for i in j..n {
            b[i] -= s * v[i - j];
        }
    }
    let mut beta = vec![0.0; p];
    for j in (0..p).rev() {
        let mut s = b[j];
        for c in j + 1..p {
            s -= a.get(j, c) * beta[c];
        }
        beta[j] = s / a.get(j, j);
    }
    Ok(beta)
}

/// Eigenpairs of a symmetric positive semidefinite matrix by power iteration
/// with deflation. Eigenvalues come back non-increasing; each vector is unit
/// length with its largest-magnitude entry positive.
pub(crate) fn symmetric_eigen(sym: &Matrix, tol: f64, max_iter: usize) -> Vec<(f64, Vec<f64>)> {
    let d = sym.rows;
    let scale = (0..d)
        .map(|i| sym.get(i, i).abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let negligible = 1e-13 * scale;
    let mut work = sym.clone();
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut pairs = Vec::new();

    for _ in 0..d {
        let start = (0..d)
            .map(|c| work.column(c).to_vec())
            .max_by(|a, b| norm(a).total_cmp(&norm(b)))
            .unwrap();
        let mut v = if norm(&start) > negligible {
            normalized(orthogonalize(start, &found))
        } else {
            None
        };
        if let Some(mut cur) = v.take() {
            for _ in 0..max_iter {
                let w = orthogonalize(work.mul_vec(&cur), &found);
                if norm(&w) <= negligible {
                    break;
                }
                let mut w = normalized(w).unwrap();
                if dot(&w, &cur) < 0.0 {
                    w.iter_mut().for_each(|x| *x = -*x);
                }
                let diff = w
                    .iter()
                    .zip(&cur)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                cur = w;
                if diff < tol {
                    break;
                }
            }
            if norm(&work.mul_vec(&cur)) > negligible {
                v = Some(cur);
            }
        }
        // null space: complete the basis from the standard vectors
        let vec = v.unwrap_or_else(|| complete_basis(d, &found));
        let lambda = dot(&vec, &sym.mul_vec(&vec));
        for c in 0..d {
            for r in 0..d {
                work.set(r, c, work.get(r, c) - lambda * vec[r] * vec[c]);
            }
        }
        found.push(vec.clone());
        pairs.push((lambda, vec));
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, v) in &mut pairs {
        fix_sign(v);
    }
    pairs
}

fn orthogonalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    // twice, for numerical orthogonality
    for _ in 0..2 {
        for b in basis {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    v
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm(&v);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(v)
}

fn complete_basis(d: usize, found: &[Vec<f64>]) -> Vec<f64> {
    (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            orthogonalize(e, found)
        })
        .max_by(|a, b| norm(a).total_cmp(&norm(b)))
        .and_then(normalized)
        .expect("basis completion needs a free direction")
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
