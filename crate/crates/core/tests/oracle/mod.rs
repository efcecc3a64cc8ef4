//! Brute-force reference implementations, written independently of the
//! library: explicit matrices, explicit products, nested loops.
#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Mat {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// `H = I − (1/N) 1 1ᵀ`
pub fn centering(n: usize) -> Mat {
    let mut h = identity(n);
    for row in h.iter_mut() {
        for x in row.iter_mut() {
            *x -= 1.0 / n as f64;
        }
    }
    h
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..b.len() {
                s += a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn frobenius_inner(a: &Mat, b: &Mat) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..a[i].len() {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

pub fn cka(a: &Mat, b: &Mat) -> f64 {
    let h = centering(a.len());
    let ca = matmul(&matmul(&h, a), &h);
    let cb = matmul(&matmul(&h, b), &h);
    frobenius_inner(&ca, &cb) / (frobenius_inner(&ca, &ca).sqrt() * frobenius_inner(&cb, &cb).sqrt())
}

/// Gram matrix of the unit-normalized rows of `e`.
pub fn gram(e: &[Vec<f64>]) -> Mat {
    let unit: Vec<Vec<f64>> = e
        .iter()
        .map(|v| {
            let mut norm = 0.0;
            for x in v {
                norm += x * x;
            }
            let norm = norm.sqrt();
            v.iter().map(|x| x / norm).collect()
        })
        .collect();
    let n = unit.len();
    let mut r = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..unit[i].len() {
                s += unit[i][k] * unit[j][k];
            }
            r[i][j] = s;
        }
    }
    r
}
