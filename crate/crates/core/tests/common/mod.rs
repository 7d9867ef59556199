//! Independent dense oracles shared by the integration tests. Nothing here
//! goes through the library's eigenbasis machinery.
#![allow(dead_code)]

use faer::{c64, Mat, Scale};
use otoc_core::operator::PauliDirection;

pub type CMat = Mat<c64>;

pub fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

pub fn pauli(d: PauliDirection) -> CMat {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    match d {
        PauliDirection::X => Mat::from_fn(2, 2, |i, j| if i != j { o } else { z }),
        PauliDirection::Y => Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => z,
        }),
        PauliDirection::Z => Mat::from_fn(2, 2, |i, j| if i != j { z } else if i == 0 { o } else { -o }),
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca, rb, cb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// `sigma^d` on `site` of an `l`-site chain, site 0 leftmost in the Kronecker product.
pub fn site_op(d: PauliDirection, site: usize, l: usize) -> CMat {
    let mut out = identity(1);
    for k in 0..l {
        let f = if k == site { pauli(d) } else { identity(2) };
        out = kron(&out, &f);
    }
    out
}

pub fn total_op(d: PauliDirection, l: usize) -> CMat {
    let mut out = Mat::zeros(1 << l, 1 << l);
    for k in 0..l {
        out += site_op(d, k, l);
    }
    out
}

/// `-J sum s^z s^z + sum (hx s^x + hz s^z)` with open boundaries.
pub fn hamiltonian(l: usize, j: f64, hx: f64, hz: f64) -> CMat {
    let n = 1 << l;
    let mut h = Mat::<c64>::zeros(n, n);
    for k in 0..l.saturating_sub(1) {
        let zz = &site_op(PauliDirection::Z, k, l) * &site_op(PauliDirection::Z, k + 1, l);
        h -= zz * j;
    }
    for k in 0..l {
        h += site_op(PauliDirection::X, k, l) * hx;
        h += site_op(PauliDirection::Z, k, l) * hz;
    }
    h
}

pub fn norm1(a: &CMat) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring with a degree-18 Taylor polynomial.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = norm1(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * 0.5f64.powi(squarings);
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..=18 {
        term = &term * &scaled * (1.0 / k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `e^{iHt} A e^{-iHt}` by explicit exponentials.
pub fn evolve(h: &CMat, a: &CMat, t: f64) -> CMat {
    let u = expm(&(h * Scale(c(0.0, t))));
    &u * a * u.adjoint()
}

pub fn trace(a: &CMat) -> c64 {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            d = d.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    d
}

/// `Tr[[W(t),V]^dag [W(t),V]] / (2D)` from dense products.
pub fn direct_otoc(h: &CMat, w: &CMat, v: &CMat, t: f64) -> f64 {
    let wt = evolve(h, w, t);
    let comm = &wt * v - v * &wt;
    trace(&(comm.adjoint() * &comm)).re / (2.0 * h.nrows() as f64)
}

/// The four-point correlator from raw products.
pub fn four_point(h: &CMat, ops: [&CMat; 4], t: f64) -> c64 {
    let d = h.nrows() as f64;
    let [si, sj, sl, sm] = ops;
    let (slt, smt) = (evolve(h, sl, t), evolve(h, sm, t));
    let first = trace(&(si * sj * &slt * &smt)) * c(1.0 / d, 0.0);
    let second = trace(&(si * &slt * sj * &smt)).re / d;
    first - c(second, 0.0)
}

/// Orthonormal columns by modified Gram-Schmidt on Gaussian vectors.
pub fn random_orthogonal(d: usize, rng: &mut impl rand::Rng) -> Mat<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut m = Mat::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    for k in 0..d {
        for j in 0..k {
            let dot: f64 = (0..d).map(|i| m[(i, j)] * m[(i, k)]).sum();
            for i in 0..d {
                m[(i, k)] -= dot * m[(i, j)];
            }
        }
        let norm = (0..d).map(|i| m[(i, k)] * m[(i, k)]).sum::<f64>().sqrt();
        for i in 0..d {
            m[(i, k)] /= norm;
        }
    }
    m
}

/// `n` levels with independent unit-mean exponential spacings.
pub fn poisson_levels(n: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    use rand_distr::{Distribution, Exp1};
    let mut e = 0.0;
    (0..n)
        .map(|_| {
            e += Distribution::<f64>::sample(&Exp1, rng);
            e
        })
        .collect()
}

/// `0, 1, ..., d-1`.
pub fn ladder(d: usize) -> Vec<f64> {
    (0..d).map(|k| k as f64).collect()
}

/// A trace with hand-made values and blank metadata.
pub fn synthetic(grid: otoc_core::TimeGrid, values: Vec<f64>) -> otoc_core::OtocTrace {
    use otoc_core::otoc::{Formula, TraceMeta};
    let meta = TraceMeta { chain: None, operators: Vec::new(), formula: Formula::Direct };
    otoc_core::OtocTrace { grid, values, imag_residual: 0.0, meta }
}

/// `offset + sum_k a_k sin(w_k t + p_k)` on `grid`.
pub fn wave(grid: otoc_core::TimeGrid, offset: f64, modes: &[(f64, f64, f64)]) -> otoc_core::OtocTrace {
    let values = grid.points().map(|t| offset + modes.iter().map(|&(a, w, p)| a * (w * t + p).sin()).sum::<f64>()).collect();
    synthetic(grid, values)
}
