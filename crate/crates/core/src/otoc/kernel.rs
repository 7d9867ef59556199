//! Eigenbasis matrix kernels for the time-grid hot loop.
//!
//! An operator in the eigenbasis of `H` is stored as one buffer holding the
//! row-major real part followed by the row-major imaginary part. Parts known
//! to be zero are flagged, so operators that are real under a real `H` cost
//! real GEMMs only, and a complex-times-real product is a single stacked
//! `2n x n` by `n x n` GEMM. Buffers are always fully written; a flagged-off
//! part holds zeros.

use faer::{c64, Accum, Mat, MatMut, MatRef, Par};

use crate::operator::DenseOperator;
use crate::spectrum::Spectrum;

#[derive(Clone, Copy)]
pub(crate) struct SplitRef<'a> {
    n: usize,
    data: &'a [f64],
    has_re: bool,
    has_im: bool,
}

impl SplitRef<'_> {
    fn re(&self) -> &[f64] {
        &self.data[..self.n * self.n]
    }

    fn im(&self) -> &[f64] {
        &self.data[self.n * self.n..]
    }
}

#[derive(Clone, Debug)]
pub(crate) struct SplitMat {
    n: usize,
    data: Vec<f64>,
    has_re: bool,
    has_im: bool,
}

impl SplitMat {
    pub fn zeros(n: usize) -> Self {
        SplitMat { n, data: vec![0.0; 2 * n * n], has_re: false, has_im: false }
    }

    pub fn from_complex(m: &Mat<c64>) -> Self {
        let n = m.nrows();
        let mut out = SplitMat::zeros(n);
        let nn = n * n;
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                out.data[i * n + j] = z.re;
                out.data[nn + i * n + j] = z.im;
            }
        }
        out.has_re = out.re().iter().any(|&x| x != 0.0);
        out.has_im = out.im().iter().any(|&x| x != 0.0);
        out
    }

    pub fn view(&self) -> SplitRef<'_> {
        SplitRef { n: self.n, data: &self.data, has_re: self.has_re, has_im: self.has_im }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn re(&self) -> &[f64] {
        &self.data[..self.n * self.n]
    }

    pub fn im(&self) -> &[f64] {
        &self.data[self.n * self.n..]
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        let k = i * self.n + j;
        c64::new(self.data[k], self.data[self.n * self.n + k])
    }

    /// `self = a * b`.
    pub fn set_product(&mut self, a: &SplitMat, b: &SplitMat) {
        (self.has_re, self.has_im) = mul_into(&mut self.data, a.view(), b.view());
    }

    /// `self = op ∘ phases`, i.e. `op(t)_{ab} = op_{ab} e^{i (E_a - E_b) t}`.
    pub fn set_evolved(&mut self, op: &SplitMat, ph: &Phases) {
        (self.has_re, self.has_im) = evolve_into(&mut self.data, op.view(), ph);
    }

    /// `self = src^T`.
    pub fn set_transpose(&mut self, src: &SplitMat) {
        transpose_into(self.n, &mut self.data, &src.data);
        self.has_re = src.has_re;
        self.has_im = src.has_im;
    }

    /// `Tr[self * y]` given `yt = y^T`, i.e. `sum_ab self_ab yt_ab`.
    pub fn anti_hermitian_norm_sqr(&self) -> f64 {
        let n = self.n;
        let nn = n * n;
        let mut acc = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                let (k, kt) = (a * n + b, b * n + a);
                let dr = self.data[k] - self.data[kt];
                let di = self.data[nn + k] + self.data[nn + kt];
                acc += dr * dr + di * di;
            }
        }
        let mut diag = 0.0;
        for a in 0..n {
            let di = 2.0 * self.data[nn + a * n + a];
            diag += di * di;
        }
        2.0 * acc + diag
    }

    pub fn to_complex(&self) -> Mat<c64> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// Fixed-size collection of split matrices in one contiguous buffer, so that
/// all pairwise traces can be formed with a handful of GEMMs.
pub(crate) struct Bank {
    n: usize,
    len: usize,
    data: Vec<f64>,
    has_im: bool,
}

impl Bank {
    pub fn zeros(n: usize, len: usize) -> Self {
        Bank { n, len, data: vec![0.0; len * 2 * n * n], has_im: true }
    }

    pub fn from_mats(mats: &[SplitMat]) -> Self {
        let n = mats.first().map_or(0, |m| m.n);
        let mut bank = Bank::zeros(n, mats.len());
        for (k, m) in mats.iter().enumerate() {
            bank.slot_mut(k).copy_from_slice(&m.data);
        }
        bank.has_im = mats.iter().any(|m| m.has_im);
        bank
    }

    pub fn len(&self) -> usize {
        self.len
    }

    fn slot_mut(&mut self, k: usize) -> &mut [f64] {
        let s = 2 * self.n * self.n;
        &mut self.data[k * s..(k + 1) * s]
    }

    fn slot(&self, k: usize) -> &[f64] {
        let s = 2 * self.n * self.n;
        &self.data[k * s..(k + 1) * s]
    }

    /// Rows are the vectorized real (`part = 0`) or imaginary parts.
    fn part(&self, part: usize) -> MatRef<'_, f64> {
        let nn = self.n * self.n;
        MatRef::from_row_major_slice(&self.data, self.len, 2 * nn).subcols(part * nn, nn)
    }

    /// Slot `k` = `a * b`.
    /// Slot `k` = `op ∘ phases`.
    pub fn set_evolved(&mut self, k: usize, op: &SplitMat, ph: &Phases) {
        evolve_into(self.slot_mut(k), op.view(), ph);
    }

    /// Every slot of `self` = transpose of the same slot of `src`.
    pub fn set_block(&mut self, k: usize, p: &StripProduct, m: usize) {
        p.copy_block(m, self.slot_mut(k));
    }

    pub fn set_transposes(&mut self, src: &Bank) {
        for k in 0..src.len {
            let s = 2 * self.n * self.n;
            transpose_into(self.n, &mut self.data[k * s..(k + 1) * s], src.slot(k));
        }
        self.has_im = src.has_im;
    }
}

/// `out_re[p][q] + i out_im[p][q] = Tr[X_p Y_q]` for `x` and banked transposes `yt`.
/// Operators `B_0, ..., B_{k-1}` side by side, one `n x kn` row-major block per part.
pub(crate) struct Strip {
    n: usize,
    k: usize,
    re: Vec<f64>,
    im: Option<Vec<f64>>,
}

impl Strip {
    pub fn new(mats: &[&SplitMat]) -> Self {
        let n = mats[0].n;
        let k = mats.len();
        let w = k * n;
        let has_im = mats.iter().any(|m| m.has_im);
        let mut re = vec![0.0; n * w];
        let mut im = vec![0.0; if has_im { n * w } else { 0 }];
        for (m, mat) in mats.iter().enumerate() {
            for a in 0..n {
                let row = a * w + m * n;
                re[row..row + n].copy_from_slice(&mat.re()[a * n..(a + 1) * n]);
                if has_im {
                    im[row..row + n].copy_from_slice(&mat.im()[a * n..(a + 1) * n]);
                }
            }
        }
        Strip { n, k, re, im: has_im.then_some(im) }
    }
}

/// `X [B_0 | ... | B_{k-1}]` for a complex `X`: real rows, then imaginary rows.
pub(crate) struct StripProduct {
    n: usize,
    k: usize,
    data: Vec<f64>,
    extra: Vec<f64>,
}

impl StripProduct {
    pub fn for_strip(strip: &Strip) -> Self {
        let size = 2 * strip.n * strip.n * strip.k;
        let extra = if strip.im.is_some() { size } else { 0 };
        StripProduct { n: strip.n, k: strip.k, data: vec![0.0; size], extra: vec![0.0; extra] }
    }

    pub fn set(&mut self, x: &SplitMat, strip: &Strip) {
        let (n, w) = (self.n, self.k * self.n);
        gemm(2 * n, n, w, 1.0, &x.data, &strip.re, &mut self.data, Accum::Replace);
        if let Some(im) = &strip.im {
            gemm(2 * n, n, w, 1.0, &x.data, im, &mut self.extra, Accum::Replace);
            let (top, bottom) = self.data.split_at_mut(n * w);
            let (etop, ebottom) = self.extra.split_at(n * w);
            for q in 0..n * w {
                top[q] -= ebottom[q];
                bottom[q] += etop[q];
            }
        }
    }

    /// `Tr[A_m A_m]` for block `m`, without forming a transpose.
    pub fn square_trace(&self, m: usize) -> c64 {
        const TILE: usize = 32;
        let (n, w) = (self.n, self.k * self.n);
        let (re, im) = self.data.split_at(n * w);
        let at = |a: usize, b: usize| a * w + m * n + b;
        let (mut dr, mut di) = (0.0, 0.0);
        for a in 0..n {
            let (x, y) = (re[at(a, a)], im[at(a, a)]);
            dr += x * x - y * y;
            di += 2.0 * x * y;
        }
        let (mut pr, mut pi) = (0.0, 0.0);
        for ta in (0..n).step_by(TILE) {
            for tb in (ta..n).step_by(TILE) {
                for a in ta..(ta + TILE).min(n) {
                    let start = if tb == ta { a + 1 } else { tb };
                    for b in start..(tb + TILE).min(n) {
                        let (x1, y1) = (re[at(a, b)], im[at(a, b)]);
                        let (x2, y2) = (re[at(b, a)], im[at(b, a)]);
                        pr += x1 * x2 - y1 * y2;
                        pi += x1 * y2 + y1 * x2;
                    }
                }
            }
        }
        c64::new(dr + 2.0 * pr, di + 2.0 * pi)
    }

    fn copy_block(&self, m: usize, dst: &mut [f64]) {
        let (n, w) = (self.n, self.k * self.n);
        let nn = n * n;
        for part in 0..2 {
            for a in 0..n {
                let src = part * n * w + a * w + m * n;
                dst[part * nn + a * n..part * nn + (a + 1) * n].copy_from_slice(&self.data[src..src + n]);
            }
        }
    }
}

pub(crate) fn trace_gram(x: &Bank, yt: &Bank, out_re: &mut Mat<f64>, out_im: Option<&mut Mat<f64>>) {
    let (xr, xi, yr, yi) = (x.part(0), x.part(1), yt.part(0), yt.part(1));
    matmul(out_re.as_mut(), Accum::Replace, xr, yr.transpose(), 1.0);
    if x.has_im && yt.has_im {
        matmul(out_re.as_mut(), Accum::Add, xi, yi.transpose(), -1.0);
    }
    if let Some(out_im) = out_im {
        out_im.fill(0.0);
        if yt.has_im {
            matmul(out_im.as_mut(), Accum::Add, xr, yi.transpose(), 1.0);
        }
        if x.has_im {
            matmul(out_im.as_mut(), Accum::Add, xi, yr.transpose(), 1.0);
        }
    }
}

fn matmul(dst: MatMut<'_, f64>, accum: Accum, a: MatRef<'_, f64>, b: MatRef<'_, f64>, alpha: f64) {
    faer::linalg::matmul::matmul(dst, accum, a, b, alpha, Par::Seq);
}

/// `dst (m x n) = [dst +] alpha * a (m x k) * b (k x n)`, all contiguous row-major.
fn gemm(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], dst: &mut [f64], accum: Accum) {
    let a = MatRef::from_row_major_slice(&a[..m * k], m, k);
    let b = MatRef::from_row_major_slice(&b[..k * n], k, n);
    let d = MatMut::from_row_major_slice_mut(&mut dst[..m * n], m, n);
    matmul(d, accum, a, b, alpha);
}

/// Writes `a * b` into `dst` and returns which parts can be nonzero.
fn mul_into(dst: &mut [f64], a: SplitRef<'_>, b: SplitRef<'_>) -> (bool, bool) {
    let n = a.n;
    let nn = n * n;
    let a_zero = !(a.has_re || a.has_im);
    let b_zero = !(b.has_re || b.has_im);
    if a_zero || b_zero {
        dst.fill(0.0);
        return (false, false);
    }
    if !b.has_im {
        // [ar; ai] * br as one stacked product.
        gemm(2 * n, n, n, 1.0, a.data, b.re(), dst, Accum::Replace);
        return (a.has_re, a.has_im);
    }
    let (re, im) = dst.split_at_mut(nn);
    if !a.has_im {
        gemm(n, n, n, 1.0, a.re(), b.re(), re, Accum::Replace);
        gemm(n, n, n, 1.0, a.re(), b.im(), im, Accum::Replace);
        return (b.has_re, true);
    }
    // re = ar br - ai bi ; im = ar bi + ai br
    gemm(n, n, n, -1.0, a.im(), b.im(), re, Accum::Replace);
    gemm(n, n, n, 1.0, a.im(), b.re(), im, Accum::Replace);
    if a.has_re {
        gemm(n, n, n, 1.0, a.re(), b.re(), re, Accum::Add);
        gemm(n, n, n, 1.0, a.re(), b.im(), im, Accum::Add);
    }
    (true, true)
}

fn evolve_into(dst: &mut [f64], op: SplitRef<'_>, ph: &Phases) -> (bool, bool) {
    let nn = op.n * op.n;
    let (re, im) = dst.split_at_mut(nn);
    let (ore, oim) = (op.re(), op.im());
    let (cos, sin) = (&ph.cos[..nn], &ph.sin[..nn]);
    match (op.has_re, op.has_im) {
        (true, false) => {
            for k in 0..nn {
                re[k] = ore[k] * cos[k];
                im[k] = ore[k] * sin[k];
            }
        }
        (false, true) => {
            for k in 0..nn {
                re[k] = -oim[k] * sin[k];
                im[k] = oim[k] * cos[k];
            }
        }
        (true, true) => {
            for k in 0..nn {
                re[k] = ore[k] * cos[k] - oim[k] * sin[k];
                im[k] = ore[k] * sin[k] + oim[k] * cos[k];
            }
        }
        (false, false) => {
            re.fill(0.0);
            im.fill(0.0);
            return (false, false);
        }
    }
    (true, true)
}

fn transpose_into(n: usize, dst: &mut [f64], src: &[f64]) {
    let nn = n * n;
    for part in 0..2 {
        let s = MatRef::from_row_major_slice(&src[part * nn..(part + 1) * nn], n, n);
        let mut d = MatMut::from_row_major_slice_mut(&mut dst[part * nn..(part + 1) * nn], n, n);
        d.copy_from(s.transpose());
    }
}

/// Real dot product with independent partial sums for vectorization. The
/// summation order depends only on the length, so results are reproducible.
pub(crate) struct Phases {
    cos: Vec<f64>,
    sin: Vec<f64>,
    c: Vec<f64>,
    s: Vec<f64>,
}

impl Phases {
    pub fn new(n: usize) -> Self {
        Phases { cos: vec![0.0; n * n], sin: vec![0.0; n * n], c: vec![0.0; n], s: vec![0.0; n] }
    }

    pub fn set_time(&mut self, energies: &[f64], t: f64) {
        let n = energies.len();
        for (a, &e) in energies.iter().enumerate() {
            let (s, c) = (e * t).sin_cos();
            self.c[a] = c;
            self.s[a] = s;
        }
        for a in 0..n {
            let (ca, sa) = (self.c[a], self.s[a]);
            let cos = &mut self.cos[a * n..(a + 1) * n];
            let sin = &mut self.sin[a * n..(a + 1) * n];
            for (b, (co, si)) in cos.iter_mut().zip(sin.iter_mut()).enumerate() {
                let (cb, sb) = (self.c[b], self.s[b]);
                *co = ca * cb + sa * sb;
                *si = sa * cb - ca * sb;
            }
        }
    }
}

/// `V^dag O V` for the spectrum's eigenvector matrix `V`.
pub(crate) fn to_eigenbasis(s: &Spectrum, op: &DenseOperator) -> SplitMat {
    let n = s.dim();
    let Some(v) = s.real_eigenvectors() else {
        let v = s.eigenvectors();
        let r = v.adjoint() * op.as_mat() * &v;
        return SplitMat::from_complex(&r);
    };
    let om = op.as_mat();
    let mut out = SplitMat::zeros(n);
    let nn = n * n;
    for part in 0..2 {
        let m = Mat::<f64>::from_fn(n, n, |i, j| if part == 0 { om[(i, j)].re } else { om[(i, j)].im });
        if m.col_iter().all(|c| c.iter().all(|&x| x == 0.0)) {
            continue;
        }
        let r = v.transpose() * &m * v;
        for i in 0..n {
            for j in 0..n {
                out.data[part * nn + i * n + j] = r[(i, j)];
            }
        }
        if part == 0 {
            out.has_re = true;
        } else {
            out.has_im = true;
        }
    }
    out
}

/// Back to the computational basis: `V O V^dag`.
pub(crate) fn from_eigenbasis(s: &Spectrum, op: &SplitMat) -> Mat<c64> {
    let v = s.eigenvectors();
    &v * op.to_complex() * v.adjoint()
}
