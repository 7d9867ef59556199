//! Ising chain Hamiltonian, its eigendecomposition and reflection-parity sectors.
//!
//! The chain is
//!
//! ```text
//! H = -J sum_{i=0}^{L-2} sz_i sz_{i+1} + sum_{i=0}^{L-1} (hx sx_i + hz sz_i)
//! ```
//!
//! with open boundaries. Every term is real in the computational basis, so
//! `H` is real symmetric and its eigenvectors can be chosen real.

use faer::{c64, Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{check_sites, site_mask, DenseOperator, DEFAULT_MAX_SITES};

/// Hermiticity tolerance accepted by [`diagonalize`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Defining parameters of the chain. Energies are in units of `coupling`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub sites: usize,
    #[serde(default = "unit_coupling")]
    pub coupling: f64,
    pub hx: f64,
    pub hz: f64,
}

fn unit_coupling() -> f64 {
    1.0
}

impl ChainParams {
    /// Chain with `J = 1`.
    pub fn new(sites: usize, hx: f64, hz: f64) -> Self {
        ChainParams { sites, coupling: 1.0, hx, hz }
    }

    pub fn with_hz(self, hz: f64) -> Self {
        ChainParams { hz, ..self }
    }

    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites == 0 {
            return Err(Error::InvalidParameter("chain must have at least one site".into()));
        }
        if !(self.coupling > 0.0) || !self.coupling.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling J must be positive, got {}", self.coupling)));
        }
        if !self.hx.is_finite() || !self.hz.is_finite() {
            return Err(Error::InvalidParameter("fields must be finite".into()));
        }
        Ok(())
    }

    /// Diagonal matrix element `<b|H|b>`.
    pub fn diagonal_energy(&self, state: usize) -> f64 {
        let l = self.sites;
        let spin = |i: usize| if state & site_mask(i, l) == 0 { 1.0 } else { -1.0 };
        let bonds: f64 = (0..l.saturating_sub(1)).map(|i| spin(i) * spin(i + 1)).sum();
        let field: f64 = (0..l).map(spin).sum();
        -self.coupling * bonds + self.hz * field
    }

    /// Calls `emit(row, value)` for every nonzero of column `state` of `H`.
    pub fn for_each_in_column(&self, state: usize, mut emit: impl FnMut(usize, f64)) {
        emit(state, self.diagonal_energy(state));
        if self.hx != 0.0 {
            for i in 0..self.sites {
                emit(state ^ site_mask(i, self.sites), self.hx);
            }
        }
    }
}

/// Assembles `H` as a dense operator (default size ceiling).
pub fn build_hamiltonian(p: &ChainParams) -> Result<DenseOperator> {
    build_hamiltonian_with_ceiling(p, DEFAULT_MAX_SITES)
}

pub fn build_hamiltonian_with_ceiling(p: &ChainParams, max_sites: usize) -> Result<DenseOperator> {
    let real = real_hamiltonian(p, max_sites)?;
    let dim = p.dim();
    DenseOperator::from_mat(Mat::from_fn(dim, dim, |i, j| c64::new(real[(i, j)], 0.0)))
}

pub(crate) fn real_hamiltonian(p: &ChainParams, max_sites: usize) -> Result<Mat<f64>> {
    p.validate()?;
    check_sites(p.sites, max_sites)?;
    let dim = p.dim();
    let mut h = Mat::<f64>::zeros(dim, dim);
    for col in 0..dim {
        p.for_each_in_column(col, |row, v| h[(row, col)] += v);
    }
    Ok(h)
}

#[derive(Clone, Debug)]
enum Eigenbasis {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

/// Eigenvalues in ascending order and the matching eigenvectors as columns,
/// expressed in the computational basis.
#[derive(Clone, Debug)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    basis: Eigenbasis,
    chain: Option<ChainParams>,
}

impl Spectrum {
    /// Builds and diagonalizes the chain Hamiltonian, recording `p` as provenance.
    pub fn of_chain(p: &ChainParams) -> Result<Self> {
        let h = real_hamiltonian(p, DEFAULT_MAX_SITES)?;
        let mut s = diagonalize_real(&h)?;
        s.chain = Some(*p);
        Ok(s)
    }

    pub fn from_real_parts(eigenvalues: Vec<f64>, eigenvectors: Mat<f64>) -> Result<Self> {
        check_parts(&eigenvalues, eigenvectors.nrows(), eigenvectors.ncols())?;
        Ok(Spectrum { eigenvalues, basis: Eigenbasis::Real(eigenvectors), chain: None })
    }

    pub fn from_complex_parts(eigenvalues: Vec<f64>, eigenvectors: Mat<c64>) -> Result<Self> {
        check_parts(&eigenvalues, eigenvectors.nrows(), eigenvectors.ncols())?;
        Ok(Spectrum { eigenvalues, basis: Eigenbasis::Complex(eigenvectors), chain: None })
    }

    pub fn with_chain(mut self, chain: ChainParams) -> Self {
        self.chain = Some(chain);
        self
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn chain(&self) -> Option<&ChainParams> {
        self.chain.as_ref()
    }

    /// Amplitude `<j|E_k>` of eigenstate `k` on basis state `j`.
    pub fn amplitude(&self, j: usize, k: usize) -> c64 {
        match &self.basis {
            Eigenbasis::Real(v) => c64::new(v[(j, k)], 0.0),
            Eigenbasis::Complex(v) => v[(j, k)],
        }
    }

    /// Real eigenvector matrix, when the eigenbasis was computed in real arithmetic.
    pub fn real_eigenvectors(&self) -> Option<&Mat<f64>> {
        match &self.basis {
            Eigenbasis::Real(v) => Some(v),
            Eigenbasis::Complex(_) => None,
        }
    }

    /// Eigenvector matrix as a complex matrix (a copy when stored as real).
    pub fn eigenvectors(&self) -> Mat<c64> {
        match &self.basis {
            Eigenbasis::Real(v) => Mat::from_fn(v.nrows(), v.ncols(), |i, j| c64::new(v[(i, j)], 0.0)),
            Eigenbasis::Complex(v) => v.clone(),
        }
    }

    /// `max |V^dag V - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let v = self.eigenvectors();
        let g = v.adjoint() * &v;
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - c64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// `max |H - V diag(E) V^dag|` entrywise.
    pub fn reconstruction_error(&self, h: &DenseOperator) -> Result<f64> {
        if h.dim() != self.dim() {
            return Err(Error::DimensionMismatch { left: h.dim(), right: self.dim() });
        }
        let v = self.eigenvectors();
        let n = self.dim();
        let scaled = Mat::from_fn(n, n, |i, k| v[(i, k)] * self.eigenvalues[k]);
        let rebuilt = DenseOperator::from_mat(scaled * v.adjoint())?;
        h.max_abs_diff(&rebuilt)
    }

    /// `max_k |H v_k - E_k v_k|`.
    pub fn eigen_residual(&self, h: &DenseOperator) -> Result<f64> {
        if h.dim() != self.dim() {
            return Err(Error::DimensionMismatch { left: h.dim(), right: self.dim() });
        }
        let v = self.eigenvectors();
        let hv = h.as_mat() * &v;
        let n = self.dim();
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                worst = worst.max((hv[(i, k)] - v[(i, k)] * self.eigenvalues[k]).norm());
            }
        }
        Ok(worst)
    }
}

fn check_parts(eigenvalues: &[f64], rows: usize, cols: usize) -> Result<()> {
    if rows != cols || rows != eigenvalues.len() {
        return Err(Error::DimensionMismatch { left: eigenvalues.len(), right: rows.max(cols) });
    }
    if eigenvalues.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter("eigenvalues must be finite and ascending".into()));
    }
    Ok(())
}

/// Full eigendecomposition of a Hermitian operator.
///
/// Eigenvalues come back ascending. Degenerate eigenvalues keep the order the
/// solver produced them in, which is deterministic for identical input.
/// Real input is diagonalized in real arithmetic.
pub fn diagonalize(h: &DenseOperator) -> Result<Spectrum> {
    let herm = h.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian { what: "Hamiltonian", deviation: herm });
    }
    let n = h.dim();
    if h.is_real() {
        let real = Mat::from_fn(n, n, |i, j| h.get(i, j).re);
        return diagonalize_real(&real);
    }
    let evd = h
        .as_mat()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let eigenvalues: Vec<f64> = (0..n).map(|k| evd.S().column_vector()[k].re).collect();
    let vectors = evd.U().to_owned();
    let s = Spectrum { eigenvalues, basis: Eigenbasis::Complex(vectors), chain: None };
    check_solver_output(&s)?;
    Ok(s)
}

pub(crate) fn diagonalize_real(h: &Mat<f64>) -> Result<Spectrum> {
    let n = h.nrows();
    let evd = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let eigenvalues: Vec<f64> = (0..n).map(|k| evd.S().column_vector()[k]).collect();
    let s = Spectrum { eigenvalues, basis: Eigenbasis::Real(evd.U().to_owned()), chain: None };
    check_solver_output(&s)?;
    Ok(s)
}

/// Cheap O(D^2) sanity check on solver output: finite, ascending, unit columns.
fn check_solver_output(s: &Spectrum) -> Result<()> {
    if s.eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    if s.eigenvalues.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Eigensolver("eigenvalues not ascending".into()));
    }
    let n = s.dim();
    let mut worst = 0.0f64;
    for k in 0..n {
        let norm2: f64 = (0..n).map(|j| s.amplitude(j, k).norm_sqr()).sum();
        worst = worst.max((norm2 - 1.0).abs());
    }
    if !(worst < 1e-8) {
        return Err(Error::Eigensolver(format!("eigenvector normalization off by {worst:.3e}")));
    }
    Ok(())
}

/// `E_max - E_min` of a spectrum.
pub fn spectral_span(s: &Spectrum) -> Result<f64> {
    span_of_levels(s.eigenvalues())
}

pub fn span_of_levels(levels: &[f64]) -> Result<f64> {
    if levels.len() < 2 {
        return Err(Error::SpectrumTooSmall(format!("span needs at least 2 levels, got {}", levels.len())));
    }
    let (lo, hi) = levels
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    Ok(hi - lo)
}

/// Image of a basis state under site reversal `i -> L-1-i`.
pub fn reflect_state(state: usize, sites: usize) -> usize {
    state.reverse_bits() >> (usize::BITS as usize - sites)
}

/// Spatial reflection as a permutation operator.
pub fn reflection_operator(sites: usize) -> Result<DenseOperator> {
    check_sites(sites, DEFAULT_MAX_SITES)?;
    let dim = 1 << sites;
    Ok(DenseOperator::from_fn(dim, |row, col| {
        if reflect_state(col, sites) == row { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) }
    }))
}

/// Orthonormal basis of the two reflection-parity eigenspaces.
///
/// Reflection-invariant basis states contribute only to the even sector;
/// every pair `{b, R b}` with `b < R b` contributes `(|b> + |Rb>)/sqrt2` to the
/// even sector and `(|b> - |Rb>)/sqrt2` to the odd one.
#[derive(Clone, Debug)]
pub struct ParityBasis {
    pub sites: usize,
    /// Even-sector vectors: `(b, None)` for invariant states, `(b, Some(Rb))` for pairs.
    pub even: Vec<(usize, Option<usize>)>,
    /// Odd-sector vectors, one per pair `(b, Rb)`.
    pub odd: Vec<(usize, usize)>,
}

impl ParityBasis {
    pub fn new(sites: usize) -> Self {
        let dim = 1usize << sites;
        let mut even = Vec::new();
        let mut odd = Vec::new();
        for b in 0..dim {
            let r = reflect_state(b, sites);
            if r == b {
                even.push((b, None));
            } else if b < r {
                even.push((b, Some(r)));
                odd.push((b, r));
            }
        }
        ParityBasis { sites, even, odd }
    }

    /// `(index within sector, coefficient)` of each basis state in either sector.
    fn coordinates(&self) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
        let dim = 1usize << self.sites;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut even = vec![(usize::MAX, 0.0); dim];
        let mut odd = vec![(usize::MAX, 0.0); dim];
        for (k, &(b, r)) in self.even.iter().enumerate() {
            match r {
                None => even[b] = (k, 1.0),
                Some(r) => {
                    even[b] = (k, h);
                    even[r] = (k, h);
                }
            }
        }
        for (k, &(b, r)) in self.odd.iter().enumerate() {
            odd[b] = (k, h);
            odd[r] = (k, -h);
        }
        (even, odd)
    }
}

/// Eigenvalues resolved by reflection parity.
#[derive(Clone, Debug, Serialize)]
pub struct ParitySectors {
    pub even_dim: usize,
    pub odd_dim: usize,
    pub even_eigenvalues: Vec<f64>,
    pub odd_eigenvalues: Vec<f64>,
    /// `max |[H, R]|` measured while building the sectors.
    pub commutator_error: f64,
}

/// Parity-sector spectra with eigenvectors expressed in the sector bases.
#[derive(Clone, Debug)]
pub struct SectorSpectra {
    pub basis: ParityBasis,
    pub even: Spectrum,
    pub odd: Spectrum,
    pub commutator_error: f64,
}

impl SectorSpectra {
    /// Merges both sectors into one eigenbasis of the full Hamiltonian,
    /// expressed in the computational basis. Eigenvalue ties put even-sector
    /// states first.
    pub fn full_spectrum(&self) -> Spectrum {
        let dim = 1usize << self.basis.sites;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut order: Vec<(f64, bool, usize)> = self
            .even
            .eigenvalues()
            .iter()
            .enumerate()
            .map(|(k, &e)| (e, false, k))
            .chain(self.odd.eigenvalues().iter().enumerate().map(|(k, &e)| (e, true, k)))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let even_vecs = self.even.real_eigenvectors().expect("sector spectra are real");
        let odd_vecs = self.odd.real_eigenvectors().expect("sector spectra are real");
        let mut vectors = Mat::<f64>::zeros(dim, dim);
        for (col, &(_, is_odd, k)) in order.iter().enumerate() {
            if is_odd {
                for (a, &(b, r)) in self.basis.odd.iter().enumerate() {
                    let v = odd_vecs[(a, k)] * h;
                    vectors[(b, col)] = v;
                    vectors[(r, col)] = -v;
                }
            } else {
                for (a, &(b, r)) in self.basis.even.iter().enumerate() {
                    match r {
                        None => vectors[(b, col)] = even_vecs[(a, k)],
                        Some(r) => {
                            let v = even_vecs[(a, k)] * h;
                            vectors[(b, col)] = v;
                            vectors[(r, col)] = v;
                        }
                    }
                }
            }
        }
        let eigenvalues = order.iter().map(|o| o.0).collect();
        let mut s = Spectrum { eigenvalues, basis: Eigenbasis::Real(vectors), chain: None };
        s.chain = self.even.chain;
        s
    }
}

/// Tolerance on `max |[H, R]|`.
pub const REFLECTION_TOL: f64 = 1e-10;

/// Even/odd reflection-sector eigenvalues (no eigenvectors kept).
pub fn parity_sectors(p: &ChainParams) -> Result<ParitySectors> {
    let (h, basis, err) = sector_blocks_checked(p)?;
    let even_eigenvalues = sorted_eigenvalues(&h.0)?;
    let odd_eigenvalues = sorted_eigenvalues(&h.1)?;
    Ok(ParitySectors {
        even_dim: basis.even.len(),
        odd_dim: basis.odd.len(),
        even_eigenvalues,
        odd_eigenvalues,
        commutator_error: err,
    })
}

/// Even/odd sector eigendecompositions, including eigenvectors.
pub fn parity_sector_spectra(p: &ChainParams) -> Result<SectorSpectra> {
    let ((even_block, odd_block), basis, err) = sector_blocks_checked(p)?;
    let even = diagonalize_real(&even_block)?.with_chain(*p);
    let odd = if odd_block.nrows() > 0 {
        diagonalize_real(&odd_block)?.with_chain(*p)
    } else {
        Spectrum { eigenvalues: Vec::new(), basis: Eigenbasis::Real(Mat::zeros(0, 0)), chain: Some(*p) }
    };
    Ok(SectorSpectra { basis, even, odd, commutator_error: err })
}

fn sorted_eigenvalues(block: &Mat<f64>) -> Result<Vec<f64>> {
    if block.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut ev = block
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

type Blocks = (Mat<f64>, Mat<f64>);

fn sector_blocks_checked(p: &ChainParams) -> Result<(Blocks, ParityBasis, f64)> {
    p.validate()?;
    if p.sites < 2 {
        return Err(Error::InvalidParameter("parity sectors need at least 2 sites".into()));
    }
    let h = real_hamiltonian(p, DEFAULT_MAX_SITES)?;
    let err = reflection_commutator_error(&h, p.sites);
    if !(err < REFLECTION_TOL) {
        return Err(Error::SymmetryBroken(err));
    }
    let basis = ParityBasis::new(p.sites);
    let (even_coord, odd_coord) = basis.coordinates();
    let (ne, no) = (basis.even.len(), basis.odd.len());
    let mut even = Mat::<f64>::zeros(ne, ne);
    let mut odd = Mat::<f64>::zeros(no, no);
    let dim = p.dim();
    // Block entries <s_a|H|s_b> accumulated from the sparse columns of H.
    for col in 0..dim {
        let (eb, ew) = even_coord[col];
        let (ob, ow) = odd_coord[col];
        p.for_each_in_column(col, |row, v| {
            let (ea, eu) = even_coord[row];
            even[(ea, eb)] += eu * ew * v;
            if ob != usize::MAX {
                let (oa, ou) = odd_coord[row];
                if oa != usize::MAX {
                    odd[(oa, ob)] += ou * ow * v;
                }
            }
        });
    }
    Ok(((even, odd), basis, err))
}

/// `max |(HR - RH)_{bc}| = max |H[b, Rc] - H[Rb, c]|`.
fn reflection_commutator_error(h: &Mat<f64>, sites: usize) -> f64 {
    let dim = h.nrows();
    let refl: Vec<usize> = (0..dim).map(|b| reflect_state(b, sites)).collect();
    let mut worst = 0.0f64;
    for c in 0..dim {
        for b in 0..dim {
            worst = worst.max((h[(b, refl[c])] - h[(refl[b], c)]).abs());
        }
    }
    worst
}
