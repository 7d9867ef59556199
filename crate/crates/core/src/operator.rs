//! Dense operators on the `2^L`-dimensional Hilbert space of a spin-1/2 chain.
//!
//! Basis convention: computational z-basis, site 0 is the most significant
//! bit of the basis index. A basis state `b` therefore has site `i` encoded
//! in bit `L - 1 - i`, and `sigma^z_i |b>` carries `+1` when that bit is 0.

use std::fmt;
use std::str::FromStr;

use faer::{c64, Accum, Mat, Par};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain accepted by default. A dense complex operator at this size
/// already needs 4 GiB.
pub const DEFAULT_MAX_SITES: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliDirection {
    X,
    Y,
    Z,
}

impl PauliDirection {
    pub const ALL: [PauliDirection; 3] = [PauliDirection::X, PauliDirection::Y, PauliDirection::Z];

    pub fn as_char(self) -> char {
        match self {
            PauliDirection::X => 'x',
            PauliDirection::Y => 'y',
            PauliDirection::Z => 'z',
        }
    }
}

impl fmt::Display for PauliDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for PauliDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" => Ok(PauliDirection::X),
            "y" | "Y" => Ok(PauliDirection::Y),
            "z" | "Z" => Ok(PauliDirection::Z),
            other => Err(Error::InvalidParameter(format!("unknown Pauli direction `{other}`"))),
        }
    }
}

/// A single-site Pauli operator or a total-magnetization operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OperatorSpec {
    Local { site: usize, direction: PauliDirection },
    Total { direction: PauliDirection },
}

impl OperatorSpec {
    pub fn local(site: usize, direction: PauliDirection) -> Self {
        OperatorSpec::Local { site, direction }
    }

    pub fn total(direction: PauliDirection) -> Self {
        OperatorSpec::Total { direction }
    }

    pub fn direction(&self) -> PauliDirection {
        match *self {
            OperatorSpec::Local { direction, .. } | OperatorSpec::Total { direction } => direction,
        }
    }

    pub fn validate(&self, sites: usize) -> Result<()> {
        match *self {
            OperatorSpec::Local { site, .. } if site >= sites => {
                Err(Error::SiteOutOfRange { site, sites })
            }
            _ => Ok(()),
        }
    }

    /// Short label, e.g. `z0` for a local operator or `Zt` for a total one.
    pub fn label(&self) -> String {
        match *self {
            OperatorSpec::Local { site, direction } => format!("{direction}{site}"),
            OperatorSpec::Total { direction } => {
                format!("{}t", direction.as_char().to_ascii_uppercase())
            }
        }
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            OperatorSpec::Local { site, direction } => write!(f, "sigma^{direction}_{site}"),
            OperatorSpec::Total { direction } => write!(f, "sigma^{direction}_total"),
        }
    }
}

/// Square complex matrix whose dimension is a power of two.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    mat: Mat<c64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim.is_power_of_two(), "operator dimension {dim} is not a power of two");
        DenseOperator { mat: Mat::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim.is_power_of_two(), "operator dimension {dim} is not a power of two");
        DenseOperator { mat: Mat::identity(dim, dim) }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> c64) -> Self {
        assert!(dim.is_power_of_two(), "operator dimension {dim} is not a power of two");
        DenseOperator { mat: Mat::from_fn(dim, dim, f) }
    }

    /// Wraps a square matrix; fails unless it is square with power-of-two size.
    pub fn from_mat(mat: Mat<c64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { left: mat.nrows(), right: mat.ncols() });
        }
        if !mat.nrows().is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "operator dimension {} is not a power of two",
                mat.nrows()
            )));
        }
        Ok(DenseOperator { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Number of sites `L` with `dim = 2^L`.
    pub fn sites(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.mat[(row, col)]
    }

    pub fn as_mat(&self) -> &Mat<c64> {
        &self.mat
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        DenseOperator { mat: self.mat.adjoint().to_owned() }
    }

    pub fn scaled(&self, factor: c64) -> Self {
        let n = self.dim();
        DenseOperator::from_fn(n, |i, j| self.mat[(i, j)] * factor)
    }

    pub fn add(&self, other: &DenseOperator) -> Result<Self> {
        check_dims(self, other)?;
        Ok(DenseOperator { mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &DenseOperator) -> Result<Self> {
        check_dims(self, other)?;
        Ok(DenseOperator { mat: &self.mat - &other.mat })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DenseOperator) -> Result<f64> {
        check_dims(self, other)?;
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        Ok(worst)
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max(self.mat[(i, j)].norm());
            }
        }
        worst
    }

    /// `max |A - A^dag|` over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// True when every entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| self.mat[(i, j)].im == 0.0))
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| i == j || self.mat[(i, j)] == c64::new(0.0, 0.0)))
    }
}

fn check_dims(a: &DenseOperator, b: &DenseOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

/// The 2x2 Pauli matrix for `direction`.
pub fn pauli_matrix(direction: PauliDirection) -> DenseOperator {
    let (o, l, i) = (c64::new(0.0, 0.0), c64::new(1.0, 0.0), c64::new(0.0, 1.0));
    let entries = match direction {
        PauliDirection::X => [[o, l], [l, o]],
        PauliDirection::Y => [[o, -i], [i, o]],
        PauliDirection::Z => [[l, o], [o, -l]],
    };
    DenseOperator::from_fn(2, |r, c| entries[r][c])
}

/// Bit mask selecting `site` inside a basis index of an `sites`-site chain.
#[inline]
pub fn site_mask(site: usize, sites: usize) -> usize {
    1 << (sites - 1 - site)
}

/// Action of `sigma^direction_site` on basis state `state`: returns the image
/// state and the amplitude. Pauli strings are monomial matrices, so this is
/// the full column of the operator.
#[inline]
pub fn pauli_action(direction: PauliDirection, site: usize, sites: usize, state: usize) -> (usize, c64) {
    let mask = site_mask(site, sites);
    let up = state & mask == 0;
    match direction {
        PauliDirection::X => (state ^ mask, c64::new(1.0, 0.0)),
        PauliDirection::Y => (state ^ mask, if up { c64::new(0.0, 1.0) } else { c64::new(0.0, -1.0) }),
        PauliDirection::Z => (state, c64::new(if up { 1.0 } else { -1.0 }, 0.0)),
    }
}

/// Embeds `spec` into an `sites`-site chain with the default size ceiling.
pub fn embed(spec: OperatorSpec, sites: usize) -> Result<DenseOperator> {
    embed_with_ceiling(spec, sites, DEFAULT_MAX_SITES)
}

pub fn embed_with_ceiling(spec: OperatorSpec, sites: usize, max_sites: usize) -> Result<DenseOperator> {
    check_sites(sites, max_sites)?;
    spec.validate(sites)?;
    let dim = 1usize << sites;
    let mut op = DenseOperator::zeros(dim);
    let site_range = match spec {
        OperatorSpec::Local { site, .. } => site..site + 1,
        OperatorSpec::Total { .. } => 0..sites,
    };
    let direction = spec.direction();
    for site in site_range {
        for col in 0..dim {
            let (row, amp) = pauli_action(direction, site, sites, col);
            op.mat[(row, col)] += amp;
        }
    }
    Ok(op)
}

pub(crate) fn check_sites(sites: usize, max_sites: usize) -> Result<()> {
    if sites == 0 {
        return Err(Error::InvalidParameter("chain must have at least one site".into()));
    }
    if sites > max_sites {
        return Err(Error::TooManySites { sites, max: max_sites });
    }
    Ok(())
}

/// Exact matrix product `a * b`.
pub fn op_product(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    check_dims(a, b)?;
    let n = a.dim();
    let mut out = Mat::<c64>::zeros(n, n);
    faer::linalg::matmul::matmul(out.as_mut(), Accum::Replace, a.mat.as_ref(), b.mat.as_ref(), c64::new(1.0, 0.0), Par::Seq);
    Ok(DenseOperator { mat: out })
}

pub fn trace(a: &DenseOperator) -> c64 {
    (0..a.dim()).map(|i| a.mat[(i, i)]).sum()
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    op_product(a, b)?.sub(&op_product(b, a)?)
}
