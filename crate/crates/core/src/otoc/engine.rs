use std::collections::BTreeMap;
use std::fmt;

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{from_eigenbasis, to_eigenbasis, trace_gram, Bank, Phases, SplitMat, Strip, StripProduct};
use super::{Decomposition, FourPointTrace, Formula, OtocTrace, TimeGrid, TraceMeta};
use crate::error::{Error, Result};
use crate::operator::{embed, DenseOperator, OperatorSpec, PauliDirection};
use crate::spectrum::{Spectrum, HERMITIAN_TOL};

/// Largest discarded imaginary part tolerated for Hermitian-operator OTOCs.
pub const IMAG_TOL: f64 = 1e-8;
/// Largest tolerated `|total - (local + nonlocal)|`.
pub const DECOMPOSITION_TOL: f64 = 1e-8;

/// Grid points handed to one worker at a time. Each point is computed from
/// scratch, so chunking never changes the numbers.
const CHUNK: usize = 64;

/// A single-site Pauli operator `sigma^direction_site`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliSite {
    pub site: usize,
    pub direction: PauliDirection,
}

impl PauliSite {
    pub fn new(site: usize, direction: PauliDirection) -> Self {
        PauliSite { site, direction }
    }
}

impl From<PauliSite> for OperatorSpec {
    fn from(p: PauliSite) -> Self {
        OperatorSpec::local(p.site, p.direction)
    }
}

impl fmt::Display for PauliSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.direction, self.site)
    }
}

/// The spectrum together with the chain size it acts on.
struct Basis<'s> {
    spectrum: &'s Spectrum,
    sites: usize,
}

impl<'s> Basis<'s> {
    fn new(spectrum: &'s Spectrum) -> Result<Self> {
        let d = spectrum.dim();
        if !d.is_power_of_two() || d < 2 {
            return Err(Error::InvalidParameter(format!("spectrum dimension {d} is not a qubit-chain dimension")));
        }
        Ok(Basis { spectrum, sites: d.trailing_zeros() as usize })
    }

    fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    fn energies(&self) -> &[f64] {
        self.spectrum.eigenvalues()
    }

    fn operator(&self, spec: OperatorSpec) -> Result<SplitMat> {
        spec.validate(self.sites)?;
        Ok(to_eigenbasis(self.spectrum, &embed(spec, self.sites)?))
    }

    fn locals(&self, direction: PauliDirection) -> Result<Vec<SplitMat>> {
        (0..self.sites).map(|site| self.operator(OperatorSpec::local(site, direction))).collect()
    }

    /// The mixed and global expansions keep `sigma^mu` fixed and evolve
    /// `sigma^nu`, which equals the commutator form only under time reversal.
    fn require_real(&self) -> Result<()> {
        if self.spectrum.real_eigenvectors().is_none() {
            return Err(Error::InvalidParameter(
                "OTOC decompositions need a real (time-reversal symmetric) Hamiltonian".into(),
            ));
        }
        Ok(())
    }

    fn meta(&self, operators: Vec<OperatorSpec>, formula: Formula) -> TraceMeta {
        TraceMeta { chain: self.spectrum.chain().copied(), operators, formula }
    }
}

/// Evaluates `f` at every grid point, in parallel over chunks, with one
/// scratch state per chunk. Output order is the grid order.
fn eval_grid<S, T, I, F>(grid: &TimeGrid, init: I, f: F) -> Vec<T>
where
    T: Send + Copy + Default,
    I: Fn() -> S + Sync,
    F: Fn(&mut S, f64) -> T + Sync,
{
    let mut out = vec![T::default(); grid.len()];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut state = init();
        for (k, slot) in chunk.iter_mut().enumerate() {
            *slot = f(&mut state, grid.point(c * CHUNK + k));
        }
    });
    out
}

fn check_hermitian(op: &DenseOperator, what: &'static str) -> Result<()> {
    let deviation = op.hermiticity_error();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { what, deviation });
    }
    Ok(())
}

fn check_dim(s: &Spectrum, op: &DenseOperator) -> Result<()> {
    if op.dim() != s.dim() {
        return Err(Error::DimensionMismatch { left: s.dim(), right: op.dim() });
    }
    Ok(())
}

fn check_imag(residual: f64) -> Result<()> {
    if residual.is_nan() || residual >= IMAG_TOL {
        return Err(Error::ImaginaryResidual { residual, tolerance: IMAG_TOL });
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite OTOC value {v}")));
    }
    Ok(())
}

/// `e^{iHt} A e^{-iHt}`, evaluated in the eigenbasis of `H`.
pub fn heisenberg_operator(s: &Spectrum, a: &DenseOperator, t: f64) -> Result<DenseOperator> {
    check_dim(s, a)?;
    if t == 0.0 {
        return Ok(a.clone());
    }
    let n = s.dim();
    let op = to_eigenbasis(s, a);
    let mut ph = Phases::new(n);
    ph.set_time(s.eigenvalues(), t);
    let mut evolved = SplitMat::zeros(n);
    evolved.set_evolved(&op, &ph);
    DenseOperator::from_mat(from_eigenbasis(s, &evolved))
}

/// `Tr[[W(t),V]^dag [W(t),V]] / (2D)` from `||A - A^dag||_F^2` with `A = W(t) V`.
struct DirectKernel {
    w: SplitMat,
    v: SplitMat,
}

struct DirectScratch {
    wt: SplitMat,
    a: SplitMat,
}

impl DirectKernel {
    fn scratch(&self) -> DirectScratch {
        let n = self.w.dim();
        DirectScratch { wt: SplitMat::zeros(n), a: SplitMat::zeros(n) }
    }

    fn eval(&self, scr: &mut DirectScratch, ph: &Phases) -> f64 {
        scr.wt.set_evolved(&self.w, ph);
        scr.a.set_product(&scr.wt, &self.v);
        scr.a.anti_hermitian_norm_sqr() / (2.0 * self.w.dim() as f64)
    }
}

/// `sum over pairs (a, b)` of `1 - Re Tr[W_a(t) V_b W_a(t) V_b] / D`.
struct LocalKernel {
    w: Vec<SplitMat>,
    /// Per evolved operator: its index, the pair indices it takes part in,
    /// and the matching fixed operators side by side.
    groups: Vec<(usize, Vec<usize>, Strip)>,
    n_pairs: usize,
}

struct LocalScratch {
    wt: SplitMat,
    products: Vec<StripProduct>,
    traces: Vec<c64>,
}

impl LocalKernel {
    fn new(w: Vec<SplitMat>, v: &[SplitMat], pairs: &[(usize, usize)]) -> Self {
        let mut by_w: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, &(a, _)) in pairs.iter().enumerate() {
            by_w.entry(a).or_default().push(k);
        }
        let groups = by_w
            .into_iter()
            .map(|(a, ks)| {
                let strip = Strip::new(&ks.iter().map(|&k| &v[pairs[k].1]).collect::<Vec<_>>());
                (a, ks, strip)
            })
            .collect();
        LocalKernel { w, groups, n_pairs: pairs.len() }
    }

    fn scratch(&self) -> LocalScratch {
        LocalScratch {
            wt: SplitMat::zeros(self.w[0].dim()),
            products: self.groups.iter().map(|(_, _, s)| StripProduct::for_strip(s)).collect(),
            traces: vec![c64::new(0.0, 0.0); self.n_pairs],
        }
    }

    /// Returns the summed value and the largest per-term `|Im Tr| / D`.
    fn eval(&self, scr: &mut LocalScratch, ph: &Phases) -> (f64, f64) {
        let d = self.w[0].dim() as f64;
        for ((a, ks, strip), p) in self.groups.iter().zip(&mut scr.products) {
            scr.wt.set_evolved(&self.w[*a], ph);
            p.set(&scr.wt, strip);
            for (m, &k) in ks.iter().enumerate() {
                scr.traces[k] = p.square_trace(m);
            }
        }
        let mut sum = 0.0;
        let mut imag: f64 = 0.0;
        for tr in &scr.traces {
            sum += 1.0 - tr.re / d;
            imag = imag.max(tr.im.abs() / d);
        }
        (sum, imag)
    }
}

/// One four-point term `Tr[F_i F_j G_l(t) G_m(t)] - Re Tr[F_i G_l(t) F_j G_m(t)]`.
#[derive(Clone, Copy)]
struct Term {
    /// Index of `(F_i F_j)^T` in `fixed_pairs_t`.
    fixed_pair: usize,
    /// Index of `G_l G_m` in `evolved_pairs`.
    evolved_pair: usize,
    /// Indices of `G_l(t) F_j` and `G_m(t) F_i` in `cross`.
    y1: usize,
    y2: usize,
}

/// Sum of four-point terms over an explicit term list. The second trace is
/// evaluated in the cyclic form `Tr[(G_l(t) F_j)(G_m(t) F_i)]`, and the first
/// evolves the product `G_l G_m` as a whole. At each time every distinct
/// trace is formed once, as an entry of a Gram matrix, and each term reads
/// its own two entries.
struct ExpansionKernel {
    evolved: Vec<SplitMat>,
    fixed: Vec<SplitMat>,
    fixed_pairs_t: Bank,
    evolved_pairs: Vec<SplitMat>,
    /// `(l, j)` for each cross product `G_l(t) F_j`.
    cross: Vec<(usize, usize)>,
    /// Cross products grouped by `l`: indices into `cross` and the `F_j` side by side.
    cross_groups: Vec<(usize, Vec<usize>, Strip)>,
    terms: Vec<Term>,
}

struct ExpansionScratch {
    gt: SplitMat,
    cross_products: Vec<StripProduct>,
    y: Bank,
    yt: Bank,
    qt: Bank,
    first_re: Mat<f64>,
    first_im: Mat<f64>,
    second: Mat<f64>,
}

impl ExpansionKernel {
    /// Builds the kernel for quadruples `(i, j, l, m)` indexing `fixed` (`i`, `j`)
    /// and `evolved` (`l`, `m`).
    fn new(fixed: Vec<SplitMat>, evolved: Vec<SplitMat>, quads: &[[usize; 4]]) -> Self {
        let n = fixed[0].dim();
        let mut fixed_index = BTreeMap::new();
        let mut evolved_index = BTreeMap::new();
        let mut cross_index = BTreeMap::new();
        let mut fixed_pairs_t = Vec::new();
        let mut evolved_pairs = Vec::new();
        let mut cross = Vec::new();
        let mut terms = Vec::with_capacity(quads.len());
        let mut tmp = SplitMat::zeros(n);
        for &[i, j, l, m] in quads {
            let fixed_pair = *fixed_index.entry((i, j)).or_insert_with(|| {
                tmp.set_product(&fixed[i], &fixed[j]);
                let mut t = SplitMat::zeros(n);
                t.set_transpose(&tmp);
                fixed_pairs_t.push(t);
                fixed_pairs_t.len() - 1
            });
            let evolved_pair = *evolved_index.entry((l, m)).or_insert_with(|| {
                let mut q = SplitMat::zeros(n);
                q.set_product(&evolved[l], &evolved[m]);
                evolved_pairs.push(q);
                evolved_pairs.len() - 1
            });
            let mut cross_of = |a: usize, b: usize| {
                *cross_index.entry((a, b)).or_insert_with(|| {
                    cross.push((a, b));
                    cross.len() - 1
                })
            };
            let y1 = cross_of(l, j);
            let y2 = cross_of(m, i);
            terms.push(Term { fixed_pair, evolved_pair, y1, y2 });
        }
        let fixed_pairs_t = Bank::from_mats(&fixed_pairs_t);
        let mut by_l: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, &(l, _)) in cross.iter().enumerate() {
            by_l.entry(l).or_default().push(k);
        }
        let cross_groups = by_l
            .into_iter()
            .map(|(l, ks)| {
                let strip = Strip::new(&ks.iter().map(|&k| &fixed[cross[k].1]).collect::<Vec<_>>());
                (l, ks, strip)
            })
            .collect();
        ExpansionKernel { evolved, fixed, fixed_pairs_t, evolved_pairs, cross, cross_groups, terms }
    }

    fn scratch(&self) -> ExpansionScratch {
        let n = self.fixed[0].dim();
        let (nq, np, nc) = (self.evolved_pairs.len(), self.fixed_pairs_t.len(), self.cross.len());
        ExpansionScratch {
            gt: SplitMat::zeros(n),
            cross_products: self.cross_groups.iter().map(|(_, _, s)| StripProduct::for_strip(s)).collect(),
            y: Bank::zeros(n, nc),
            yt: Bank::zeros(n, nc),
            qt: Bank::zeros(n, nq),
            first_re: Mat::zeros(nq, np),
            first_im: Mat::zeros(nq, np),
            second: Mat::zeros(nc, nc),
        }
    }

    /// Sum over all terms, divided by `D`. The first trace keeps its imaginary part.
    fn eval(&self, scr: &mut ExpansionScratch, ph: &Phases) -> c64 {
        let d = self.fixed[0].dim() as f64;
        for ((l, ks, strip), p) in self.cross_groups.iter().zip(&mut scr.cross_products) {
            scr.gt.set_evolved(&self.evolved[*l], ph);
            p.set(&scr.gt, strip);
            for (m, &k) in ks.iter().enumerate() {
                scr.y.set_block(k, p, m);
            }
        }
        scr.yt.set_transposes(&scr.y);
        for (r, q) in self.evolved_pairs.iter().enumerate() {
            scr.qt.set_evolved(r, q, ph);
        }
        trace_gram(&scr.qt, &self.fixed_pairs_t, &mut scr.first_re, Some(&mut scr.first_im));
        trace_gram(&scr.y, &scr.yt, &mut scr.second, None);
        let (mut first_re, mut first_im, mut second) = (0.0, 0.0, 0.0);
        for t in &self.terms {
            first_re += scr.first_re[(t.evolved_pair, t.fixed_pair)];
            first_im += scr.first_im[(t.evolved_pair, t.fixed_pair)];
            second += scr.second[(t.y1, t.y2)];
        }
        c64::new((first_re - second) / d, first_im / d)
    }
}

fn direct_trace(basis: &Basis<'_>, w: SplitMat, v: SplitMat, grid: &TimeGrid, meta: TraceMeta) -> Result<OtocTrace> {
    let kernel = DirectKernel { w, v };
    let n = basis.dim();
    let energies = basis.energies();
    let values = eval_grid(
        grid,
        || (Phases::new(n), kernel.scratch()),
        |(ph, scr), t| {
            ph.set_time(energies, t);
            kernel.eval(scr, ph)
        },
    );
    check_finite(&values)?;
    Ok(OtocTrace { grid: *grid, values, imag_residual: 0.0, meta })
}

/// `Tr[[W(t),V]^dag [W(t),V]] / (2D)` for Hermitian `W`, `V`.
///
/// The factor `1/2` makes this coincide with [`otoc_local`] on Pauli pairs.
pub fn otoc_direct(s: &Spectrum, w: &DenseOperator, v: &DenseOperator, grid: &TimeGrid) -> Result<OtocTrace> {
    check_dim(s, w)?;
    check_dim(s, v)?;
    check_hermitian(w, "W")?;
    check_hermitian(v, "V")?;
    let basis = Basis::new(s)?;
    let meta = basis.meta(Vec::new(), Formula::Direct);
    direct_trace(&basis, to_eigenbasis(s, w), to_eigenbasis(s, v), grid, meta)
}

/// [`otoc_direct`] for operators given by spec; the specs are recorded in the metadata.
pub fn otoc_direct_specs(s: &Spectrum, w: OperatorSpec, v: OperatorSpec, grid: &TimeGrid) -> Result<OtocTrace> {
    let basis = Basis::new(s)?;
    let meta = basis.meta(vec![w, v], Formula::Direct);
    direct_trace(&basis, basis.operator(w)?, basis.operator(v)?, grid, meta)
}

/// `1 - Re Tr[sigma_i^mu(t) sigma_j^nu sigma_i^mu(t) sigma_j^nu] / D`.
pub fn otoc_local(
    s: &Spectrum,
    i: usize,
    mu: PauliDirection,
    j: usize,
    nu: PauliDirection,
    grid: &TimeGrid,
) -> Result<OtocTrace> {
    let basis = Basis::new(s)?;
    let (w, v) = (OperatorSpec::local(i, mu), OperatorSpec::local(j, nu));
    let kernel = LocalKernel::new(vec![basis.operator(w)?], &[basis.operator(v)?], &[(0, 0)]);
    let n = basis.dim();
    let energies = basis.energies();
    let out = eval_grid(
        grid,
        || (Phases::new(n), kernel.scratch()),
        |(ph, scr), t| {
            ph.set_time(energies, t);
            kernel.eval(scr, ph)
        },
    );
    let values: Vec<f64> = out.iter().map(|p| p.0).collect();
    let imag_residual = out.iter().map(|p| p.1).fold(0.0, f64::max);
    check_finite(&values)?;
    check_imag(imag_residual)?;
    Ok(OtocTrace { grid: *grid, values, imag_residual, meta: basis.meta(vec![w, v], Formula::Local) })
}

/// `Tr[s_i s_j s_l(t) s_m(t)] / D - Re Tr[s_i s_l(t) s_j s_m(t)] / D`, complex.
pub fn otoc_four_point(s: &Spectrum, ops: [PauliSite; 4], grid: &TimeGrid) -> Result<FourPointTrace> {
    let basis = Basis::new(s)?;
    let mats = ops.iter().map(|&p| basis.operator(p.into())).collect::<Result<Vec<_>>>()?;
    let [fi, fj, gl, gm]: [SplitMat; 4] = mats.try_into().expect("four operators");
    let kernel = ExpansionKernel::new(vec![fi, fj], vec![gl, gm], &[[0, 1, 0, 1]]);
    let n = basis.dim();
    let energies = basis.energies();
    let values = eval_grid(
        grid,
        || (Phases::new(n), kernel.scratch()),
        |(ph, scr), t| {
            ph.set_time(energies, t);
            kernel.eval(scr, ph)
        },
    );
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidParameter("non-finite four-point value".into()));
    }
    Ok(FourPointTrace { grid: *grid, values, operators: ops, chain: s.chain().copied() })
}

#[derive(Clone, Copy, Default)]
struct DecompPoint {
    total: f64,
    local: f64,
    local_imag: f64,
    nonlocal: c64,
}

struct DecompositionJob<'a> {
    basis: &'a Basis<'a>,
    direct: DirectKernel,
    local: LocalKernel,
    expansion: ExpansionKernel,
    operators: Vec<OperatorSpec>,
    formulas: [Formula; 3],
}

impl DecompositionJob<'_> {
    fn run(self, grid: &TimeGrid) -> Result<Decomposition> {
        let n = self.basis.dim();
        let energies = self.basis.energies();
        let points = eval_grid(
            grid,
            || (Phases::new(n), self.direct.scratch(), self.local.scratch(), self.expansion.scratch()),
            |(ph, ds, ls, es), t| {
                ph.set_time(energies, t);
                let total = self.direct.eval(ds, ph);
                let (local, local_imag) = self.local.eval(ls, ph);
                let nonlocal = self.expansion.eval(es, ph);
                DecompPoint { total, local, local_imag, nonlocal }
            },
        );
        let trace = |values: Vec<f64>, imag_residual: f64, formula| -> Result<OtocTrace> {
            check_finite(&values)?;
            Ok(OtocTrace { grid: *grid, values, imag_residual, meta: self.basis.meta(self.operators.clone(), formula) })
        };
        let local_imag = points.iter().map(|p| p.local_imag).fold(0.0, f64::max);
        let nonlocal_imag = points.iter().map(|p| p.nonlocal.im.abs()).fold(0.0, f64::max);
        check_imag(local_imag)?;
        check_imag(nonlocal_imag)?;
        let [ft, fl, fn_] = self.formulas;
        let out = Decomposition {
            total: trace(points.iter().map(|p| p.total).collect(), 0.0, ft)?,
            local_part: trace(points.iter().map(|p| p.local).collect(), local_imag, fl)?,
            nonlocal_part: trace(points.iter().map(|p| p.nonlocal.re).collect(), nonlocal_imag, fn_)?,
        };
        let deviation = out.identity_deviation();
        if !(deviation < DECOMPOSITION_TOL) {
            return Err(Error::DecompositionMismatch { what: "total vs local + nonlocal", deviation });
        }
        Ok(out)
    }
}

/// `C_i^{mu nu}` for `W = sigma_i^mu`, `V = sum_m sigma_m^nu`, split into the
/// local sum `sum_m C_{im}` and the non-local sum over `m != n` of the
/// four-point terms with `sigma_i^mu` fixed twice and `sigma_m^nu`, `sigma_n^nu` evolved.
pub fn otoc_mixed(s: &Spectrum, i: usize, mu: PauliDirection, nu: PauliDirection, grid: &TimeGrid) -> Result<Decomposition> {
    let basis = Basis::new(s)?;
    basis.require_real()?;
    let w_spec = OperatorSpec::local(i, mu);
    let v_spec = OperatorSpec::total(nu);
    let w = basis.operator(w_spec)?;
    let locals_nu = basis.locals(nu)?;
    let l = basis.sites;
    let quads: Vec<[usize; 4]> =
        (0..l).flat_map(|m| (0..l).filter(move |&n| n != m).map(move |n| [0, 0, m, n])).collect();
    let job = DecompositionJob {
        basis: &basis,
        direct: DirectKernel { w: w.clone(), v: basis.operator(v_spec)? },
        local: LocalKernel::new(vec![w.clone()], &locals_nu, &(0..l).map(|m| (0, m)).collect::<Vec<_>>()),
        expansion: ExpansionKernel::new(vec![w], locals_nu, &quads),
        operators: vec![w_spec, v_spec],
        formulas: [Formula::MixedTotal, Formula::MixedLocal, Formula::MixedNonlocal],
    };
    job.run(grid)
}

/// `C^{mu nu}` for `W = sum_i sigma_i^mu`, `V = sum_l sigma_l^nu`, split into
/// the local sum `sum_{i,l} C_{il}` and the non-local sum of four-point terms
/// `(i, j, l, m)` with `sigma_i^mu`, `sigma_j^mu` fixed and `sigma_l^nu`,
/// `sigma_m^nu` evolved, over all quadruples except `i = j` with `l = m`.
pub fn otoc_global(s: &Spectrum, mu: PauliDirection, nu: PauliDirection, grid: &TimeGrid) -> Result<Decomposition> {
    let basis = Basis::new(s)?;
    basis.require_real()?;
    let w_spec = OperatorSpec::total(mu);
    let v_spec = OperatorSpec::total(nu);
    let locals_mu = basis.locals(mu)?;
    let locals_nu = basis.locals(nu)?;
    let l = basis.sites;
    let mut quads = Vec::with_capacity(l * l * l * l);
    for i in 0..l {
        for j in 0..l {
            for a in 0..l {
                for b in 0..l {
                    if !(i == j && a == b) {
                        quads.push([i, j, a, b]);
                    }
                }
            }
        }
    }
    let pairs: Vec<_> = (0..l).flat_map(|i| (0..l).map(move |m| (i, m))).collect();
    let job = DecompositionJob {
        basis: &basis,
        direct: DirectKernel { w: basis.operator(w_spec)?, v: basis.operator(v_spec)? },
        local: LocalKernel::new(locals_mu.clone(), &locals_nu, &pairs),
        expansion: ExpansionKernel::new(locals_mu, locals_nu, &quads),
        operators: vec![w_spec, v_spec],
        formulas: [Formula::GlobalTotal, Formula::GlobalLocal, Formula::GlobalNonlocal],
    };
    job.run(grid)
}
