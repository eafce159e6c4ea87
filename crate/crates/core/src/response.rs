//! Third-order response functions, linear absorption and 2D spectra.
//!
//! Every signal is expanded over the eigenmodes of the generator blocks
//! visited during t₁, t₂ and t₃, giving
//! `R(t₁,t₂,t₃) = Σ a·e^{χ₁t₁}·e^{υt₂}·e^{χ₃t₃}`. The frequency-domain
//! spectra follow from exact half-line transforms of those exponentials; a
//! direct route (block propagators and resolvent solves) and a discrete
//! half-line DFT of sampled rotating-frame signals are kept alongside.
//!
//! Transform conventions: rephasing uses `e^{−i(ω₁t₁−ω₃t₃)}`, non-rephasing
//! `e^{+i(ω₁t₁+ω₃t₃)}`, so both place peaks at positive (ε_k, ε_m).
//! Spectra are returned in units of fs² times dipole⁴.

use std::collections::HashMap;

use nalgebra::{Matrix4, RowDVector};
use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::BathSpec;
use crate::eigen::{eigendecompose, EigenModes};
use crate::error::{Error, Result};
use crate::liouville::{
    block_indices, build_generator, left, right, submatrix, trace_row, vectorize, CMatrix, CVector, Generator, Op4,
    Propagator,
};
use crate::model::{exciton_basis, DimerParams, ExcitonBasis};
use crate::units::{nyquist_wavenumber, KAPPA};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Transition dipoles of the two sites (direction and magnitude).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleConfig {
    pub d1: [f64; 3],
    pub d2: [f64; 3],
}

impl Default for DipoleConfig {
    /// Mutually orthogonal unit dipoles.
    fn default() -> Self {
        Self { d1: [1.0, 0.0, 0.0], d2: [0.0, 1.0, 0.0] }
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl DipoleConfig {
    /// Orthogonal dipoles of common magnitude `m`.
    pub fn orthogonal(m: f64) -> Self {
        Self { d1: [m, 0.0, 0.0], d2: [0.0, m, 0.0] }
    }

    /// Dipole of site `j` (0 or 1).
    pub fn site(&self, j: usize) -> &[f64; 3] {
        if j == 0 {
            &self.d1
        } else {
            &self.d2
        }
    }

    /// Applies the site relabelling of [`DimerParams::new`] and scales both
    /// dipoles by the common magnitude `p.dipole`.
    pub fn for_params(&self, p: &DimerParams) -> Self {
        let (d1, d2) = if p.swapped { (self.d2, self.d1) } else { (self.d1, self.d2) };
        Self { d1: d1.map(|x| x * p.dipole), d2: d2.map(|x| x * p.dipole) }
    }

    /// Isotropic average ⟨(ê·d_a)(ê·d_b)(ê·d_c)(ê·d_d)⟩ over orientations ê.
    pub fn rotational_average(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let (da, db, dc, dd) = (self.site(a), self.site(b), self.site(c), self.site(d));
        (dot(da, db) * dot(dc, dd) + dot(da, dc) * dot(db, dd) + dot(da, dd) * dot(db, dc)) / 15.0
    }

    /// Isotropic average ⟨(ê·d_a)(ê·d_b)⟩ for linear absorption.
    pub fn rotational_average2(&self, a: usize, b: usize) -> f64 {
        dot(self.site(a), self.site(b)) / 3.0
    }

    /// All 16 site-index patterns with their orientational weights.
    pub fn patterns(&self) -> Vec<([usize; 4], f64)> {
        let mut out = Vec::with_capacity(16);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        out.push(([a, b, c, d], self.rotational_average(a, b, c, d)));
                    }
                }
            }
        }
        out
    }
}

/// Site raising operators σ_j⁺ in the site basis.
pub fn site_raising() -> [Matrix4<f64>; 2] {
    let mut s1 = Matrix4::zeros();
    s1[(1, 0)] = 1.0;
    s1[(3, 2)] = 1.0;
    let mut s2 = Matrix4::zeros();
    s2[(2, 0)] = 1.0;
    s2[(3, 1)] = 1.0;
    [s1, s2]
}

/// Exciton-basis dipole operators μ⁺ = Σ_j (ê·d_j)σ_j⁺ and μ⁻ = (μ⁺)†.
pub fn dipole_operators(cfg: &DipoleConfig, basis: &ExcitonBasis, e: [f64; 3]) -> Result<(Op4, Op4)> {
    let n = dot(&e, &e).sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("polarization must be a unit vector, |e| = {n}")));
    }
    let s = site_raising();
    let site = s[0] * dot(&e, &cfg.d1) + s[1] * dot(&e, &cfg.d2);
    let up = basis.to_exciton(&site).map(|x| Complex64::new(x, 0.0));
    Ok((up, up.adjoint()))
}

/// Phase-matching class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signal {
    Rephasing,
    NonRephasing,
}

impl Signal {
    pub fn tag(self) -> &'static str {
        match self {
            Signal::Rephasing => "R",
            Signal::NonRephasing => "N",
        }
    }
}

/// Liouville pathway family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Family {
    Gsb,
    Se,
    Esa,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Gsb, Family::Se, Family::Esa];

    /// Sign with which the family enters S = GSB + SE − ESA.
    pub fn sign(self) -> f64 {
        match self {
            Family::Esa => -1.0,
            _ => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gsb => "GSB",
            Family::Se => "SE",
            Family::Esa => "ESA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Raise,
    Lower,
}

/// Interaction sequence and the generator blocks visited during t₁, t₂, t₃.
struct Chain {
    ops: [(Side, Dir); 3],
    blocks: [(usize, usize); 3],
}

fn chain(signal: Signal, family: Family) -> Chain {
    use Dir::*;
    use Side::*;
    match (signal, family) {
        (Signal::Rephasing, Family::Gsb) => Chain { ops: [(Right, Lower), (Right, Raise), (Left, Raise)], blocks: [(0, 1), (0, 0), (1, 0)] },
        (Signal::Rephasing, Family::Se) => Chain { ops: [(Right, Lower), (Left, Raise), (Right, Raise)], blocks: [(0, 1), (1, 1), (1, 0)] },
        (Signal::Rephasing, Family::Esa) => Chain { ops: [(Right, Lower), (Left, Raise), (Left, Raise)], blocks: [(0, 1), (1, 1), (2, 1)] },
        (Signal::NonRephasing, Family::Gsb) => Chain { ops: [(Left, Raise), (Left, Lower), (Left, Raise)], blocks: [(1, 0), (0, 0), (1, 0)] },
        (Signal::NonRephasing, Family::Se) => Chain { ops: [(Left, Raise), (Right, Lower), (Right, Raise)], blocks: [(1, 0), (1, 1), (1, 0)] },
        (Signal::NonRephasing, Family::Esa) => Chain { ops: [(Left, Raise), (Right, Lower), (Left, Raise)], blocks: [(1, 0), (1, 1), (2, 1)] },
    }
}

/// One exponential term of a third-order response function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTerm {
    pub family: Family,
    /// Mode indices in the t₁, t₂ and t₃ blocks.
    pub modes: [usize; 3],
    /// Peak label: frequency ranks of the t₁ and t₃ modes (0 = lower energy).
    pub peak: (usize, usize),
    /// t₁ eigenvalue (rad/fs).
    pub chi1: Complex64,
    /// t₂ eigenvalue (rad/fs).
    pub upsilon: Complex64,
    /// t₃ eigenvalue (rad/fs).
    pub chi3: Complex64,
    /// Rotationally averaged amplitude, without the family sign.
    pub amplitude: Complex64,
}

impl ModeTerm {
    /// Amplitude including the family sign of S = GSB + SE − ESA.
    pub fn signed_amplitude(&self) -> Complex64 {
        self.amplitude * self.family.sign()
    }

    /// Time-domain value at (t₁, t₂, t₃) in fs.
    pub fn time_value(&self, t1: f64, t2: f64, t3: f64) -> Complex64 {
        self.amplitude * (self.chi1 * t1 + self.upsilon * t2 + self.chi3 * t3).exp()
    }

    /// Denominators (a₁, a₃) of the half-line transforms f₁ = 1/a₁ and
    /// f₃ = 1/a₃ at (ω₁, ω₃) in cm⁻¹.
    pub fn denominators(&self, signal: Signal, w1: f64, w3: f64) -> (Complex64, Complex64) {
        let a1 = match signal {
            Signal::Rephasing => I * (KAPPA * w1) - self.chi1,
            Signal::NonRephasing => -I * (KAPPA * w1) - self.chi1,
        };
        (a1, -I * (KAPPA * w3) - self.chi3)
    }

    /// t₁ half-line transform at ω₁ (cm⁻¹).
    pub fn f1(&self, signal: Signal, w1: f64) -> Complex64 {
        1.0 / self.denominators(signal, w1, 0.0).0
    }

    /// t₃ half-line transform at ω₃ (cm⁻¹).
    pub fn f3(&self, w3: f64) -> Complex64 {
        1.0 / (-I * (KAPPA * w3) - self.chi3)
    }

    /// Frequency-domain value at (ω₁, t₂, ω₃), without the family sign.
    pub fn spectral_value(&self, signal: Signal, w1: f64, t2: f64, w3: f64) -> Complex64 {
        self.amplitude * self.f1(signal, w1) * (self.upsilon * t2).exp() * self.f3(w3)
    }
}

/// Mode expansion of one signal class.
#[derive(Debug, Clone)]
pub struct ResponseTerms {
    pub signal: Signal,
    pub terms: Vec<ModeTerm>,
}

impl ResponseTerms {
    /// Total S = GSB + SE − ESA in the time domain.
    pub fn time_value(&self, t1: f64, t2: f64, t3: f64) -> Complex64 {
        self.terms.iter().map(|t| t.time_value(t1, t2, t3) * t.family.sign()).sum()
    }

    /// Time-domain value of a single family.
    pub fn family_time_value(&self, family: Family, t1: f64, t2: f64, t3: f64) -> Complex64 {
        self.terms.iter().filter(|t| t.family == family).map(|t| t.time_value(t1, t2, t3)).sum()
    }

    /// Exact spectrum S(ω₁, t₂, ω₃) at one point.
    pub fn spectral_value(&self, w1: f64, t2: f64, w3: f64) -> Complex64 {
        self.terms.iter().map(|t| t.spectral_value(self.signal, w1, t2, w3) * t.family.sign()).sum()
    }

    /// Terms of one family.
    pub fn family(&self, family: Family) -> impl Iterator<Item = &ModeTerm> {
        self.terms.iter().filter(move |t| t.family == family)
    }
}

/// Eigenmodes of one generator block together with the Liouville indices
/// the block occupies and the frequency rank of each mode.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Liouville-space indices of the block, in the row order of `modes.right`.
    pub ids: Vec<usize>,
    pub modes: EigenModes,
    /// Rank of each mode by ascending |Im|, used for peak labels.
    pub rank: Vec<usize>,
}

impl ModeSet {
    /// Wraps an eigensystem, deriving frequency ranks.
    pub fn new(ids: Vec<usize>, modes: EigenModes) -> Self {
        let order = modes.rank_by_frequency();
        let mut rank = vec![0; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        Self { ids, modes, rank }
    }

    fn embed(&self, l: usize) -> CVector {
        let mut v = CVector::zeros(16);
        for (i, &k) in self.ids.iter().enumerate() {
            v[k] = self.modes.right[(i, l)];
        }
        v
    }

    fn coefficients(&self, v: &CVector) -> Vec<Complex64> {
        let x = CVector::from_fn(self.ids.len(), |i, _| v[self.ids[i]]);
        (&self.modes.left * x).iter().copied().collect()
    }
}

/// Precomputed generator, block eigensystems and dipole operators for one
/// dimer realization.
pub struct ResponseModel {
    pub params: DimerParams,
    pub basis: ExcitonBasis,
    pub bath: BathSpec,
    pub dipoles: DipoleConfig,
    pub generator: Generator,
    raise: [Op4; 2],
    lower: [Op4; 2],
    blocks: HashMap<(usize, usize), ModeSet>,
    propagator: Propagator,
}

fn ground_state() -> CVector {
    let mut rho = Op4::zeros();
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    vectorize(&rho)
}

impl ResponseModel {
    pub fn new(params: &DimerParams, bath: &BathSpec, dipoles: &DipoleConfig, secular: bool) -> Result<Self> {
        let basis = exciton_basis(params);
        let generator = build_generator(&basis, bath, secular)?;
        Self::from_generator(params, bath, dipoles, generator)
    }

    /// Builds the model around an existing generator (same basis).
    pub fn from_generator(params: &DimerParams, bath: &BathSpec, dipoles: &DipoleConfig, generator: Generator) -> Result<Self> {
        let basis = generator.basis;
        let s = site_raising();
        let raise = s.map(|m| basis.to_exciton(&m).map(|x| Complex64::new(x, 0.0)));
        let lower = raise.map(|m| m.adjoint());
        let mut blocks = HashMap::new();
        for key in [(0, 0), (0, 1), (1, 0), (1, 1), (2, 1)] {
            let ids = block_indices(key.0, key.1);
            let modes = eigendecompose(&submatrix(&generator.matrix, &ids))?;
            blocks.insert(key, ModeSet::new(ids, modes));
        }
        let propagator = Propagator::new(&generator);
        Ok(Self { params: *params, basis, bath: *bath, dipoles: dipoles.for_params(params), generator, raise, lower, blocks, propagator })
    }

    /// Eigensystem of one generator block, e.g. `(1, 1)` for t₂.
    pub fn block_modes(&self, ket: usize, bra: usize) -> Option<&EigenModes> {
        self.blocks.get(&(ket, bra)).map(|b| &b.modes)
    }

    /// Mode set of one generator block, e.g. `(2, 1)` for ESA t₃.
    pub fn mode_set(&self, ket: usize, bra: usize) -> Option<&ModeSet> {
        self.blocks.get(&(ket, bra))
    }

    /// Generator blocks visited during t₁, t₂ and t₃ by a pathway family.
    pub fn chain_blocks(signal: Signal, family: Family) -> [(usize, usize); 3] {
        chain(signal, family).blocks
    }

    /// The t₂ (single-excitation) eigensystem.
    pub fn t2_modes(&self) -> &EigenModes {
        &self.blocks[&(1, 1)].modes
    }

    fn superop(&self, side: Side, dir: Dir, site: usize) -> CMatrix {
        let op = match dir {
            Dir::Raise => &self.raise[site],
            Dir::Lower => &self.lower[site],
        };
        match side {
            Side::Left => left(op),
            Side::Right => right(op),
        }
    }

    fn detection(&self, site: usize) -> RowDVector<Complex64> {
        trace_row(&self.lower[site])
    }

    /// Mode expansion of one family using the generator's block eigensystems.
    pub fn family_terms(&self, signal: Signal, family: Family) -> Vec<ModeTerm> {
        let ch = chain(signal, family);
        let sets = ch.blocks.map(|k| &self.blocks[&k]);
        self.family_terms_with(signal, family, sets)
    }

    /// Mode expansion of one family over caller-supplied mode sets for the
    /// t₁, t₂ and t₃ blocks. Each set must span the block the family visits.
    ///
    /// The amplitude of term (k, l, m) is the orientational average of
    /// α_k β_kl γ_lm τ_m: α expands the first-order density matrix over the
    /// t₁ modes, β and γ expand the action of the second and third
    /// interactions on the t₁ and t₂ modes, and τ_m = tr[μ⁻ r_m].
    pub fn family_terms_with(&self, signal: Signal, family: Family, sets: [&ModeSet; 3]) -> Vec<ModeTerm> {
        let ch = chain(signal, family);
        let rho = ground_state();
        let (n1, n2, n3) = (sets[0].modes.len(), sets[1].modes.len(), sets[2].modes.len());
        let r1: Vec<CVector> = (0..n1).map(|k| sets[0].embed(k)).collect();
        let r2: Vec<CVector> = (0..n2).map(|l| sets[1].embed(l)).collect();
        let r3: Vec<CVector> = (0..n3).map(|m| sets[2].embed(m)).collect();
        let mut alpha = Vec::with_capacity(2);
        let mut beta = Vec::with_capacity(2);
        let mut gamma = Vec::with_capacity(2);
        let mut tau = Vec::with_capacity(2);
        for s in 0..2 {
            let op1 = self.superop(ch.ops[0].0, ch.ops[0].1, s);
            alpha.push(sets[0].coefficients(&(op1 * &rho)));
            let op2 = self.superop(ch.ops[1].0, ch.ops[1].1, s);
            beta.push(r1.iter().map(|r| sets[1].coefficients(&(&op2 * r))).collect::<Vec<_>>());
            let op3 = self.superop(ch.ops[2].0, ch.ops[2].1, s);
            gamma.push(r2.iter().map(|r| sets[2].coefficients(&(&op3 * r))).collect::<Vec<_>>());
            let det = self.detection(s);
            tau.push(r3.iter().map(|r| (&det * r)[0]).collect::<Vec<_>>());
        }
        let patterns: Vec<_> = self.dipoles.patterns().into_iter().filter(|(_, w)| *w != 0.0).collect();
        let mut out = Vec::new();
        for k in 0..n1 {
            for l in 0..n2 {
                for m in 0..n3 {
                    let mut amp = Complex64::default();
                    for ([pa, pb, pc, pd], w) in &patterns {
                        amp += alpha[*pa][k] * beta[*pb][k][l] * gamma[*pc][l][m] * tau[*pd][m] * *w;
                    }
                    out.push(ModeTerm {
                        family,
                        modes: [k, l, m],
                        peak: (sets[0].rank[k], sets[2].rank[m]),
                        chi1: sets[0].modes.values[k],
                        upsilon: sets[1].modes.values[l],
                        chi3: sets[2].modes.values[m],
                        amplitude: amp,
                    });
                }
            }
        }
        out
    }

    /// Mode expansion of all three families of a signal class.
    pub fn terms(&self, signal: Signal) -> ResponseTerms {
        let terms = Family::ALL.iter().flat_map(|&f| self.family_terms(signal, f)).collect();
        ResponseTerms { signal, terms }
    }

    /// Time-domain response by explicit propagation of the density matrix.
    pub fn time_response_direct(&self, signal: Signal, family: Family, t1: f64, t2: f64, t3: f64) -> Result<Complex64> {
        for t in [t1, t2, t3] {
            if !(t >= 0.0) {
                return Err(Error::InvalidParameter(format!("response times must be >= 0, got {t}")));
            }
        }
        let ch = chain(signal, family);
        let rho = ground_state();
        let mut total = Complex64::default();
        for ([a, b, c, d], w) in self.dipoles.patterns() {
            if w == 0.0 {
                continue;
            }
            let v = self.superop(ch.ops[0].0, ch.ops[0].1, a) * &rho;
            let v = self.propagator.apply(&v, t1);
            let v = self.superop(ch.ops[1].0, ch.ops[1].1, b) * v;
            let v = self.propagator.apply(&v, t2);
            let v = self.superop(ch.ops[2].0, ch.ops[2].1, c) * v;
            let v = self.propagator.apply(&v, t3);
            total += (self.detection(d) * v)[0] * w;
        }
        Ok(total)
    }

    /// Time-domain response for one fixed field polarization ê (all four
    /// interactions polarized along ê), without orientational averaging.
    pub fn time_response_polarized(
        &self,
        signal: Signal,
        family: Family,
        e: [f64; 3],
        t1: f64,
        t2: f64,
        t3: f64,
    ) -> Result<Complex64> {
        let (up, down) = dipole_operators(&self.dipoles, &self.basis, e)?;
        let ch = chain(signal, family);
        let sup = |(side, dir): (Side, Dir)| {
            let op = if dir == Dir::Raise { &up } else { &down };
            if side == Side::Left {
                left(op)
            } else {
                right(op)
            }
        };
        let v = sup(ch.ops[0]) * ground_state();
        let v = self.propagator.apply(&v, t1);
        let v = sup(ch.ops[1]) * v;
        let v = self.propagator.apply(&v, t2);
        let v = sup(ch.ops[2]) * v;
        let v = self.propagator.apply(&v, t3);
        Ok((trace_row(&down) * v)[0])
    }

    /// Spectrum of one family at a single (ω₁, t₂, ω₃) point via resolvent
    /// solves on the generator blocks (no eigendecomposition in t₁, t₃).
    /// `t2_filter` optionally keeps only the t₂ modes it accepts.
    pub fn spectrum_direct(
        &self,
        signal: Signal,
        family: Family,
        w1: f64,
        t2: f64,
        w3: f64,
        t2_filter: Option<&dyn Fn(Complex64) -> bool>,
    ) -> Result<Complex64> {
        let ch = chain(signal, family);
        let rho = ground_state();
        let z1 = match signal {
            Signal::Rephasing => I * (KAPPA * w1),
            Signal::NonRephasing => -I * (KAPPA * w1),
        };
        let z3 = -I * (KAPPA * w3);
        let res1 = resolvent(&self.generator.matrix, ch.blocks[0], z1)?;
        let res3 = resolvent(&self.generator.matrix, ch.blocks[2], z3)?;
        let u2: CMatrix = match t2_filter {
            None => self.propagator.matrix(t2),
            Some(keep) => {
                let blk = &self.blocks[&ch.blocks[1]];
                let f = blk.modes.function(|v| if keep(v) { (v * t2).exp() } else { Complex64::default() });
                let mut full = CMatrix::zeros(16, 16);
                for (i, &r) in blk.ids.iter().enumerate() {
                    for (j, &c) in blk.ids.iter().enumerate() {
                        full[(r, c)] = f[(i, j)];
                    }
                }
                full
            }
        };
        let mut total = Complex64::default();
        for ([a, b, c, d], w) in self.dipoles.patterns() {
            if w == 0.0 {
                continue;
            }
            let v = self.superop(ch.ops[0].0, ch.ops[0].1, a) * &rho;
            let v = &res1 * v;
            let v = self.superop(ch.ops[1].0, ch.ops[1].1, b) * v;
            let v = &u2 * v;
            let v = self.superop(ch.ops[2].0, ch.ops[2].1, c) * v;
            let v = &res3 * v;
            total += (self.detection(d) * v)[0] * w;
        }
        Ok(total)
    }

    /// Linear-response terms: tr[μ⁻ e^{Lt} μ⁺ρ] = Σ_k c_k e^{χ_k t}.
    pub fn absorption_terms(&self) -> Vec<(Complex64, Complex64)> {
        let blk = &self.blocks[&(1, 0)];
        let rho = ground_state();
        let mut c = vec![Complex64::default(); blk.modes.len()];
        let det_rows: Vec<CVector> = (0..blk.modes.len()).map(|k| blk.embed(k)).collect();
        for a in 0..2 {
            for d in 0..2 {
                let w = self.dipoles.rotational_average2(a, d);
                if w == 0.0 {
                    continue;
                }
                let coef = blk.coefficients(&(left(&self.raise[a]) * &rho));
                let det = self.detection(d);
                for (k, r) in det_rows.iter().enumerate() {
                    c[k] += coef[k] * (&det * r)[0] * w;
                }
            }
        }
        blk.modes.values.iter().zip(c).map(|(&v, c)| (v, c)).collect()
    }

    /// Absorption A(ω) = Re ∫₀^T dt e^{iωt} tr[μ⁻ u(t) μ⁺ρ_eq] on an ω grid
    /// (cm⁻¹). `window = None` integrates to infinity.
    pub fn absorption(&self, omega: &[f64], window: Option<f64>) -> Vec<f64> {
        let terms = self.absorption_terms();
        omega
            .iter()
            .map(|&w| {
                terms
                    .iter()
                    .map(|&(chi, c)| {
                        let z = I * (KAPPA * w) + chi;
                        let f = match window {
                            None => -1.0 / z,
                            Some(t) => ((z * t).exp() - 1.0) / z,
                        };
                        c * f
                    })
                    .sum::<Complex64>()
                    .re
            })
            .collect()
    }
}

fn resolvent(l: &CMatrix, block: (usize, usize), z: Complex64) -> Result<CMatrix> {
    let ids = block_indices(block.0, block.1);
    let b = submatrix(l, &ids);
    let n = ids.len();
    let a = CMatrix::identity(n, n) * z - b;
    let inv = a.try_inverse().ok_or_else(|| Error::Numerical("singular resolvent".into()))?;
    let mut full = CMatrix::zeros(16, 16);
    for (i, &r) in ids.iter().enumerate() {
        for (j, &c) in ids.iter().enumerate() {
            full[(r, c)] = inv[(i, j)];
        }
    }
    Ok(full)
}

/// Uniform time axis starting at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    /// Step in fs.
    pub step: f64,
    /// Number of samples.
    pub len: usize,
}

impl TimeAxis {
    pub fn new(step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || len < 2 {
            return Err(Error::Grid(format!("time axis needs step > 0 and >= 2 samples (step {step}, len {len})")));
        }
        Ok(Self { step, len })
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| i as f64 * self.step).collect()
    }

    pub fn span(&self) -> f64 {
        (self.len - 1) as f64 * self.step
    }
}

/// Complex 2D spectra S(t₂; ω₁, ω₃) for every family and the combined signal.
#[derive(Debug, Clone)]
pub struct ResponseGrid {
    pub signal: Signal,
    pub t2: Vec<f64>,
    pub w1: Vec<f64>,
    pub w3: Vec<f64>,
    /// Indexed `[family][t₂, ω₁, ω₃]` in GSB, SE, ESA order.
    pub families: [Array3<Complex64>; 3],
    /// S = GSB + SE − ESA.
    pub total: Array3<Complex64>,
}

/// Largest rotating-frame offset that must be resolved on the t₁/t₃ grids.
pub fn max_optical_offset(basis: &ExcitonBasis, carrier: f64) -> f64 {
    let e = basis.energies;
    [e[1], e[2], e[3] - e[1], e[3] - e[2]].iter().map(|x| (x - carrier).abs()).fold(0.0, f64::max)
}

/// Checks the Nyquist condition for rotating-frame sampling.
pub fn check_nyquist(basis: &ExcitonBasis, step: f64, carrier: f64) -> Result<()> {
    let need = max_optical_offset(basis, carrier);
    let nyq = nyquist_wavenumber(step);
    if need >= nyq {
        return Err(Error::Grid(format!(
            "time step {step} fs resolves offsets up to {nyq:.1} cm⁻¹ but transitions lie {need:.1} cm⁻¹ from the carrier {carrier} cm⁻¹"
        )));
    }
    Ok(())
}

/// Trapezoidal half-line DFT matrix `F[j, n] = w_n·dt·e^{sign·i(ω_j−ω₀)t_n}`.
fn dft_matrix(axis: &TimeAxis, omega: &[f64], carrier: f64, sign: f64) -> Array2<Complex64> {
    let t = axis.values();
    Array2::from_shape_fn((omega.len(), axis.len), |(j, n)| {
        let wgt = if n == 0 { 0.5 } else { 1.0 } * axis.step;
        (I * (sign * KAPPA * (omega[j] - carrier) * t[n])).exp() * wgt
    })
}

/// 2D spectra by discrete half-line transforms of the sampled response.
///
/// Signals are sampled in a frame rotating at `carrier` (cm⁻¹), which the
/// output ω axes include again. Sampling below Nyquist is a hard error.
#[allow(clippy::too_many_arguments)]
pub fn spectra_2d(
    model: &ResponseModel,
    signal: Signal,
    t1: &TimeAxis,
    t2: &[f64],
    t3: &TimeAxis,
    w1: &[f64],
    w3: &[f64],
    carrier: f64,
) -> Result<ResponseGrid> {
    check_nyquist(&model.basis, t1.step, carrier)?;
    check_nyquist(&model.basis, t3.step, carrier)?;
    if t2.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::Grid("t2 values must be >= 0".into()));
    }
    let terms = model.terms(signal);
    // Rotating-frame factors remove the carrier from both coherence periods.
    let (s1, k1) = match signal {
        Signal::Rephasing => (-1.0, -1.0),
        Signal::NonRephasing => (1.0, 1.0),
    };
    let f1 = dft_matrix(t1, w1, carrier, k1);
    let f3 = dft_matrix(t3, w3, carrier, 1.0);
    let tv1 = t1.values();
    let tv3 = t3.values();
    let mut families: [Array3<Complex64>; 3] = std::array::from_fn(|_| Array3::zeros((t2.len(), w1.len(), w3.len())));
    for (fi, &family) in Family::ALL.iter().enumerate() {
        let fam: Vec<&ModeTerm> = terms.family(family).collect();
        for (it2, &tt2) in t2.iter().enumerate() {
            let samples = Array2::from_shape_fn((t1.len, t3.len), |(n, m)| {
                let (a, b) = (tv1[n], tv3[m]);
                let frame = (I * (KAPPA * carrier * (s1 * a + b))).exp();
                fam.iter().map(|t| t.time_value(a, tt2, b)).sum::<Complex64>() * frame
            });
            let spec = f1.dot(&samples).dot(&f3.t());
            families[fi].index_axis_mut(ndarray::Axis(0), it2).assign(&spec);
        }
    }
    let total = &families[0] + &families[1] - &families[2];
    Ok(ResponseGrid { signal, t2: t2.to_vec(), w1: w1.to_vec(), w3: w3.to_vec(), families, total })
}

/// 2D spectra by exact (infinite-window) half-line transforms of the mode
/// expansion.
pub fn spectra_2d_exact(model: &ResponseModel, signal: Signal, t2: &[f64], w1: &[f64], w3: &[f64]) -> ResponseGrid {
    let terms = model.terms(signal);
    let mut families: [Array3<Complex64>; 3] = std::array::from_fn(|_| Array3::zeros((t2.len(), w1.len(), w3.len())));
    for (fi, &family) in Family::ALL.iter().enumerate() {
        let fam: Vec<&ModeTerm> = terms.family(family).collect();
        let vals: Vec<Complex64> = (0..t2.len() * w1.len() * w3.len())
            .into_par_iter()
            .map(|flat| {
                let k = flat % w3.len();
                let j = (flat / w3.len()) % w1.len();
                let i = flat / (w3.len() * w1.len());
                fam.iter().map(|t| t.spectral_value(signal, w1[j], t2[i], w3[k])).sum()
            })
            .collect();
        families[fi] = Array3::from_shape_vec((t2.len(), w1.len(), w3.len()), vals).expect("shape");
    }
    let total = &families[0] + &families[1] - &families[2];
    ResponseGrid { signal, t2: t2.to_vec(), w1: w1.to_vec(), w3: w3.to_vec(), families, total }
}

/// Uniform frequency axis from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    Array1::linspace(start, stop, n).to_vec()
}
