//! Closed-form coherence (X) and single-excitation (Y) superoperators,
//! their eigensystems, and the Feynman-pathway decomposition of the
//! oscillatory third-order signal.
//!
//! X acts on the optical coherences {|g⟩⟨ε₁|, |g⟩⟨ε₂|}; its eigenvectors x̂_k
//! (eigenvalues χ_k) describe t₁, and their complex conjugates x̂_m* (χ_m*)
//! describe t₃ for stimulated emission. Y acts on {ρ₁₁, ρ₂₂, ρ₁₂, ρ₂₁} with
//! eigenvectors ŷ_l (υ_l) for t₂. Excited-state absorption reuses the same
//! machinery with the t₃ space {|f⟩⟨ε₁|, |f⟩⟨ε₂|}, whose generator block has
//! no closed form and is taken from the full generator.
//!
//! Mode order follows the usual convention: χ₁ is the low-energy coherence;
//! υ₁, υ₂ are the oscillatory modes with positive and negative frequency,
//! followed by the decaying population mode υ₃ and the stationary υ₄.

use std::fmt::Write as _;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;

use crate::bath::BathSpec;
use crate::eigen::{eigendecompose, EigenModes};
use crate::error::{Error, Result};
use crate::liouville::{block_indices, idx, secular_keeps, submatrix, Generator};
use crate::model::ExcitonBasis;
use crate::response::{Family, ModeSet, ModeTerm, ResponseModel, Signal};
use crate::units::{rate_to_wavenumber, KAPPA};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default oscillatory cutoff: 1 cm⁻¹ expressed in rad/fs.
pub const DEFAULT_CUTOFF: f64 = KAPPA;

/// Liouville indices of the X space, {|g⟩⟨ε₁|, |g⟩⟨ε₂|}.
pub fn x_indices() -> [usize; 2] {
    [idx(0, 1), idx(0, 2)]
}

/// Liouville indices of the conjugate X space, {|ε₁⟩⟨g|, |ε₂⟩⟨g|}.
pub fn x_conj_indices() -> [usize; 2] {
    [idx(1, 0), idx(2, 0)]
}

/// Liouville indices of the Y space, {ρ₁₁, ρ₂₂, ρ₁₂, ρ₂₁}.
pub fn y_indices() -> [usize; 4] {
    [idx(1, 1), idx(2, 2), idx(1, 2), idx(2, 1)]
}

/// Closed-form optical-coherence superoperator with its eigensystem.
#[derive(Debug, Clone)]
pub struct XSuperoperator {
    /// Matrix in rad/fs.
    pub matrix: Matrix2<Complex64>,
    /// Eigenmodes ordered so that Im χ₁ < Im χ₂.
    pub modes: EigenModes,
}

/// Closed-form single-excitation superoperator with its eigensystem.
#[derive(Debug, Clone)]
pub struct YSuperoperator {
    /// Matrix in rad/fs.
    pub matrix: Matrix4<Complex64>,
    /// Eigenmodes in the order υ₁ (Im > 0), υ₂ (Im < 0), then the
    /// non-oscillatory modes by decreasing decay rate.
    pub modes: EigenModes,
    /// Oscillatory flags at the cutoff used to order the modes.
    pub oscillatory: Vec<bool>,
}

struct Rates {
    c0: f64,
    cp: f64,
    cm: f64,
    e: f64,
    s2: f64,
    s4: f64,
    c2: f64,
}

fn rates(basis: &ExcitonBasis, bath: &BathSpec) -> Rates {
    let de = basis.splitting();
    let (sn, cs) = (basis.sin2theta, basis.cos2theta);
    Rates {
        c0: bath.spectral_function_cm(0.0),
        cp: bath.spectral_function_cm(de),
        cm: bath.spectral_function_cm(-de),
        e: 1.0 - bath.correlation(),
        s2: sn * sn,
        s4: 2.0 * sn * cs,
        c2: cs * cs,
    }
}

fn to_dmatrix<const N: usize>(m: &nalgebra::SMatrix<Complex64, N, N>) -> DMatrix<Complex64> {
    DMatrix::from_fn(N, N, |i, j| m[(i, j)])
}

/// Reorders an eigensystem so that mode `order[i]` becomes mode `i`.
pub fn reorder(modes: &EigenModes, order: &[usize]) -> EigenModes {
    let n = modes.len();
    EigenModes {
        values: order.iter().map(|&i| modes.values[i]).collect(),
        right: DMatrix::from_fn(n, n, |r, c| modes.right[(r, order[c])]),
        left: DMatrix::from_fn(n, n, |r, c| modes.left[(order[r], c)]),
        condition: modes.condition,
        min_separation: modes.min_separation,
    }
}

/// Complex conjugate eigensystem (eigenvalues χ*, vectors x̂*).
pub fn conjugate(modes: &EigenModes) -> EigenModes {
    EigenModes {
        values: modes.values.iter().map(|v| v.conj()).collect(),
        right: modes.right.map(|z| z.conj()),
        left: modes.left.map(|z| z.conj()),
        condition: modes.condition,
        min_separation: modes.min_separation,
    }
}

/// Mode order for a single-excitation eigensystem: oscillatory positive
/// frequency, oscillatory negative frequency, then decaying modes from the
/// fastest to the stationary one.
pub fn y_order(values: &[Complex64], cutoff: f64) -> Vec<usize> {
    let class = |v: &Complex64| {
        if v.im >= cutoff {
            0
        } else if v.im <= -cutoff {
            1
        } else {
            2
        }
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (values[a], values[b]);
        class(&x).cmp(&class(&y)).then(x.im.abs().total_cmp(&y.im.abs())).then(x.re.total_cmp(&y.re))
    });
    order
}

/// Builds X from the closed-form expressions (rad/fs).
pub fn build_x(basis: &ExcitonBasis, bath: &BathSpec, secular: bool) -> Result<XSuperoperator> {
    bath.validate()?;
    let r = rates(basis, bath);
    let (e1, e2) = (basis.eps1(), basis.eps2());
    let mut m = Matrix2::<Complex64>::zeros();
    m[(0, 0)] = Complex64::new(-0.25 * r.c0 * (2.0 - r.e * r.s2) - 0.25 * r.cm * r.e * r.s2, e1);
    m[(1, 1)] = Complex64::new(-0.25 * r.c0 * (2.0 - r.e * r.s2) - 0.25 * r.cp * r.e * r.s2, e2);
    m[(0, 1)] = Complex64::from(0.125 * (r.c0 - r.cp) * r.e * r.s4);
    m[(1, 0)] = Complex64::from(-0.125 * (r.c0 - r.cm) * r.e * r.s4);
    let mut matrix = m * Complex64::from(KAPPA);
    if secular {
        mask(&mut matrix, &x_indices());
    }
    let modes = eigendecompose(&to_dmatrix(&matrix))?;
    let mut order: Vec<usize> = (0..2).collect();
    order.sort_by(|&a, &b| modes.values[a].im.total_cmp(&modes.values[b].im));
    Ok(XSuperoperator { matrix, modes: reorder(&modes, &order) })
}

/// Builds Y from the closed-form expressions (rad/fs). Modes are ordered
/// with oscillatory classification at `cutoff` (rad/fs).
pub fn build_y(basis: &ExcitonBasis, bath: &BathSpec, secular: bool, cutoff: f64) -> Result<YSuperoperator> {
    bath.validate()?;
    let r = rates(basis, bath);
    let de = basis.splitting();
    let sum = r.cp + r.cm;
    #[rustfmt::skip]
    let dis = Matrix4::new(
        -2.0 * r.cm * r.s2, 2.0 * r.cp * r.s2, r.c0 * r.s4, r.c0 * r.s4,
        2.0 * r.cm * r.s2, -2.0 * r.cp * r.s2, -r.c0 * r.s4, -r.c0 * r.s4,
        r.cm * r.s4, -r.cp * r.s4, -sum * r.s2 - 4.0 * r.c0 * r.c2, sum * r.s2,
        r.cm * r.s4, -r.cp * r.s4, sum * r.s2, -sum * r.s2 - 4.0 * r.c0 * r.c2,
    ) * (0.25 * r.e);
    let mut m = dis.map(Complex64::from);
    m[(2, 2)] += I * de;
    m[(3, 3)] -= I * de;
    let mut matrix = m * Complex64::from(KAPPA);
    if secular {
        mask(&mut matrix, &y_indices());
    }
    let modes = eigendecompose(&to_dmatrix(&matrix))?;
    let order = y_order(&modes.values, cutoff);
    let modes = reorder(&modes, &order);
    let oscillatory = modes.oscillatory(cutoff);
    Ok(YSuperoperator { matrix, modes, oscillatory })
}

fn mask<const N: usize>(m: &mut nalgebra::SMatrix<Complex64, N, N>, ids: &[usize; N]) {
    for (r, &p) in ids.iter().enumerate() {
        for (c, &q) in ids.iter().enumerate() {
            if !secular_keeps(p / 4, p % 4, q / 4, q % 4) {
                m[(r, c)] = Complex64::default();
            }
        }
    }
}

/// Element-wise comparison of the closed forms with generator sub-blocks.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    /// max |X − L_X| / max |L_X|.
    pub x_error: f64,
    /// max |Y − L_Y| / max |L_Y|.
    pub y_error: f64,
    /// Largest element differences as (space, row, column, closed form, generator).
    pub worst: Vec<(&'static str, usize, usize, Complex64, Complex64)>,
}

impl ConsistencyReport {
    pub fn max_error(&self) -> f64 {
        self.x_error.max(self.y_error)
    }
}

fn compare(name: &'static str, closed: &DMatrix<Complex64>, gen: &DMatrix<Complex64>) -> (f64, (&'static str, usize, usize, Complex64, Complex64)) {
    let scale = gen.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut worst = (name, 0, 0, closed[(0, 0)], gen[(0, 0)]);
    let mut err = 0.0;
    for i in 0..closed.nrows() {
        for j in 0..closed.ncols() {
            let d = (closed[(i, j)] - gen[(i, j)]).norm() / scale;
            if d > err {
                err = d;
                worst = (name, i, j, closed[(i, j)], gen[(i, j)]);
            }
        }
    }
    (err, worst)
}

/// Compares X and Y with the matching sub-blocks of the full generator and
/// fails when the relative mismatch exceeds `tol`.
pub fn consistency_check(x: &XSuperoperator, y: &YSuperoperator, gen: &Generator, tol: f64) -> Result<ConsistencyReport> {
    let lx = submatrix(&gen.matrix, &x_indices());
    let ly = submatrix(&gen.matrix, &y_indices());
    let (x_error, wx) = compare("X", &to_dmatrix(&x.matrix), &lx);
    let (y_error, wy) = compare("Y", &to_dmatrix(&y.matrix), &ly);
    let report = ConsistencyReport { x_error, y_error, worst: vec![wx, wy] };
    if report.max_error() > tol {
        let mut msg = format!("closed-form superoperators disagree with the generator (tolerance {tol:e})");
        for (n, i, j, a, b) in &report.worst {
            let _ = write!(msg, "; {n}[{i},{j}]: closed form {a:.6e}, generator {b:.6e}");
        }
        return Err(Error::Consistency(msg));
    }
    Ok(report)
}

/// Peak class of a pathway in the (ω₁, ω₃) plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakClass {
    Diagonal,
    Cross,
}

/// Sign of the beat frequency of a pathway.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeatSign {
    Positive,
    Negative,
    None,
}

/// One Feynman pathway (k, l, m) of a signal family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathwayAmplitude {
    pub signal: Signal,
    pub family: Family,
    /// t₁, t₂ and t₃ mode indices (0-based, in the module's mode order).
    pub indices: (usize, usize, usize),
    /// Rotationally averaged ⟨α_k β_kl γ_lm τ_m⟩.
    pub strength: Complex64,
    /// t₁ eigenvalue χ_k (rad/fs).
    pub chi1: Complex64,
    /// t₂ eigenvalue υ_l (rad/fs).
    pub upsilon: Complex64,
    /// t₃ eigenvalue (χ_m* for stimulated emission, rad/fs).
    pub chi3: Complex64,
    /// Frequency ranks of the t₁ and t₃ modes.
    pub peak: (usize, usize),
    pub oscillatory: bool,
}

impl PathwayAmplitude {
    fn from_term(signal: Signal, t: &ModeTerm, cutoff: f64) -> Self {
        Self {
            signal,
            family: t.family,
            indices: (t.modes[0], t.modes[1], t.modes[2]),
            strength: t.amplitude,
            chi1: t.chi1,
            upsilon: t.upsilon,
            chi3: t.chi3,
            peak: t.peak,
            oscillatory: t.upsilon.im.abs() >= cutoff,
        }
    }

    /// Lorentzian amplitude strength/((χ₁ − iω₁)(χ₃ + iω₃)) for rephasing and
    /// strength/((χ₁ + iω₁)(χ₃ + iω₃)) for non-rephasing (ω in cm⁻¹).
    pub fn lorentzian(&self, w1: f64, w3: f64) -> Complex64 {
        let z1 = match self.signal {
            Signal::Rephasing => self.chi1 - I * (KAPPA * w1),
            Signal::NonRephasing => self.chi1 + I * (KAPPA * w1),
        };
        self.strength / (z1 * (self.chi3 + I * (KAPPA * w3)))
    }

    /// Peak centre (ω₁, ω₃) in cm⁻¹.
    pub fn center(&self) -> (f64, f64) {
        (rate_to_wavenumber(self.chi1.im.abs()), rate_to_wavenumber(self.chi3.im.abs()))
    }

    /// Half-widths (−Re χ₁, −Re χ₃) in cm⁻¹.
    pub fn widths(&self) -> (f64, f64) {
        (rate_to_wavenumber(-self.chi1.re), rate_to_wavenumber(-self.chi3.re))
    }

    /// Beat frequency Im υ in cm⁻¹.
    pub fn beat(&self) -> f64 {
        rate_to_wavenumber(self.upsilon.im)
    }

    pub fn class(&self) -> PeakClass {
        if self.peak.0 == self.peak.1 {
            PeakClass::Diagonal
        } else {
            PeakClass::Cross
        }
    }

    pub fn beat_sign(&self) -> BeatSign {
        if !self.oscillatory {
            BeatSign::None
        } else if self.upsilon.im > 0.0 {
            BeatSign::Positive
        } else {
            BeatSign::Negative
        }
    }

    /// Peak label such as `R21` (1-based ω₁ then ω₃ rank).
    pub fn label(&self) -> String {
        format!("{}{}{}", self.signal.tag(), self.peak.0 + 1, self.peak.1 + 1)
    }

    /// Ladder of states visited, e.g. `g → x1 → y1 → x2* → g`.
    pub fn ladder(&self) -> String {
        let (k, l, m) = self.indices;
        let t1 = match self.signal {
            Signal::Rephasing => format!("x{}", k + 1),
            Signal::NonRephasing => format!("x{}*", k + 1),
        };
        let t3 = match self.family {
            Family::Esa => format!("f{}", m + 1),
            _ => format!("x{}*", m + 1),
        };
        let t2 = match self.family {
            Family::Gsb => "g".to_string(),
            _ => format!("y{}", l + 1),
        };
        format!("g → {t1} → {t2} → {t3} → g")
    }
}

/// Eigen-analysis and pathway decomposition for one dimer and bath.
#[derive(Debug, Clone)]
pub struct PathwayAnalysis {
    pub x: XSuperoperator,
    pub y: YSuperoperator,
    /// ESA t₃ modes on {|f⟩⟨ε₁|, |f⟩⟨ε₂|}, ordered by ascending |Im|.
    pub esa: EigenModes,
    pub consistency: ConsistencyReport,
    pub pathways: Vec<PathwayAmplitude>,
    pub cutoff: f64,
    /// Warnings: degenerate or near-cutoff modes.
    pub warnings: Vec<String>,
}

/// Decomposes the SE and ESA signals (rephasing and non-rephasing) into
/// Feynman pathways over the closed-form X and Y eigenbases.
pub fn pathway_decomposition(model: &ResponseModel, cutoff: f64) -> Result<PathwayAnalysis> {
    let secular = model.generator.secular;
    let x = build_x(&model.basis, &model.bath, secular)?;
    let y = build_y(&model.basis, &model.bath, secular, cutoff)?;
    let consistency = consistency_check(&x, &y, &model.generator, 1e-9)?;
    let mut warnings = Vec::new();
    if y.modes.is_degenerate() {
        warnings.push("single-excitation superoperator has degenerate eigenvalues; pathway strengths are not unique".into());
    }
    for v in &y.modes.values {
        let f = v.im.abs();
        if f > 0.9 * cutoff && f < 1.1 * cutoff {
            warnings.push(format!("t2 mode {:.3} cm-1 lies within 10% of the oscillatory cutoff", rate_to_wavenumber(v.im)));
        }
    }
    let esa_ids = block_indices(2, 1);
    let esa_raw = eigendecompose(&submatrix(&model.generator.matrix, &esa_ids))?;
    let esa = reorder(&esa_raw, &esa_raw.rank_by_frequency());

    let xs = ModeSet::new(x_indices().to_vec(), x.modes.clone());
    let xc = ModeSet::new(x_conj_indices().to_vec(), conjugate(&x.modes));
    let ys = ModeSet::new(y_indices().to_vec(), y.modes.clone());
    let fs = ModeSet::new(esa_ids, esa.clone());
    let mut pathways = Vec::new();
    for signal in [Signal::Rephasing, Signal::NonRephasing] {
        let t1 = match signal {
            Signal::Rephasing => &xs,
            Signal::NonRephasing => &xc,
        };
        for (family, t3) in [(Family::Se, &xc), (Family::Esa, &fs)] {
            for t in model.family_terms_with(signal, family, [t1, &ys, t3]) {
                pathways.push(PathwayAmplitude::from_term(signal, &t, cutoff));
            }
        }
    }
    Ok(PathwayAnalysis { x, y, esa, consistency, pathways, cutoff, warnings })
}

impl PathwayAnalysis {
    /// Pathways of one signal and family.
    pub fn select(&self, signal: Signal, family: Family) -> impl Iterator<Item = &PathwayAmplitude> {
        self.pathways.iter().filter(move |p| p.signal == signal && p.family == family)
    }

    /// Oscillatory pathways with |strength| above `rel` of the largest one.
    pub fn nonzero_oscillatory(&self, rel: f64) -> Vec<&PathwayAmplitude> {
        let max = self.pathways.iter().filter(|p| p.oscillatory).map(|p| p.strength.norm()).fold(0.0, f64::max);
        self.pathways.iter().filter(|p| p.oscillatory && p.strength.norm() > rel * max).collect()
    }

    /// Sum of Lorentzian amplitudes of the oscillatory pathways of one
    /// signal and family at (ω₁, ω₃) for t₂ = `t2`.
    pub fn oscillatory_spectrum(&self, signal: Signal, family: Family, w1: f64, t2: f64, w3: f64) -> Complex64 {
        self.select(signal, family).filter(|p| p.oscillatory).map(|p| p.lorentzian(w1, w3) * (p.upsilon * t2).exp()).sum()
    }

    /// Population fraction Σ|ŷ_l|² over {ρ₁₁, ρ₂₂} for oscillatory mode `l`.
    pub fn population_admixture(&self, l: usize) -> f64 {
        let r = &self.y.modes.right;
        r[(0, l)].norm_sqr() + r[(1, l)].norm_sqr()
    }

    /// Human-readable report.
    pub fn report_text(&self) -> String {
        let mut s = String::new();
        let cm = |z: Complex64| format!("({:+.2} {:+.2}i) cm-1", rate_to_wavenumber(z.re), rate_to_wavenumber(z.im));
        let _ = writeln!(s, "Optical coherence modes (X):");
        for k in 0..2 {
            let v = self.x.modes.right.column(k);
            let _ = writeln!(s, "  chi{} = {}  x{} = {}", k + 1, cm(self.x.modes.values[k]), k + 1, components(v.iter(), &["|g><e1|", "|g><e2|"]));
        }
        let _ = writeln!(s, "Single-excitation modes (Y):");
        for l in 0..4 {
            let v = self.y.modes.right.column(l);
            let tag = if self.y.oscillatory[l] { "oscillatory" } else { "non-oscillatory" };
            let _ = writeln!(
                s,
                "  upsilon{} = {}  [{tag}]  y{} = {}",
                l + 1,
                cm(self.y.modes.values[l]),
                l + 1,
                components(v.iter(), &["|e1><e1|", "|e2><e2|", "|e1><e2|", "|e2><e1|"])
            );
        }
        for l in 0..4 {
            if self.y.oscillatory[l] {
                let p = self.population_admixture(l);
                let dominant = if p > 1e-6 { "population-coherence mixing present" } else { "no population admixture" };
                let r = &self.y.modes.right;
                let (c12, c21) = (r[(2, l)].norm(), r[(3, l)].norm());
                let _ = writeln!(
                    s,
                    "  y{}: population weight {:.4}, coherence mixing |e2><e1|/|e1><e2| = {:.4} ({dominant})",
                    l + 1,
                    p.sqrt(),
                    c21.min(c12) / c21.max(c12).max(f64::MIN_POSITIVE)
                );
            }
        }
        let _ = writeln!(s, "Closed form vs generator: X {:.2e}, Y {:.2e} relative", self.consistency.x_error, self.consistency.y_error);
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let max = self.pathways.iter().map(|p| p.strength.norm()).fold(0.0, f64::max);
        let _ = writeln!(s, "Oscillatory pathways (strength relative to the largest pathway):");
        for p in self.pathways.iter().filter(|p| p.oscillatory) {
            let rel = p.strength.norm() / max;
            if rel < 1e-12 {
                continue;
            }
            let (c1, c3) = p.center();
            let (g1, g3) = p.widths();
            let _ = writeln!(
                s,
                "  {:<3} {:<3} {}  |A|={:.3e}  centre ({:.1}, {:.1})  widths ({:.2}, {:.2})  beat {:+.1} cm-1  {:?}/{:?}",
                p.family.name(),
                p.label(),
                p.ladder(),
                rel,
                c1,
                c3,
                g1,
                g3,
                p.beat(),
                p.class(),
                p.beat_sign()
            );
        }
        s
    }

    /// Tab-separated table of the X, Y and ESA eigenvalues (cm⁻¹).
    pub fn modes_table(&self) -> String {
        let mut s = String::from("space\tmode\tre_cm\tim_cm\toscillatory\n");
        let mut row = |space: &str, i: usize, v: Complex64, osc: bool| {
            let _ = writeln!(s, "{space}\t{}\t{:.6}\t{:.6}\t{}", i + 1, rate_to_wavenumber(v.re), rate_to_wavenumber(v.im), osc);
        };
        for (k, &v) in self.x.modes.values.iter().enumerate() {
            row("chi", k, v, false);
        }
        for (l, &v) in self.y.modes.values.iter().enumerate() {
            row("upsilon", l, v, self.y.oscillatory[l]);
        }
        for (m, &v) in self.esa.values.iter().enumerate() {
            row("chi_f", m, v, false);
        }
        s
    }

    /// Tab-separated table of all pathways.
    pub fn pathways_table(&self) -> String {
        let mut s = String::from(
            "signal\tfamily\tk\tl\tm\tpeak\tstrength_re\tstrength_im\tcenter1_cm\tcenter3_cm\twidth1_cm\twidth3_cm\tbeat_cm\tclass\tbeat_sign\n",
        );
        for p in &self.pathways {
            let (c1, c3) = p.center();
            let (g1, g3) = p.widths();
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.9e}\t{:.9e}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:?}\t{:?}",
                p.signal.tag(),
                p.family.name(),
                p.indices.0 + 1,
                p.indices.1 + 1,
                p.indices.2 + 1,
                p.label(),
                p.strength.re,
                p.strength.im,
                c1,
                c3,
                g1,
                g3,
                p.beat(),
                p.class(),
                p.beat_sign()
            );
        }
        s
    }
}

fn components<'a>(v: impl Iterator<Item = &'a Complex64>, names: &[&str]) -> String {
    v.zip(names)
        .filter(|(z, _)| z.norm() > 5e-4)
        .map(|(z, n)| format!("{:.3}e^({:+.2}i){n}", z.norm(), z.arg()))
        .collect::<Vec<_>>()
        .join(" + ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::build_generator;
    use crate::model::{exciton_basis, DimerParams};
    use crate::response::DipoleConfig;

    fn cm(z: Complex64) -> Complex64 {
        z / KAPPA
    }

    #[test]
    fn closed_forms_match_generator() {
        for params in [DimerParams::homodimer(), DimerParams::heterodimer()] {
            for xi in [1e-3, 1.0, 3.0, 1e3] {
                for secular in [false, true] {
                    let b = exciton_basis(&params);
                    let bath = BathSpec::default().with_xi_over_d(xi);
                    let g = build_generator(&b, &bath, secular).unwrap();
                    let x = build_x(&b, &bath, secular).unwrap();
                    let y = build_y(&b, &bath, secular, DEFAULT_CUTOFF).unwrap();
                    let r = consistency_check(&x, &y, &g, 1e-12).unwrap();
                    assert!(r.max_error() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn homodimer_x_is_diagonal() {
        let b = exciton_basis(&DimerParams::homodimer());
        let x = build_x(&b, &BathSpec::default(), false).unwrap();
        assert!(x.matrix[(0, 1)].norm() < 1e-18 && x.matrix[(1, 0)].norm() < 1e-18);
        assert!(x.modes.values[0].im < x.modes.values[1].im);
        assert!((x.modes.right[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn y_conserves_population() {
        let b = exciton_basis(&DimerParams::heterodimer());
        let y = build_y(&b, &BathSpec::default(), false, DEFAULT_CUTOFF).unwrap();
        for c in 0..4 {
            assert!((y.matrix[(0, c)] + y.matrix[(1, c)]).norm() < 1e-15);
        }
    }

    #[test]
    fn homodimer_y_eigenvalues() {
        let b = exciton_basis(&DimerParams::homodimer());
        let y = build_y(&b, &BathSpec::default(), false, DEFAULT_CUTOFF).unwrap();
        let v: Vec<Complex64> = y.modes.values.iter().map(|&z| cm(z)).collect();
        assert!((v[0] - Complex64::new(-53.0, 193.0)).norm() < 2.0, "{v:?}");
        assert!((v[1] - Complex64::new(-53.0, -193.0)).norm() < 2.0);
        assert!((v[2] - Complex64::new(-105.0, 0.0)).norm() < 2.0);
        assert!(v[3].norm() < 1e-9);
        let r = y.modes.right.column(0);
        assert!((r[2].norm() - 0.991).abs() < 0.01 && (r[3].norm() - 0.133).abs() < 0.01);
    }

    #[test]
    fn fully_correlated_single_excitation_is_undamped() {
        let b = exciton_basis(&DimerParams::homodimer());
        let bath = BathSpec::default().with_xi_over_d(1e3);
        let y = build_y(&b, &bath, false, DEFAULT_CUTOFF).unwrap();
        assert!(y.modes.values.iter().all(|v| cm(*v).re.abs() < 1.0));
    }

    /// Bath with the spectral-density shift tuned to the exciton splitting.
    fn analysis(params: DimerParams, xi: f64, secular: bool) -> PathwayAnalysis {
        let omega_s = exciton_basis(&params).splitting();
        let bath = BathSpec { omega_s, ..BathSpec::default() }.with_xi_over_d(xi);
        let m = ResponseModel::new(&params, &bath, &DipoleConfig::default(), secular).unwrap();
        pathway_decomposition(&m, DEFAULT_CUTOFF).unwrap()
    }

    #[test]
    fn sixteen_se_pathways_eight_oscillatory() {
        let a = analysis(DimerParams::heterodimer(), 1e-3, false);
        for signal in [Signal::Rephasing, Signal::NonRephasing] {
            let se: Vec<_> = a.select(signal, Family::Se).collect();
            assert_eq!(se.len(), 16);
            assert_eq!(se.iter().filter(|p| p.oscillatory).count(), 8);
        }
    }

    #[test]
    fn secular_homodimer_forbids_diagonal_rephasing_beats() {
        let a = analysis(DimerParams::homodimer(), 1e-3, true);
        let rel = 1e-12;
        let max = a.pathways.iter().map(|p| p.strength.norm()).fold(0.0, f64::max);
        let r111 = a.select(Signal::Rephasing, Family::Se).find(|p| p.indices == (0, 0, 0)).unwrap();
        assert!(r111.strength.norm() < rel * max);
        let live: Vec<_> = a
            .nonzero_oscillatory(rel)
            .into_iter()
            .filter(|p| p.signal == Signal::Rephasing)
            .collect();
        assert_eq!(live.len(), 4);
        assert!(live.iter().all(|p| p.class() == PeakClass::Cross));
        // Non-rephasing beats sit on the diagonal in secular mode.
        let nr: Vec<_> = a
            .nonzero_oscillatory(rel)
            .into_iter()
            .filter(|p| p.signal == Signal::NonRephasing)
            .collect();
        assert_eq!(nr.len(), 4);
        assert!(nr.iter().all(|p| p.class() == PeakClass::Diagonal));
    }

    #[test]
    fn nonsecular_homodimer_opens_diagonal_pathway() {
        let a = analysis(DimerParams::homodimer(), 1e-3, false);
        let se: Vec<_> = a.select(Signal::Rephasing, Family::Se).collect();
        let r111 = se.iter().find(|p| p.indices == (0, 0, 0)).unwrap();
        let r211 = se.iter().find(|p| p.indices == (1, 0, 0)).unwrap();
        // The x1 → y1 → x1* route exists only through the |e2><e1| admixture
        // of y1, so its strength relative to the allowed route tracks that
        // admixture.
        let ratio = r111.strength.norm() / r211.strength.norm();
        let r = a.y.modes.right.column(0);
        let mix = r[3].norm() / r[2].norm();
        assert!((ratio - mix).abs() < 1e-9, "{ratio} {mix}");
        assert!(r111.class() == PeakClass::Diagonal && r111.beat_sign() == BeatSign::Positive);
        assert_eq!(r111.ladder(), "g → x1 → y1 → x1* → g");
    }

    #[test]
    fn diagonal_strength_falls_with_correlation() {
        let mut last = f64::INFINITY;
        for xi in [1e-3, 1.0, 3.0, 1e3] {
            let a = analysis(DimerParams::homodimer(), xi, false);
            let s: f64 = a
                .select(Signal::Rephasing, Family::Se)
                .filter(|p| p.oscillatory && p.class() == PeakClass::Diagonal)
                .map(|p| p.strength.norm())
                .sum();
            assert!(s < last, "xi {xi}: {s} !< {last}");
            last = s;
        }
    }

    #[test]
    fn pathway_sum_matches_resolvent() {
        for params in [DimerParams::homodimer(), DimerParams::heterodimer()] {
            let bath = BathSpec::default();
            let m = ResponseModel::new(&params, &bath, &DipoleConfig::default(), false).unwrap();
            let a = pathway_decomposition(&m, DEFAULT_CUTOFF).unwrap();
            let keep = |v: Complex64| v.im.abs() >= DEFAULT_CUTOFF;
            for signal in [Signal::Rephasing, Signal::NonRephasing] {
                for family in [Family::Se, Family::Esa] {
                    for (w1, w3) in [(12400.0, 12600.0), (12360.0, 12360.0), (12700.0, 12500.0)] {
                        let p = a.oscillatory_spectrum(signal, family, w1, 50.0, w3);
                        let d = m.spectrum_direct(signal, family, w1, 50.0, w3, Some(&keep)).unwrap();
                        assert!((p - d).norm() < 1e-9 * d.norm(), "{signal:?} {family:?} {p} {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn esa_peak_sits_at_upper_exciton() {
        let a = analysis(DimerParams::homodimer(), 1e-3, false);
        let b = exciton_basis(&DimerParams::homodimer());
        let f = &a.esa.values;
        // |f><e1| oscillates at ε_f − ε₁ = ε₂.
        assert!(f.iter().any(|v| (rate_to_wavenumber(v.im.abs()) - b.eps2()).abs() < 10.0));
    }

    #[test]
    fn report_tables() {
        let a = analysis(DimerParams::heterodimer(), 1e-3, false);
        let t = a.modes_table();
        let row = t.lines().find(|l| l.starts_with("upsilon\t1\t")).unwrap();
        let f: Vec<f64> = row.split('\t').skip(2).take(2).map(|x| x.parse().unwrap()).collect();
        assert!((f[0] + 41.0).abs() < 2.0 && (f[1] - 280.0).abs() < 2.0);
        assert_eq!(a.pathways_table().lines().count(), 1 + a.pathways.len());
        assert!(a.report_text().contains("population-coherence mixing present"));
    }
}
