//! Oscillatory t₂ components and beating maps **S**(ω₁, ω₂, ω₃).
//!
//! The oscillatory part of the 2D signal is obtained by keeping only the t₂
//! eigenmodes with |Im υ| above a cutoff inside the SE and ESA pathways. Each
//! remaining term is a product of three exponentials, so the t₂ transform
//! ∫₀^T e^{(υ−iω₂)t₂}dt₂ is evaluated analytically; a discrete transform of
//! sampled t₂ slices is kept as a cross-check.

use ndarray::{Array2, Array3, ArrayView3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::disorder::shifted_f13;
use crate::error::{Error, Result};
use crate::model::ExcitonBasis;
use crate::response::{Family, ModeTerm, ResponseModel, Signal};
use crate::units::{rate_to_wavenumber, KAPPA};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default display exponent for beating maps.
pub const DISPLAY_EXPONENT: f64 = 0.1;

/// Oscillatory part of one signal class as a sum of mode terms.
///
/// Term amplitudes carry the family sign and any ensemble weight, so the
/// signal is simply Σ a·f₁(ω₁)·e^{υt₂}·f₃(ω₃), with f₁·f₃ averaged over a
/// Gaussian common shift of the optical frequencies when `shift_sigma > 0`.
#[derive(Debug, Clone)]
pub struct OscillatoryComponents {
    pub signal: Signal,
    pub terms: Vec<ModeTerm>,
    /// Exciton basis of the (mean) dimer, used for peak coordinates.
    pub basis: ExcitonBasis,
    /// Cutoff on |Im υ| in rad/fs.
    pub cutoff: f64,
    /// Modes whose frequency lies within 10% of the cutoff.
    pub warnings: Vec<String>,
    /// Standard deviation (cm⁻¹) of the common shift averaged over.
    pub shift_sigma: f64,
}

/// Keeps the oscillatory t₂ modes of the SE and ESA pathways.
pub fn oscillatory_component(model: &ResponseModel, signal: Signal, cutoff: f64) -> OscillatoryComponents {
    let mut warnings = Vec::new();
    for v in &model.t2_modes().values {
        let f = v.im.abs();
        if f > 0.9 * cutoff && f < 1.1 * cutoff {
            warnings.push(format!(
                "t2 mode ({:.3}, {:.3}) cm-1 lies within 10% of the oscillatory cutoff",
                rate_to_wavenumber(v.re),
                rate_to_wavenumber(v.im)
            ));
        }
    }
    let terms = [Family::Se, Family::Esa]
        .iter()
        .flat_map(|&f| model.family_terms(signal, f))
        .filter(|t| t.upsilon.im.abs() >= cutoff && t.amplitude != Complex64::default())
        .map(|mut t| {
            t.amplitude *= t.family.sign();
            t
        })
        .collect();
    OscillatoryComponents { signal, terms, basis: model.basis, cutoff, warnings, shift_sigma: 0.0 }
}

/// t₂ transform ∫₀^T e^{(υ−iω₂)t}dt for ω₂ in cm⁻¹; `None` means T = ∞.
pub fn t2_transform(upsilon: Complex64, w2: f64, window: Option<f64>) -> Complex64 {
    let z = upsilon - I * (KAPPA * w2);
    match window {
        None => -1.0 / z,
        Some(t) => ((z * t).exp() - 1.0) / z,
    }
}

impl OscillatoryComponents {
    /// Scales every amplitude by `w` (ensemble weights).
    pub fn scaled(mut self, w: f64) -> Self {
        for t in &mut self.terms {
            t.amplitude *= w;
        }
        self
    }

    /// Frequencies (cm⁻¹) of the retained t₂ modes, without repeats.
    pub fn beat_frequencies(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = Vec::new();
        for t in &self.terms {
            let v = t.upsilon / KAPPA;
            if !out.iter().any(|u| (u - v).norm() < 1e-9) {
                out.push(v);
            }
        }
        out
    }

    /// Dominant positive beat frequency Im υ₁ in cm⁻¹.
    pub fn main_beat(&self) -> f64 {
        self.terms.iter().map(|t| rate_to_wavenumber(t.upsilon.im)).fold(0.0, f64::max)
    }

    fn terms_for(&self, peak: Option<(usize, usize)>) -> impl Iterator<Item = &ModeTerm> {
        self.terms.iter().filter(move |t| peak.map_or(true, |p| t.peak == p))
    }

    /// f₁(ω₁)·f₃(ω₃) of a term, shift-averaged when required.
    fn f13(&self, t: &ModeTerm, w1: f64, w3: f64) -> Complex64 {
        if self.shift_sigma > 0.0 {
            shifted_f13(t, self.signal, w1, w3, self.shift_sigma)
        } else {
            t.f1(self.signal, w1) * t.f3(w3)
        }
    }

    /// Oscillatory spectrum S(ω₁, t₂, ω₃).
    pub fn value(&self, w1: f64, t2: f64, w3: f64) -> Complex64 {
        self.terms.iter().map(|t| t.amplitude * self.f13(t, w1, w3) * (t.upsilon * t2).exp()).sum()
    }

    /// Complex t₂ transform of the oscillatory spectrum, optionally
    /// restricted to the pathways of one peak label.
    pub fn transform(&self, w1: f64, w2: f64, w3: f64, window: Option<f64>, peak: Option<(usize, usize)>) -> Complex64 {
        self.terms_for(peak)
            .map(|t| t.amplitude * self.f13(t, w1, w3) * t2_transform(t.upsilon, w2, window))
            .sum()
    }

    /// Beating-map value |∫dt₂ S(ω₁,t₂,ω₃)e^{−iω₂t₂}| (unnormalized).
    pub fn map_value(&self, w1: f64, w2: f64, w3: f64, window: Option<f64>) -> f64 {
        self.transform(w1, w2, w3, window, None).norm()
    }

    /// Pathway-resolved peak amplitude: the magnitude of the sum of the terms
    /// labelled `peak`, evaluated at that peak's nominal position (ε_i, ε_j).
    pub fn peak_amplitude(&self, peak: (usize, usize), w2: f64, window: Option<f64>) -> f64 {
        let (a, b) = peak_position(&self.basis, peak);
        self.transform(a, w2, b, window, Some(peak)).norm()
    }

    /// Pathway-resolved amplitudes of the four peaks, normalized to their
    /// maximum, in the order (0,0), (0,1), (1,0), (1,1).
    pub fn peak_amplitudes(&self, w2: f64, window: Option<f64>) -> [f64; 4] {
        let raw = PEAKS.map(|p| self.peak_amplitude(p, w2, window));
        let max = raw.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            raw
        } else {
            raw.map(|x| x / max)
        }
    }
}

/// Peak labels (ω₁ rank, ω₃ rank) in display order 11, 12, 21, 22.
pub const PEAKS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Nominal peak coordinates (ε_i, ε_j) in cm⁻¹.
pub fn peak_position(basis: &ExcitonBasis, peak: (usize, usize)) -> (f64, f64) {
    (basis.energies[1 + peak.0], basis.energies[1 + peak.1])
}

/// Beating map on a (ω₁, ω₂, ω₃) grid, normalized to max = 1.
#[derive(Debug, Clone)]
pub struct BeatingMap {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w3: Vec<f64>,
    /// Values indexed `[ω₂, ω₁, ω₃]`, non-negative, max 1 (unless all zero).
    pub values: Array3<f64>,
    /// Maximum before normalization.
    pub norm: f64,
    /// Display exponent applied by renderers (the stored map is linear).
    pub exponent: f64,
}

impl BeatingMap {
    /// Slice at the ω₂ grid point nearest `w2`.
    pub fn slice(&self, w2: f64) -> (usize, Array2<f64>) {
        let i = nearest(&self.w2, w2);
        (i, self.values.index_axis(ndarray::Axis(0), i).to_owned())
    }
}

fn nearest(axis: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, &a) in axis.iter().enumerate() {
        if (a - x).abs() < (axis[best] - x).abs() {
            best = i;
        }
    }
    best
}

fn check_w2_coverage(w2: &[f64], splitting: f64) -> Result<()> {
    let lo = w2.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = w2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let need = 1.5 * splitting.abs();
    if w2.is_empty() || lo > -need || hi < need {
        return Err(Error::Grid(format!("omega2 grid [{lo}, {hi}] cm-1 must cover ±{need:.1} cm-1 (1.5 × exciton splitting)")));
    }
    Ok(())
}

fn normalize(values: Vec<f64>, shape: (usize, usize, usize)) -> (Array3<f64>, f64) {
    let norm = values.iter().copied().fold(0.0, f64::max);
    let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
    let arr = Array3::from_shape_vec(shape, values.into_iter().map(|v| v * scale).collect()).expect("shape");
    (arr, norm)
}

/// Analytic beating map of one or more (e.g. ensemble-weighted) component
/// sets on a grid. The ω₂ grid must cover ±1.5Δε of the mean dimer.
pub fn beating_map(comps: &[OscillatoryComponents], w1: &[f64], w2: &[f64], w3: &[f64], window: Option<f64>) -> Result<BeatingMap> {
    let first = comps.first().ok_or_else(|| Error::Grid("no components to map".into()))?;
    check_w2_coverage(w2, first.basis.splitting())?;
    let shape = (w2.len(), w1.len(), w3.len());
    let values: Vec<f64> = (0..shape.0 * shape.1 * shape.2)
        .into_par_iter()
        .map(|flat| {
            let k = flat % shape.2;
            let j = (flat / shape.2) % shape.1;
            let i = flat / (shape.2 * shape.1);
            comps.iter().map(|c| c.transform(w1[j], w2[i], w3[k], window, None)).sum::<Complex64>().norm()
        })
        .collect();
    let (values, norm) = normalize(values, shape);
    Ok(BeatingMap { w1: w1.to_vec(), w2: w2.to_vec(), w3: w3.to_vec(), values, norm, exponent: DISPLAY_EXPONENT })
}

/// Beating map by trapezoidal t₂ integration of sampled complex spectra
/// `samples[t₂, ω₁, ω₃]` on a uniform t₂ grid starting at zero.
pub fn beating_map_discrete(samples: ArrayView3<Complex64>, t2_step: f64, w2: &[f64]) -> Result<Array3<f64>> {
    let (n2, n1, n3) = samples.dim();
    if n2 < 2 || !(t2_step > 0.0) {
        return Err(Error::Grid("discrete beating map needs >= 2 uniform t2 samples".into()));
    }
    let kernel: Vec<Vec<Complex64>> = w2
        .iter()
        .map(|&w| {
            (0..n2)
                .map(|n| {
                    let wgt = if n == 0 || n == n2 - 1 { 0.5 } else { 1.0 } * t2_step;
                    (-I * (KAPPA * w * n as f64 * t2_step)).exp() * wgt
                })
                .collect()
        })
        .collect();
    let values: Vec<f64> = (0..w2.len() * n1 * n3)
        .into_par_iter()
        .map(|flat| {
            let k = flat % n3;
            let j = (flat / n3) % n1;
            let i = flat / (n3 * n1);
            (0..n2).map(|n| kernel[i][n] * samples[(n, j, k)]).sum::<Complex64>().norm()
        })
        .collect();
    Ok(Array3::from_shape_vec((w2.len(), n1, n3), values).expect("shape"))
}

/// Map trace at a fixed (ω₁, ω₃) over ω₂ (unnormalized).
pub fn peak_trace(comps: &[OscillatoryComponents], at: (f64, f64), w2: &[f64], window: Option<f64>) -> Vec<f64> {
    w2.iter()
        .map(|&w| comps.iter().map(|c| c.transform(at.0, w, at.1, window, None)).sum::<Complex64>().norm())
        .collect()
}

/// Map trace at the nominal position of a labelled peak.
pub fn labelled_peak_trace(comps: &OscillatoryComponents, peak: (usize, usize), w2: &[f64], window: Option<f64>) -> Vec<f64> {
    peak_trace(std::slice::from_ref(comps), peak_position(&comps.basis, peak), w2, window)
}

/// Result of the tail-overlap diagnostic for the low-energy diagonal peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapDiagnostic {
    /// Map value at (ε₁, ε₁).
    pub r11: f64,
    /// Map value at A = (2ε₂ − ε₁, ε₁).
    pub a: f64,
    /// Map value at B = (ε₁, 2ε₂ − ε₁).
    pub b: f64,
    /// r11 / (a + b).
    pub ratio: f64,
}

/// Compares the map at R11 with the points A and B obtained by reflecting
/// R11 about the cross-peaks R21 and R12. If R11 were only the overlap of
/// the cross-peak tails it would be no larger than the tail values at A and
/// B. Values are normalized to the largest map value at the four peak
/// positions over ω₂ = ±|w2|.
pub fn overlap_diagnostic(comps: &OscillatoryComponents, w2: f64, window: Option<f64>) -> OverlapDiagnostic {
    let b = &comps.basis;
    let (e1, e2) = (b.eps1(), b.eps2());
    let norm = PEAKS
        .iter()
        .flat_map(|&p| {
            let (x, y) = peak_position(b, p);
            [w2, -w2].map(|w| comps.map_value(x, w, y, window))
        })
        .fold(0.0, f64::max);
    let f = |x: f64, y: f64| comps.map_value(x, w2, y, window) / norm;
    let r11 = f(e1, e1);
    let a = f(2.0 * e2 - e1, e1);
    let bb = f(e1, 2.0 * e2 - e1);
    OverlapDiagnostic { r11, a, b: bb, ratio: r11 / (a + bb) }
}

/// Full width at half maximum of `f` along a line through `x0`, walking
/// outward in steps of `step` until the value drops below half of f(x0).
///
/// A side that rises before reaching half height, or that never drops within
/// `max_extent`, is treated as missing and the other side is mirrored.
/// Returns `None` if neither side reaches half height.
pub fn fwhm_line(f: impl Fn(f64) -> f64, x0: f64, step: f64, max_extent: f64) -> Option<f64> {
    let p = f(x0);
    let half = 0.5 * p;
    let side = |sgn: f64| {
        let mut d = 0.0;
        let mut prev = p;
        while d < max_extent {
            d += step;
            let v = f(x0 + sgn * d);
            if v <= half {
                return Some(d - step + step * (prev - half) / (prev - v));
            }
            if v > prev {
                return None;
            }
            prev = v;
        }
        None
    };
    match (side(-1.0), side(1.0)) {
        (None, None) => None,
        (Some(a), None) => Some(2.0 * a),
        (None, Some(b)) => Some(2.0 * b),
        (Some(a), Some(b)) => Some(a + b),
    }
}

/// FWHM of a labelled peak's pathway-resolved lineshape along ω₁ and ω₃
/// through its nominal position, at beat frequency `w2`.
pub fn peak_widths(comps: &OscillatoryComponents, peak: (usize, usize), w2: f64, window: Option<f64>) -> (Option<f64>, Option<f64>) {
    let (x, y) = peak_position(&comps.basis, peak);
    let g = |a: f64, b: f64| comps.transform(a, w2, b, window, Some(peak)).norm();
    (fwhm_line(|a| g(a, y), x, 0.5, 400.0), fwhm_line(|b| g(x, b), y, 0.5, 400.0))
}

/// Local maximum of `f` near `start` by compass search down to `tol`.
pub fn locate_max(f: impl Fn(f64, f64) -> f64, start: (f64, f64), initial_step: f64, tol: f64) -> (f64, f64) {
    let (mut x, mut y) = start;
    let mut best = f(x, y);
    let mut h = initial_step;
    while h > tol {
        let mut moved = false;
        for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let v = f(x + dx, y + dy);
            if v > best {
                best = v;
                x += dx;
                y += dy;
                moved = true;
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (x, y)
}

/// FWHM along the diagonal and antidiagonal through `center` (distances
/// measured along the lines, in cm⁻¹).
pub fn diagonal_widths(f: impl Fn(f64, f64) -> f64, center: (f64, f64), step: f64, max_extent: f64) -> (Option<f64>, Option<f64>) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (x, y) = center;
    (
        fwhm_line(|d| f(x + d * s, y + d * s), 0.0, step, max_extent),
        fwhm_line(|d| f(x + d * s, y - d * s), 0.0, step, max_extent),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;
    use crate::model::{exciton_basis, DimerParams};
    use crate::pathways::DEFAULT_CUTOFF;
    use crate::response::DipoleConfig;

    fn comps(params: DimerParams, xi: f64, secular: bool, signal: Signal) -> (ResponseModel, OscillatoryComponents) {
        let omega_s = exciton_basis(&params).splitting();
        let bath = BathSpec { omega_s, ..BathSpec::default() }.with_xi_over_d(xi);
        let m = ResponseModel::new(&params, &bath, &DipoleConfig::default(), secular).unwrap();
        let c = oscillatory_component(&m, signal, DEFAULT_CUTOFF);
        (m, c)
    }

    fn synthetic(amp: Complex64, v: f64, gamma: f64) -> OscillatoryComponents {
        let basis = exciton_basis(&DimerParams::homodimer());
        // Constant f₁·f₃ = 1 is not representable, so fix ω₁, ω₃ and divide out.
        let t = ModeTerm {
            family: Family::Se,
            modes: [0, 0, 0],
            peak: (0, 0),
            chi1: Complex64::new(-0.01, KAPPA * 12400.0),
            upsilon: Complex64::new(-gamma * KAPPA, v * KAPPA),
            chi3: Complex64::new(-0.01, -KAPPA * 12400.0),
            amplitude: amp,
        };
        OscillatoryComponents { signal: Signal::Rephasing, terms: vec![t], basis, cutoff: DEFAULT_CUTOFF, warnings: vec![], shift_sigma: 0.0 }
    }

    #[test]
    fn single_mode_gives_lorentzian() {
        let c = synthetic(Complex64::new(0.3, 0.4), 190.0, 50.0);
        let t = &c.terms[0];
        let f13 = (t.f1(Signal::Rephasing, 12400.0) * t.f3(12400.0)).norm();
        for w2 in [-300.0, 0.0, 150.0, 190.0, 260.0] {
            let got = c.map_value(12400.0, w2, 12400.0, None) / f13;
            let want = 0.5 / (KAPPA * ((w2 - 190.0f64).powi(2) + 50.0f64.powi(2)).sqrt());
            assert!((got - want).abs() < 1e-12 * want, "{w2}: {got} {want}");
        }
        // Discrete t₂ integration of the sampled signal converges to it.
        let n = 4001;
        let dt = 1.0;
        let samples = Array3::from_shape_fn((n, 1, 1), |(i, _, _)| c.value(12400.0, i as f64 * dt, 12400.0));
        let w2 = [120.0, 190.0, -190.0];
        let d = beating_map_discrete(samples.view(), dt, &w2).unwrap();
        for (i, &w) in w2.iter().enumerate() {
            let exact = c.transform(12400.0, w, 12400.0, Some((n - 1) as f64 * dt), None).norm();
            assert!((d[(i, 0, 0)] - exact).abs() < 1e-3 * exact, "{w}");
        }
    }

    #[test]
    fn zero_input_gives_zero_map() {
        let mut c = synthetic(Complex64::default(), 190.0, 50.0);
        c.terms.clear();
        let w: Vec<f64> = (0..5).map(|i| 12300.0 + 100.0 * i as f64).collect();
        let w2: Vec<f64> = (-4..=4).map(|i| 100.0 * i as f64).collect();
        let m = beating_map(&[c], &w, &w2, &w, None).unwrap();
        assert!(m.values.iter().all(|&v| v == 0.0));
        assert_eq!(m.norm, 0.0);
    }

    #[test]
    fn omega2_grid_coverage_is_enforced() {
        let (_, c) = comps(DimerParams::homodimer(), 1e-3, false, Signal::Rephasing);
        let w = [12400.0, 12600.0];
        assert!(beating_map(std::slice::from_ref(&c), &w, &[-250.0, 250.0], &w, None).is_err());
        let m = beating_map(&[c], &w, &[-300.0, 0.0, 300.0], &w, None).unwrap();
        assert!((m.values.iter().copied().fold(0.0, f64::max) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn secular_homodimer_keeps_only_coherences() {
        let (m, c) = comps(DimerParams::homodimer(), 1e-3, true, Signal::Rephasing);
        let beats = c.beat_frequencies();
        assert_eq!(beats.len(), 2);
        for b in beats {
            assert!((b.im.abs() - m.basis.splitting()).abs() < 1e-9);
        }
    }

    #[test]
    fn nonsecular_homodimer_beat_is_shifted() {
        let (_, c) = comps(DimerParams::homodimer(), 1e-3, false, Signal::Rephasing);
        let v = c.main_beat();
        assert!((v - 193.0).abs() < 1.0, "{v}");
        let beats = c.beat_frequencies();
        assert!(beats.iter().all(|b| (b.re + 52.6).abs() < 1.0));
    }

    #[test]
    fn cross_peak_traces_have_opposite_signs() {
        let (_, c) = comps(DimerParams::homodimer(), 1e-3, false, Signal::Rephasing);
        let w2: Vec<f64> = (-300..=300).map(|x| x as f64).collect();
        let argmax = |v: &[f64]| w2[v.iter().enumerate().fold(0, |b, (i, x)| if *x > v[b] { i } else { b })];
        let r12 = labelled_peak_trace(&c, (0, 1), &w2, None);
        let r21 = labelled_peak_trace(&c, (1, 0), &w2, None);
        assert!(argmax(&r12) < 0.0 && argmax(&r21) > 0.0);
        // Positive and negative lobes are not mirror images.
        let p = r21.iter().copied().fold(0.0, f64::max);
        let n = r12.iter().copied().fold(0.0, f64::max);
        assert!((p - n).abs() > 0.05 * p.max(n));
    }

    #[test]
    fn filtered_signal_equals_full_minus_static() {
        let (m, c) = comps(DimerParams::heterodimer(), 1.0, false, Signal::Rephasing);
        let osc = |v: Complex64| v.im.abs() >= DEFAULT_CUTOFF;
        let stat = |v: Complex64| v.im.abs() < DEFAULT_CUTOFF;
        for (w1, t2, w3) in [(12360.0, 0.0, 12640.0), (12640.0, 75.0, 12360.0)] {
            let mut full = Complex64::default();
            let mut still = Complex64::default();
            for f in [Family::Se, Family::Esa] {
                full += m.spectrum_direct(Signal::Rephasing, f, w1, t2, w3, None).unwrap() * f.sign();
                still += m.spectrum_direct(Signal::Rephasing, f, w1, t2, w3, Some(&stat)).unwrap() * f.sign();
            }
            let mut filt = Complex64::default();
            for f in [Family::Se, Family::Esa] {
                filt += m.spectrum_direct(Signal::Rephasing, f, w1, t2, w3, Some(&osc)).unwrap() * f.sign();
            }
            let a = c.value(w1, t2, w3);
            assert!((a - (full - still)).norm() < 1e-6 * a.norm());
            assert!((a - filt).norm() < 1e-9 * a.norm());
        }
    }

    #[test]
    fn fwhm_of_lorentzian() {
        let g = 7.0;
        let f = |x: f64| 1.0 / (x * x + g * g);
        let w = fwhm_line(f, 0.0, 0.05, 200.0).unwrap();
        assert!((w - 2.0 * g).abs() < 1e-3);
        let (d, a) = diagonal_widths(|x, y| f(x) * f(y), (0.0, 0.0), 0.05, 200.0);
        assert!((d.unwrap() - a.unwrap()).abs() < 1e-9);
        let p = locate_max(|x, y| -((x - 1.3).powi(2) + (y + 0.7).powi(2)), (0.0, 0.0), 1.0, 1e-6);
        assert!((p.0 - 1.3).abs() < 1e-5 && (p.1 + 0.7).abs() < 1e-5);
    }
}
