//! Uncorrelated Gaussian static disorder of the site energies.
//!
//! Both site energies are drawn independently from normal distributions of
//! common width around their means. Spectra are averaged as complex
//! quantities before any magnitude is taken; averaging per-realization
//! beating-map magnitudes is available as a non-default option.
//!
//! Three sampling schemes are provided:
//! * `monte-carlo`: independent pseudo-random draws from a seeded ChaCha RNG;
//! * `gauss-hermite`: tensor Gauss–Hermite grid with product weights;
//! * `split`: the change of variables to a common shift c = (δΩ₁+δΩ₂)/2 and
//!   a difference δ = δΩ₁−δΩ₂, which are independent with standard
//!   deviations σ/√2 and σ√2. The common shift only translates every
//!   optical frequency, so its Gaussian average is taken in closed form
//!   (Faddeeva function) on every mode term; δ changes the exciton
//!   structure and is integrated on a dense midpoint grid. No quadrature
//!   rule is used for the shift: when the homogeneous lines are narrower
//!   than the node spacing (correlated noise, ξ ≫ d) a node sum resolves
//!   individual nodes instead of the Gaussian envelope.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array3;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use errorfunctions::ComplexErrorFunctions;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::BathSpec;
use crate::beating::{oscillatory_component, OscillatoryComponents};
use crate::error::{Error, Result};
use crate::model::{exciton_basis, DimerParams};
use crate::response::{DipoleConfig, ModeTerm, ResponseGrid, ResponseModel, Signal};
use crate::units::KAPPA;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// FWHM → standard deviation factor 2√(2 ln 2).
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

/// Sampling scheme for the disorder ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    MonteCarlo,
    GaussHermite,
    Split,
}

/// Static-disorder specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisorderSpec {
    /// FWHM of each site-energy distribution in cm⁻¹ (0 disables disorder).
    pub fwhm: f64,
    /// Number of Monte-Carlo samples.
    pub samples: usize,
    /// RNG seed for Monte-Carlo sampling.
    pub seed: u64,
    pub scheme: Scheme,
    /// Gauss–Hermite nodes per dimension of the tensor grid.
    pub nodes: usize,
    /// Midpoint-grid points for δ in the split scheme.
    pub delta_points: usize,
    /// Average per-realization beating-map magnitudes instead of complex signals.
    pub magnitude_average: bool,
}

impl Default for DisorderSpec {
    fn default() -> Self {
        Self {
            fwhm: 0.0,
            samples: 500,
            seed: 42,
            scheme: Scheme::MonteCarlo,
            nodes: 21,
            delta_points: 201,
            magnitude_average: false,
        }
    }
}

impl DisorderSpec {
    pub fn sigma(&self) -> f64 {
        fwhm_to_sigma(self.fwhm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm >= 0.0) || !self.fwhm.is_finite() {
            return Err(Error::InvalidParameter(format!("disorder FWHM must be >= 0, got {}", self.fwhm)));
        }
        if self.samples == 0 || self.nodes == 0 || self.delta_points == 0 {
            return Err(Error::InvalidParameter("disorder sample, node and grid-point counts must be >= 1".into()));
        }
        if self.magnitude_average && self.scheme == Scheme::Split && self.fwhm > 0.0 {
            return Err(Error::InvalidParameter("magnitude averaging needs explicit realizations; use monte-carlo or gauss-hermite".into()));
        }
        Ok(())
    }
}

/// One member of the ensemble: site energies and quadrature weight. In the
/// split scheme every member is further averaged over the common shift of
/// standard deviation [`common_shift_sigma`].
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub params: DimerParams,
    pub weight: f64,
}

/// Standard deviation (cm⁻¹) of the common shift that is averaged
/// analytically; zero unless the split scheme is active.
pub fn common_shift_sigma(spec: &DisorderSpec) -> f64 {
    if spec.scheme == Scheme::Split && spec.fwhm > 0.0 {
        spec.sigma() / std::f64::consts::SQRT_2
    } else {
        0.0
    }
}

/// Physicists' Gauss–Hermite nodes and weights (weight function e^{−x²})
/// by the Golub–Welsch eigenvalue method.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let j = DMatrix::from_fn(n, n, |i, k| if i + 1 == k || k + 1 == i { ((i.max(k)) as f64 / 2.0).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Probabilists' normal quadrature: nodes z and weights summing to one so
/// that Σ w f(z) ≈ E[f(Z)], Z ~ N(0, 1).
pub fn normal_quadrature(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_hermite(n);
    let s = std::f64::consts::PI.sqrt();
    (x.iter().map(|x| x * std::f64::consts::SQRT_2).collect(), w.iter().map(|w| w / s).collect())
}

/// Midpoint grid on [−6, 6] for N(0, 1) with normalized Gaussian weights.
fn normal_midpoint(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let h = 12.0 / n as f64;
    let z: Vec<f64> = (0..n).map(|i| -6.0 + (i as f64 + 0.5) * h).collect();
    let w: Vec<f64> = z.iter().map(|z| (-0.5 * z * z).exp()).collect();
    let s: f64 = w.iter().sum();
    (z, w.into_iter().map(|w| w / s).collect())
}

/// Draws (or tabulates) site-energy realizations around `mean`.
///
/// Deterministic for a given spec. The coupling and dipole are kept;
/// realizations may come out with Ω₁ < Ω₂ and are relabelled by
/// [`DimerParams::with_dipole`].
pub fn sample_realizations(spec: &DisorderSpec, mean: &DimerParams) -> Result<Vec<Realization>> {
    spec.validate()?;
    let (o1, o2) = (mean.omega1, mean.omega2);
    let make = |a: f64, b: f64| -> Result<DimerParams> {
        let mut p = DimerParams::with_dipole(a, b, mean.coupling, mean.dipole)?;
        // Keep the caller's labelling convention relative to the mean.
        p.swapped ^= mean.swapped;
        Ok(p)
    };
    if spec.fwhm == 0.0 {
        return Ok(vec![Realization { params: *mean, weight: 1.0 }]);
    }
    let sigma = spec.sigma();
    match spec.scheme {
        Scheme::MonteCarlo => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let w = 1.0 / spec.samples as f64;
            (0..spec.samples)
                .map(|_| {
                    let z1: f64 = StandardNormal.sample(&mut rng);
                    let z2: f64 = StandardNormal.sample(&mut rng);
                    Ok(Realization { params: make(o1 + sigma * z1, o2 + sigma * z2)?, weight: w })
                })
                .collect()
        }
        Scheme::GaussHermite => {
            let (z, w) = normal_quadrature(spec.nodes);
            let mut out = Vec::with_capacity(z.len() * z.len());
            for i in 0..z.len() {
                for j in 0..z.len() {
                    out.push(Realization {
                        params: make(o1 + sigma * z[i], o2 + sigma * z[j])?,
                        weight: w[i] * w[j],
                    });
                }
            }
            Ok(out)
        }
        Scheme::Split => {
            let (zd, wd) = normal_midpoint(spec.delta_points);
            zd.iter()
                .zip(&wd)
                .map(|(z, w)| {
                    let d = z * sigma * std::f64::consts::SQRT_2;
                    Ok(Realization { params: make(o1 + 0.5 * d, o2 - 0.5 * d)?, weight: *w })
                })
                .collect()
        }
    }
}

/// Direction in which a common shift of the site energies moves the
/// frequency of an optical mode: +1 for Im χ ≥ 0, −1 otherwise.
pub fn shift_sign(chi: Complex64) -> f64 {
    if chi.im >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Translates every optical frequency of a term by `c` cm⁻¹ (t₂ is untouched).
pub fn shift_term(t: &ModeTerm, c: f64) -> ModeTerm {
    let d = I * (KAPPA * c);
    ModeTerm { chi1: t.chi1 + d * shift_sign(t.chi1), chi3: t.chi3 + d * shift_sign(t.chi3), ..*t }
}

/// Below this |Δa|/(κσ√2) the pair average switches from the divided
/// difference to its Taylor expansion.
const PAIR_TAYLOR: f64 = 1e-3;

/// Faddeeva function w and its first three derivatives at ζ.
fn faddeeva_derivatives(zeta: Complex64) -> [Complex64; 4] {
    let w = zeta.w();
    let w1 = -2.0 * zeta * w + I * (2.0 / std::f64::consts::PI.sqrt());
    let w2 = -2.0 * w - 2.0 * zeta * w1;
    let w3 = -4.0 * w1 - 2.0 * zeta * w2;
    [w, w1, w2, w3]
}

/// Gaussian average E[1/(a − iκu)] over u ~ N(0, σ²) (σ in cm⁻¹, a in
/// rad/fs with Re a ≥ 0): √(π/2)/(κσ) · w(ia/(κσ√2)). σ = 0 gives 1/a.
pub fn gaussian_pole_average(a: Complex64, sigma: f64) -> Complex64 {
    if sigma == 0.0 {
        return 1.0 / a;
    }
    let s = KAPPA * sigma;
    (std::f64::consts::FRAC_PI_2.sqrt() / s) * (I * a / (s * std::f64::consts::SQRT_2)).w()
}

/// Gaussian average E[1/((a₁ − is₁κu)(a₃ − is₃κu))] over u ~ N(0, σ²) for
/// signs s₁, s₃ = ±1. Poles on opposite sides reduce to
/// (G(a₁) + G(a₃))/(a₁ + a₃); poles on the same side to the divided
/// difference (G(a₁) − G(a₃))/(a₃ − a₁), replaced by its Taylor expansion
/// about the midpoint when a₁ ≈ a₃.
pub fn gaussian_pole_pair_average(a1: Complex64, s1: f64, a3: Complex64, s3: f64, sigma: f64) -> Complex64 {
    if sigma == 0.0 {
        return 1.0 / (a1 * a3);
    }
    if s1 != s3 {
        return (gaussian_pole_average(a1, sigma) + gaussian_pole_average(a3, sigma)) / (a1 + a3);
    }
    let s = KAPPA * sigma;
    let q = 1.0 / (s * std::f64::consts::SQRT_2);
    let h = a3 - a1;
    if (h * q).norm() >= PAIR_TAYLOR {
        return (gaussian_pole_average(a1, sigma) - gaussian_pole_average(a3, sigma)) / h;
    }
    // G(a) = K w(iqa): G' = K·iq·w', G''' = K·(iq)³·w'''.
    let k = std::f64::consts::FRAC_PI_2.sqrt() / s;
    let iq = I * q;
    let [_, d1, _, d3] = faddeeva_derivatives(iq * (0.5 * (a1 + a3)));
    -k * (iq * d1 + iq * iq * iq * d3 * h * h / 24.0)
}

/// f₁(ω₁)·f₃(ω₃) of a term averaged over a Gaussian common shift of all
/// optical frequencies with standard deviation `sigma` cm⁻¹.
pub fn shifted_f13(t: &ModeTerm, signal: Signal, w1: f64, w3: f64, sigma: f64) -> Complex64 {
    let (a1, a3) = t.denominators(signal, w1, w3);
    gaussian_pole_pair_average(a1, shift_sign(t.chi1), a3, shift_sign(t.chi3), sigma)
}

/// Frequency-domain value of a term averaged over the common shift.
pub fn shifted_spectral_value(t: &ModeTerm, signal: Signal, w1: f64, t2: f64, w3: f64, sigma: f64) -> Complex64 {
    t.amplitude * shifted_f13(t, signal, w1, w3, sigma) * (t.upsilon * t2).exp()
}

/// Ensemble of oscillatory components with quadrature weights.
#[derive(Debug, Clone)]
pub struct Ensemble {
    /// Mean-parameter components (peak coordinates refer to this basis).
    pub mean: OscillatoryComponents,
    /// Per-realization components with amplitudes already multiplied by
    /// their weights; in the split scheme each carries the common-shift
    /// width it is averaged over.
    pub members: Vec<OscillatoryComponents>,
    pub magnitude_average: bool,
}

impl Ensemble {
    /// Complex ensemble average as one merged term list.
    pub fn merged(&self) -> OscillatoryComponents {
        let mut out = self.mean.clone();
        out.terms = self.members.iter().flat_map(|m| m.terms.iter().copied()).collect();
        out.shift_sigma = self.members.first().map_or(0.0, |m| m.shift_sigma);
        out.warnings = self.members.iter().flat_map(|m| m.warnings.iter().cloned()).collect();
        out.warnings.sort();
        out.warnings.dedup();
        out
    }

    /// Ensemble beating-map value at one point (complex or magnitude average).
    pub fn map_value(&self, w1: f64, w2: f64, w3: f64, window: Option<f64>, peak: Option<(usize, usize)>) -> f64 {
        if self.magnitude_average {
            self.members.iter().map(|m| m.transform(w1, w2, w3, window, peak).norm()).sum()
        } else {
            self.members.iter().map(|m| m.transform(w1, w2, w3, window, peak)).sum::<Complex64>().norm()
        }
    }

    /// Pathway-resolved amplitudes of the four peaks at the mean-basis peak
    /// positions, normalized to their maximum (order 11, 12, 21, 22).
    pub fn peak_amplitudes(&self, w2: f64, window: Option<f64>) -> [f64; 4] {
        let raw = crate::beating::PEAKS.map(|p| {
            let (a, b) = crate::beating::peak_position(&self.mean.basis, p);
            self.map_value(a, w2, b, window, Some(p))
        });
        let max = raw.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            raw
        } else {
            raw.map(|x| x / max)
        }
    }
}

/// Builds the oscillatory-component ensemble of one signal class.
///
/// The bath is shared by all realizations (the spectral-density shift is not
/// re-tuned per realization). Realizations are evaluated in parallel and
/// collected in a fixed order.
pub fn oscillatory_ensemble(
    spec: &DisorderSpec,
    mean: &DimerParams,
    bath: &BathSpec,
    dipoles: &DipoleConfig,
    secular: bool,
    signal: Signal,
    cutoff: f64,
) -> Result<Ensemble> {
    let reals = sample_realizations(spec, mean)?;
    let mean_model = ResponseModel::new(mean, bath, dipoles, secular)?;
    let mean_comps = oscillatory_component(&mean_model, signal, cutoff);
    let shift_sigma = common_shift_sigma(spec);
    let members: Result<Vec<OscillatoryComponents>> = reals
        .par_iter()
        .map(|r| {
            let model = ResponseModel::new(&r.params, bath, dipoles, secular)?;
            let mut out = oscillatory_component(&model, signal, cutoff).scaled(r.weight);
            out.shift_sigma = shift_sigma;
            Ok(out)
        })
        .collect();
    Ok(Ensemble { mean: mean_comps, members: members?, magnitude_average: spec.magnitude_average })
}

/// Weighted mean of complex grids; all grids must share one shape.
pub fn ensemble_average(grids: &[Array3<Complex64>], weights: &[f64]) -> Result<Array3<Complex64>> {
    let first = grids.first().ok_or_else(|| Error::Grid("nothing to average".into()))?;
    if grids.len() != weights.len() {
        return Err(Error::Grid(format!("{} grids but {} weights", grids.len(), weights.len())));
    }
    let mut acc = Array3::<Complex64>::zeros(first.dim());
    for (g, &w) in grids.iter().zip(weights) {
        if g.dim() != first.dim() {
            return Err(Error::Grid(format!("grid shape {:?} does not match {:?}", g.dim(), first.dim())));
        }
        acc.scaled_add(Complex64::from(w), g);
    }
    Ok(acc)
}

/// Weighted mean of full response grids; axes must agree exactly.
pub fn average_response_grids(grids: &[ResponseGrid], weights: &[f64]) -> Result<ResponseGrid> {
    let first = grids.first().ok_or_else(|| Error::Grid("nothing to average".into()))?;
    for g in grids {
        if g.signal != first.signal || g.t2 != first.t2 || g.w1 != first.w1 || g.w3 != first.w3 {
            return Err(Error::Grid("response grids have mismatched axes or signal class".into()));
        }
    }
    let fam = |i: usize| -> Result<Array3<Complex64>> {
        let v: Vec<Array3<Complex64>> = grids.iter().map(|g| g.families[i].clone()).collect();
        ensemble_average(&v, weights)
    };
    let families = [fam(0)?, fam(1)?, fam(2)?];
    let total = ensemble_average(&grids.iter().map(|g| g.total.clone()).collect::<Vec<_>>(), weights)?;
    Ok(ResponseGrid { signal: first.signal, t2: first.t2.clone(), w1: first.w1.clone(), w3: first.w3.clone(), families, total })
}

/// Ensemble-averaged absorption on an ω grid. The split scheme's common
/// shift is averaged in closed form, which requires `window = None`.
pub fn absorption_ensemble(
    spec: &DisorderSpec,
    mean: &DimerParams,
    bath: &BathSpec,
    dipoles: &DipoleConfig,
    secular: bool,
    omega: &[f64],
    window: Option<f64>,
) -> Result<Vec<f64>> {
    let sigma = common_shift_sigma(spec);
    if sigma > 0.0 && window.is_some() {
        return Err(Error::InvalidParameter("the split scheme averages the common shift analytically and needs an infinite absorption window".into()));
    }
    let reals = sample_realizations(spec, mean)?;
    let parts: Result<Vec<(Vec<f64>, f64)>> = reals
        .par_iter()
        .map(|r| {
            let model = ResponseModel::new(&r.params, bath, dipoles, secular)?;
            if sigma == 0.0 {
                return Ok((model.absorption(omega, window), r.weight));
            }
            let terms = model.absorption_terms();
            let line = omega
                .iter()
                .map(|&w| {
                    // −1/(iκω + χ) = 1/a with a = −iκω − χ; the shift moves χ by is·κu.
                    let sum: Complex64 = terms.iter().map(|&(chi, c)| c * gaussian_pole_average(-I * (KAPPA * w) - chi, sigma)).sum();
                    sum.re
                })
                .collect();
            Ok((line, r.weight))
        })
        .collect();
    let mut acc = vec![0.0; omega.len()];
    for (a, w) in parts? {
        for (x, y) in acc.iter_mut().zip(a) {
            *x += w * y;
        }
    }
    Ok(acc)
}

/// Basis of the mean parameters, for peak labels of averaged spectra.
pub fn mean_basis(mean: &DimerParams) -> crate::model::ExcitonBasis {
    exciton_basis(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathways::DEFAULT_CUTOFF;

    #[test]
    fn hermite_rules_integrate_moments() {
        let (z, w) = normal_quadrature(21);
        let m = |k: i32| z.iter().zip(&w).map(|(z, w)| w * z.powi(k)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-13);
        assert!(m(1).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(6) - 15.0).abs() < 1e-9);
        let (x, _) = gauss_hermite(3);
        assert!((x[2] - (1.5f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zero_width_is_identity() {
        let p = DimerParams::heterodimer();
        let r = sample_realizations(&DisorderSpec::default(), &p).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].params, p);
    }

    #[test]
    fn monte_carlo_width_and_determinism() {
        let p = DimerParams::heterodimer();
        let spec = DisorderSpec { fwhm: 100.0, samples: 10_000, ..DisorderSpec::default() };
        let a = sample_realizations(&spec, &p).unwrap();
        let b = sample_realizations(&spec, &p).unwrap();
        assert_eq!(a, b);
        // Undo the Ω₁ ≥ Ω₂ relabelling to recover site 1.
        let site1: Vec<f64> = a.iter().map(|r| if r.params.swapped { r.params.omega2 } else { r.params.omega1 }).collect();
        let mean = site1.iter().sum::<f64>() / site1.len() as f64;
        let sd = (site1.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (site1.len() - 1) as f64).sqrt();
        assert!((sd - 42.47).abs() < 0.03 * 42.47, "{sd}");
        assert!((mean - 12600.0).abs() < 3.0);
    }

    #[test]
    fn split_scheme_reproduces_site_moments() {
        let p = DimerParams::heterodimer();
        let spec = DisorderSpec { fwhm: 100.0, scheme: Scheme::Split, delta_points: 401, ..DisorderSpec::default() };
        let reals = sample_realizations(&spec, &p).unwrap();
        let total: f64 = reals.iter().map(|r| r.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let site = |q: &DimerParams, j: usize| if q.swapped ^ (j == 1) { q.omega2 } else { q.omega1 };
        // δ carries half of each site variance, the common shift the other half.
        let m1: f64 = reals.iter().map(|r| r.weight * site(&r.params, 0)).sum();
        let v1: f64 = reals.iter().map(|r| r.weight * (site(&r.params, 0) - 12600.0).powi(2)).sum();
        let c12: f64 = reals.iter().map(|r| r.weight * (site(&r.params, 0) - 12600.0) * (site(&r.params, 1) - 12400.0)).sum();
        let s2 = fwhm_to_sigma(100.0).powi(2);
        let c2 = common_shift_sigma(&spec).powi(2);
        assert!((m1 - 12600.0).abs() < 1e-9);
        assert!((v1 + c2 - s2).abs() < 1e-3 * s2, "{v1} + {c2} vs {s2}");
        assert!((c12 + c2).abs() < 1e-3 * s2, "site covariance {}", c12 + c2);
        assert_eq!(common_shift_sigma(&DisorderSpec { fwhm: 100.0, ..DisorderSpec::default() }), 0.0);
    }

    /// Midpoint sum of f(u) over u ~ N(0, σ²) on ±8σ.
    fn dense_average(f: impl Fn(f64) -> Complex64, sigma: f64, n: usize) -> Complex64 {
        let h = 16.0 / n as f64;
        let mut acc = Complex64::default();
        let mut norm = 0.0;
        for i in 0..n {
            let z = -8.0 + (i as f64 + 0.5) * h;
            let w = (-0.5 * z * z).exp();
            acc += f(z * sigma) * w;
            norm += w;
        }
        acc / norm
    }

    #[test]
    fn pole_averages_match_dense_quadrature() {
        let sigma = 30.0;
        let k = KAPPA;
        let one = |a: Complex64| (gaussian_pole_average(a, sigma), dense_average(|u| 1.0 / (a - I * (k * u)), sigma, 200_000));
        for a in [Complex64::new(5.0 * k, 40.0 * k), Complex64::new(0.5 * k, -3.0 * k), Complex64::new(60.0 * k, 0.0)] {
            let (got, want) = one(a);
            assert!((got - want).norm() < 1e-6 * want.norm(), "{a}: {got} vs {want}");
        }
        // Both pole configurations, including nearly coincident same-side poles.
        let a1 = Complex64::new(3.0 * k, 25.0 * k);
        for (a3, s3) in [
            (Complex64::new(4.0 * k, -60.0 * k), 1.0),
            (Complex64::new(4.0 * k, -60.0 * k), -1.0),
            (a1 + Complex64::new(0.0, 1e-3 * k), 1.0),
            (a1 + Complex64::new(2e-2 * k, 0.3 * k), 1.0),
            (a1, 1.0),
        ] {
            let got = gaussian_pole_pair_average(a1, 1.0, a3, s3, sigma);
            let want = dense_average(|u| 1.0 / ((a1 - I * (k * u)) * (a3 - I * (s3 * k * u))), sigma, 200_000);
            assert!((got - want).norm() < 1e-6 * want.norm(), "{a3} {s3}: {got} vs {want}");
        }
        // Continuity across the switch to the Taylor expansion.
        let q = 1.0 / (k * sigma * std::f64::consts::SQRT_2);
        let at = |d: f64| gaussian_pole_pair_average(a1, 1.0, a1 + Complex64::new(d / q, 0.0), 1.0, sigma);
        let (below, above) = (at(PAIR_TAYLOR * (1.0 - 1e-9)), at(PAIR_TAYLOR * (1.0 + 1e-9)));
        assert!((below - above).norm() < 1e-10 * above.norm(), "jump {:e}", (below - above).norm() / above.norm());
        assert_eq!(gaussian_pole_pair_average(a1, 1.0, a1, 1.0, 0.0), 1.0 / (a1 * a1));
    }

    #[test]
    fn analytic_shift_matches_explicit_shifts_for_narrow_lines() {
        // Correlated noise leaves homogeneous lines of a few cm⁻¹, far
        // narrower than the disorder; the closed-form shift average must
        // equal a dense explicit sum over shifted terms.
        let p = DimerParams::heterodimer();
        let bath = BathSpec { omega_s: exciton_basis(&p).splitting(), ..BathSpec::default() }.with_xi_over_d(1e3);
        let model = ResponseModel::new(&p, &bath, &DipoleConfig::default(), false).unwrap();
        for signal in [Signal::Rephasing, Signal::NonRephasing] {
            let mut c = oscillatory_component(&model, signal, DEFAULT_CUTOFF);
            let v = c.main_beat();
            let sigma = 30.0;
            let explicit = |w1: f64, w3: f64| dense_average(|u| c.terms.iter().map(|t| shift_term(t, u).spectral_value(signal, w1, 40.0, w3)).sum(), sigma, 20_000);
            let probes = [(12641.0, 12359.0), (12670.0, 12390.0), (12600.0, 12600.0), (12500.0, 12700.0)];
            let want: Vec<Complex64> = probes.iter().map(|&(a, b)| explicit(a, b)).collect();
            c.shift_sigma = sigma;
            for (&(a, b), w) in probes.iter().zip(&want) {
                let got = c.value(a, 40.0, b);
                assert!((got - w).norm() < 1e-6 * w.norm(), "{signal:?} ({a}, {b}): {got} vs {w}");
            }
            // The rephasing cross-peak is elongated along the diagonal.
            if signal == Signal::Rephasing {
                let (x, y) = crate::beating::peak_position(&c.basis, (1, 0));
                let f = |d: f64| c.map_value(x + d, v, y + d, None);
                let g = |d: f64| c.map_value(x + d, v, y - d, None);
                assert!(f(20.0) > 0.5 * f(0.0) && g(20.0) < 0.5 * g(0.0), "{} {} {}", f(0.0), f(20.0), g(20.0));
            }
        }
    }

    #[test]
    fn common_shift_is_a_translation() {
        let p = DimerParams::heterodimer();
        let bath = BathSpec::default();
        let d = DipoleConfig::default();
        let base = ResponseModel::new(&p, &bath, &d, false).unwrap();
        let moved = ResponseModel::new(&DimerParams::new(12637.0, 12437.0, 100.0).unwrap(), &bath, &d, false).unwrap();
        for signal in [Signal::Rephasing, Signal::NonRephasing] {
            let a = oscillatory_component(&base, signal, DEFAULT_CUTOFF);
            let b = oscillatory_component(&moved, signal, DEFAULT_CUTOFF);
            for (w1, w3) in [(12400.0, 12680.0), (12700.0, 12410.0)] {
                let shifted: Complex64 = a.terms.iter().map(|t| shift_term(t, 37.0).spectral_value(signal, w1, 30.0, w3)).sum();
                let direct = b.value(w1, 30.0, w3);
                assert!((shifted - direct).norm() < 1e-9 * direct.norm(), "{signal:?}");
            }
        }
    }

    #[test]
    fn single_member_average_is_identity() {
        let g = Array3::from_shape_fn((2, 3, 4), |(a, b, c)| Complex64::new(a as f64, (b * c) as f64));
        assert_eq!(ensemble_average(std::slice::from_ref(&g), &[1.0]).unwrap(), g);
        let h = Array3::<Complex64>::zeros((2, 3, 3));
        assert!(ensemble_average(&[g, h], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn disorder_broadens_absorption() {
        let p = DimerParams::heterodimer();
        let bath = BathSpec { lambda: 200.0, ..BathSpec::default() };
        let d = DipoleConfig::default();
        let w: Vec<f64> = (0..2401).map(|i| 12000.0 + 0.5 * i as f64).collect();
        let mut last = 0.0;
        for fwhm in [0.0, 30.0, 60.0, 100.0] {
            let spec = DisorderSpec { fwhm, scheme: Scheme::Split, delta_points: 101, ..DisorderSpec::default() };
            let a = absorption_ensemble(&spec, &p, &bath, &d, false, &w, None).unwrap();
            // Width of the low-energy band: FWHM around its maximum below 12500.
            let (i0, _) = a.iter().enumerate().take(1000).fold((0, f64::MIN), |b, (i, &x)| if x > b.1 { (i, x) } else { b });
            let width = crate::beating::fwhm_line(|x| {
                let k = ((x - 12000.0) / 0.5).round() as usize;
                a[k.min(a.len() - 1)]
            }, w[i0], 0.5, 300.0)
            .unwrap();
            assert!(width > last, "fwhm {fwhm}: {width} !> {last}");
            last = width;
        }
    }
}
