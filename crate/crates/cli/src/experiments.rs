//! Named experiments and figure recipes.
//!
//! Recipes fix the dimer, correlation length, spectral-density shift and
//! disorder width of each panel; bath λ, γ and temperature, grids, disorder
//! sampling and run options still come from the configuration. Every
//! override is reported back for the manifest.

use exciton2des::bath::BathSpec;
use exciton2des::beating::{
    beating_map, beating_map_discrete, diagonal_widths, locate_max, overlap_diagnostic, peak_position, OscillatoryComponents,
    DISPLAY_EXPONENT, PEAKS,
};
use exciton2des::config::{Route, RunConfig};
use exciton2des::disorder::{absorption_ensemble, common_shift_sigma, oscillatory_ensemble, sample_realizations, shifted_spectral_value, DisorderSpec, Ensemble, Scheme};
use exciton2des::error::{Error, Result};
use exciton2des::gridio::{Axis, GridData, GridFile};
use exciton2des::model::{exciton_basis, DimerParams, ExcitonBasis};
use exciton2des::pathways::pathway_decomposition;
use exciton2des::response::{spectra_2d, DipoleConfig, Family, ModeTerm, ResponseModel, Signal, TimeAxis};
use exciton2des::units::KAPPA;
use ndarray::Array3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::output::Output;

/// Everything recorded about a run besides the file list.
#[derive(Default)]
pub struct Report {
    pub panels: Vec<Value>,
    pub warnings: Vec<String>,
}

/// One fully resolved simulation setting.
#[derive(Debug, Clone)]
struct Setup {
    label: String,
    params: DimerParams,
    bath: BathSpec,
    dipoles: DipoleConfig,
    disorder: DisorderSpec,
    secular: bool,
    /// Oscillatory cutoff in rad/fs.
    cutoff: f64,
}

impl Setup {
    fn from_config(cfg: &RunConfig) -> Result<Self> {
        let params = cfg.model.params()?;
        let bath = cfg.bath.spec();
        bath.validate()?;
        cfg.disorder.validate()?;
        Ok(Self {
            label: String::new(),
            params,
            bath,
            dipoles: cfg.model.dipoles()?,
            disorder: cfg.disorder,
            secular: cfg.run.secular,
            cutoff: cfg.run.cutoff * KAPPA,
        })
    }

    /// Homodimer of the configuration with ξ = ratio·d.
    fn homodimer(cfg: &RunConfig, ratio: f64) -> Result<Self> {
        let mut s = Self::from_config(cfg)?;
        s.params = DimerParams { dipole: cfg.model.dipole, ..DimerParams::homodimer() };
        s.bath = s.bath.with_xi_over_d(ratio);
        s.disorder.fwhm = 0.0;
        s.label = format!("xi{}d", fmt_ratio(ratio));
        Ok(s)
    }

    /// Heterodimer with Ω_s tuned to the (mean) exciton splitting.
    fn heterodimer(cfg: &RunConfig, ratio: f64, fwhm: f64) -> Result<Self> {
        let mut s = Self::from_config(cfg)?;
        s.params = DimerParams { dipole: cfg.model.dipole, ..DimerParams::heterodimer() };
        s.bath = BathSpec { omega_s: exciton_basis(&s.params).splitting(), ..s.bath }.with_xi_over_d(ratio);
        s.disorder.fwhm = fwhm;
        s.label = format!("xi{}d_fwhm{}", fmt_ratio(ratio), fwhm);
        Ok(s)
    }

    fn basis(&self) -> ExcitonBasis {
        exciton_basis(&self.params)
    }

    fn model(&self) -> Result<ResponseModel> {
        ResponseModel::new(&self.params, &self.bath, &self.dipoles, self.secular)
    }

    fn disordered(&self) -> bool {
        self.disorder.fwhm > 0.0
    }

    /// Ensemble members with weights; a single unit-weight member without disorder.
    fn members(&self) -> Result<Vec<(DimerParams, f64)>> {
        if self.disordered() {
            Ok(sample_realizations(&self.disorder, &self.params)?.into_iter().map(|r| (r.params, r.weight)).collect())
        } else {
            Ok(vec![(self.params, 1.0)])
        }
    }

    /// Width (cm⁻¹) of the common shift every member is averaged over.
    fn shift_sigma(&self) -> f64 {
        if self.disordered() {
            common_shift_sigma(&self.disorder)
        } else {
            0.0
        }
    }

    /// Weighted mode terms of the (ensemble-averaged) response.
    fn terms(&self, signal: Signal) -> Result<Vec<ModeTerm>> {
        let parts: Result<Vec<Vec<ModeTerm>>> = self
            .members()?
            .par_iter()
            .map(|(p, w)| {
                let m = ResponseModel::new(p, &self.bath, &self.dipoles, self.secular)?;
                Ok(m.terms(signal)
                    .terms
                    .into_iter()
                    .map(|mut t| {
                        t.amplitude *= *w;
                        t
                    })
                    .collect())
            })
            .collect();
        Ok(parts?.concat())
    }

    /// Oscillatory components; a one-member ensemble without disorder.
    fn ensemble(&self, signal: Signal) -> Result<Ensemble> {
        if self.disordered() {
            oscillatory_ensemble(&self.disorder, &self.params, &self.bath, &self.dipoles, self.secular, signal, self.cutoff)
        } else {
            let comps = exciton2des::beating::oscillatory_component(&self.model()?, signal, self.cutoff);
            Ok(Ensemble { mean: comps.clone(), members: vec![comps], magnitude_average: false })
        }
    }

    fn describe(&self, panel: &str) -> Value {
        json!({
            "panel": panel,
            "label": self.label,
            "model": self.params,
            "bath": self.bath,
            "correlation": self.bath.correlation(),
            "disorder": self.disorder,
            "secular": self.secular,
            "cutoff_cm-1": self.cutoff / KAPPA,
        })
    }
}

fn fmt_ratio(r: f64) -> String {
    if !(0.01..1000.0).contains(&r) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn prefixed(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}_{name}")
    }
}

fn signal_name(signal: Signal) -> &'static str {
    match signal {
        Signal::Rephasing => "rephasing",
        Signal::NonRephasing => "nonrephasing",
    }
}

fn peak_name(signal: Signal, p: (usize, usize)) -> String {
    format!("{}{}{}", signal.tag(), p.0 + 1, p.1 + 1)
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, f64::max)
}

fn scale_of(norm: f64, normalize: bool) -> f64 {
    if normalize && norm > 0.0 {
        1.0 / norm
    } else {
        1.0
    }
}

fn omega(name: &str, values: Vec<f64>) -> Axis {
    Axis::new(name, "cm-1", values)
}

fn setup_attrs(g: GridFile, s: &Setup) -> GridFile {
    g.with_attr("omega1_site", s.params.omega1)
        .with_attr("omega2_site", s.params.omega2)
        .with_attr("coupling", s.params.coupling)
        .with_attr("xi", s.bath.xi)
        .with_attr("distance", s.bath.distance)
        .with_attr("omega_s", s.bath.omega_s)
        .with_attr("disorder_fwhm", s.disorder.fwhm)
        .with_attr("secular", s.secular)
}

/// Evaluates GSB, SE, ESA and total spectra of a weighted term list on
/// `[t₂, ω₁, ω₃]`, averaged over a common shift of width `sigma` cm⁻¹.
fn spectrum_cube(terms: &[ModeTerm], signal: Signal, sigma: f64, t2: &[f64], w1: &[f64], w3: &[f64]) -> [Vec<Complex64>; 4] {
    let n = t2.len() * w1.len() * w3.len();
    let vals: Vec<[Complex64; 3]> = (0..n)
        .into_par_iter()
        .map(|flat| {
            let k = flat % w3.len();
            let j = (flat / w3.len()) % w1.len();
            let i = flat / (w3.len() * w1.len());
            let mut acc = [Complex64::default(); 3];
            for t in terms {
                let fi = Family::ALL.iter().position(|&f| f == t.family).expect("family");
                acc[fi] += shifted_spectral_value(t, signal, w1[j], t2[i], w3[k], sigma);
            }
            acc
        })
        .collect();
    let fam = |f: usize| vals.iter().map(|v| v[f]).collect::<Vec<_>>();
    let total = vals.iter().map(|v| v[0] + v[1] - v[2]).collect();
    [fam(0), fam(1), fam(2), total]
}

fn spectrum_point(terms: &[ModeTerm], signal: Signal, sigma: f64, w1: f64, t2: f64, w3: f64) -> Complex64 {
    terms.iter().map(|t| shifted_spectral_value(t, signal, w1, t2, w3, sigma) * t.family.sign()).sum()
}

/// Beating-map values on `[ω₂, ω₁, ω₃]` from an ensemble.
fn map_cube(ens: &Ensemble, w1: &[f64], w2: &[f64], w3: &[f64], window: Option<f64>) -> Vec<f64> {
    let n = w2.len() * w1.len() * w3.len();
    (0..n)
        .into_par_iter()
        .map(|flat| {
            let k = flat % w3.len();
            let j = (flat / w3.len()) % w1.len();
            let i = flat / (w3.len() * w1.len());
            ens.map_value(w1[j], w2[i], w3[k], window, None)
        })
        .collect()
}

fn main_beat(ens: &Ensemble) -> Result<f64> {
    let v = ens.mean.main_beat();
    if v.is_nan() || v <= 0.0 {
        return Err(Error::Numerical("no oscillatory t2 mode above the cutoff; no beat frequency to slice at".into()));
    }
    Ok(v)
}

fn collect_warnings(report: &mut Report, comps: &OscillatoryComponents) {
    for w in &comps.warnings {
        if !report.warnings.contains(w) {
            report.warnings.push(w.clone());
        }
    }
}

pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<Report> {
    let mut report = Report::default();
    let base = Setup::from_config(cfg)?;
    match cfg.run.experiment.as_str() {
        "absorption" => absorption(cfg, &base, "", out, &mut report)?,
        "rephasing2d" => spectra(cfg, &base, Signal::Rephasing, "", out, &mut report)?,
        "nonrephasing2d" => spectra(cfg, &base, Signal::NonRephasing, "", out, &mut report)?,
        "beatmap" => beatmap(cfg, &base, out, &mut report)?,
        "pathway-report" => pathway_report(&base, out, &mut report)?,
        "figure:2" => figure2(cfg, out, &mut report)?,
        "figure:4" => figure4(cfg, out, &mut report)?,
        "figure:5" => figure5(cfg, out, &mut report)?,
        "figure:6" => figure6(cfg, out, &mut report)?,
        "figure:7" => figure7(cfg, out, &mut report)?,
        other => return Err(Error::Config(format!("unknown experiment '{other}'"))),
    }
    Ok(report)
}

fn absorption(cfg: &RunConfig, s: &Setup, prefix: &str, out: &mut Output, report: &mut Report) -> Result<()> {
    report.panels.push(s.describe(&prefixed(prefix, "absorption")));
    let w = cfg.grid.abs_w();
    let a = if s.disordered() {
        absorption_ensemble(&s.disorder, &s.params, &s.bath, &s.dipoles, s.secular, &w, None)?
    } else {
        s.model()?.absorption(&w, None)
    };
    let norm = max_abs(a.iter().map(|x| x.abs()));
    let k = scale_of(norm, cfg.run.normalize);
    let g = GridFile::new(&prefixed(prefix, "absorption"), "absorption", "arb", vec![omega("omega", w)], GridData::Real(a.iter().map(|x| x * k).collect()))?;
    let g = setup_attrs(g, s).with_attr("norm", norm);
    out.grid(g, "linear absorption spectrum")
}

fn spectra(cfg: &RunConfig, s: &Setup, signal: Signal, prefix: &str, out: &mut Output, report: &mut Report) -> Result<()> {
    let name = prefixed(prefix, &format!("{}2d", signal_name(signal)));
    report.panels.push(s.describe(&name));
    let (w, t2) = (cfg.grid.w(), cfg.grid.t2_slices.clone());
    let cube: [Vec<Complex64>; 4] = match cfg.grid.route {
        Route::Exact => spectrum_cube(&s.terms(signal)?, signal, s.shift_sigma(), &t2, &w, &w),
        Route::Discrete => {
            if s.disordered() {
                return Err(Error::Config("the discrete route does not support disorder ensembles".into()));
            }
            let axis = TimeAxis::new(cfg.grid.t_step, cfg.grid.t_points)?;
            let g = spectra_2d(&s.model()?, signal, &axis, &t2, &axis, &w, &w, cfg.grid.carrier)?;
            let flat = |a: &Array3<Complex64>| a.iter().copied().collect::<Vec<_>>();
            [flat(&g.families[0]), flat(&g.families[1]), flat(&g.families[2]), flat(&g.total)]
        }
    };
    let norm = max_abs(cube[3].iter().map(|z| z.norm()));
    let k = scale_of(norm, cfg.run.normalize);
    let axes = || vec![Axis::new("t2", "fs", t2.clone()), omega("omega1", w.clone()), omega("omega3", w.clone())];
    for (part, data) in ["total", "gsb", "se", "esa"].iter().zip([&cube[3], &cube[0], &cube[1], &cube[2]]) {
        let file = if *part == "total" { name.clone() } else { format!("{name}_{part}") };
        let g = GridFile::new(&file, "signal", "arb", axes(), GridData::Complex(data.iter().map(|z| z * k).collect()))?;
        let g = setup_attrs(g, s)
            .with_attr("signal", signal_name(signal))
            .with_attr("part", part)
            .with_attr("norm", norm)
            .with_attr("route", format!("{:?}", cfg.grid.route).to_lowercase());
        out.grid(g, &format!("{} 2D spectrum ({part})", signal_name(signal)))?;
    }
    Ok(())
}

/// Peak traces over ω₂ at the four nominal peak positions, `[peak, ω₂]`.
fn traces(ens: &Ensemble, w2: &[f64], window: Option<f64>) -> Vec<f64> {
    PEAKS
        .iter()
        .flat_map(|&p| {
            let (x, y) = peak_position(&ens.mean.basis, p);
            w2.par_iter().map(|&w| ens.map_value(x, w, y, window, None)).collect::<Vec<_>>()
        })
        .collect()
}

fn write_traces(cfg: &RunConfig, s: &Setup, ens: &Ensemble, name: &str, out: &mut Output) -> Result<()> {
    let w2 = cfg.grid.w2();
    let window = cfg.grid.window();
    let v = traces(ens, &w2, window);
    let norm = max_abs(v.iter().copied());
    let k = scale_of(norm, cfg.run.normalize);
    let labels: Vec<String> = PEAKS.iter().map(|&p| peak_name(ens.mean.signal, p)).collect();
    let g = GridFile::new(
        name,
        "beating_amplitude",
        "arb",
        vec![Axis::new("peak", "index", vec![0.0, 1.0, 2.0, 3.0]), omega("omega2", w2.clone())],
        GridData::Real(v.iter().map(|x| x * k).collect()),
    )?;
    let g = setup_attrs(g, s).with_attr("peaks", labels.join(" ")).with_attr("norm", norm);
    out.grid(g, "beating-map traces over omega2 at the four peak positions")?;
    let mut tsv = format!("omega2_cm-1\t{}\n", labels.join("\t"));
    for (i, w) in w2.iter().enumerate() {
        let row: Vec<String> = (0..4).map(|p| format!("{:.6e}", v[p * w2.len() + i] * k)).collect();
        tsv.push_str(&format!("{w}\t{}\n", row.join("\t")));
    }
    out.text(&format!("{name}.tsv"), &tsv, "beating-map traces (table)")
}

/// Pathway-resolved peak amplitudes at ω₂ = ±main beat.
fn amplitude_table(ens: &Ensemble, window: Option<f64>) -> Result<String> {
    let v = main_beat(ens)?;
    let plus = ens.peak_amplitudes(v, window);
    let minus = ens.peak_amplitudes(-v, window);
    let mut tsv = String::from("peak\tomega1_cm-1\tomega3_cm-1\tamp_plus\tamp_minus\n");
    for (i, &p) in PEAKS.iter().enumerate() {
        let (x, y) = peak_position(&ens.mean.basis, p);
        tsv.push_str(&format!("{}\t{x:.3}\t{y:.3}\t{:.6}\t{:.6}\n", peak_name(ens.mean.signal, p), plus[i], minus[i]));
    }
    tsv.push_str(&format!("# beat frequency {v:.3} cm-1\n"));
    Ok(tsv)
}

/// Beating-map slices at ω₂ = ±main beat, `[ω₂, ω₁, ω₃]`.
fn write_slices(cfg: &RunConfig, s: &Setup, ens: &Ensemble, name: &str, exponent: f64, out: &mut Output) -> Result<Vec<f64>> {
    let v = main_beat(ens)?;
    let w = cfg.grid.w();
    let w2 = vec![-v, v];
    let vals = map_cube(ens, &w, &w2, &w, cfg.grid.window());
    let norm = max_abs(vals.iter().copied());
    let k = scale_of(norm, cfg.run.normalize);
    let scaled: Vec<f64> = vals.iter().map(|x| x * k).collect();
    let g = GridFile::new(name, "beating_amplitude", "arb", vec![omega("omega2", w2), omega("omega1", w.clone()), omega("omega3", w)], GridData::Real(scaled.clone()))?;
    let g = setup_attrs(g, s)
        .with_attr("signal", signal_name(ens.mean.signal))
        .with_attr("norm", norm)
        .with_attr("display_exponent", exponent)
        .with_attr("beat_cm-1", v);
    out.grid(g, "beating-map slices at the main beat frequency")?;
    Ok(scaled)
}

fn beatmap(cfg: &RunConfig, s: &Setup, out: &mut Output, report: &mut Report) -> Result<()> {
    report.panels.push(s.describe("beatmap"));
    let window = cfg.grid.window();
    for signal in [Signal::Rephasing, Signal::NonRephasing] {
        let ens = s.ensemble(signal)?;
        collect_warnings(report, &ens.mean);
        let name = format!("beatmap_{}", signal.tag());
        if s.disordered() {
            // Full cubes of large ensembles are too costly; write the
            // slices at the main beat instead.
            write_slices(cfg, s, &ens, &name, DISPLAY_EXPONENT, out)?;
        } else {
            let (w, w2) = (cfg.grid.w(), cfg.grid.w2());
            let (values, norm) = match cfg.grid.route {
                Route::Exact => {
                    let m = beating_map(&[ens.merged()], &w, &w2, &w, window)?;
                    (m.values.iter().copied().collect::<Vec<_>>(), m.norm)
                }
                Route::Discrete => {
                    let t2 = cfg.grid.t2();
                    let comps = ens.merged();
                    let samples = Array3::from_shape_fn((t2.len(), w.len(), w.len()), |(i, j, k)| comps.value(w[j], t2[i], w[k]));
                    let raw = beating_map_discrete(samples.view(), cfg.grid.t2_step, &w2)?;
                    let norm = max_abs(raw.iter().copied());
                    let k = if norm > 0.0 { 1.0 / norm } else { 1.0 };
                    (raw.iter().map(|x| x * k).collect(), norm)
                }
            };
            let values = if cfg.run.normalize { values } else { values.iter().map(|x| x * norm).collect() };
            let g = GridFile::new(&name, "beating_amplitude", "arb", vec![omega("omega2", w2), omega("omega1", w.clone()), omega("omega3", w)], GridData::Real(values))?;
            let g = setup_attrs(g, s)
                .with_attr("signal", signal_name(signal))
                .with_attr("norm", norm)
                .with_attr("display_exponent", DISPLAY_EXPONENT)
                .with_attr("beat_cm-1", ens.mean.main_beat());
            out.grid(g, "beating map")?;
        }
        write_traces(cfg, s, &ens, &format!("{name}_traces"), out)?;
        out.text(&format!("{name}_peaks.tsv"), &amplitude_table(&ens, window)?, "pathway-resolved peak beating amplitudes")?;
    }
    Ok(())
}

fn pathway_report(s: &Setup, out: &mut Output, report: &mut Report) -> Result<()> {
    report.panels.push(s.describe("pathway-report"));
    if s.disordered() {
        report.warnings.push("pathway-report analyses the mean parameters; disorder is ignored".into());
    }
    let analysis = pathway_decomposition(&s.model()?, s.cutoff)?;
    report.warnings.extend(analysis.warnings.iter().cloned());
    out.text("pathway_report.txt", &analysis.report_text(), "eigen-analysis and pathway summary")?;
    out.text("modes.tsv", &analysis.modes_table(), "X and Y superoperator eigenvalues")?;
    out.text("pathways.tsv", &analysis.pathways_table(), "Feynman pathway amplitudes")
}

/// Spectral value of the total rephasing signal at R21 over the t₂ grid.
fn r21_transient(cfg: &RunConfig, s: &Setup, name: &str, out: &mut Output) -> Result<()> {
    let terms = s.terms(Signal::Rephasing)?;
    let (x, y) = peak_position(&s.basis(), (1, 0));
    let t2 = cfg.grid.t2();
    let v: Vec<Complex64> = t2.par_iter().map(|&t| spectrum_point(&terms, Signal::Rephasing, s.shift_sigma(), x, t, y)).collect();
    let norm = max_abs(v.iter().map(|z| z.norm()));
    let k = scale_of(norm, cfg.run.normalize);
    let g = GridFile::new(name, "signal", "arb", vec![Axis::new("t2", "fs", t2)], GridData::Complex(v.iter().map(|z| z * k).collect()))?;
    let g = setup_attrs(g, s).with_attr("omega1_point", x).with_attr("omega3_point", y).with_attr("norm", norm);
    out.grid(g, "R21 rephasing transient over t2")
}

const XI_SWEEP: [f64; 3] = [1e-3, 3.0, 1e3];

fn figure2(cfg: &RunConfig, out: &mut Output, report: &mut Report) -> Result<()> {
    let mut c = cfg.clone();
    c.grid.t2_slices = vec![0.0];
    for ratio in XI_SWEEP {
        let s = Setup::homodimer(cfg, ratio)?;
        let prefix = format!("fig2_{}", s.label);
        absorption(&c, &s, &prefix, out, report)?;
        spectra(&c, &s, Signal::Rephasing, &prefix, out, report)?;
        r21_transient(cfg, &s, &format!("{prefix}_r21_transient"), out)?;
    }
    Ok(())
}

fn figure4(cfg: &RunConfig, out: &mut Output, report: &mut Report) -> Result<()> {
    for ratio in XI_SWEEP {
        let s = Setup::homodimer(cfg, ratio)?;
        report.panels.push(s.describe("figure:4"));
        let ens = s.ensemble(Signal::Rephasing)?;
        collect_warnings(report, &ens.mean);
        let prefix = format!("fig4_{}", s.label);
        write_slices(cfg, &s, &ens, &format!("{prefix}_beatmap_R"), DISPLAY_EXPONENT, out)?;
        write_traces(cfg, &s, &ens, &format!("{prefix}_traces_R"), out)?;
        out.text(&format!("{prefix}_peaks_R.tsv"), &amplitude_table(&ens, cfg.grid.window())?, "pathway-resolved peak beating amplitudes")?;
    }
    Ok(())
}

fn figure5(cfg: &RunConfig, out: &mut Output, report: &mut Report) -> Result<()> {
    let s = Setup::homodimer(cfg, 1e-3)?;
    report.panels.push(s.describe("figure:5"));
    let ens = s.ensemble(Signal::Rephasing)?;
    let comps = ens.merged();
    let window = cfg.grid.window();
    let v = main_beat(&ens)?;
    write_slices(cfg, &s, &ens, "fig5_beatmap_R_linear", 1.0, out)?;
    let d = overlap_diagnostic(&comps, v, window);
    let basis = s.basis();
    let (e1, e2) = (basis.eps1(), basis.eps2());
    let tsv = format!(
        "point\tomega1_cm-1\tomega3_cm-1\tamplitude\nR11\t{e1:.3}\t{e1:.3}\t{:.6}\nA\t{:.3}\t{e1:.3}\t{:.6}\nB\t{e1:.3}\t{:.3}\t{:.6}\n# ratio R11/(A+B) = {:.4} at omega2 = {v:.3} cm-1\n",
        d.r11,
        2.0 * e2 - e1,
        d.a,
        2.0 * e2 - e1,
        d.b,
        d.ratio
    );
    out.text("fig5_overlap.tsv", &tsv, "R11 versus tail-overlap points A and B")?;
    // Cross-sections through R11 along ω₁ (via R21 and A) and along ω₃ (via R12 and B).
    let w = cfg.grid.w();
    let norm = PEAKS
        .iter()
        .flat_map(|&p| {
            let (x, y) = peak_position(&basis, p);
            [v, -v].map(|b| comps.map_value(x, b, y, window))
        })
        .fold(0.0, f64::max);
    for (name, along) in [("fig5_cut_omega1", true), ("fig5_cut_omega3", false)] {
        let vals: Vec<f64> = w
            .par_iter()
            .map(|&x| if along { comps.map_value(x, v, e1, window) } else { comps.map_value(e1, v, x, window) } / norm)
            .collect();
        let axis = if along { "omega1" } else { "omega3" };
        let g = GridFile::new(name, "beating_amplitude", "arb", vec![omega(axis, w.clone())], GridData::Real(vals))?;
        let g = setup_attrs(g, &s).with_attr("fixed_cm-1", e1).with_attr("omega2_cm-1", v).with_attr("norm", norm);
        out.grid(g, "beating-map cross-section through R11")?;
    }
    Ok(())
}

fn figure6(cfg: &RunConfig, out: &mut Output, report: &mut Report) -> Result<()> {
    for ratio in [1e-3, 1e3] {
        let s = Setup::heterodimer(cfg, ratio, 0.0)?;
        report.panels.push(s.describe("figure:6"));
        for signal in [Signal::Rephasing, Signal::NonRephasing] {
            let ens = s.ensemble(signal)?;
            collect_warnings(report, &ens.mean);
            let prefix = format!("fig6_{}", s.label);
            write_slices(cfg, &s, &ens, &format!("{prefix}_beatmap_{}", signal.tag()), DISPLAY_EXPONENT, out)?;
            write_traces(cfg, &s, &ens, &format!("{prefix}_traces_{}", signal.tag()), out)?;
            out.text(&format!("{prefix}_peaks_{}.tsv", signal.tag()), &amplitude_table(&ens, cfg.grid.window())?, "pathway-resolved peak beating amplitudes")?;
        }
    }
    Ok(())
}

/// Diagonal and antidiagonal FWHM of the beating-map slice at each peak.
fn width_table(ens: &Ensemble, w2: f64, window: Option<f64>) -> String {
    let f = |x: f64, y: f64| ens.map_value(x, w2, y, window, None);
    let mut tsv = String::from("peak\tcenter_omega1_cm-1\tcenter_omega3_cm-1\tdiag_fwhm_cm-1\tantidiag_fwhm_cm-1\tratio\n");
    for &p in &PEAKS {
        let c = locate_max(f, peak_position(&ens.mean.basis, p), 2.0, 0.01);
        let (d, a) = diagonal_widths(f, c, 0.5, 400.0);
        let show = |x: Option<f64>| x.map_or("nan".to_string(), |v| format!("{v:.3}"));
        let ratio = match (d, a) {
            (Some(d), Some(a)) if a > 0.0 => format!("{:.4}", d / a),
            _ => "nan".into(),
        };
        tsv.push_str(&format!("{}\t{:.3}\t{:.3}\t{}\t{}\t{ratio}\n", peak_name(ens.mean.signal, p), c.0, c.1, show(d), show(a)));
    }
    tsv.push_str(&format!("# omega2 = {w2:.3} cm-1\n"));
    tsv
}

fn figure7(cfg: &RunConfig, out: &mut Output, report: &mut Report) -> Result<()> {
    let window = cfg.grid.window();
    for (ratio, fwhm) in [(1e-3, 50.0), (1e3, 100.0)] {
        let mut s = Setup::heterodimer(cfg, ratio, fwhm)?;
        // With correlated noise the homogeneous lines are a few cm⁻¹ wide and
        // a few hundred random draws leave the map spiky; the split scheme
        // integrates the ensemble deterministically. Magnitude averaging
        // needs explicit realizations and keeps the configured scheme.
        if !s.disorder.magnitude_average {
            s.disorder.scheme = Scheme::Split;
        }
        report.panels.push(s.describe("figure:7"));
        let prefix = format!("fig7_{}", s.label);
        for signal in [Signal::Rephasing, Signal::NonRephasing] {
            let ens = s.ensemble(signal)?;
            collect_warnings(report, &ens.mean);
            let tag = signal.tag();
            write_slices(cfg, &s, &ens, &format!("{prefix}_beatmap_{tag}"), DISPLAY_EXPONENT, out)?;
            out.text(&format!("{prefix}_peaks_{tag}.tsv"), &amplitude_table(&ens, window)?, "pathway-resolved peak beating amplitudes")?;
            let v = main_beat(&ens)?;
            let w2 = if signal == Signal::Rephasing { v } else { -v };
            out.text(&format!("{prefix}_widths_{tag}.tsv"), &width_table(&ens, w2, window), "diagonal/antidiagonal peak widths of the beating-map slice")?;
        }
    }
    Ok(())
}
