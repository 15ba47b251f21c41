//! Ensemble estimators: spacing distribution, form factors and data collapse.
//!
//! Ensemble averages are reduced in graph order, so results do not depend on
//! how per-graph work was scheduled.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nb_walks::{scaled_cycle_ratio, WalkCounts};
use crate::rmt::{expansion_f1, expansion_f2};
use crate::spectral::GraphKind;

pub const DEFAULT_BIN_WIDTH: f64 = 0.05;
pub const DEFAULT_SPACING_MAX: f64 = 4.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub vertex_count: usize,
    pub degree: usize,
    pub kind: Option<GraphKind>,
    pub ensemble_size: usize,
    /// Number of consecutive integer `t` averaged into each point.
    pub window: Option<usize>,
    pub level_count: Option<usize>,
    pub connected: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// A sampled curve `x -> estimate ± stderr` with per-point sample counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub label: String,
    pub x: Vec<f64>,
    pub estimate: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: Vec<usize>,
    pub metadata: CurveMetadata,
}

impl CurveSeries {
    pub fn new(label: impl Into<String>, metadata: CurveMetadata) -> Self {
        Self {
            label: label.into(),
            x: Vec::new(),
            estimate: Vec::new(),
            stderr: Vec::new(),
            n: Vec::new(),
            metadata,
        }
    }

    pub fn push(&mut self, x: f64, estimate: f64, stderr: f64, n: usize) {
        self.x.push(x);
        self.estimate.push(estimate);
        self.stderr.push(stderr);
        self.n.push(n);
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Finite estimates, non-negative errors, strictly increasing `x`.
    pub fn check(&self) -> Result<()> {
        for (i, (&x, (&e, &s))) in self.x.iter().zip(self.estimate.iter().zip(&self.stderr)).enumerate() {
            if !e.is_finite() {
                return Err(Error::NonFinite { x });
            }
            if !(s >= 0.0) {
                return Err(Error::NonFinite { x });
            }
            if i > 0 && x <= self.x[i - 1] {
                return Err(Error::InvalidParameters(format!("x not increasing at index {i}")));
            }
        }
        Ok(())
    }

    /// Points with `lo <= x <= hi`.
    pub fn restrict(&self, lo: f64, hi: f64) -> CurveSeries {
        let mut out = CurveSeries::new(self.label.clone(), self.metadata.clone());
        for i in 0..self.len() {
            if self.x[i] >= lo && self.x[i] <= hi {
                out.push(self.x[i], self.estimate[i], self.stderr[i], self.n[i]);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,estimate,stderr,n\n");
        for i in 0..self.len() {
            writeln!(out, "{:.12e},{:.12e},{:.12e},{}", self.x[i], self.estimate[i], self.stderr[i], self.n[i]).unwrap();
        }
        out
    }

    pub fn metadata_json(&self) -> String {
        let v = serde_json::json!({ "label": self.label, "points": self.len(), "metadata": self.metadata });
        serde_json::to_string_pretty(&v).expect("metadata serialises")
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Circular nearest-neighbour spacings `(N/2π)(theta_j - theta_{j-1})` of a
/// sorted spectrum of `N` phases, closing with `theta_0 = theta_N - 2π`.
pub fn circular_spacings(theta: &[f64]) -> Vec<f64> {
    let n = theta.len();
    if n == 0 {
        return Vec::new();
    }
    let scale = n as f64 / TAU;
    let mut out = Vec::with_capacity(n);
    out.push(scale * (theta[0] - (theta[n - 1] - TAU)));
    out.extend(theta.windows(2).map(|w| scale * (w[1] - w[0])));
    out
}

/// Pooled spacing histogram on `[0, s_max]`, normalised as a density over
/// all pooled spacings (those beyond `s_max` are counted in metadata).
pub fn spacing_distribution(spectra: &[Vec<f64>], bin_width: f64, s_max: f64) -> Result<CurveSeries> {
    if spectra.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(bin_width > 0.0) || !(s_max > bin_width) {
        return Err(Error::InvalidParameters(format!("bad histogram layout: width {bin_width}, max {s_max}")));
    }
    let bins = (s_max / bin_width).round() as usize;
    let mut counts = vec![0usize; bins];
    let mut total = 0usize;
    let mut overflow = 0usize;
    let mut sum = 0.0;
    for theta in spectra {
        for s in circular_spacings(theta) {
            total += 1;
            sum += s;
            let b = (s / bin_width).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[b as usize] += 1;
            } else {
                overflow += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let mut meta = CurveMetadata {
        ensemble_size: spectra.len(),
        level_count: Some(spectra[0].len()),
        ..Default::default()
    };
    meta.extra.insert("bin_width".into(), bin_width.into());
    meta.extra.insert("overflow".into(), overflow.into());
    meta.extra.insert("mean_spacing".into(), (sum / total as f64).into());
    let norm = total as f64 * bin_width;
    let mut curve = CurveSeries::new("P(s)", meta);
    for (i, &c) in counts.iter().enumerate() {
        curve.push((i as f64 + 0.5) * bin_width, c as f64 / norm, (c as f64).sqrt() / norm, c);
    }
    Ok(curve)
}

/// Largest absolute difference between a histogram and a density sampled at
/// the bin centres.
pub fn sup_distance(curve: &CurveSeries, density: impl Fn(f64) -> f64) -> f64 {
    curve
        .x
        .iter()
        .zip(&curve.estimate)
        .map(|(&x, &e)| (e - density(x)).abs())
        .fold(0.0, f64::max)
}

/// How `t` values are grouped and how the ensemble mean is treated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormFactorOptions {
    pub t_min: u32,
    pub t_max: u32,
    /// Consecutive integer `t` averaged into one point.
    pub window: usize,
    /// Subtract the ensemble mean before squaring.
    pub connected: bool,
}

/// `max(1, ceil(0.01 V))`.
pub fn default_window(vertex_count: usize) -> usize {
    vertex_count.div_ceil(100).max(1)
}

impl FormFactorOptions {
    pub fn new(t_min: u32, t_max: u32, vertex_count: usize) -> Self {
        Self {
            t_min,
            t_max,
            window: default_window(vertex_count),
            connected: true,
        }
    }

    fn check(&self) -> Result<()> {
        if self.t_min == 0 || self.t_max < self.t_min || self.window == 0 {
            return Err(Error::InvalidParameters(format!(
                "bad t grid: {}..={} window {}",
                self.t_min, self.t_max, self.window
            )));
        }
        Ok(())
    }

    fn windows(&self) -> Vec<(u32, u32)> {
        let w = self.window as u32;
        let mut out = Vec::new();
        let mut lo = self.t_min;
        while lo <= self.t_max {
            let hi = (lo + w - 1).min(self.t_max);
            out.push((lo, hi));
            lo = hi + 1;
        }
        out
    }
}

/// Reduces per-graph values `v[g][t]` (real or complex, one row per graph) to
/// windowed `scale * <|v - <v>|^2>` with standard errors over graphs.
fn windowed_variance<F>(
    label: &str,
    samples: &[Vec<Complex64>],
    opts: &FormFactorOptions,
    vertex_count: usize,
    scale: f64,
    meta: CurveMetadata,
    mut point: F,
) -> CurveSeries
where
    F: FnMut(&Complex64) -> f64,
{
    let n = samples.len();
    let nf = n as f64;
    let mut meta = meta;
    meta.window = Some(opts.window);
    meta.connected = Some(opts.connected);
    meta.ensemble_size = n;
    if opts.connected && n < 2 {
        meta.flags
            .push("single-graph ensemble: connected estimator is identically zero".into());
    }
    let bessel = if n > 1 { nf / (nf - 1.0) } else { 0.0 };
    let mut curve = CurveSeries::new(label, meta);
    let mut per_graph = vec![0.0; n];
    for (lo, hi) in opts.windows() {
        per_graph.iter_mut().for_each(|v| *v = 0.0);
        for t in lo..=hi {
            let i = (t - opts.t_min) as usize;
            let mean = if opts.connected {
                samples.iter().map(|row| row[i]).sum::<Complex64>() / nf
            } else {
                Complex64::new(0.0, 0.0)
            };
            for (acc, row) in per_graph.iter_mut().zip(samples) {
                let dev = row[i] - mean;
                *acc += point(&dev);
            }
        }
        let len = (hi - lo + 1) as f64;
        let factor = scale * if opts.connected { bessel } else { 1.0 } / len;
        let values: Vec<f64> = per_graph.iter().map(|v| v * factor).collect();
        let (mean, se) = mean_and_stderr(&values);
        let x = 0.5 * (lo + hi) as f64 / vertex_count as f64;
        curve.push(x, mean, se, n);
    }
    curve
}

fn phase_sums(phases: &[f64], opts: &FormFactorOptions, real_only: bool) -> Vec<Complex64> {
    let mut out = Vec::with_capacity((opts.t_max - opts.t_min + 1) as usize);
    // Phasors advanced by repeated multiplication, re-seeded periodically.
    const RESEED: u32 = 256;
    let base: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
    let mut current: Vec<Complex64> = Vec::new();
    for t in opts.t_min..=opts.t_max {
        if current.is_empty() || (t - opts.t_min).is_multiple_of(RESEED) {
            current = phases.iter().map(|&p| Complex64::from_polar(1.0, t as f64 * p)).collect();
        } else {
            current.iter_mut().zip(&base).for_each(|(c, b)| *c *= b);
        }
        let s: Complex64 = current.iter().sum();
        out.push(if real_only { Complex64::new(s.re, 0.0) } else { s });
    }
    out
}

fn ensemble_meta(vertex_count: usize, degree: usize, kind: Option<GraphKind>, levels: usize) -> CurveMetadata {
    CurveMetadata {
        vertex_count,
        degree,
        kind,
        level_count: Some(levels),
        ..Default::default()
    }
}

/// Unfolded form factor `K_V(t) = (1/N) <|sum_j exp(i t theta_j) - mean|^2>`
/// at `tau = t/V`, where `N` is the number of levels per spectrum.
pub fn form_factor_unfolded(
    spectra: &[Vec<f64>],
    vertex_count: usize,
    degree: usize,
    kind: Option<GraphKind>,
    opts: &FormFactorOptions,
) -> Result<CurveSeries> {
    opts.check()?;
    let first = spectra.first().ok_or(Error::EmptyEnsemble)?;
    let levels = first.len();
    let samples: Vec<Vec<Complex64>> = spectra.iter().map(|p| phase_sums(p, opts, false)).collect();
    Ok(windowed_variance(
        "K",
        &samples,
        opts,
        vertex_count,
        1.0 / levels as f64,
        ensemble_meta(vertex_count, degree, kind, levels),
        |z| z.norm_sqr(),
    ))
}

/// Raw form factors from eigenphases `phi_j`: the cosine form
/// `(2/V) var(sum_j cos t phi_j)` and, as a diagnostic, the complex form
/// `(1/V) <|sum_j exp(i t phi_j) - mean|^2>`.
pub fn form_factor_raw(
    phases: &[Vec<f64>],
    vertex_count: usize,
    degree: usize,
    kind: Option<GraphKind>,
    opts: &FormFactorOptions,
) -> Result<(CurveSeries, CurveSeries)> {
    opts.check()?;
    let first = phases.first().ok_or(Error::EmptyEnsemble)?;
    let meta = ensemble_meta(vertex_count, degree, kind, first.len());
    let samples: Vec<Vec<Complex64>> = phases.iter().map(|p| phase_sums(p, opts, false)).collect();
    let v = vertex_count as f64;
    let cos = windowed_variance("Ktilde", &samples, opts, vertex_count, 2.0 / v, meta.clone(), |z| z.re * z.re);
    let complex = windowed_variance("Ktilde_complex", &samples, opts, vertex_count, 1.0 / v, meta, |z| z.norm_sqr());
    Ok((cos, complex))
}

/// Walk-based raw form factor `(V/2) <y_t^2>` and, for plain ensembles, the
/// series `var(C_t) / <C_t>`.
pub fn form_factor_from_walks(counts: &[WalkCounts], opts: &FormFactorOptions) -> Result<(CurveSeries, Option<CurveSeries>)> {
    opts.check()?;
    if counts.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: counts.len(),
        });
    }
    let first = &counts[0];
    let samples = counts
        .iter()
        .map(|c| {
            (opts.t_min..=opts.t_max)
                .map(|t| {
                    c.reduced(t)
                        .map(|y| Complex64::new(y, 0.0))
                        .ok_or_else(|| Error::InvalidParameters(format!("graph {} lacks t={t}", c.graph_id)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let v = first.vertex_count;
    let mut meta = ensemble_meta(v, first.degree, Some(first.kind), v);
    meta.extra
        .insert("count_mode".into(), serde_json::to_value(first.mode).expect("serialises"));
    let flagged: usize = counts.iter().map(|c| c.flagged.len()).sum();
    if flagged > 0 {
        meta.flags.push(format!("{flagged} plain counts missed an integer by more than 1e-6"));
    }
    let mut mean_y = CurveSeries::new("mean_y", meta.clone());
    for (lo, hi) in opts.windows() {
        let vals: Vec<f64> = samples
            .iter()
            .map(|row| (lo..=hi).map(|t| row[(t - opts.t_min) as usize].re).sum::<f64>() / (hi - lo + 1) as f64)
            .collect();
        let (m, se) = mean_and_stderr(&vals);
        mean_y.push(0.5 * (lo + hi) as f64 / v as f64, m, se, vals.len());
    }
    meta.extra.insert(
        "max_abs_mean_y".into(),
        mean_y.estimate.iter().fold(0.0f64, |a, b| a.max(b.abs())).into(),
    );
    let kt = windowed_variance("Ktilde_walks", &samples, opts, v, 0.5 * v as f64, meta.clone(), |z| z.re * z.re);

    let ratio = if first.kind == GraphKind::Plain {
        let mut curve = CurveSeries::new("var_over_mean", meta);
        curve.metadata.window = Some(opts.window);
        curve.metadata.ensemble_size = counts.len();
        for (lo, hi) in opts.windows() {
            let mut sum = 0.0;
            let mut se = 0.0;
            for t in lo..=hi {
                let r = scaled_cycle_ratio(counts, t)?;
                let tau = t as f64 / v as f64;
                sum += r.ratio / tau;
                se += r.stderr / tau;
            }
            let len = (hi - lo + 1) as f64;
            curve.push(0.5 * (lo + hi) as f64 / v as f64, sum / len, se / len, counts.len());
        }
        Some(curve)
    } else {
        None
    };
    Ok((kt, ratio))
}

/// Rescales `K~` by its predicted small-`tau` behaviour:
/// `(K~ - tau) / f2(d)` for plain and `(K~ - tau/2) / f1(d)` for magnetic.
pub fn data_collapse(series: &CurveSeries, degree: usize, kind: GraphKind) -> Result<CurveSeries> {
    let (slope, coeff) = match kind {
        GraphKind::Plain => (1.0, expansion_f2(degree)?),
        GraphKind::Magnetic => (0.5, expansion_f1(degree)?),
    };
    let mut meta = series.metadata.clone();
    meta.extra.insert("collapse_coefficient".into(), coeff.into());
    let mut out = CurveSeries::new(format!("{}_collapsed", series.label), meta);
    for i in 0..series.len() {
        let x = series.x[i];
        out.push(x, (series.estimate[i] - slope * x) / coeff, series.stderr[i] / coeff.abs(), series.n[i]);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Least-squares slope of `estimate = slope * x` over `lo <= x <= hi`.
pub fn slope_through_origin(series: &CurveSeries, lo: f64, hi: f64) -> Result<SlopeFit> {
    let part = series.restrict(lo, hi);
    let m = part.len();
    if m < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: m });
    }
    let sxx: f64 = part.x.iter().map(|x| x * x).sum();
    let sxy: f64 = part.x.iter().zip(&part.estimate).map(|(x, y)| x * y).sum();
    let slope = sxy / sxx;
    let rss: f64 = part.x.iter().zip(&part.estimate).map(|(x, y)| (y - slope * x).powi(2)).sum();
    Ok(SlopeFit {
        slope,
        stderr: (rss / (m as f64 - 1.0) / sxx).sqrt(),
        points: m,
    })
}
