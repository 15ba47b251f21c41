//! Non-backtracking closed walks.
//!
//! `Y_t` counts closed walks of length `t` that never reverse the edge just
//! traversed, the wrap-around step included, with every starting directed
//! edge counted separately. The spectral route evaluates the trace identity
//!
//! ```text
//! Y_t = 2 (d-1)^(t/2) sum_j T_t(mu_j / 2 sqrt(d-1)) + (E - V)(1 + (-1)^t)
//! ```
//!
//! over the full spectrum; depth-first enumeration is the oracle.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_ensemble::{MagneticGraph, RegularGraph};
use crate::spectral::GraphKind;

pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// Largest magnitude below which every integer is exactly representable.
const EXACT_INTEGER_LIMIT: f64 = 9_007_199_254_740_992.0;

/// Residual beyond which a rounded plain count is flagged.
pub const ROUNDING_TOLERANCE: f64 = 1e-6;

/// `(ln|T_t(x)|, sign)` for `|x| >= 1`, where `T_t(x) = (z^t + z^-t)/2`
/// with `z = |x| + sqrt(x^2 - 1)`.
pub fn ln_chebyshev_t_outside(t: u32, x: f64) -> (f64, f64) {
    let a = x.abs().acosh();
    let ta = t as f64 * a;
    let ln = ta - std::f64::consts::LN_2 + (-2.0 * ta).exp().ln_1p();
    let sign = if x < 0.0 && t % 2 == 1 { -1.0 } else { 1.0 };
    (ln, sign)
}

/// Chebyshev polynomial of the first kind. Inside `[-1, 1]` this is
/// `cos(t acos x)`; outside it may overflow to infinity.
pub fn chebyshev_t(t: u32, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (t as f64 * x.acos()).cos()
    } else {
        let (ln, sign) = ln_chebyshev_t_outside(t, x);
        sign * ln.exp()
    }
}

/// Evaluation of eigenvalues that lie outside the Kesten–McKay support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    /// Exact trace identity; outliers grow like `cosh(t acosh|x|)`.
    #[default]
    Exact,
    /// Outliers are evaluated at their clamped phase (0 or π). The trivial
    /// eigenvalue of a plain graph is always kept exact.
    Clamped,
}

fn chebyshev_mode(t: u32, x: f64, mode: CountMode) -> f64 {
    match mode {
        CountMode::Exact => chebyshev_t(t, x),
        CountMode::Clamped => chebyshev_t(t, x.clamp(-1.0, 1.0)),
    }
}

fn parity_term(vertex_count: usize, degree: usize, t: u32) -> f64 {
    if t % 2 == 1 {
        return 0.0;
    }
    let e = (vertex_count * degree / 2) as f64;
    2.0 * (e - vertex_count as f64)
}

fn check_t(t: u32) -> Result<()> {
    if t < 3 {
        return Err(Error::InvalidParameters(format!("walk length must be at least 3, got {t}")));
    }
    Ok(())
}

/// Number of non-backtracking walks of length `t` the enumeration visits.
pub fn enumeration_size(vertex_count: usize, degree: usize, t: u32) -> f64 {
    (vertex_count * degree) as f64 * ((degree - 1) as f64).powi(t as i32 - 1)
}

fn check_budget(vertex_count: usize, degree: usize, t: u32, budget: u64) -> Result<()> {
    let required = t as f64 * enumeration_size(vertex_count, degree, t);
    if required > budget as f64 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

struct Walker<'a, W, P> {
    graph: &'a RegularGraph,
    t: u32,
    weight: P,
    start: usize,
    second: usize,
    total: W,
    leaves: u64,
}

impl<W, P> Walker<'_, W, P>
where
    W: Copy + std::ops::Add<Output = W> + std::ops::Mul<Output = W>,
    P: Fn(usize, usize) -> W,
{
    fn walk(&mut self, prev: usize, here: usize, depth: u32, acc: W) {
        for &next in self.graph.neighbors(here) {
            if next == prev {
                continue;
            }
            let w = acc * (self.weight)(here, next);
            if depth + 1 == self.t {
                self.leaves += 1;
                if next == self.start && here != self.second {
                    self.total = self.total + w;
                }
            } else {
                self.walk(here, next, depth + 1, w);
            }
        }
    }
}

fn enumerate<W, P>(g: &RegularGraph, t: u32, zero: W, one: W, weight: P) -> (W, u64)
where
    W: Copy + std::ops::Add<Output = W> + std::ops::Mul<Output = W>,
    P: Fn(usize, usize) -> W,
{
    let mut walker = Walker {
        graph: g,
        t,
        weight,
        start: 0,
        second: 0,
        total: zero,
        leaves: 0,
    };
    for v0 in 0..g.vertex_count() {
        for &v1 in g.neighbors(v0) {
            walker.start = v0;
            walker.second = v1;
            let w = one * (walker.weight)(v0, v1);
            walker.walk(v0, v1, 1, w);
        }
    }
    (walker.total, walker.leaves)
}

/// Brute-force `Y_t` together with the number of enumerated walks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enumeration<W> {
    pub value: W,
    pub walks: u64,
}

pub fn count_closed_walks_bruteforce(g: &RegularGraph, t: u32, budget: u64) -> Result<Enumeration<u64>> {
    check_t(t)?;
    check_budget(g.vertex_count(), g.degree(), t, budget)?;
    let (value, walks) = enumerate(g, t, 0u64, 1u64, |_, _| 1u64);
    Ok(Enumeration { value, walks })
}

/// Phase sum `sum_alpha exp(i chi_alpha)` over the same walks.
pub fn count_closed_walks_bruteforce_magnetic(m: &MagneticGraph, t: u32, budget: u64) -> Result<Enumeration<Complex64>> {
    let g = m.base();
    check_t(t)?;
    check_budget(g.vertex_count(), g.degree(), t, budget)?;
    let factors: Vec<Vec<Complex64>> = (0..g.vertex_count())
        .map(|u| m.neighbor_phases(u).into_iter().map(|x| Complex64::from_polar(1.0, x)).collect())
        .collect();
    let weight = |u: usize, v: usize| {
        let k = g.neighbors(u).iter().position(|&w| w == v).expect("edge present");
        factors[u][k]
    };
    let one = Complex64::new(1.0, 0.0);
    let (value, walks) = enumerate(g, t, Complex64::new(0.0, 0.0), one, weight);
    Ok(Enumeration { value, walks })
}

/// `Y_t` from the full spectrum (all `V` eigenvalues).
pub fn count_closed_walks_spectral(eigenvalues: &[f64], vertex_count: usize, degree: usize, t: u32) -> Result<f64> {
    check_t(t)?;
    if degree < 3 {
        return Err(Error::InvalidParameters(format!("degree must be at least 3, got {degree}")));
    }
    if eigenvalues.len() != vertex_count {
        return Err(Error::DimensionMismatch {
            expected: vertex_count,
            got: eigenvalues.len(),
        });
    }
    let q = ((degree - 1) as f64).sqrt();
    let sum: f64 = eigenvalues.iter().map(|&mu| chebyshev_t(t, mu / (2.0 * q))).sum();
    Ok(2.0 * q.powi(t as i32) * sum + parity_term(vertex_count, degree, t))
}

/// Reduced deviation `y_t`: `(Y_t - (d-1)^t) / (V (d-1)^(t/2))` for plain
/// graphs and `Y_t / (V (d-1)^(t/2))` for magnetic ones.
pub fn reduced_coefficient(big_y: f64, vertex_count: usize, degree: usize, t: u32, kind: GraphKind) -> f64 {
    let q = ((degree - 1) as f64).sqrt();
    let scale = vertex_count as f64 * q.powi(t as i32);
    match kind {
        GraphKind::Plain => (big_y - ((degree - 1) as f64).powi(t as i32)) / scale,
        GraphKind::Magnetic => big_y / scale,
    }
}

/// Walk counts of one graph for `t = t_min..=t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkCounts {
    pub graph_id: usize,
    pub kind: GraphKind,
    pub vertex_count: usize,
    pub degree: usize,
    pub mode: CountMode,
    pub t_min: u32,
    /// `Y_t`; plain counts are rounded while exactly representable.
    pub counts: Vec<f64>,
    /// `y_t`, evaluated directly in scaled form.
    pub reduced: Vec<f64>,
    /// Lengths whose plain count missed an integer by more than the tolerance.
    pub flagged: Vec<u32>,
}

impl WalkCounts {
    /// Plain counts from the `V - 1` retained eigenvalues; the trivial
    /// eigenvalue `d` contributes `(d-1)^t + 1` analytically.
    pub fn from_plain_spectrum(
        graph_id: usize,
        retained: &[f64],
        vertex_count: usize,
        degree: usize,
        t_min: u32,
        t_max: u32,
        mode: CountMode,
    ) -> Result<Self> {
        if retained.len() + 1 != vertex_count {
            return Err(Error::DimensionMismatch {
                expected: vertex_count - 1,
                got: retained.len(),
            });
        }
        Self::build(graph_id, GraphKind::Plain, retained, vertex_count, degree, t_min, t_max, mode)
    }

    /// Magnetic counts from all `V` eigenvalues.
    pub fn from_magnetic_spectrum(
        graph_id: usize,
        eigenvalues: &[f64],
        vertex_count: usize,
        degree: usize,
        t_min: u32,
        t_max: u32,
        mode: CountMode,
    ) -> Result<Self> {
        if eigenvalues.len() != vertex_count {
            return Err(Error::DimensionMismatch {
                expected: vertex_count,
                got: eigenvalues.len(),
            });
        }
        Self::build(graph_id, GraphKind::Magnetic, eigenvalues, vertex_count, degree, t_min, t_max, mode)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        graph_id: usize,
        kind: GraphKind,
        eigenvalues: &[f64],
        vertex_count: usize,
        degree: usize,
        t_min: u32,
        t_max: u32,
        mode: CountMode,
    ) -> Result<Self> {
        check_t(t_min)?;
        if t_max < t_min {
            return Err(Error::InvalidParameters(format!("t_max {t_max} below t_min {t_min}")));
        }
        if degree < 3 {
            return Err(Error::InvalidParameters(format!("degree must be at least 3, got {degree}")));
        }
        let q = ((degree - 1) as f64).sqrt();
        let xs: Vec<f64> = eigenvalues.iter().map(|&mu| mu / (2.0 * q)).collect();
        let phases: Vec<Option<f64>> = xs.iter().map(|&x| (x.abs() <= 1.0).then(|| x.acos())).collect();
        let v = vertex_count as f64;
        let n = (t_max - t_min + 1) as usize;
        let mut counts = Vec::with_capacity(n);
        let mut reduced = Vec::with_capacity(n);
        let mut flagged = Vec::new();
        for t in t_min..=t_max {
            let tf = t as f64;
            let sum: f64 = xs
                .iter()
                .zip(&phases)
                .map(|(&x, phi)| match phi {
                    Some(p) => (tf * p).cos(),
                    None => chebyshev_mode(t, x, mode),
                })
                .sum();
            let parity = parity_term(vertex_count, degree, t);
            let q_t = q.powi(t as i32);
            let inv_q_t = (-tf * q.ln()).exp();
            match kind {
                GraphKind::Plain => {
                    let mut big_y = ((degree - 1) as f64).powi(t as i32) + 1.0 + 2.0 * q_t * sum + parity;
                    if big_y.abs() < EXACT_INTEGER_LIMIT {
                        let r = big_y.round();
                        if (big_y - r).abs() > ROUNDING_TOLERANCE {
                            flagged.push(t);
                        }
                        big_y = r;
                    }
                    counts.push(big_y);
                    reduced.push((2.0 * sum + (1.0 + parity) * inv_q_t) / v);
                }
                GraphKind::Magnetic => {
                    counts.push(2.0 * q_t * sum + parity);
                    reduced.push((2.0 * sum + parity * inv_q_t) / v);
                }
            }
        }
        Ok(Self {
            graph_id,
            kind,
            vertex_count,
            degree,
            mode,
            t_min,
            counts,
            reduced,
            flagged,
        })
    }

    /// Wraps externally computed counts (for example from enumeration).
    pub fn from_counts(
        graph_id: usize,
        kind: GraphKind,
        vertex_count: usize,
        degree: usize,
        t_min: u32,
        counts: Vec<f64>,
    ) -> Result<Self> {
        check_t(t_min)?;
        let reduced = counts
            .iter()
            .enumerate()
            .map(|(i, &y)| reduced_coefficient(y, vertex_count, degree, t_min + i as u32, kind))
            .collect();
        Ok(Self {
            graph_id,
            kind,
            vertex_count,
            degree,
            mode: CountMode::Exact,
            t_min,
            counts,
            reduced,
            flagged: Vec::new(),
        })
    }

    pub fn t_max(&self) -> u32 {
        self.t_min + self.counts.len() as u32 - 1
    }

    fn index(&self, t: u32) -> Option<usize> {
        (t >= self.t_min && t <= self.t_max()).then(|| (t - self.t_min) as usize)
    }

    pub fn count(&self, t: u32) -> Option<f64> {
        self.index(t).map(|i| self.counts[i])
    }

    pub fn reduced(&self, t: u32) -> Option<f64> {
        self.index(t).map(|i| self.reduced[i])
    }

    /// `C_t = Y_t / 2t`; plain graphs only.
    pub fn cycles(&self, t: u32) -> Option<f64> {
        match self.kind {
            GraphKind::Plain => self.count(t).map(|y| y / (2.0 * t as f64)),
            GraphKind::Magnetic => None,
        }
    }

    pub fn write_csv_rows(&self, out: &mut String) {
        for (i, (big_y, y)) in self.counts.iter().zip(&self.reduced).enumerate() {
            let t = self.t_min + i as u32;
            let c = match self.kind {
                GraphKind::Plain => format!("{:.17e}", big_y / (2.0 * t as f64)),
                GraphKind::Magnetic => String::new(),
            };
            writeln!(out, "{},{},{:.17e},{:.17e},{}", self.graph_id, t, big_y, y, c).unwrap();
        }
    }
}

pub const WALKS_CSV_HEADER: &str = "graph_id,t,Y_t,y_t,C_t";

pub fn walks_csv<'a>(counts: impl IntoIterator<Item = &'a WalkCounts>) -> String {
    let mut out = String::new();
    writeln!(out, "{WALKS_CSV_HEADER}").unwrap();
    for c in counts {
        c.write_csv_rows(&mut out);
    }
    out
}

/// A ratio `A s^2 / (c + B m)` of sample variance to (shifted) sample mean,
/// with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub mean: f64,
    pub variance: f64,
    pub ratio: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn variance_ratio(samples: &[f64], a: f64, c: f64, b: f64) -> Result<RatioEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let e = x - mean;
        let e2 = e * e;
        m2 += e2;
        m3 += e2 * e;
        m4 += e2 * e2;
    }
    let variance = m2 / (nf - 1.0);
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let den = c + b * mean;
    let ratio = a * variance / den;
    let g_var = a / den;
    let g_mean = -a * variance * b / (den * den);
    let var_var = (m4 - m2 * m2).max(0.0) / nf;
    let var_mean = variance / nf;
    let cov = m3 / nf;
    let se2 = g_var * g_var * var_var + g_mean * g_mean * var_mean + 2.0 * g_var * g_mean * cov;
    Ok(RatioEstimate {
        mean,
        variance,
        ratio,
        stderr: se2.max(0.0).sqrt(),
        n,
    })
}

/// Ensemble statistics of `C_t` at one length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleStatistics {
    pub t: u32,
    pub mean: f64,
    pub variance: f64,
    pub var_over_mean: f64,
    pub var_over_mean_stderr: f64,
    /// Asymptotic mean `(d-1)^t / 2t`.
    pub expected_mean: f64,
    pub n: usize,
}

pub fn expected_cycle_mean(degree: usize, t: u32) -> f64 {
    ((degree - 1) as f64).powi(t as i32) / (2.0 * t as f64)
}

pub fn cycle_statistics(counts: &[WalkCounts], t: u32) -> Result<CycleStatistics> {
    if counts.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: counts.len(),
        });
    }
    let samples = counts
        .iter()
        .map(|c| {
            c.cycles(t).ok_or_else(|| {
                Error::InvalidParameters(format!("graph {} has no plain cycle count at t={t}", c.graph_id))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let r = variance_ratio(&samples, 1.0, 0.0, 1.0)?;
    Ok(CycleStatistics {
        t,
        mean: r.mean,
        variance: r.variance,
        var_over_mean: r.ratio,
        var_over_mean_stderr: r.stderr,
        expected_mean: expected_cycle_mean(counts[0].degree, t),
        n: r.n,
    })
}

/// `tau var(C_t) / <C_t>` evaluated from the reduced coefficients, which stays
/// finite long after `C_t` itself overflows:
/// `(V/2) var(y) / (1 + V (d-1)^(-t/2) <y>)`.
pub fn scaled_cycle_ratio(counts: &[WalkCounts], t: u32) -> Result<RatioEstimate> {
    let first = counts.first().ok_or(Error::EmptyEnsemble)?;
    let samples = counts
        .iter()
        .map(|c| {
            if c.kind != GraphKind::Plain {
                return Err(Error::InvalidParameters("cycle ratio needs plain counts".into()));
            }
            c.reduced(t)
                .ok_or_else(|| Error::InvalidParameters(format!("graph {} has no count at t={t}", c.graph_id)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let v = first.vertex_count as f64;
    let inv_q_t = (-(t as f64) * 0.5 * ((first.degree - 1) as f64).ln()).exp();
    variance_ratio(&samples, 0.5 * v, 1.0, v * inv_q_t)
}
