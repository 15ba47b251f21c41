//! Adjacency spectra, the Kesten–McKay density and the unfolding map.
//!
//! Eigenvalues `mu` are mapped to phases `phi = arccos(mu / 2sqrt(d-1))` on
//! `[0, π]` and then unfolded through the mean counting function to
//! `theta = 2π N_KM(phi) / V`, which is uniform on the circle. The inverse
//! of that map is `S(theta)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_ensemble::{validate, MagneticGraph, RegularGraph};
use crate::quad::gauss_kronrod_15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Plain,
    Magnetic,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Plain => "plain",
            GraphKind::Magnetic => "magnetic",
        }
    }
}

fn check_degree(d: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::InvalidParameters(format!("degree must be at least 3, got {d}")));
    }
    Ok(())
}

fn sorted_eigenvalues(values: impl IntoIterator<Item = f64>) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::SolverFailure("non-finite eigenvalue".into()));
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// All `V` eigenvalues of the adjacency matrix, ascending.
pub fn eigenvalues_full(g: &RegularGraph) -> Result<Vec<f64>> {
    sorted_eigenvalues(g.adjacency_matrix().symmetric_eigenvalues().iter().copied())
}

/// The `V - 1` eigenvalues left after removing the single largest one.
pub fn eigenvalues_plain(g: &RegularGraph) -> Result<Vec<f64>> {
    let mut all = eigenvalues_full(g)?;
    all.pop();
    Ok(all)
}

/// All `V` eigenvalues of the Hermitian magnetic adjacency matrix, ascending.
pub fn eigenvalues_magnetic(m: &MagneticGraph) -> Result<Vec<f64>> {
    sorted_eigenvalues(m.hermitian_matrix().symmetric_eigenvalues().iter().copied())
}

/// Kesten–McKay density in the eigenvalue variable; zero outside
/// `|mu| <= 2 sqrt(d-1)`.
pub fn km_density(mu: f64, d: usize) -> f64 {
    let d = d as f64;
    if mu.abs() >= 2.0 * (d - 1.0).sqrt() {
        return 0.0;
    }
    d / TAU * (4.0 * (d - 1.0) - mu * mu).sqrt() / (d * d - mu * mu)
}

/// Kesten–McKay density on the circle, `phi` in `[0, π]`.
pub fn km_density_phi(phi: f64, d: usize) -> f64 {
    let d = d as f64;
    let s = phi.sin();
    let c = phi.cos();
    2.0 * (d - 1.0) / (PI * d) * s * s / (1.0 - 4.0 * (d - 1.0) / (d * d) * c * c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub phi: f64,
    /// The eigenvalue lay outside the Kesten–McKay support.
    pub clamped: bool,
}

pub fn to_phase(mu: f64, d: usize) -> Phase {
    let x = mu / (2.0 * ((d - 1) as f64).sqrt());
    let clamped = !(-1.0..=1.0).contains(&x);
    Phase {
        phi: x.clamp(-1.0, 1.0).acos(),
        clamped,
    }
}

// Below this phase the closed form loses relative accuracy to cancellation
// (N ~ phi^3); integrate the density directly instead.
const SMALL_PHI: f64 = 0.25;

/// `N_KM(phi) / V`, the Kesten–McKay mass of `[0, phi]`.
fn counting_fraction(phi: f64, d: usize) -> f64 {
    if phi <= 0.0 {
        return 0.0;
    }
    if phi < SMALL_PHI {
        return gauss_kronrod_15(&|x| km_density_phi(x, d), 0.0, phi).0;
    }
    let df = d as f64;
    let a = df / (df - 2.0);
    // Continuous branch of arctan(a tan(phi)): +π past the pole at π/2.
    let branch = if phi == FRAC_PI_2 {
        FRAC_PI_2
    } else if phi > FRAC_PI_2 {
        (a * phi.tan()).atan() + PI
    } else {
        (a * phi.tan()).atan()
    };
    df / TAU * (phi - (df - 2.0) / df * branch)
}

/// Mean spectral counting function `N_KM(phi)` for `V` levels.
pub fn counting_function(phi: f64, d: usize, vertex_count: usize) -> Result<f64> {
    check_degree(d)?;
    if !(0.0..=PI).contains(&phi) {
        return Err(Error::Domain {
            value: phi,
            domain: "[0, π]",
        });
    }
    Ok(vertex_count as f64 * counting_fraction(phi, d))
}

/// `D = d(d-1)/(d-2)^2`, the coefficient of the cubic edge behaviour of `N_KM`.
pub fn edge_coefficient(d: usize) -> f64 {
    let d = d as f64;
    d * (d - 1.0) / ((d - 2.0) * (d - 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InverseMode {
    /// Closed-form second-order Newton–Raphson iterate seeded at the edge asymptote.
    Newton2,
    /// Safeguarded Newton/bisection to residual below 1e-12.
    #[default]
    Exact,
}

pub const MAX_INVERSE_ITERATIONS: usize = 200;

/// The unfolding map for degree `d` and `level_count` levels.
///
/// `theta = 2π N_KM(phi) / V` does not depend on `V`; the level count only
/// enters [`UnfoldingMap::counting`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnfoldingMap {
    degree: usize,
    level_count: usize,
}

impl UnfoldingMap {
    pub fn new(degree: usize, level_count: usize) -> Result<Self> {
        check_degree(degree)?;
        if level_count == 0 {
            return Err(Error::InvalidParameters("level count must be positive".into()));
        }
        Ok(Self { degree, level_count })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn level_count(&self) -> usize {
        self.level_count
    }

    pub fn edge_coefficient(&self) -> f64 {
        edge_coefficient(self.degree)
    }

    pub fn counting(&self, phi: f64) -> Result<f64> {
        counting_function(phi, self.degree, self.level_count)
    }

    /// Unfolded phase in `[0, 2π]` (not wrapped).
    pub fn theta(&self, phi: f64) -> Result<f64> {
        if !(0.0..=PI).contains(&phi) {
            return Err(Error::Domain {
                value: phi,
                domain: "[0, π]",
            });
        }
        Ok((TAU * counting_fraction(phi, self.degree)).clamp(0.0, TAU))
    }

    /// `d theta / d phi = 2π rho_KM(phi)`.
    pub fn theta_prime(&self, phi: f64) -> f64 {
        TAU * km_density_phi(phi, self.degree)
    }

    pub fn inverse(&self, theta: f64, mode: InverseMode) -> Result<f64> {
        match mode {
            InverseMode::Exact => self.s_exact(theta),
            InverseMode::Newton2 => self.s_newton2(theta),
        }
    }

    /// Folds `theta` in `[0, 2π]` onto `[0, π]`; `true` if it was reflected.
    fn fold(theta: f64) -> Result<(f64, bool)> {
        if !(0.0..=TAU).contains(&theta) {
            return Err(Error::Domain {
                value: theta,
                domain: "[0, 2π]",
            });
        }
        Ok(if theta > PI { (TAU - theta, true) } else { (theta, false) })
    }

    /// `S(theta)`, inverting `theta(phi)` to a residual below 1e-12.
    pub fn s_exact(&self, theta: f64) -> Result<f64> {
        let (th, reflected) = Self::fold(theta)?;
        let phi = self.solve_half(th)?;
        Ok(if reflected { PI - phi } else { phi })
    }

    fn solve_half(&self, target: f64) -> Result<f64> {
        if target == 0.0 {
            return Ok(0.0);
        }
        if target == PI {
            return Ok(FRAC_PI_2);
        }
        let (mut lo, mut hi) = (0.0, FRAC_PI_2);
        let mut phi = self.s0(target).clamp(lo, hi);
        if phi <= lo || phi >= hi {
            phi = 0.5 * (lo + hi);
        }
        let tol = (8.0 * f64::EPSILON * target).min(1e-12);
        for _ in 0..MAX_INVERSE_ITERATIONS {
            let residual = TAU * counting_fraction(phi, self.degree) - target;
            if residual.abs() < tol {
                return Ok(phi);
            }
            if residual > 0.0 {
                hi = phi;
            } else {
                lo = phi;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(phi);
            }
            let slope = self.theta_prime(phi);
            let step = phi - residual / slope;
            phi = if slope > 0.0 && step > lo && step < hi {
                step
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(Error::NonConvergence {
            iterations: MAX_INVERSE_ITERATIONS,
        })
    }

    /// Closed-form second-order iterate
    /// `S0 + (2θ - 2d S0 + 2(d-2) atan(d tan S0/(d-2))) (d^2 + (d-2)^2 cot^2 S0) / (8d(d-1))`.
    pub fn s_newton2(&self, theta: f64) -> Result<f64> {
        let (th, reflected) = Self::fold(theta)?;
        let phi = if th == 0.0 {
            0.0
        } else {
            let d = self.degree as f64;
            let s0 = self.s0(th);
            let cot = 1.0 / s0.tan();
            let defect = 2.0 * th - 2.0 * d * s0 + 2.0 * (d - 2.0) * (d * s0.tan() / (d - 2.0)).atan();
            s0 + defect * (d * d + (d - 2.0) * (d - 2.0) * cot * cot) / (8.0 * d * (d - 1.0))
        };
        Ok(if reflected { PI - phi } else { phi })
    }

    /// `S'(theta) = 1 / (2π rho_KM(S(theta)))`; `+inf` at `theta` in `{0, 2π}`.
    pub fn s_prime(&self, theta: f64) -> Result<f64> {
        let phi = self.s_exact(theta)?;
        Ok(1.0 / self.theta_prime(phi))
    }

    /// Lower bound of `S'`, attained at `theta = π`.
    pub fn min_s_prime(&self) -> f64 {
        let d = self.degree as f64;
        d / (4.0 * (d - 1.0))
    }

    /// Edge asymptote `S0(theta) = (3 theta / 4D)^(1/3)`.
    pub fn s0(&self, theta: f64) -> f64 {
        (3.0 * theta / (4.0 * self.edge_coefficient())).cbrt()
    }

    /// `S0'(theta) = (1/4D) (4D / 3 theta)^(2/3)`; `+inf` at `theta = 0`.
    pub fn s0_prime(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return f64::INFINITY;
        }
        let dd = self.edge_coefficient();
        (4.0 * dd / (3.0 * theta)).powf(2.0 / 3.0) / (4.0 * dd)
    }

    /// `theta_m(tau) = (4D/3)(tau / 4D)^(3/2)`, where `tau S0'(theta_m) = 1`.
    pub fn theta_m(&self, tau: f64) -> f64 {
        let dd = self.edge_coefficient();
        4.0 * dd / 3.0 * (tau / (4.0 * dd)).powf(1.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub mu: f64,
    pub phi: f64,
    /// Unfolded phase, wrapped into `[0, 2π)`.
    pub theta: f64,
    pub clamped: bool,
}

/// Eigenvalues of one graph with their phases and unfolded phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub graph_id: usize,
    pub kind: GraphKind,
    pub vertex_count: usize,
    pub degree: usize,
    /// Sorted by ascending `mu` (so descending `phi`).
    pub levels: Vec<Level>,
    pub clamp_count: usize,
}

impl SpectrumRecord {
    pub fn from_eigenvalues(
        graph_id: usize,
        kind: GraphKind,
        vertex_count: usize,
        degree: usize,
        eigenvalues: Vec<f64>,
    ) -> Result<Self> {
        let eigenvalues = sorted_eigenvalues(eigenvalues)?;
        if eigenvalues.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let map = UnfoldingMap::new(degree, eigenvalues.len())?;
        let mut clamp_count = 0;
        let levels = eigenvalues
            .into_iter()
            .map(|mu| {
                let p = to_phase(mu, degree);
                clamp_count += usize::from(p.clamped);
                let theta = map.theta(p.phi)?;
                Ok(Level {
                    mu,
                    phi: p.phi,
                    theta: if theta >= TAU { theta - TAU } else { theta },
                    clamped: p.clamped,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            graph_id,
            kind,
            vertex_count,
            degree,
            levels,
            clamp_count,
        })
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.mu).collect()
    }

    /// Phases in ascending order.
    pub fn phases(&self) -> Vec<f64> {
        self.levels.iter().rev().map(|l| l.phi).collect()
    }

    /// Unfolded phases in ascending order on `[0, 2π)`.
    pub fn unfolded(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.levels.iter().map(|l| l.theta).collect();
        t.sort_by(f64::total_cmp);
        t
    }

    pub fn write_csv_rows(&self, out: &mut String) {
        for (j, l) in self.levels.iter().enumerate() {
            writeln!(
                out,
                "{},{},{:.17e},{:.17e},{:.17e},{}",
                self.graph_id,
                j,
                l.mu,
                l.phi,
                l.theta,
                u8::from(l.clamped)
            )
            .unwrap();
        }
    }
}

pub const SPECTRA_CSV_HEADER: &str = "graph_id,j,mu,phi,theta,clamped";

pub fn spectra_csv<'a>(records: impl IntoIterator<Item = &'a SpectrumRecord>) -> String {
    let mut out = String::new();
    writeln!(out, "{SPECTRA_CSV_HEADER}").unwrap();
    for r in records {
        r.write_csv_rows(&mut out);
    }
    out
}

/// Unfolded phases of a record under `map`, in level order, wrapped to `[0, 2π)`.
pub fn unfold(record: &SpectrumRecord, map: &UnfoldingMap) -> Result<Vec<f64>> {
    record
        .levels
        .iter()
        .map(|l| {
            let n = map.counting(l.phi)?;
            let theta = TAU / map.level_count() as f64 * n;
            Ok(if theta >= TAU { theta - TAU } else { theta })
        })
        .collect()
}

pub fn plain_spectrum(graph_id: usize, g: &RegularGraph) -> Result<SpectrumRecord> {
    if !validate(g).is_valid() {
        return Err(Error::InvalidParameters(format!("graph {graph_id} is not simple and regular")));
    }
    SpectrumRecord::from_eigenvalues(graph_id, GraphKind::Plain, g.vertex_count(), g.degree(), eigenvalues_plain(g)?)
}

pub fn magnetic_spectrum(graph_id: usize, m: &MagneticGraph) -> Result<SpectrumRecord> {
    let g = m.base();
    SpectrumRecord::from_eigenvalues(graph_id, GraphKind::Magnetic, g.vertex_count(), g.degree(), eigenvalues_magnetic(m)?)
}
