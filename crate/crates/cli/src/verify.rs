//! Deterministic oracle suite: walk counts against enumeration, unfolding
//! round trips, transforms against their expansions, and the integral
//! identities. Optionally checks every file of an ensemble directory.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rrg_spectra::graph_ensemble::{parse_graph_file, write_graph_file};
use rrg_spectra::nb_walks::{count_closed_walks_bruteforce, count_closed_walks_bruteforce_magnetic, count_closed_walks_spectral, DEFAULT_BUDGET};
use rrg_spectra::rmt::{expansion_f1, expansion_f2, integral_s_prime, ktilde_from_k, slope_halving_check};
use rrg_spectra::spectral::{eigenvalues_full, eigenvalues_magnetic};
use rrg_spectra::{decorate_magnetic, derive_seed, generate_regular, CircularEnsemble, InverseMode, RegularGraph, UnfoldingMap};
use serde::Serialize;

use crate::config::RunConfig;
use crate::ensemble_io::load_checked;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_distinct, finish, Staging, Timer};

const WALKS_PLAIN_ABS: f64 = 1e-6;
const WALKS_MAGNETIC_REL: f64 = 1e-8;
const PHASE_DRAWS: u64 = 20;
const ROUND_TRIP_ABS: f64 = 1e-9;
const EXPANSION_CUE: f64 = 0.02;
const EXPANSION_COE: f64 = 0.05;
const S_PRIME_ABS: f64 = 1e-10;
const SLOPE_HALVING_ABS: f64 = 1e-3;
const ENSEMBLE_ORACLE_GRAPHS: usize = 3;
const ENSEMBLE_ORACLE_T: u32 = 6;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, error: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            error,
            tolerance,
            pass: error.is_finite() && error < tolerance,
            detail: detail.into(),
        }
    }

    /// A pass/fail check without a numeric error.
    fn boolean(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            error: 0.0,
            tolerance: 0.0,
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        if self.tolerance > 0.0 {
            format!(
                "{tag} {}: error {:.3e}, tolerance {:.3e}, error/tolerance {:.2e}{}",
                self.name,
                self.error,
                self.tolerance,
                self.error / self.tolerance,
                if self.detail.is_empty() { String::new() } else { format!("; {}", self.detail) }
            )
        } else {
            format!("{tag} {}: {}", self.name, self.detail)
        }
    }
}

fn from_edges(v: usize, d: usize, edges: &[(usize, usize)]) -> RegularGraph {
    RegularGraph::from_edges(v, d, 0, edges).expect("fixture is regular")
}

fn fixtures() -> Vec<(String, RegularGraph)> {
    let k4 = from_edges(4, 3, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    let mut petersen = Vec::new();
    for i in 0..5 {
        petersen.push((i, (i + 1) % 5));
        petersen.push((i, i + 5));
        petersen.push((5 + i, 5 + (i + 2) % 5));
    }
    let k33: Vec<(usize, usize)> = (0..3).flat_map(|i| (3..6).map(move |j| (i, j))).collect();
    let cube: Vec<(usize, usize)> = (0..8usize)
        .flat_map(|i| [1, 2, 4].into_iter().map(move |b| (i, i ^ b)))
        .filter(|(i, j)| i < j)
        .collect();
    let mut out = vec![
        ("K4".to_string(), k4),
        ("Petersen".into(), from_edges(10, 3, &petersen)),
        ("K3,3".into(), from_edges(6, 3, &k33)),
        ("cube".into(), from_edges(8, 3, &cube)),
    ];
    for (k, (v, d)) in [(10, 3), (12, 3), (9, 4), (12, 4)].into_iter().enumerate() {
        let g = generate_regular(v, d, derive_seed(2024, k as u64)).expect("small graph");
        out.push((format!("random V={v} d={d}"), g));
    }
    out
}

fn walk_checks(scale: f64) -> CliResult<Vec<Check>> {
    let fx = fixtures();
    let mut plain_err = 0.0f64;
    let mut mag_err = 0.0f64;
    for (_, g) in &fx {
        let (v, d) = (g.vertex_count(), g.degree());
        let full = eigenvalues_full(g)?;
        let mut brute = Vec::new();
        for t in 3..=12 {
            let b = count_closed_walks_bruteforce(g, t, DEFAULT_BUDGET)?.value as f64;
            plain_err = plain_err.max((count_closed_walks_spectral(&full, v, d, t)? - b).abs());
            brute.push(b);
        }
        let worst = (0..PHASE_DRAWS)
            .into_par_iter()
            .map(|k| -> rrg_spectra::Result<f64> {
                let m = decorate_magnetic(g, derive_seed(7, k))?;
                let ev = eigenvalues_magnetic(&m)?;
                let mut w = 0.0f64;
                for t in 3..=12u32 {
                    let b = count_closed_walks_bruteforce_magnetic(&m, t, DEFAULT_BUDGET)?.value;
                    let s = count_closed_walks_spectral(&ev, v, d, t)?;
                    w = w.max((s - b.re).abs().max(b.im.abs()) / brute[(t - 3) as usize].max(1.0));
                }
                Ok(w)
            })
            .collect::<rrg_spectra::Result<Vec<f64>>>()?;
        mag_err = worst.into_iter().fold(mag_err, f64::max);
    }
    let names: Vec<&str> = fx.iter().map(|(n, _)| n.as_str()).collect();
    Ok(vec![
        Check::new(
            "walk counts, plain",
            plain_err,
            WALKS_PLAIN_ABS * scale,
            format!("t=3..12 on {}", names.join(", ")),
        ),
        Check::new(
            "walk counts, magnetic (relative)",
            mag_err,
            WALKS_MAGNETIC_REL * scale,
            format!("{PHASE_DRAWS} phase draws per fixture"),
        ),
    ])
}

fn unfolding_checks(scale: f64) -> CliResult<Vec<Check>> {
    let mut round_trip = 0.0f64;
    for d in [3, 4, 5, 10] {
        let map = UnfoldingMap::new(d, 1)?;
        for k in 0..=1000 {
            let phi = PI * k as f64 / 1000.0;
            let back = map.inverse(map.theta(phi)?, InverseMode::Exact)?;
            round_trip = round_trip.max((back - phi).abs());
        }
    }
    let mut file_ok = true;
    for (_, g) in fixtures() {
        let m = decorate_magnetic(&g, 11)?;
        let plain = parse_graph_file(&write_graph_file(&g, None))?;
        let magnetic = parse_graph_file(&write_graph_file(&g, Some(&m)))?;
        file_ok &= plain.graph == g && magnetic.into_magnetic(11)? == m;
    }
    Ok(vec![
        Check::new(
            "unfolding round trip",
            round_trip,
            ROUND_TRIP_ABS * scale,
            "d in {3,4,5,10}, 1001 phases",
        ),
        Check::boolean("graph file round trip", file_ok, "plain and magnetic fixtures"),
    ])
}

fn transform_checks(scale: f64) -> CliResult<Vec<Check>> {
    let taus: Vec<f64> = (0..13).map(|i| 1e-4 * 100f64.powf(i as f64 / 12.0)).collect();
    let (mut cue, mut coe, mut int, mut slope) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for d in [3, 5, 10] {
        let map = UnfoldingMap::new(d, 1)?;
        let (f1, f2) = (expansion_f1(d)?, expansion_f2(d)?);
        for &tau in &taus {
            let t32 = tau.powf(1.5);
            let u = ktilde_from_k(&CircularEnsemble::Cue, tau, &map, InverseMode::Exact)?;
            let o = ktilde_from_k(&CircularEnsemble::Coe, tau, &map, InverseMode::Exact)?;
            cue = cue.max((u - 0.5 * tau - f1 * t32).abs() / t32);
            coe = coe.max((o - tau - f2 * t32).abs() / t32);
        }
        int = int.max((integral_s_prime(&map)? - FRAC_PI_2).abs());
        for k in [CircularEnsemble::Coe, CircularEnsemble::Cue] {
            let s = slope_halving_check(&k, k.slope_at_zero(), &map)?;
            slope = slope.max((s.estimate - s.analytic).abs());
        }
    }
    Ok(vec![
        Check::new(
            "unitary transform vs expansion",
            cue,
            EXPANSION_CUE * scale,
            "relative to tau^1.5, tau in [1e-4, 1e-2], d in {3,5,10}",
        ),
        Check::new(
            "orthogonal transform vs expansion",
            coe,
            EXPANSION_COE * scale,
            "relative to tau^1.5, tau in [1e-4, 1e-2], d in {3,5,10}",
        ),
        Check::new("integral of S' equals π/2", int, S_PRIME_ABS * scale, ""),
        Check::new("slope halving", slope, SLOPE_HALVING_ABS * scale, "both baselines"),
    ])
}

fn ensemble_checks(dir: &Path, scale: f64) -> CliResult<Vec<Check>> {
    let (manifest, results) = load_checked(dir)?;
    let name = format!("ensemble files in {}", dir.display());
    let problems: Vec<String> = results
        .iter()
        .filter_map(|r| r.as_ref().err().map(|p| p.to_string()))
        .collect();
    if !problems.is_empty() {
        return Ok(vec![Check::boolean(name, false, problems.join("; "))]);
    }
    let mut checks = vec![Check::boolean(name, true, format!("{} graphs valid", manifest.ensemble_size))];
    let mut err = 0.0f64;
    let sample: Vec<_> = results.into_iter().take(ENSEMBLE_ORACLE_GRAPHS).flatten().collect();
    for (g, _) in &sample {
        let (v, d) = (g.vertex_count(), g.degree());
        let full = eigenvalues_full(g)?;
        for t in 3..=ENSEMBLE_ORACLE_T {
            let b = count_closed_walks_bruteforce(g, t, DEFAULT_BUDGET)?.value as f64;
            err = err.max((count_closed_walks_spectral(&full, v, d, t)? - b).abs() / b.max(1.0));
        }
    }
    checks.push(Check::new(
        format!("ensemble walk counts in {}", dir.display()),
        err,
        WALKS_MAGNETIC_REL * scale,
        format!("relative, first {} graphs, t=3..{ENSEMBLE_ORACLE_T}", sample.len()),
    ));
    Ok(checks)
}

pub fn verify(cfg: &RunConfig) -> CliResult<PathBuf> {
    let mut timer = Timer::start();
    ensure_distinct(&cfg.out, &cfg.ensembles)?;
    let scale = cfg.tolerance_scale;
    let mut checks = walk_checks(scale)?;
    timer.lap("walk counts");
    checks.extend(unfolding_checks(scale)?);
    checks.extend(transform_checks(scale)?);
    timer.lap("numerics");
    for dir in &cfg.ensembles {
        checks.extend(ensemble_checks(dir, scale)?);
    }
    timer.lap("ensembles");
    for c in &checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{}/{} checks passed", checks.len() - failed, checks.len());
    let mut staging = Staging::new(&cfg.out)?;
    let report = serde_json::json!({ "tolerance_scale": scale, "checks": checks });
    staging.write("verify-report.json", serde_json::to_string_pretty(&report).expect("json") + "\n")?;
    let out = finish(staging, cfg, timer)?;
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(out)
}
