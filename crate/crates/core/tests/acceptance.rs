//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs at reduced ensemble sizes by default; set `RRG_ACCEPTANCE=full` for
//! the full-scale Monte Carlo runs. Exits non-zero if any criterion fails.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;
use rrg_spectra::graph_ensemble::{decorate_magnetic, derive_seed, generate_ensemble, EnsembleRequest};
use rrg_spectra::nb_walks::{
    count_closed_walks_bruteforce, count_closed_walks_bruteforce_magnetic, count_closed_walks_spectral, cycle_statistics,
    scaled_cycle_ratio, CountMode, WalkCounts, DEFAULT_BUDGET,
};
use rrg_spectra::pipeline::{eigenphases, magnetic_spectra, plain_spectra, unfolded_phases, walk_counts};
use rrg_spectra::rmt::{
    expansion_f1, expansion_f2, integral_s_prime, ktilde_from_k, slope_halving_check, CircularEnsemble,
};
use rrg_spectra::spectral::{eigenvalues_full, eigenvalues_magnetic, GraphKind, InverseMode, SpectrumRecord, UnfoldingMap};
use rrg_spectra::statistics::{
    data_collapse, form_factor_from_walks, form_factor_raw, slope_through_origin, spacing_distribution, sup_distance,
    CurveSeries, FormFactorOptions, DEFAULT_BIN_WIDTH, DEFAULT_SPACING_MAX,
};

const ORACLE_PLAIN_ABS: f64 = 1e-6;
const ORACLE_MAGNETIC_REL: f64 = 1e-8;
const ORACLE_IMAG_ABS: f64 = 1e-10;
const ORACLE_DRAWS: u64 = 20;
const ORACLE_SECONDS: f64 = 60.0;
const SPACING_SUP: f64 = 0.05;
const PLAIN_SLOPE: (f64, f64) = (0.9, 1.1);
const MAGNETIC_SLOPE: (f64, f64) = (0.45, 0.55);
const SLOPE_RANGE: (f64, f64) = (0.02, 0.2);
const IDENTITY_RANGE: (f64, f64) = (0.05, 1.0);
const IDENTITY_SE: f64 = 2.0;
const IDENTITY_FRACTION: f64 = 0.9;
const POISSON_RATIO: (f64, f64) = (0.9, 1.1);
const POISSON_MEAN_REL: f64 = 0.1;
const POISSON_SIZE: usize = 4000;
const EXPANSION_CUE: f64 = 0.02;
const EXPANSION_COE: f64 = 0.05;
const EXPANSION_RANGE: (f64, f64) = (1e-4, 1e-2);
const NEWTON_GRID: usize = 10_000;
const NEWTON_D3: f64 = 0.05;
const NEWTON_LARGE_D: f64 = 0.02;
const COLLAPSE_REL: f64 = 0.15;
const COLLAPSE_RANGE: (f64, f64) = (1e-3, 0.05);
const COLLAPSE_MC_RANGE: (f64, f64) = (0.05, 0.2);
const COLLAPSE_MC_SE: f64 = 3.0;
const ASYMPTOTE_BAND: (f64, f64) = (0.85, 1.15);
const ASYMPTOTE_TAU: (f64, f64) = (3.0, 4.0);
const ASYMPTOTE_V: usize = 200;
const ASYMPTOTE_SIZE: usize = 1000;
const S_PRIME_ABS: f64 = 1e-10;
const SLOPE_HALVING_ABS: f64 = 1e-3;

#[derive(Clone, Copy)]
struct Scale {
    full: bool,
    spectra_v: usize,
    spectra_n: usize,
    collapse_v: usize,
    collapse_n: usize,
}

impl Scale {
    fn from_env() -> Self {
        let full = std::env::var("RRG_ACCEPTANCE").is_ok_and(|v| v == "full");
        if full {
            Scale {
                full,
                spectra_v: 1000,
                spectra_n: 1000,
                collapse_v: 1000,
                collapse_n: 1000,
            }
        } else {
            Scale {
                full,
                spectra_v: 500,
                spectra_n: 400,
                collapse_v: 500,
                collapse_n: 400,
            }
        }
    }
}

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn print(&self) {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        println!("{tag} #{} {}: {}", self.id, self.name, self.detail);
        for n in &self.notes {
            println!("    {n}");
        }
    }
}

fn in_band(x: f64, band: (f64, f64)) -> bool {
    x >= band.0 && x <= band.1
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let fixtures = common::all_fixtures();
    let mut plain_err = 0.0f64;
    let mut mag_err = 0.0f64;
    let mut imag = 0.0f64;
    let mut magnetic_checks = 0usize;
    for (_, g) in &fixtures {
        let (v, d) = (g.vertex_count(), g.degree());
        let full = eigenvalues_full(g).unwrap();
        let plain: Vec<f64> = (3..=12)
            .map(|t| {
                let b = count_closed_walks_bruteforce(g, t, DEFAULT_BUDGET).unwrap().value as f64;
                plain_err = plain_err.max((count_closed_walks_spectral(&full, v, d, t).unwrap() - b).abs());
                b
            })
            .collect();
        let draws: Vec<(f64, f64)> = (0..ORACLE_DRAWS)
            .into_par_iter()
            .map(|k| {
                let m = decorate_magnetic(g, derive_seed(0x5eed, k)).unwrap();
                let ev = eigenvalues_magnetic(&m).unwrap();
                let (mut rel, mut im) = (0.0f64, 0.0f64);
                for t in 3..=12u32 {
                    let b = count_closed_walks_bruteforce_magnetic(&m, t, DEFAULT_BUDGET).unwrap().value;
                    let s = count_closed_walks_spectral(&ev, v, d, t).unwrap();
                    rel = rel.max((s - b.re).abs() / plain[(t - 3) as usize].max(1.0));
                    im = im.max(b.im.abs());
                }
                (rel, im)
            })
            .collect();
        for (r, i) in draws {
            mag_err = mag_err.max(r);
            imag = imag.max(i);
            magnetic_checks += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = plain_err < ORACLE_PLAIN_ABS && mag_err < ORACLE_MAGNETIC_REL && imag < ORACLE_IMAG_ABS && secs < ORACLE_SECONDS;
    Outcome {
        id: 1,
        name: "walk-count oracle equivalence",
        pass,
        detail: format!(
            "{} graphs, t=3..12: plain max|dY|={plain_err:.2e} (<{ORACLE_PLAIN_ABS:.0e}), magnetic max rel={mag_err:.2e} (<{ORACLE_MAGNETIC_REL:.0e}) over {magnetic_checks} phase draws, max|Im|={imag:.2e}, {secs:.1}s (<{ORACLE_SECONDS}s)",
            fixtures.len()
        ),
        notes: Vec::new(),
    }
}

struct SpectraRun {
    v: usize,
    n: usize,
    plain: Vec<SpectrumRecord>,
    magnetic: Vec<SpectrumRecord>,
}

fn spectra_run(v: usize, d: usize, n: usize, seed: u64) -> SpectraRun {
    let ens = generate_ensemble(&EnsembleRequest::new(v, d, n, seed).magnetic(true), String::new()).unwrap();
    let plain = plain_spectra(&ens.graphs).unwrap();
    let magnetic = magnetic_spectra(ens.magnetic.as_ref().unwrap()).unwrap();
    SpectraRun { v, n, plain, magnetic }
}

fn spacing_criterion(run: &SpectraRun) -> Outcome {
    let p = spacing_distribution(&unfolded_phases(&run.plain), DEFAULT_BIN_WIDTH, DEFAULT_SPACING_MAX).unwrap();
    let m = spacing_distribution(&unfolded_phases(&run.magnetic), DEFAULT_BIN_WIDTH, DEFAULT_SPACING_MAX).unwrap();
    let dp = sup_distance(&p, |s| CircularEnsemble::Coe.surmise(s));
    let dm = sup_distance(&m, |s| CircularEnsemble::Cue.surmise(s));
    Outcome {
        id: 2,
        name: "spacing distribution vs surmises",
        pass: dp < SPACING_SUP && dm < SPACING_SUP,
        detail: format!(
            "V={} n={}: plain sup|P-P_orth|={dp:.4}, magnetic sup|P-P_unit|={dm:.4} (<{SPACING_SUP})",
            run.v, run.n
        ),
        notes: Vec::new(),
    }
}

fn raw_form_factor(records: &[SpectrumRecord], v: usize, d: usize, t_max: u32) -> CurveSeries {
    let opts = FormFactorOptions::new(3, t_max, v);
    form_factor_raw(&eigenphases(records), v, d, Some(records[0].kind), &opts).unwrap().0
}

fn slope_criterion(run: &SpectraRun, plain: &CurveSeries, magnetic: &CurveSeries) -> Outcome {
    let sp = slope_through_origin(plain, SLOPE_RANGE.0, SLOPE_RANGE.1).unwrap();
    let sm = slope_through_origin(magnetic, SLOPE_RANGE.0, SLOPE_RANGE.1).unwrap();
    let map = UnfoldingMap::new(3, run.v).unwrap();
    let theory = |k: CircularEnsemble| {
        let taus: Vec<f64> = plain.restrict(SLOPE_RANGE.0, SLOPE_RANGE.1).x;
        let vals: Vec<f64> = taus.iter().map(|&t| ktilde_from_k(&k, t, &map, InverseMode::Exact).unwrap()).collect();
        taus.iter().zip(&vals).map(|(x, y)| x * y).sum::<f64>() / taus.iter().map(|x| x * x).sum::<f64>()
    };
    Outcome {
        id: 3,
        name: "small-tau slopes of the raw form factor",
        pass: in_band(sp.slope, PLAIN_SLOPE) && in_band(sm.slope, MAGNETIC_SLOPE),
        detail: format!(
            "tau in [{}, {}], fit through origin: plain {:.4}±{:.4} (band {:?}), magnetic {:.4}±{:.4} (band {:?})",
            SLOPE_RANGE.0, SLOPE_RANGE.1, sp.slope, sp.stderr, PLAIN_SLOPE, sm.slope, sm.stderr, MAGNETIC_SLOPE
        ),
        notes: vec![format!(
            "same fit applied to the transformed baselines: orthogonal {:.4}, unitary {:.4}",
            theory(CircularEnsemble::Coe),
            theory(CircularEnsemble::Cue)
        )],
    }
}

fn identity_fraction(a: &CurveSeries, b: &CurveSeries) -> (usize, usize) {
    let a = a.restrict(IDENTITY_RANGE.0, IDENTITY_RANGE.1);
    let b = b.restrict(IDENTITY_RANGE.0, IDENTITY_RANGE.1);
    let ok = (0..a.len())
        .filter(|&i| {
            let band = IDENTITY_SE * (a.stderr[i].powi(2) + b.stderr[i].powi(2)).sqrt();
            (a.estimate[i] - b.estimate[i]).abs() <= band
        })
        .count();
    (ok, a.len())
}

fn identity_criterion(run: &SpectraRun, plain: &CurveSeries, magnetic: &CurveSeries) -> Outcome {
    let t_max = run.v as u32;
    let mut opts = FormFactorOptions::new(3, t_max, run.v);
    opts.connected = false;
    let mut fractions = Vec::new();
    let mut notes = Vec::new();
    for (records, spectral) in [(&run.plain, plain), (&run.magnetic, magnetic)] {
        let exact = walk_counts(records, 3, t_max, CountMode::Exact).unwrap();
        let (walks, _) = form_factor_from_walks(&exact, &opts).unwrap();
        let (ok, total) = identity_fraction(spectral, &walks);
        fractions.push((records[0].kind, ok, total));
        let clamped = walk_counts(records, 3, t_max, CountMode::Clamped).unwrap();
        let (walks_c, _) = form_factor_from_walks(&clamped, &opts).unwrap();
        let (okc, totc) = identity_fraction(spectral, &walks_c);
        let clamp: usize = records.iter().map(|r| r.clamp_count).sum();
        let peak = walks.estimate.iter().cloned().fold(f64::MIN, f64::max);
        let w = walks.restrict(IDENTITY_RANGE.0, IDENTITY_RANGE.1);
        let s = spectral.restrict(IDENTITY_RANGE.0, IDENTITY_RANGE.1);
        let swamped = (0..w.len()).filter(|&i| w.stderr[i] > 10.0 * s.estimate[i].abs()).count();
        notes.push(format!(
            "{}: {} out-of-support eigenvalues in ensemble; walk-based peak {:.3e}; {swamped} windows have walk SE above 10x the spectral value; with clamped counts {okc}/{totc} agree",
            records[0].kind.as_str(),
            clamp,
            peak
        ));
    }
    let pass = fractions
        .iter()
        .all(|&(_, ok, total)| total > 0 && ok as f64 >= IDENTITY_FRACTION * total as f64);
    let detail = fractions
        .iter()
        .map(|(k, ok, total)| format!("{} {ok}/{total}", k.as_str()))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome {
        id: 4,
        name: "spectral vs walk-count form factor",
        pass,
        detail: format!(
            "points within {IDENTITY_SE} combined SE over tau in [{}, {}]: {detail} (need {:.0}%)",
            IDENTITY_RANGE.0,
            IDENTITY_RANGE.1,
            100.0 * IDENTITY_FRACTION
        ),
        notes,
    }
}

fn poisson_criterion() -> Outcome {
    let (v, d) = (1000, 3);
    let ens = generate_ensemble(&EnsembleRequest::new(v, d, POISSON_SIZE, 31), String::new()).unwrap();
    let counts: Vec<WalkCounts> = ens
        .graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let ys = (3..=5)
                .map(|t| count_closed_walks_bruteforce(g, t, DEFAULT_BUDGET).unwrap().value as f64)
                .collect();
            WalkCounts::from_counts(i, GraphKind::Plain, v, d, 3, ys).unwrap()
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for t in 3..=5 {
        let s = cycle_statistics(&counts, t).unwrap();
        let mean_rel = s.mean / s.expected_mean - 1.0;
        pass &= in_band(s.var_over_mean, POISSON_RATIO) && mean_rel.abs() < POISSON_MEAN_REL;
        parts.push(format!(
            "t={t}: var/mean={:.3}±{:.3}, <C>={:.3} vs {:.3}",
            s.var_over_mean, s.var_over_mean_stderr, s.mean, s.expected_mean
        ));
    }
    Outcome {
        id: 5,
        name: "Poisson cycle counts",
        pass,
        detail: format!(
            "V={v} n={POISSON_SIZE}, band {:?}, mean within {:.0}%: {}",
            POISSON_RATIO,
            100.0 * POISSON_MEAN_REL,
            parts.join("; ")
        ),
        notes: Vec::new(),
    }
}

fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect()
}

fn expansion_criterion() -> Outcome {
    let taus = geometric_grid(EXPANSION_RANGE.0, EXPANSION_RANGE.1, 25);
    let mut worst_cue = 0.0f64;
    let mut worst_coe = 0.0f64;
    for d in [3, 5, 10] {
        let map = UnfoldingMap::new(d, 1).unwrap();
        let (f1, f2) = (expansion_f1(d).unwrap(), expansion_f2(d).unwrap());
        for &tau in &taus {
            let t32 = tau.powf(1.5);
            let cue = ktilde_from_k(&CircularEnsemble::Cue, tau, &map, InverseMode::Exact).unwrap();
            let coe = ktilde_from_k(&CircularEnsemble::Coe, tau, &map, InverseMode::Exact).unwrap();
            worst_cue = worst_cue.max((cue - 0.5 * tau - f1 * t32).abs() / t32);
            worst_coe = worst_coe.max((coe - tau - f2 * t32).abs() / t32);
        }
    }
    Outcome {
        id: 6,
        name: "transform vs two-term expansion",
        pass: worst_cue < EXPANSION_CUE && worst_coe < EXPANSION_COE,
        detail: format!(
            "d in {{3,5,10}}, tau in [{:.0e}, {:.0e}]: max |dK|/tau^1.5 unitary {worst_cue:.4} (<{EXPANSION_CUE}), orthogonal {worst_coe:.4} (<{EXPANSION_COE})",
            EXPANSION_RANGE.0, EXPANSION_RANGE.1
        ),
        notes: Vec::new(),
    }
}

fn newton_criterion() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut notes = Vec::new();
    for (d, tol) in [(3, NEWTON_D3), (9, NEWTON_LARGE_D), (10, NEWTON_LARGE_D), (20, NEWTON_LARGE_D)] {
        let map = UnfoldingMap::new(d, 1).unwrap();
        let (mut worst, mut at) = (0.0f64, 0.0);
        for k in 1..=NEWTON_GRID {
            let theta = PI * k as f64 / NEWTON_GRID as f64;
            let exact = map.s_exact(theta).unwrap();
            let err = (map.s_newton2(theta).unwrap() - exact).abs() / exact;
            if err > worst {
                worst = err;
                at = theta;
            }
        }
        pass &= worst < tol;
        parts.push(format!("d={d}: {:.2}% (<{:.0}%)", 100.0 * worst, 100.0 * tol));
        notes.push(format!("d={d}: worst at theta={at:.4}"));
    }
    Outcome {
        id: 7,
        name: "second-order inverse accuracy",
        pass,
        detail: format!("max relative error over {NEWTON_GRID} theta in (0, π]: {}", parts.join(", ")),
        notes,
    }
}

fn collapse_criterion(scale: Scale) -> Outcome {
    let taus = geometric_grid(COLLAPSE_RANGE.0, COLLAPSE_RANGE.1, 30);
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [3, 5, 10] {
        let map = UnfoldingMap::new(d, 1).unwrap();
        let (f1, f2) = (expansion_f1(d).unwrap(), expansion_f2(d).unwrap());
        let (mut wp, mut wm) = (0.0f64, 0.0f64);
        for &tau in &taus {
            let t32 = tau.powf(1.5);
            let coe = ktilde_from_k(&CircularEnsemble::Coe, tau, &map, InverseMode::Exact).unwrap();
            let cue = ktilde_from_k(&CircularEnsemble::Cue, tau, &map, InverseMode::Exact).unwrap();
            wp = wp.max(((coe - tau) / f2 / t32 - 1.0).abs());
            wm = wm.max(((cue - 0.5 * tau) / f1 / t32 - 1.0).abs());
        }
        pass &= wp < COLLAPSE_REL && wm < COLLAPSE_REL;
        parts.push(format!("d={d}: orthogonal {:.1}%, unitary {:.1}%", 100.0 * wp, 100.0 * wm));
    }

    let d = 10;
    let run = spectra_run(scale.collapse_v, d, scale.collapse_n, 1010);
    let t_max = (COLLAPSE_MC_RANGE.1 * run.v as f64).ceil() as u32 + 20;
    let mut mc = Vec::new();
    let mut notes = Vec::new();
    for (records, kind) in [(&run.plain, GraphKind::Plain), (&run.magnetic, GraphKind::Magnetic)] {
        let kt = raw_form_factor(records, run.v, d, t_max);
        let c = data_collapse(&kt, d, kind).unwrap().restrict(COLLAPSE_MC_RANGE.0, COLLAPSE_MC_RANGE.1);
        let z: Vec<f64> = (0..c.len())
            .map(|i| (c.estimate[i] - c.x[i].powf(1.5)).abs() / c.stderr[i])
            .collect();
        let worst = z.iter().cloned().fold(0.0, f64::max);
        let inside = z.iter().filter(|&&v| v <= COLLAPSE_MC_SE).count();
        pass &= inside == c.len() && !c.is_empty();
        mc.push(format!("{} {inside}/{} (max {worst:.2} SE)", kind.as_str(), c.len()));
        if !c.is_empty() {
            let mid = c.len() / 2;
            notes.push(format!(
                "{} at tau={:.3}: collapsed {:.4}±{:.4} vs tau^1.5={:.4}",
                kind.as_str(),
                c.x[mid],
                c.estimate[mid],
                c.stderr[mid],
                c.x[mid].powf(1.5)
            ));
        }
    }
    Outcome {
        id: 8,
        name: "data collapse",
        pass,
        detail: format!(
            "transforms within {:.0}% of tau^1.5 on [{:.0e}, {}]: {}; Monte Carlo d=10 V={} n={} within {COLLAPSE_MC_SE} SE on [{}, {}]: {}",
            100.0 * COLLAPSE_REL,
            COLLAPSE_RANGE.0,
            COLLAPSE_RANGE.1,
            parts.join("; "),
            run.v,
            run.n,
            COLLAPSE_MC_RANGE.0,
            COLLAPSE_MC_RANGE.1,
            mc.join(", ")
        ),
        notes,
    }
}

fn asymptote_criterion() -> Outcome {
    let (v, d) = (ASYMPTOTE_V, 3);
    let ens = generate_ensemble(&EnsembleRequest::new(v, d, ASYMPTOTE_SIZE, 77), String::new()).unwrap();
    let records = plain_spectra(&ens.graphs).unwrap();
    let t_lo = (ASYMPTOTE_TAU.0 * v as f64) as u32;
    let t_hi = (ASYMPTOTE_TAU.1 * v as f64) as u32;
    let average = |mode: CountMode| -> f64 {
        let counts = walk_counts(&records, t_lo, t_hi, mode).unwrap();
        let vals: Vec<f64> = (t_lo..=t_hi).map(|t| scaled_cycle_ratio(&counts, t).unwrap().ratio).collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let exact = average(CountMode::Exact);
    let clamped = average(CountMode::Clamped);
    let outliers = records.iter().filter(|r| r.clamp_count > 0).count();
    Outcome {
        id: 9,
        name: "large-tau variance-to-mean asymptote",
        pass: exact.is_finite() && in_band(exact, ASYMPTOTE_BAND),
        detail: format!(
            "V={v} n={ASYMPTOTE_SIZE}, t in [{t_lo}, {t_hi}]: mean tau*var/mean = {exact:.4e} (band {:?})",
            ASYMPTOTE_BAND
        ),
        notes: vec![format!(
            "{outliers}/{ASYMPTOTE_SIZE} graphs have eigenvalues outside the Kesten-McKay support; with those evaluated at their clamped phase the average is {clamped:.4}"
        )],
    }
}

fn identities_criterion() -> Outcome {
    let mut worst_int = 0.0f64;
    let mut worst_slope = 0.0f64;
    for d in [3, 5, 10] {
        let map = UnfoldingMap::new(d, 1).unwrap();
        worst_int = worst_int.max((integral_s_prime(&map).unwrap() - FRAC_PI_2).abs());
        for k in [CircularEnsemble::Coe, CircularEnsemble::Cue] {
            let s = slope_halving_check(&k, k.slope_at_zero(), &map).unwrap();
            worst_slope = worst_slope.max((s.estimate - s.analytic).abs());
        }
    }
    Outcome {
        id: 10,
        name: "integral identities",
        pass: worst_int < S_PRIME_ABS && worst_slope < SLOPE_HALVING_ABS,
        detail: format!(
            "d in {{3,5,10}}: max|∫S' - π/2|={worst_int:.2e} (<{S_PRIME_ABS:.0e}), max|slope - g/2|={worst_slope:.2e} (<{SLOPE_HALVING_ABS:.0e})"
        ),
        notes: Vec::new(),
    }
}

fn main() -> ExitCode {
    let scale = Scale::from_env();
    if scale.full {
        println!("acceptance (full scale)");
    } else {
        println!("acceptance (quick scale; set RRG_ACCEPTANCE=full for full scale)");
    }
    let mut outcomes = Vec::new();
    let mut run = |o: Outcome| {
        o.print();
        outcomes.push(o.pass);
    };

    run(oracle_equivalence());
    let spectra = spectra_run(scale.spectra_v, 3, scale.spectra_n, 2718);
    run(spacing_criterion(&spectra));
    let t_max = spectra.v as u32;
    let plain = raw_form_factor(&spectra.plain, spectra.v, 3, t_max);
    let magnetic = raw_form_factor(&spectra.magnetic, spectra.v, 3, t_max);
    run(slope_criterion(&spectra, &plain, &magnetic));
    run(identity_criterion(&spectra, &plain, &magnetic));
    drop(spectra);
    run(poisson_criterion());
    run(expansion_criterion());
    run(newton_criterion());
    run(collapse_criterion(scale));
    run(asymptote_criterion());
    run(identities_criterion());

    let passed = outcomes.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    if passed == outcomes.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
