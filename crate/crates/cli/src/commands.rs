use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use rrg_spectra::nb_walks::CountMode;
use rrg_spectra::pipeline::{eigenphases, magnetic_spectra, mean_clamp_count, plain_spectra, unfolded_phases, walk_counts};
use rrg_spectra::rmt::{expansion_f1, expansion_f2, ktilde_curve, ktilde_expansion};
use rrg_spectra::spectral::spectra_csv;
use rrg_spectra::statistics::{
    data_collapse, default_window, form_factor_from_walks, form_factor_raw, form_factor_unfolded, spacing_distribution,
    FormFactorOptions,
};
use rrg_spectra::{
    generate_ensemble, CircularEnsemble, CurveSeries, EnsembleManifest, EnsembleRequest, GraphKind, SpectrumRecord,
    UnfoldingMap,
};
use serde_json::json;

use crate::config::{Estimator, RunConfig};
use crate::ensemble_io::{self, read_manifest, LoadedEnsemble};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_distinct, finish, Staging, Timer};
use crate::plots;

fn single_ensemble(cfg: &RunConfig) -> CliResult<&Path> {
    match cfg.ensembles.as_slice() {
        [one] => Ok(one),
        [] => Err(CliError::Usage(format!("{} needs --ensemble DIR", cfg.command.name()))),
        _ => Err(CliError::Usage(format!("{} takes a single --ensemble", cfg.command.name()))),
    }
}

fn creation_time(out: &Path, manifest: &EnsembleManifest) -> CliResult<String> {
    if let Ok(raw) = std::env::var("SOURCE_DATE_EPOCH") {
        let secs: i64 = raw
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("SOURCE_DATE_EPOCH={raw:?} is not an integer")))?;
        let t = DateTime::<Utc>::from_timestamp(secs, 0)
            .ok_or_else(|| CliError::Usage(format!("SOURCE_DATE_EPOCH={secs} out of range")))?;
        return Ok(t.to_rfc3339_opts(SecondsFormat::Secs, true));
    }
    if let Ok(previous) = read_manifest(out) {
        if previous.same_content(manifest) {
            return Ok(previous.created);
        }
    }
    Ok(Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true))
}

pub fn generate(cfg: &RunConfig) -> CliResult<PathBuf> {
    let mut timer = Timer::start();
    let req = EnsembleRequest::new(cfg.vertex_count, cfg.degree, cfg.ensemble_size, cfg.master_seed)
        .magnetic(cfg.magnetic)
        .connectivity(cfg.connectivity);
    let mut ens = generate_ensemble(&req, String::new())?;
    timer.lap("generate");
    ens.manifest.created = creation_time(&cfg.out, &ens.manifest)?;
    let mut staging = Staging::new(&cfg.out)?;
    ensemble_io::stage_ensemble(&mut staging, &ens)?;
    timer.lap("write");
    finish(staging, cfg, timer)
}

fn load_input(cfg: &RunConfig) -> CliResult<LoadedEnsemble> {
    let dir = single_ensemble(cfg)?;
    ensure_distinct(&cfg.out, &cfg.ensembles)?;
    ensemble_io::load(dir)
}

fn spectra_of(ens: &LoadedEnsemble, magnetic: bool) -> CliResult<Vec<(GraphKind, Vec<SpectrumRecord>)>> {
    let mut out = vec![(GraphKind::Plain, plain_spectra(&ens.graphs)?)];
    if magnetic {
        let ms = ens
            .magnetic
            .as_ref()
            .ok_or_else(|| CliError::Usage("ensemble carries no phases".into()))?;
        out.push((GraphKind::Magnetic, magnetic_spectra(ms)?));
    }
    Ok(out)
}

pub fn spectra(cfg: &RunConfig) -> CliResult<PathBuf> {
    let mut timer = Timer::start();
    let ens = load_input(cfg)?;
    timer.lap("load");
    let all = spectra_of(&ens, cfg.magnetic)?;
    timer.lap("eigensolve");
    let mut staging = Staging::new(&cfg.out)?;
    let mut summary = serde_json::Map::new();
    for (kind, records) in &all {
        for r in records {
            let name = format!("spectra/{}/graph_{:06}.csv", kind.as_str(), r.graph_id);
            staging.write(&name, spectra_csv(std::iter::once(r)))?;
        }
        summary.insert(
            kind.as_str().into(),
            json!({
                "graphs": records.len(),
                "levels_per_graph": records[0].level_count(),
                "mean_clamp_count": mean_clamp_count(records),
                "graphs_with_clamped_levels": records.iter().filter(|r| r.clamp_count > 0).count(),
            }),
        );
    }
    staging.write("spectra/summary.json", serde_json::to_string_pretty(&summary).expect("json") + "\n")?;
    timer.lap("write");
    finish(staging, cfg, timer)
}

/// Drops windows whose estimate or error is not finite, recording how many.
fn finite_only(series: CurveSeries) -> CurveSeries {
    let mut out = CurveSeries::new(series.label.clone(), series.metadata.clone());
    let mut dropped = Vec::new();
    for i in 0..series.len() {
        if series.estimate[i].is_finite() && series.stderr[i].is_finite() {
            out.push(series.x[i], series.estimate[i], series.stderr[i], series.n[i]);
        } else {
            dropped.push(series.x[i]);
        }
    }
    if let Some(first) = dropped.first() {
        out.metadata.flags.push(format!(
            "{} windows dropped as non-finite, the first at tau={first}",
            dropped.len()
        ));
    }
    out
}

fn stage_curve(staging: &mut Staging, stem: &str, curve: &CurveSeries) -> CliResult<()> {
    staging.write(&format!("{stem}.csv"), curve.to_csv())?;
    staging.write(&format!("{stem}.json"), curve.metadata_json())
}

fn options(t_min: u32, t_max: u32, window: usize, connected: bool, vertex_count: usize) -> FormFactorOptions {
    let mut opts = FormFactorOptions::new(t_min, t_max, vertex_count);
    opts.window = window;
    opts.connected = connected;
    opts
}

/// Raw form factor with the configured estimator, and for plain spectra the
/// walk-based variance-to-mean series.
fn raw_form_factor(
    records: &[SpectrumRecord],
    kind: GraphKind,
    estimator: Estimator,
    count_mode: CountMode,
    opts: &FormFactorOptions,
    want_ratio: bool,
) -> CliResult<(CurveSeries, Option<CurveSeries>)> {
    let (v, d) = (records[0].vertex_count, records[0].degree);
    let walk_opts = FormFactorOptions {
        t_min: opts.t_min.max(3),
        ..*opts
    };
    let walks = if estimator == Estimator::Walks || (want_ratio && kind == GraphKind::Plain) {
        let counts = walk_counts(records, walk_opts.t_min, walk_opts.t_max, count_mode)?;
        Some(form_factor_from_walks(&counts, &walk_opts)?)
    } else {
        None
    };
    let ratio = walks.as_ref().and_then(|w| w.1.clone()).map(finite_only);
    let kt = match estimator {
        Estimator::Walks => finite_only(walks.expect("computed above").0),
        Estimator::Cos | Estimator::Complex => {
            let (cos, complex) = form_factor_raw(&eigenphases(records), v, d, Some(kind), opts)?;
            if estimator == Estimator::Cos {
                cos
            } else {
                complex
            }
        }
    };
    Ok((kt, ratio))
}

fn baseline_for(kind: GraphKind) -> CircularEnsemble {
    match kind {
        GraphKind::Plain => CircularEnsemble::Coe,
        GraphKind::Magnetic => CircularEnsemble::Cue,
    }
}

fn baseline_csv(cfg: &RunConfig, kind: GraphKind, level_count: usize, taus: &[f64]) -> CliResult<String> {
    let ens = baseline_for(kind);
    let map = UnfoldingMap::new(cfg.degree, level_count)?;
    let kt = ktilde_curve(&ens, taus, &map, cfg.inverse_mode)?;
    let mut s = String::from("tau,K,Ktilde,Ktilde_expansion");
    if kind == GraphKind::Plain {
        s.push_str(",var_over_mean,var_over_mean_small_tau,var_over_mean_large_tau");
    }
    s.push('\n');
    let f2 = expansion_f2(cfg.degree)?;
    for (&tau, &k) in taus.iter().zip(&kt) {
        write!(
            s,
            "{tau:.10e},{:.10e},{k:.10e},{:.10e}",
            ens.form_factor(tau)?,
            ktilde_expansion(ens, tau, cfg.degree)?
        )
        .unwrap();
        if kind == GraphKind::Plain {
            write!(s, ",{:.10e},{:.10e},{:.10e}", k / tau, 1.0 + f2 * tau.sqrt(), 1.0 / tau).unwrap();
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn stats(cfg: &RunConfig) -> CliResult<PathBuf> {
    let mut timer = Timer::start();
    let ens = load_input(cfg)?;
    timer.lap("load");
    let all = spectra_of(&ens, cfg.magnetic)?;
    timer.lap("eigensolve");
    let v = ens.manifest.vertex_count;
    let opts = options(cfg.t_min, cfg.t_max, cfg.window, cfg.connected, v);
    let mut staging = Staging::new(&cfg.out)?;
    let mut names = Vec::new();
    for (kind, records) in &all {
        let k = kind.as_str();
        let unfolded = unfolded_phases(records);
        let pofs = spacing_distribution(&unfolded, cfg.bin_width, cfg.s_max)?;
        stage_curve(&mut staging, &format!("pofs_{k}"), &pofs)?;
        let kunf = form_factor_unfolded(&unfolded, v, cfg.degree, Some(*kind), &opts)?;
        stage_curve(&mut staging, &format!("kunfolded_{k}"), &kunf)?;
        let (kt, ratio) = raw_form_factor(records, *kind, cfg.estimator, cfg.count_mode, &opts, true)?;
        stage_curve(&mut staging, &format!("ktilde_{k}"), &kt)?;
        if let Some(r) = ratio {
            stage_curve(&mut staging, "var_over_mean", &r)?;
        }
        timer.lap(&format!("statistics {k}"));
        let taus: Vec<f64> = kunf.x.iter().copied().filter(|&t| t > 0.0).collect();
        staging.write(
            &format!("baseline_{k}.csv"),
            baseline_csv(cfg, *kind, records[0].level_count(), &taus)?,
        )?;
        timer.lap(&format!("baseline {k}"));
        names.push(k);
    }
    let titles: Vec<String> = names.iter().map(|k| format!("{k}, d={}, V={v}", cfg.degree)).collect();
    let files = |prefix: &str| -> Vec<String> { names.iter().map(|k| format!("{prefix}_{k}.csv")).collect() };
    let (pofs, kunf, ktilde, baselines) = (files("pofs"), files("kunfolded"), files("ktilde"), files("baseline"));
    let panels = |data: &[String]| -> Vec<(String, String)> {
        titles.iter().cloned().zip(data.iter().cloned()).collect()
    };
    let with_baseline = |data: &[String], column: u32| -> Vec<(String, String, String, u32, String)> {
        panels(data)
            .into_iter()
            .zip(&baselines)
            .zip(&names)
            .map(|(((t, d), b), k)| (t, d, b.clone(), column, if *k == "plain" { "COE" } else { "CUE" }.to_string()))
            .collect()
    };
    let xmax = cfg.t_max as f64 / v as f64;
    staging.write("fig1.gp", plots::spacing(&panels(&pofs)))?;
    staging.write("fig2.gp", plots::form_factor("fig2.png", "K(τ)", &with_baseline(&kunf, 2), xmax))?;
    staging.write("fig3.gp", plots::form_factor("fig3.png", "K̃(τ)", &with_baseline(&ktilde, 3), xmax))?;
    if names.contains(&"plain") {
        staging.write("var_over_mean.gp", plots::var_over_mean("var_over_mean.csv", "baseline_plain.csv", 5))?;
    }
    finish(staging, cfg, timer)
}

fn geometric(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect()
}

pub fn collapse(cfg: &RunConfig) -> CliResult<PathBuf> {
    let mut timer = Timer::start();
    ensure_distinct(&cfg.out, &cfg.ensembles)?;
    let taus = geometric(cfg.collapse_tau_min, cfg.collapse_tau_max, cfg.collapse_points);
    let mut staging = Staging::new(&cfg.out)?;
    let mut theory = Vec::new();
    for &d in &cfg.degrees {
        let map = UnfoldingMap::new(d, 1)?;
        let coe = ktilde_curve(&CircularEnsemble::Coe, &taus, &map, cfg.inverse_mode)?;
        let cue = ktilde_curve(&CircularEnsemble::Cue, &taus, &map, cfg.inverse_mode)?;
        let (f1, f2) = (expansion_f1(d)?, expansion_f2(d)?);
        let mut s = String::from("tau,coe_collapsed,cue_collapsed,tau_3_2\n");
        for i in 0..taus.len() {
            let t = taus[i];
            writeln!(
                s,
                "{t:.10e},{:.10e},{:.10e},{:.10e}",
                (coe[i] - t) / f2,
                (cue[i] - 0.5 * t) / f1,
                t.powf(1.5)
            )
            .unwrap();
        }
        let name = format!("collapse_transform_d{d}.csv");
        staging.write(&name, s)?;
        theory.push((name, d));
    }
    timer.lap("transforms");

    let mut simulated: Vec<(GraphKind, String, String)> = Vec::new();
    for (idx, dir) in cfg.ensembles.iter().enumerate() {
        let ens = ensemble_io::load(dir)?;
        let (v, d) = (ens.manifest.vertex_count, ens.manifest.degree);
        let window = default_window(v);
        let t_max = (cfg.collapse_tau_max * v as f64).ceil() as u32 + window as u32;
        let opts = options(1, t_max, window, cfg.connected, v);
        for (kind, records) in spectra_of(&ens, ens.magnetic.is_some())? {
            let (kt, _) = raw_form_factor(&records, kind, cfg.estimator, cfg.count_mode, &opts, false)?;
            let c = data_collapse(&kt, d, kind)?.restrict(cfg.collapse_tau_min, cfg.collapse_tau_max);
            let name = format!("collapse_{}_{idx}_V{v}_d{d}.csv", kind.as_str());
            stage_curve(&mut staging, name.trim_end_matches(".csv"), &c)?;
            simulated.push((kind, name, format!("V={v}, d={d}")));
        }
        timer.lap(&format!("ensemble {}", dir.display()));
    }

    for (kind, fig, label, column, ylabel) in [
        (GraphKind::Magnetic, "fig4", "CUE", 3, "(K̃ - τ/2)/f_1(d)"),
        (GraphKind::Plain, "fig5", "COE", 2, "(K̃ - τ)/f_2(d)"),
    ] {
        let sims: Vec<(String, String)> = simulated
            .iter()
            .filter(|s| s.0 == kind)
            .map(|s| (s.1.clone(), s.2.clone()))
            .collect();
        let th: Vec<(String, String, u32)> = theory
            .iter()
            .map(|(f, d)| (f.clone(), format!("{label} d={d}"), column))
            .collect();
        staging.write(&format!("{fig}.gp"), plots::collapse(&format!("{fig}.png"), ylabel, &sims, &th))?;
    }
    finish(staging, cfg, timer)
}
