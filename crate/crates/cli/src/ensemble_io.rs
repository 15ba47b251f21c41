//! On-disk ensemble layout: `manifest.json` plus `graphs/graph_NNNNNN.txt`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rrg_spectra::graph_ensemble::{parse_graph_file, write_graph_file};
use rrg_spectra::{validate, ConnectivityPolicy, Ensemble, EnsembleManifest, MagneticGraph, RegularGraph};

use crate::error::{CliError, CliResult};
use crate::output::Staging;

pub const MANIFEST: &str = "manifest.json";
pub const GRAPH_DIR: &str = "graphs";

pub fn graph_file_name(index: usize) -> String {
    format!("{GRAPH_DIR}/graph_{index:06}.txt")
}

pub fn stage_ensemble(staging: &mut Staging, ens: &Ensemble) -> CliResult<()> {
    let json = serde_json::to_string_pretty(&ens.manifest).expect("manifest serialises") + "\n";
    staging.write(MANIFEST, json)?;
    for (k, g) in ens.graphs.iter().enumerate() {
        let m = ens.magnetic.as_ref().map(|ms| &ms[k]);
        staging.write(&graph_file_name(k), write_graph_file(g, m))?;
    }
    Ok(())
}

pub fn read_manifest(dir: &Path) -> CliResult<EnsembleManifest> {
    if !dir.is_dir() {
        return Err(CliError::io(dir, "ensemble directory does not exist"));
    }
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::io(dir, "not an ensemble directory (no manifest.json)"),
        _ => CliError::io(&path, e),
    })?;
    let manifest: EnsembleManifest = serde_json::from_str(&text).map_err(|e| CliError::io(&path, e))?;
    if manifest.ensemble_size == 0 || manifest.seeds.len() != manifest.ensemble_size {
        return Err(CliError::io(&path, "manifest lists no graphs or disagrees with its own size"));
    }
    let phase_seeds_ok = match &manifest.phase_seeds {
        Some(p) => manifest.magnetic && p.len() == manifest.ensemble_size,
        None => !manifest.magnetic,
    };
    if !phase_seeds_ok {
        return Err(CliError::io(&path, "manifest phase seeds disagree with its magnetic flag"));
    }
    Ok(manifest)
}

/// One graph file that failed to load or check.
#[derive(Debug, Clone)]
pub struct FileProblem {
    pub path: PathBuf,
    pub message: String,
}

impl std::fmt::Display for FileProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.message)
    }
}

pub struct LoadedEnsemble {
    pub manifest: EnsembleManifest,
    pub graphs: Vec<RegularGraph>,
    pub magnetic: Option<Vec<MagneticGraph>>,
}

fn load_one(dir: &Path, manifest: &EnsembleManifest, k: usize) -> Loaded {
    let path = dir.join(graph_file_name(k));
    let problem = |message: String| FileProblem {
        path: path.clone(),
        message,
    };
    let text = fs::read_to_string(&path).map_err(|e| problem(e.to_string()))?;
    let file = parse_graph_file(&text).map_err(|e| problem(e.to_string()))?;
    let g = &file.graph;
    if g.vertex_count() != manifest.vertex_count || g.degree() != manifest.degree || g.seed() != manifest.seeds[k] {
        return Err(problem(format!(
            "header (V={}, d={}, seed={}) disagrees with the manifest (V={}, d={}, seed={})",
            g.vertex_count(),
            g.degree(),
            g.seed(),
            manifest.vertex_count,
            manifest.degree,
            manifest.seeds[k]
        )));
    }
    let report = validate(g);
    if !report.is_simple || !report.is_regular {
        return Err(problem("not a simple regular graph".into()));
    }
    if manifest.connectivity == ConnectivityPolicy::ConnectedOnly && !report.is_connected {
        return Err(problem("disconnected graph in a connected-only ensemble".into()));
    }
    match (&manifest.phase_seeds, file.phases.is_some()) {
        (Some(seeds), true) => {
            let graph = file.graph.clone();
            let m = file.into_magnetic(seeds[k]).map_err(|e| problem(e.to_string()))?;
            Ok((graph, Some(m)))
        }
        (Some(_), false) => Err(problem("magnetic ensemble but the file carries no phases".into())),
        (None, true) => Err(problem("file carries phases but the ensemble is not magnetic".into())),
        (None, false) => Ok((file.graph, None)),
    }
}

pub type Loaded = Result<(RegularGraph, Option<MagneticGraph>), FileProblem>;

/// Loads every graph, collecting all per-file problems.
pub fn load_checked(dir: &Path) -> CliResult<(EnsembleManifest, Vec<Loaded>)> {
    let manifest = read_manifest(dir)?;
    let results = (0..manifest.ensemble_size)
        .into_par_iter()
        .map(|k| load_one(dir, &manifest, k))
        .collect();
    Ok((manifest, results))
}

/// Loads an ensemble, failing on the first bad file.
pub fn load(dir: &Path) -> CliResult<LoadedEnsemble> {
    let (manifest, results) = load_checked(dir)?;
    let mut graphs = Vec::with_capacity(results.len());
    let mut magnetic = manifest.magnetic.then(Vec::new);
    for r in results {
        let (g, m) = r.map_err(|p| CliError::io(&p.path, p.message))?;
        graphs.push(g);
        if let (Some(ms), Some(m)) = (magnetic.as_mut(), m) {
            ms.push(m);
        }
    }
    Ok(LoadedEnsemble {
        manifest,
        graphs,
        magnetic,
    })
}
