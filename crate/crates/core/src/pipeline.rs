//! Per-graph stages mapped over an ensemble in parallel.
//!
//! Results come back in graph order regardless of scheduling.

use rayon::prelude::*;

use crate::error::Result;
use crate::graph_ensemble::{MagneticGraph, RegularGraph};
use crate::nb_walks::{CountMode, WalkCounts};
use crate::spectral::{magnetic_spectrum, plain_spectrum, GraphKind, SpectrumRecord};

pub fn plain_spectra(graphs: &[RegularGraph]) -> Result<Vec<SpectrumRecord>> {
    graphs.par_iter().enumerate().map(|(i, g)| plain_spectrum(i, g)).collect()
}

pub fn magnetic_spectra(graphs: &[MagneticGraph]) -> Result<Vec<SpectrumRecord>> {
    graphs.par_iter().enumerate().map(|(i, m)| magnetic_spectrum(i, m)).collect()
}

/// Walk counts for `t_min..=t_max` from stored spectra.
pub fn walk_counts(records: &[SpectrumRecord], t_min: u32, t_max: u32, mode: CountMode) -> Result<Vec<WalkCounts>> {
    records
        .par_iter()
        .map(|r| {
            let ev = r.eigenvalues();
            match r.kind {
                GraphKind::Plain => {
                    WalkCounts::from_plain_spectrum(r.graph_id, &ev, r.vertex_count, r.degree, t_min, t_max, mode)
                }
                GraphKind::Magnetic => {
                    WalkCounts::from_magnetic_spectrum(r.graph_id, &ev, r.vertex_count, r.degree, t_min, t_max, mode)
                }
            }
        })
        .collect()
}

/// Sorted unfolded phases of every record.
pub fn unfolded_phases(records: &[SpectrumRecord]) -> Vec<Vec<f64>> {
    records.iter().map(SpectrumRecord::unfolded).collect()
}

/// Sorted eigenphases of every record.
pub fn eigenphases(records: &[SpectrumRecord]) -> Vec<Vec<f64>> {
    records.iter().map(SpectrumRecord::phases).collect()
}

/// Mean number of out-of-support eigenvalues per graph.
pub fn mean_clamp_count(records: &[SpectrumRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().map(|r| r.clamp_count as f64).sum::<f64>() / records.len() as f64
}
