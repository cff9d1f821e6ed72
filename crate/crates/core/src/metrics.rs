//! Trajectory diagnostics: per-subband energy, oscillation of the x₀ series,
//! and distance of terminal samples to a known Gaussian target.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::solvers::StepRecord;
use crate::wavelet::dwt;

/// Per-step ℓ² norms of the Haar subbands of the raw x₀ estimates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubbandSeries {
    pub ll: Vec<f64>,
    pub lh: Vec<f64>,
    pub hl: Vec<f64>,
    pub hh: Vec<f64>,
}

impl SubbandSeries {
    pub fn len(&self) -> usize {
        self.ll.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ll.is_empty()
    }

    /// Norms at step `i` in `ll, lh, hl, hh` order.
    pub fn at(&self, i: usize) -> [f64; 4] {
        [self.ll[i], self.lh[i], self.hl[i], self.hh[i]]
    }
}

pub fn subband_norms(records: &[StepRecord]) -> Result<SubbandSeries> {
    if records.is_empty() {
        return Err(Error::Parameter("subband_norms needs at least one record".into()));
    }
    let mut out = SubbandSeries::default();
    for r in records {
        let [ll, lh, hl, hh] = dwt(&r.x0_est)?.norms();
        out.ll.push(ll);
        out.lh.push(lh);
        out.hl.push(hl);
        out.hh.push(hh);
    }
    Ok(out)
}

fn estimates(records: &[StepRecord], use_refined: bool) -> impl Iterator<Item = &Field> {
    records
        .iter()
        .map(move |r| if use_refined { &r.x0_refined } else { &r.x0_est })
}

/// Step-to-step distances `‖x₀ᵗ − x₀ᵗ⁺¹‖₂`; the first entry is 0.
pub fn tv_increments(records: &[StepRecord], use_refined: bool) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(records.len());
    let mut prev: Option<&Field> = None;
    for cur in estimates(records, use_refined) {
        out.push(match prev {
            Some(p) => cur.l2_distance(p)?,
            None => 0.0,
        });
        prev = Some(cur);
    }
    Ok(out)
}

/// Total variation of the x₀-estimate series: `Σ ‖x₀ᵗ − x₀ᵗ⁺¹‖₂`.
///
/// A run with fewer than two records has zero variation.
pub fn trajectory_tv(records: &[StepRecord], use_refined: bool) -> Result<f64> {
    Ok(tv_increments(records, use_refined)?.iter().sum())
}

/// Value of one cell across the run, for oscillation plots.
pub fn cell_trace(records: &[StepRecord], cell: (usize, usize, usize), use_refined: bool) -> Result<Vec<f64>> {
    let (h, w, c) = cell;
    estimates(records, use_refined)
        .map(|f| {
            let s = f.shape();
            if h >= s.height || w >= s.width || c >= s.channels {
                return Err(Error::Dimension(format!("cell {cell:?} outside {s}")));
            }
            Ok(f.get(h, w, c))
        })
        .collect()
}

/// Summary of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub timesteps: Vec<usize>,
    /// `None` when the field has odd height or width.
    pub subband_norms: Option<SubbandSeries>,
    pub tv_raw_increments: Vec<f64>,
    pub tv_refined_increments: Vec<f64>,
    pub tv_raw: f64,
    pub tv_refined: f64,
    pub traces: Vec<CellTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTrace {
    pub cell: (usize, usize, usize),
    pub raw: Vec<f64>,
    pub refined: Vec<f64>,
}

impl TrajectoryStats {
    pub fn from_records(records: &[StepRecord], cells: &[(usize, usize, usize)]) -> Result<Self> {
        let shape = records
            .first()
            .ok_or_else(|| Error::Parameter("no records".into()))?
            .x0_est
            .shape();
        let subband_norms = if shape.height % 2 == 0 && shape.width % 2 == 0 {
            Some(subband_norms(records)?)
        } else {
            None
        };
        let tv_raw_increments = tv_increments(records, false)?;
        let tv_refined_increments = tv_increments(records, true)?;
        let traces = cells
            .iter()
            .map(|&cell| {
                Ok(CellTrace {
                    cell,
                    raw: cell_trace(records, cell, false)?,
                    refined: cell_trace(records, cell, true)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            timesteps: records.iter().map(|r| r.t).collect(),
            subband_norms,
            tv_raw: tv_raw_increments.iter().sum(),
            tv_refined: tv_refined_increments.iter().sum(),
            tv_raw_increments,
            tv_refined_increments,
            traces,
        })
    }
}

/// Mean over cells of the 1D squared 2-Wasserstein distance between the
/// per-cell empirical moments `(m̂, v̂)` and `N(μ, s²)`:
/// `(m̂ − μ)² + (√v̂ − s)²`. `v̂` is the population (1/n) variance.
pub fn gaussian_w2(samples: &[Field], mu: &Field, s2: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Parameter(format!(
            "gaussian_w2 needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(s2 >= 0.0 && s2.is_finite()) {
        return Err(Error::Parameter(format!("target variance must be ≥ 0, got {s2}")));
    }
    for s in samples {
        s.ensure_same_shape(mu)?;
    }
    let n = samples.len() as f64;
    let cells = mu.shape().len();
    let sd = s2.sqrt();
    let mut total = 0.0;
    for i in 0..cells {
        let mean = samples.iter().map(|s| s.data()[i]).sum::<f64>() / n;
        let var = samples
            .iter()
            .map(|s| (s.data()[i] - mean).powi(2))
            .sum::<f64>()
            / n;
        total += (mean - mu.data()[i]).powi(2) + (var.sqrt() - sd).powi(2);
    }
    Ok(total / cells as f64)
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
