//! Long-format plot tables, one observation per row.

use wegner_core::experiments::{IdsTable, LifshitzSeries, MsaSchedule, WegnerResult};
use wegner_core::spectral::CombesThomasFit;
use wegner_core::{LabError, Result};

use crate::report::{cell, num, Table};

pub const PLOT_KINDS: [&str; 5] = ["combes-thomas", "ids", "wegner", "lifshitz", "msa"];

/// A result that can be reshaped for plotting.
#[derive(Clone, Copy, Debug)]
pub enum PlotSource<'a> {
    /// `(gap, fit)` pairs.
    CombesThomas(&'a [(f64, CombesThomasFit)]),
    Ids(&'a [IdsTable]),
    Wegner(&'a WegnerResult),
    Lifshitz(&'a LifshitzSeries),
    Msa(&'a MsaSchedule),
}

impl PlotSource<'_> {
    pub fn kind(&self) -> &'static str {
        match self {
            PlotSource::CombesThomas(_) => "combes-thomas",
            PlotSource::Ids(_) => "ids",
            PlotSource::Wegner(_) => "wegner",
            PlotSource::Lifshitz(_) => "lifshitz",
            PlotSource::Msa(_) => "msa",
        }
    }
}

pub fn emit_plot_data(result: &PlotSource, kind: &str) -> Result<Table> {
    if !PLOT_KINDS.contains(&kind) {
        return Err(LabError::Config(format!(
            "unknown plot kind `{kind}`; expected one of {}",
            PLOT_KINDS.join(", ")
        )));
    }
    if result.kind() != kind {
        return Err(LabError::Precondition(format!(
            "plot kind `{kind}` requested for a {} result",
            result.kind()
        )));
    }
    let table = match result {
        PlotSource::CombesThomas(fits) => {
            let mut t = Table::new(&["gap", "separation", "log_norm", "fit_prediction"]);
            t.comment("gap: distance of z below the sampled spectral floor");
            t.comment("log_norm: log of the resolvent block norm between unit cells at this separation");
            t.comment("fit_prediction: least-squares line through log_norm");
            for (gap, fit) in fits.iter() {
                for &(sep, log_norm) in &fit.points {
                    t.push(vec![num(*gap), num(sep), num(log_norm), num(fit.prediction(sep))]);
                }
            }
            t
        }
        PlotSource::Ids(tables) => {
            let mut t = Table::new(&["energy", "ids_mean", "ids_stderr", "l", "bc"]);
            t.comment("ids_mean: sample mean of the eigenvalue count below energy per unit volume");
            t.comment("ids_stderr: standard error of ids_mean");
            for tab in tables.iter() {
                for k in 0..tab.energies.len() {
                    t.push(vec![
                        num(tab.energies[k]),
                        num(tab.mean[k]),
                        num(tab.stderr[k]),
                        cell(tab.l),
                        cell(tab.bc.as_str()),
                    ]);
                }
            }
            t
        }
        PlotSource::Wegner(res) => {
            let mut t = Table::new(&["l", "width", "mean", "stderr", "ratio"]);
            t.comment("mean: expected number of eigenvalues in the interval");
            t.comment("ratio: mean / (width * l^d)");
            for r in &res.rows {
                t.push(vec![cell(r.l), num(r.width()), num(r.mean), num(r.stderr), num(r.ratio)]);
            }
            t
        }
        PlotSource::Lifshitz(s) => {
            let mut t = Table::new(&["offset", "ids", "exponent"]);
            t.comment(format!("offset: energy above the sampled bottom {}", num(s.bottom)));
            t.comment("exponent: log|log ids| / log offset");
            for p in &s.points {
                t.push(vec![num(p.offset), num(p.ids), num(p.exponent)]);
            }
            t
        }
        PlotSource::Msa(s) => {
            let mut t = Table::new(&["scale", "l", "m", "q", "p"]);
            t.comment("l: box side, m: decay mass, p = l^-q: failure bound");
            for j in 0..s.l.len() {
                t.push(vec![cell(j), cell(s.l[j]), num(s.m[j]), num(s.q[j]), num(s.p[j])]);
            }
            t
        }
    };
    Ok(table)
}
