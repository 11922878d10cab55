use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{QaoaConfig, RunResult, StochasticQaoa};
use crate::error::{Error, Result};
use crate::model::InstanceSpec;
use crate::oracle::Oracle;

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub layers: usize,
    pub run: usize,
    pub seed: u64,
    pub best_expectation: f64,
    /// `;`-joined components of the modal first-stage vector.
    pub modal_j: String,
    pub success: bool,
    pub evaluations: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSummary {
    pub layers: usize,
    pub runs: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub success_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    /// Here-and-now optimum a run's `modal_j` is compared against.
    pub optimum_j: Vec<i64>,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<LayerSummary>,
    pub runs: Vec<RunResult>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn summary_for(&self, layers: usize) -> Option<&LayerSummary> {
        self.summary.iter().find(|s| s.layers == layers)
    }
}

/// Runs `runs` seeded optimizations for each entry of `layers`. Run `r` of
/// the `l`-th layer count uses seed `base.seed + l * runs + r`. Runs execute
/// in parallel but are reported in `(layer, run)` order.
pub fn layer_sweep(
    instance: &InstanceSpec,
    layers: &[usize],
    runs: usize,
    base: &QaoaConfig,
) -> Result<SweepTable> {
    if layers.is_empty() || runs == 0 {
        return Err(Error::Config(
            "sweep needs at least one layer count and one run".into(),
        ));
    }
    let optimum_j = Oracle::new(instance)?.solve_here_and_now()?.0;
    let qaoa = StochasticQaoa::new(instance, base.penalty)?;
    let jobs: Vec<(usize, usize)> = layers
        .iter()
        .flat_map(|&l| (0..runs).map(move |r| (l, r)))
        .collect();
    for &l in layers {
        QaoaConfig {
            layers: l,
            ..base.clone()
        }
        .validate()?;
    }

    let results: Vec<RunResult> = jobs
        .par_iter()
        .enumerate()
        .map(|(n, &(l, _))| {
            let cfg = QaoaConfig {
                layers: l,
                seed: base.seed.wrapping_add(n as u64),
                ..base.clone()
            };
            qaoa.optimize(&cfg)
        })
        .collect::<Result<_>>()?;

    let rows: Vec<SweepRow> = results
        .iter()
        .zip(&jobs)
        .map(|(r, &(l, run))| SweepRow {
            layers: l,
            run,
            seed: r.seed,
            best_expectation: r.best_expectation,
            modal_j: r
                .modal_j
                .iter()
                .map(i64::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            success: r.modal_j == optimum_j,
            evaluations: r.evaluations,
            wall_ms: r.wall_ms.unwrap_or(0.0),
        })
        .collect();

    let summary = layers
        .iter()
        .enumerate()
        .map(|(li, &l)| {
            let chunk = &rows[li * runs..(li + 1) * runs];
            let mut values: Vec<f64> = chunk.iter().map(|r| r.best_expectation).collect();
            values.sort_by(f64::total_cmp);
            LayerSummary {
                layers: l,
                runs,
                min: values[0],
                q1: quantile(&values, 0.25),
                median: quantile(&values, 0.5),
                q3: quantile(&values, 0.75),
                max: values[values.len() - 1],
                success_fraction: chunk.iter().filter(|r| r.success).count() as f64 / runs as f64,
            }
        })
        .collect();

    Ok(SweepTable {
        optimum_j,
        rows,
        summary,
        runs: results,
    })
}

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_type7() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[5.0], 0.75), 5.0);
    }

    fn quick() -> QaoaConfig {
        QaoaConfig {
            max_evaluations: 20,
            seed: 100,
            ..Default::default()
        }
    }

    #[test]
    fn seeds_and_row_order() {
        let inst = InstanceSpec::reference();
        let t = layer_sweep(&inst, &[1, 2], 3, &quick()).unwrap();
        assert_eq!(t.rows.len(), 6);
        let seeds: Vec<u64> = t.rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, (100..106).collect::<Vec<_>>());
        let keys: Vec<(usize, usize)> = t.rows.iter().map(|r| (r.layers, r.run)).collect();
        assert_eq!(keys, vec![(1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)]);
        assert_eq!(t.summary.len(), 2);
        assert_eq!(t.optimum_j, vec![2]);
    }

    #[test]
    fn csv_header_and_single_row() {
        let inst = InstanceSpec::reference();
        let t = layer_sweep(&inst, &[1], 1, &quick()).unwrap();
        let text = t.to_csv_string().unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "layers,run,seed,best_expectation,modal_j,success,evaluations,wall_ms"
        );
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let inst = InstanceSpec::reference();
        assert!(layer_sweep(&inst, &[], 3, &quick()).is_err());
        assert!(layer_sweep(&inst, &[1], 0, &quick()).is_err());
        assert!(layer_sweep(&inst, &[0], 1, &quick()).is_err());
    }
}
