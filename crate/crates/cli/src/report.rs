//! Test-set evaluation of the pruned ensembles and the report files.

use std::fmt::Write;
use std::path::Path;

use d2nn::data::SplitTag;
use d2nn::ensemble::{
    accuracy, ensemble_predict, report_metrics, select_ensemble, PruningTrace, ScoreCache,
    WeightMatrix,
};
use serde::{Deserialize, Serialize};

use crate::artifacts::{write_json, write_text};
use crate::error::{CliError, CliResult};
use crate::plot::{bar_chart, scatter, Series};

/// One pruning repeat as stored under `traces/`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneRun {
    pub repeat: usize,
    pub seed: u64,
    /// Hash of the validation cache the trace was computed on.
    pub cache_sha: String,
    pub n_max: usize,
    /// Index into `trace.records` of the selected ensemble.
    pub selected: usize,
    pub trace: PruningTrace,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

/// Accuracies in percent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub seed: u64,
    pub iteration: usize,
    pub members: Vec<String>,
    pub validation_accuracy: f64,
    pub validation_accuracy_equal: f64,
    pub test_accuracy: f64,
    pub test_accuracy_equal: f64,
    pub accuracy_per_network: f64,
    pub per_class_tpr: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub name: String,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub ensemble_validation: MeanStd,
    pub ensemble_test: MeanStd,
    pub ensemble_test_equal: MeanStd,
    pub ensemble_size: MeanStd,
    pub mean_individual_validation: f64,
    pub best_individual_validation: f64,
    pub mean_individual_test: f64,
    pub best_individual_test: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionPoint {
    pub repeat: usize,
    pub n_max: usize,
    pub size: usize,
    pub validation_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub repeats: Vec<RepeatResult>,
    pub individuals: Vec<Individual>,
    pub selection: Vec<SelectionPoint>,
    /// `(repeat, iteration, size, validation, equal-weights validation)`.
    pub traces: Vec<(usize, usize, usize, f64, f64)>,
    pub summary: Summary,
    /// Set by the caller from the audit log.
    pub test_isolated: bool,
}

fn pct(x: f64) -> f64 {
    100.0 * x
}

/// Evaluates every repeat's selected ensemble on `test` and every pool
/// member on both caches.
pub fn build_report(validation: &ScoreCache, test: &ScoreCache, runs: &[PruneRun]) -> CliResult<Report> {
    if validation.split() == SplitTag::Test || test.split() != SplitTag::Test {
        return Err(CliError::config("report needs a validation cache and a test cache"));
    }
    if validation.networks() != test.networks() {
        return Err(CliError::stale("validation and test caches list different networks"));
    }
    if runs.is_empty() {
        return Err(CliError::stale("no pruning traces"));
    }
    let classes = test.classes();
    let labels: Vec<usize> = test.labels().iter().map(|&l| usize::from(l)).collect();
    let mut repeats = Vec::new();
    for run in runs {
        let rec = run
            .trace
            .records
            .get(run.selected)
            .ok_or_else(|| CliError::stale(format!("repeat {} selects a missing record", run.repeat)))?;
        let sub = test.select(&rec.members)?;
        let preds: Vec<usize> = (0..sub.n_samples())
            .map(|s| ensemble_predict(sub.sample(s), &rec.weights))
            .collect();
        let m = report_metrics(&preds, &labels, rec.size, classes)?;
        let equal = WeightMatrix::equal(rec.size, classes);
        repeats.push(RepeatResult {
            repeat: run.repeat,
            seed: run.seed,
            iteration: rec.iteration,
            members: rec.names.clone(),
            validation_accuracy: pct(rec.validation_accuracy),
            validation_accuracy_equal: pct(rec.equal_weights_accuracy),
            test_accuracy: m.accuracy,
            test_accuracy_equal: pct(accuracy(&sub, &equal)?),
            accuracy_per_network: m.accuracy_per_network,
            per_class_tpr: m.per_class_tpr,
        });
    }

    let one = WeightMatrix::equal(1, classes);
    let individuals = (0..validation.n_networks())
        .map(|k| -> CliResult<Individual> {
            Ok(Individual {
                name: validation.networks()[k].clone(),
                validation_accuracy: pct(accuracy(&validation.select(&[k])?, &one)?),
                test_accuracy: pct(accuracy(&test.select(&[k])?, &one)?),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut selection = Vec::new();
    let mut traces = Vec::new();
    for run in runs {
        for n_max in 1..=validation.n_networks() {
            let r = select_ensemble(&run.trace, n_max)?;
            selection.push(SelectionPoint {
                repeat: run.repeat,
                n_max,
                size: r.size,
                validation_accuracy: pct(r.validation_accuracy),
            });
        }
        for r in &run.trace.records {
            traces.push((
                run.repeat,
                r.iteration,
                r.size,
                pct(r.validation_accuracy),
                pct(r.equal_weights_accuracy),
            ));
        }
    }

    let col = |f: fn(&RepeatResult) -> f64| MeanStd::of(&repeats.iter().map(f).collect::<Vec<_>>());
    let ival: Vec<f64> = individuals.iter().map(|i| i.validation_accuracy).collect();
    let itest: Vec<f64> = individuals.iter().map(|i| i.test_accuracy).collect();
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let summary = Summary {
        ensemble_validation: col(|r| r.validation_accuracy),
        ensemble_test: col(|r| r.test_accuracy),
        ensemble_test_equal: col(|r| r.test_accuracy_equal),
        ensemble_size: col(|r| r.members.len() as f64),
        mean_individual_validation: MeanStd::of(&ival).mean,
        best_individual_validation: max(&ival),
        mean_individual_test: MeanStd::of(&itest).mean,
        best_individual_test: max(&itest),
    };
    Ok(Report {
        repeats,
        individuals,
        selection,
        traces,
        summary,
        test_isolated: false,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.2}"))
}

impl Report {
    /// Accuracy table: one row per repeat, then mean ± std.
    pub fn accuracy_table(&self) -> String {
        let mut s = String::from("repeat\tsize\tvalidation\ttest\ttest_equal_weights\taccuracy_per_network\n");
        for r in &self.repeats {
            let _ = writeln!(
                s,
                "{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.3}",
                r.repeat,
                r.members.len(),
                r.validation_accuracy,
                r.test_accuracy,
                r.test_accuracy_equal,
                r.accuracy_per_network
            );
        }
        let m = &self.summary;
        let _ = writeln!(
            s,
            "mean±std\t{:.2}±{:.2}\t{:.2}±{:.2}\t{:.2}±{:.2}\t{:.2}±{:.2}\t-",
            m.ensemble_size.mean,
            m.ensemble_size.std,
            m.ensemble_validation.mean,
            m.ensemble_validation.std,
            m.ensemble_test.mean,
            m.ensemble_test.std,
            m.ensemble_test_equal.mean,
            m.ensemble_test_equal.std
        );
        s
    }

    pub fn tpr_table(&self) -> String {
        let mut s = String::from("class");
        for r in &self.repeats {
            let _ = write!(s, "\trepeat_{}", r.repeat);
        }
        s.push('\n');
        let classes = self.repeats.first().map_or(0, |r| r.per_class_tpr.len());
        for c in 0..classes {
            let _ = write!(s, "{c}");
            for r in &self.repeats {
                let _ = write!(s, "\t{}", cell(r.per_class_tpr[c]));
            }
            s.push('\n');
        }
        s
    }

    pub fn individual_table(&self) -> String {
        let mut s = String::from("model\tvalidation\ttest\n");
        for i in &self.individuals {
            let _ = writeln!(s, "{}\t{:.2}\t{:.2}", i.name, i.validation_accuracy, i.test_accuracy);
        }
        for r in &self.repeats {
            let _ = writeln!(
                s,
                "ensemble_{}\t{:.2}\t{:.2}",
                r.repeat, r.validation_accuracy, r.test_accuracy
            );
        }
        s
    }

    pub fn selection_table(&self) -> String {
        let mut s = String::from("repeat\tn_max\tsize\tvalidation\n");
        for p in &self.selection {
            let _ = writeln!(s, "{}\t{}\t{}\t{:.2}", p.repeat, p.n_max, p.size, p.validation_accuracy);
        }
        s
    }

    pub fn weights_table(&self) -> String {
        let mut s = String::from("repeat\toptimized\tequal_weights\tdifference\n");
        for r in &self.repeats {
            let _ = writeln!(
                s,
                "{}\t{:.2}\t{:.2}\t{:.2}",
                r.repeat,
                r.test_accuracy,
                r.test_accuracy_equal,
                r.test_accuracy - r.test_accuracy_equal
            );
        }
        s
    }

    pub fn trace_table(&self) -> String {
        let mut s = String::from("repeat\titeration\tsize\tvalidation\tvalidation_equal_weights\n");
        for (r, i, n, v, e) in &self.traces {
            let _ = writeln!(s, "{r}\t{i}\t{n}\t{v:.2}\t{e:.2}");
        }
        s
    }

    /// Short human-readable summary.
    pub fn lines(&self) -> Vec<String> {
        let m = &self.summary;
        vec![
            format!("ensemble validation accuracy: {}", m.ensemble_validation),
            format!("ensemble test accuracy: {}", m.ensemble_test),
            format!("equal-weights test accuracy: {}", m.ensemble_test_equal),
            format!(
                "individual validation accuracy: mean {:.2}, best {:.2}",
                m.mean_individual_validation, m.best_individual_validation
            ),
            format!(
                "individual test accuracy: mean {:.2}, best {:.2}",
                m.mean_individual_test, m.best_individual_test
            ),
            format!("test split read only by report: {}", self.test_isolated),
        ]
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_text(&dir.join("accuracy.tsv"), &self.accuracy_table())?;
        write_text(&dir.join("tpr.tsv"), &self.tpr_table())?;
        write_text(&dir.join("individual_vs_ensemble.tsv"), &self.individual_table())?;
        write_text(&dir.join("n_vs_nmax.tsv"), &self.selection_table())?;
        write_text(&dir.join("equal_vs_optimized.tsv"), &self.weights_table())?;
        write_text(&dir.join("trace.tsv"), &self.trace_table())?;
        write_json(&dir.join("summary.json"), self)?;

        let classes: Vec<String> = (0..self.repeats[0].per_class_tpr.len()).map(|c| c.to_string()).collect();
        let names: Vec<String> = self.repeats.iter().map(|r| format!("repeat {}", r.repeat)).collect();
        let tpr: Vec<Series> = self
            .repeats
            .iter()
            .zip(&names)
            .map(|(r, n)| Series {
                name: n,
                values: r.per_class_tpr.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
            })
            .collect();
        write_text(
            &dir.join("tpr.svg"),
            &bar_chart("Per-class true-positive rate (test)", "TPR (%)", &classes, &tpr),
        )?;

        let mut labels: Vec<String> = self.individuals.iter().map(|i| i.name.clone()).collect();
        labels.extend(self.repeats.iter().map(|r| format!("ensemble {}", r.repeat)));
        let mut test: Vec<f64> = self.individuals.iter().map(|i| i.test_accuracy).collect();
        test.extend(self.repeats.iter().map(|r| r.test_accuracy));
        let mut val: Vec<f64> = self.individuals.iter().map(|i| i.validation_accuracy).collect();
        val.extend(self.repeats.iter().map(|r| r.validation_accuracy));
        write_text(
            &dir.join("individual_vs_ensemble.svg"),
            &bar_chart(
                "Individual networks and pruned ensembles",
                "accuracy (%)",
                &labels,
                &[
                    Series {
                        name: "validation",
                        values: val,
                    },
                    Series {
                        name: "test",
                        values: test,
                    },
                ],
            ),
        )?;

        let sets: Vec<(&str, Vec<(f64, f64)>)> = self
            .repeats
            .iter()
            .zip(&names)
            .map(|(r, n)| {
                let pts = self
                    .selection
                    .iter()
                    .filter(|p| p.repeat == r.repeat)
                    .map(|p| (p.n_max as f64, p.size as f64))
                    .collect();
                (n.as_str(), pts)
            })
            .collect();
        write_text(
            &dir.join("n_vs_nmax.svg"),
            &scatter("Selected ensemble size", "N_max", "N", &sets, true, false),
        )?;

        let curves: Vec<(&str, Vec<(f64, f64)>)> = self
            .repeats
            .iter()
            .zip(&names)
            .map(|(r, n)| {
                let pts = self
                    .traces
                    .iter()
                    .filter(|t| t.0 == r.repeat)
                    .map(|t| (t.2 as f64, t.3))
                    .collect();
                (n.as_str(), pts)
            })
            .collect();
        write_text(
            &dir.join("trace.svg"),
            &scatter("Pruning trace (validation)", "ensemble size", "accuracy (%)", &curves, false, true),
        )?;
        Ok(())
    }
}
