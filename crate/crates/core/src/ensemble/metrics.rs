use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Accuracy figures of one set of predictions. Percentages throughout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// True-positive rate per class; `None` when the class has no samples.
    pub per_class_tpr: Vec<Option<f64>>,
    pub class_totals: Vec<usize>,
    pub class_correct: Vec<usize>,
    pub n_networks: usize,
    pub accuracy_per_network: f64,
}

pub fn report_metrics(
    predictions: &[usize],
    labels: &[usize],
    n_networks: usize,
    classes: usize,
) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::EmptySplit("predictions".into()));
    }
    if n_networks == 0 {
        return Err(Error::invalid("an ensemble has at least one network"));
    }
    let mut totals = vec![0; classes];
    let mut correct = vec![0; classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if l >= classes {
            return Err(Error::invalid(format!("label {l} out of range")));
        }
        totals[l] += 1;
        if p == l {
            correct[l] += 1;
        }
    }
    let hits: usize = correct.iter().sum();
    let accuracy = 100.0 * hits as f64 / labels.len() as f64;
    Ok(Metrics {
        accuracy,
        per_class_tpr: totals
            .iter()
            .zip(&correct)
            .map(|(&t, &c)| (t > 0).then(|| 100.0 * c as f64 / t as f64))
            .collect(),
        class_totals: totals,
        class_correct: correct,
        n_networks,
        accuracy_per_network: accuracy / n_networks as f64,
    })
}

impl Metrics {
    /// Accuracy per network for an already known accuracy (in percent).
    pub fn per_network(accuracy: f64, n_networks: usize) -> f64 {
        accuracy / n_networks as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_cells() {
        assert_eq!(format!("{:.3}", Metrics::per_network(60.35, 12)), "5.029");
        assert_eq!(format!("{:.3}", Metrics::per_network(61.12, 14)), "4.366");
    }

    #[test]
    fn perfect_and_missing_classes() {
        let m = report_metrics(&[0, 1, 1, 2], &[0, 1, 1, 2], 3, 4).unwrap();
        assert_eq!(m.accuracy, 100.0);
        assert_eq!(m.per_class_tpr, vec![Some(100.0), Some(100.0), Some(100.0), None]);
        assert!(report_metrics(&[0], &[0, 1], 1, 2).is_err());
    }
}
