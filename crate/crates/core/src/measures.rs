//! Performance measures for one completed model on a test set.
//!
//! `overall`, `recall` and the precisions use a model estimated on the
//! training data. The measure of form refits the same form on the test set
//! itself, and the measure of feature-set is the measure of form of the
//! saturated form. Unassigned test items count as incorrect.

use std::collections::HashMap;

use crate::domain::{Dataset, Domain, TAG};
use crate::error::{Error, Result};
use crate::graphmodel::{fit_ml, FittedModel, ModelForm};

const TOLERANCE: f64 = 1e-12;

/// Classification tallies over a test set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tally {
    pub total: usize,
    pub assigned: usize,
    pub correct: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub overall: f64,
    pub recall: f64,
    /// `1 − (recall − overall)`.
    pub precision_paper: f64,
    /// `correct / assigned`; absent when nothing was assigned.
    pub precision_ratio: Option<f64>,
    pub misclassification: f64,
}

impl Tally {
    pub fn evaluation(&self) -> Evaluation {
        let n = self.total as f64;
        let wrong = self.assigned - self.correct;
        Evaluation {
            overall: self.correct as f64 / n,
            recall: self.assigned as f64 / n,
            precision_paper: (self.total - wrong) as f64 / n,
            precision_ratio: (self.assigned > 0)
                .then(|| self.correct as f64 / self.assigned as f64),
            misclassification: wrong as f64 / n,
        }
    }
}

pub fn lower_bound(test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::invalid("lower bound of an empty test set"));
    }
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for row in test.rows() {
        *counts.entry(row[TAG]).or_default() += 1;
    }
    let max = counts.values().copied().max().unwrap_or(0);
    Ok(max as f64 / test.len() as f64)
}

pub fn tally(model: &FittedModel, test: &Dataset) -> Result<Tally> {
    if test.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty test set"));
    }
    let mut t = Tally {
        total: test.len(),
        assigned: 0,
        correct: 0,
    };
    for row in test.rows() {
        if let Some(tag) = model.classify(&row[1..])? {
            t.assigned += 1;
            if tag == row[TAG] {
                t.correct += 1;
            }
        }
    }
    Ok(t)
}

pub fn evaluate(model: &FittedModel, test: &Dataset) -> Result<Evaluation> {
    Ok(tally(model, test)?.evaluation())
}

/// Accuracy of `form` when its parameters are estimated from `test`.
pub fn measure_of_form(form: &ModelForm, test: &Dataset, domain: &Domain) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::invalid("measure of form needs a nonempty test set"));
    }
    let model = fit_ml(form, test, domain)?;
    let t = tally(&model, test)?;
    if t.assigned != t.total {
        return Err(Error::Invariant(
            "a form fitted on the test set left test items unassigned".into(),
        ));
    }
    Ok(t.evaluation().overall)
}

pub fn measure_of_feature_set(test: &Dataset, domain: &Domain) -> Result<f64> {
    measure_of_form(
        &ModelForm::saturated(domain.names().to_vec())?,
        test,
        domain,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureSuite {
    pub overall: f64,
    pub lower_bound: f64,
    pub recall: f64,
    pub precision_paper: f64,
    pub precision_ratio: Option<f64>,
    pub misclassification: f64,
    pub form_measure: f64,
    pub featureset_measure: f64,
}

impl MeasureSuite {
    /// Checks the relations every suite must satisfy.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("overall", self.overall),
            ("lower_bound", self.lower_bound),
            ("recall", self.recall),
            ("precision_paper", self.precision_paper),
            ("misclassification", self.misclassification),
            ("form_measure", self.form_measure),
            ("featureset_measure", self.featureset_measure),
        ];
        for (name, v) in fields {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Invariant(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if let Some(p) = self.precision_ratio {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invariant(format!(
                    "precision_ratio = {p} is outside [0, 1]"
                )));
            }
        }
        let checks = [
            (
                (self.misclassification - (self.recall - self.overall)).abs() <= TOLERANCE,
                "misclassification != recall - overall",
            ),
            (
                (self.precision_paper - (1.0 - self.misclassification)).abs() <= TOLERANCE,
                "precision_paper != 1 - misclassification",
            ),
            (self.overall <= self.recall + TOLERANCE, "overall > recall"),
            (
                self.overall <= self.featureset_measure + TOLERANCE,
                "overall > featureset_measure",
            ),
            (
                self.form_measure <= self.featureset_measure + TOLERANCE,
                "form_measure > featureset_measure",
            ),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(Error::Invariant(what.to_string()));
            }
        }
        Ok(())
    }
}

/// Every measure for one complexity level. `featureset_measure` may be
/// passed in when already known for this test set.
pub fn suite(
    form: &ModelForm,
    model: &FittedModel,
    test: &Dataset,
    domain: &Domain,
    featureset_measure: Option<f64>,
) -> Result<MeasureSuite> {
    if model.form() != form {
        return Err(Error::invalid("model was not fitted with this form"));
    }
    let eval = evaluate(model, test)?;
    let featureset_measure = match featureset_measure {
        Some(f) => f,
        None => measure_of_feature_set(test, domain)?,
    };
    Ok(MeasureSuite {
        overall: eval.overall,
        lower_bound: lower_bound(test)?,
        recall: eval.recall,
        precision_paper: eval.precision_paper,
        precision_ratio: eval.precision_ratio,
        misclassification: eval.misclassification,
        form_measure: measure_of_form(form, test, domain)?,
        featureset_measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn domain(cards: &[usize]) -> Domain {
        let names = (0..cards.len())
            .map(|i| {
                if i == 0 {
                    "tag".to_string()
                } else {
                    format!("F{i}")
                }
            })
            .collect();
        let levels = cards
            .iter()
            .map(|&c| (0..c).map(|i| i.to_string()).collect())
            .collect();
        Domain::new(names, levels).unwrap()
    }

    #[test]
    fn tally_arithmetic() {
        let e = Tally {
            total: 10,
            assigned: 8,
            correct: 6,
        }
        .evaluation();
        assert_eq!(e.overall, 0.6);
        assert_eq!(e.recall, 0.8);
        assert_eq!(e.misclassification, 0.2);
        assert_eq!(e.precision_paper, 0.8);
        assert_eq!(e.precision_ratio, Some(0.75));

        let all = Tally {
            total: 4,
            assigned: 4,
            correct: 4,
        }
        .evaluation();
        assert_eq!(
            (all.overall, all.recall, all.precision_paper),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(all.precision_ratio, Some(1.0));
        assert_eq!(all.misclassification, 0.0);

        let none = Tally {
            total: 5,
            assigned: 0,
            correct: 0,
        }
        .evaluation();
        assert_eq!(
            (none.overall, none.recall, none.precision_paper),
            (0.0, 0.0, 1.0)
        );
        assert_eq!(none.precision_ratio, None);
    }

    #[test]
    fn lower_bound_examples() {
        // interest: 53% sense 6
        let mut rows = Vec::new();
        for i in 0..100u32 {
            rows.push(vec![if i < 53 { 5 } else { i % 5 }, 0]);
        }
        assert_eq!(lower_bound(&Dataset::from_rows(2, &rows)).unwrap(), 0.53);
        let one = Dataset::from_rows(2, &[vec![1, 0], vec![1, 1]]);
        assert_eq!(lower_bound(&one).unwrap(), 1.0);
        assert!(lower_bound(&Dataset::new(2)).is_err());
    }

    #[test]
    fn feature_set_examples() {
        let d = domain(&[2, 2]);
        // c1: t0 x3, t1 x1; c2: t0 x2
        let data = Dataset::from_rows(
            2,
            &[
                vec![0, 0],
                vec![0, 0],
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![0, 1],
            ],
        );
        assert!((measure_of_feature_set(&data, &d).unwrap() - 5.0 / 6.0).abs() < 1e-15);

        let unique = Dataset::from_rows(2, &[vec![0, 0], vec![1, 1]]);
        assert_eq!(measure_of_feature_set(&unique, &d).unwrap(), 1.0);

        let split = Dataset::from_rows(2, &[vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
        assert_eq!(measure_of_feature_set(&split, &d).unwrap(), 0.5);
    }

    #[test]
    fn independence_form_measure_is_lower_bound() {
        let d = domain(&[3, 2]);
        let data = Dataset::from_rows(
            2,
            &[vec![0, 0], vec![2, 1], vec![2, 0], vec![1, 1], vec![2, 1]],
        );
        let f = ModelForm::independence(d.names().to_vec()).unwrap();
        assert_eq!(
            measure_of_form(&f, &data, &d).unwrap(),
            lower_bound(&data).unwrap()
        );
    }

    #[test]
    fn saturated_on_own_data_coincides() {
        let d = domain(&[2, 3]);
        let data = Dataset::from_rows(
            2,
            &[
                vec![0, 0],
                vec![1, 0],
                vec![1, 1],
                vec![0, 2],
                vec![0, 2],
                vec![1, 2],
            ],
        );
        let f = ModelForm::saturated(d.names().to_vec()).unwrap();
        let m = fit_ml(&f, &data, &d).unwrap();
        let s = suite(&f, &m, &data, &d, None).unwrap();
        assert_eq!(s.overall, s.form_measure);
        assert_eq!(s.overall, s.featureset_measure);
        assert_eq!(s.recall, 1.0);
        s.validate().unwrap();
    }

    #[test]
    fn validate_catches_broken_suites() {
        let good = MeasureSuite {
            overall: 0.6,
            lower_bound: 0.5,
            recall: 0.8,
            precision_paper: 0.8,
            precision_ratio: Some(0.75),
            misclassification: 0.2,
            form_measure: 0.7,
            featureset_measure: 0.9,
        };
        good.validate().unwrap();
        assert!(MeasureSuite {
            overall: 0.95,
            ..good
        }
        .validate()
        .is_err());
        assert!(MeasureSuite {
            misclassification: 0.3,
            ..good
        }
        .validate()
        .is_err());
        assert!(MeasureSuite {
            featureset_measure: 0.65,
            ..good
        }
        .validate()
        .is_err());
        assert!(MeasureSuite {
            recall: 1.5,
            ..good
        }
        .validate()
        .is_err());
    }
}
