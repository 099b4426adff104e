//! Backward elimination from the saturated form to Naive Bayes, removing one
//! feature–feature interdependency per step.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::domain::{Dataset, Domain, TAG};
use crate::error::{Error, Result};
use crate::graphmodel::{fit_ml, FittedModel, ModelForm};
use crate::stats::{edge_test, TestResult, TesterConfig};

#[derive(Clone, Debug)]
pub struct EliminationStep {
    pub removed_edge: (usize, usize),
    pub edge_name: String,
    pub test: TestResult,
    pub resulting_form: ModelForm,
    /// Feature–feature edges that could not be candidates at this step
    /// because removing them would break chordality.
    pub blocked: usize,
}

impl EliminationStep {
    pub fn p_value(&self) -> f64 {
        self.test.p_value()
    }

    pub fn statistic(&self) -> f64 {
        self.test.statistic
    }
}

/// Feature–feature edges lying in exactly one maximal clique, i.e. the
/// edges whose removal keeps the graph chordal. Tag edges never qualify.
pub fn removable_edges(form: &ModelForm) -> Result<Vec<(usize, usize)>> {
    let tree = form.junction_tree()?;
    Ok(form
        .edges()
        .into_iter()
        .filter(|&(a, b)| a != TAG && b != TAG)
        .filter(|&(a, b)| {
            tree.cliques
                .iter()
                .filter(|c| c.contains(&a) && c.contains(&b))
                .count()
                == 1
        })
        .collect())
}

fn feature_edges(form: &ModelForm) -> usize {
    form.edges()
        .iter()
        .filter(|&&(a, b)| a != TAG && b != TAG)
        .count()
}

struct Candidate {
    edge: (usize, usize),
    name: String,
    test: TestResult,
    model: FittedModel,
}

/// Larger p first, then smaller statistic, then edge name.
fn preference(a: &Candidate, b: &Candidate) -> Ordering {
    b.test
        .p_value()
        .total_cmp(&a.test.p_value())
        .then(a.test.statistic.total_cmp(&b.test.statistic))
        .then_with(|| a.name.cmp(&b.name))
}

/// Removes the interdependency least apparent in `data`: every removable
/// edge is tested against `current` and the one with the largest p-value
/// goes. `None` once no feature–feature edge is left.
pub fn next_model(
    current: &FittedModel,
    data: &Dataset,
    domain: &Domain,
    config: &TesterConfig,
) -> Result<Option<(EliminationStep, FittedModel)>> {
    let form = current.form();
    let edges = removable_edges(form)?;
    if edges.is_empty() {
        if feature_edges(form) > 0 {
            return Err(Error::Invariant(
                "feature edges remain but none can be removed".into(),
            ));
        }
        return Ok(None);
    }
    let blocked = feature_edges(form) - edges.len();
    let candidates = edges
        .par_iter()
        .map(|&(a, b)| {
            let reduced = form.without_edge(a, b)?;
            let model = fit_ml(&reduced, data, domain)?;
            let test = edge_test(current, &model, data, config)?;
            Ok(Candidate {
                edge: (a, b),
                name: form.edge_name(a, b),
                test,
                model,
            })
        })
        .collect::<Result<Vec<Candidate>>>()?;
    let best = candidates
        .into_iter()
        .min_by(preference)
        .expect("at least one candidate");
    let step = EliminationStep {
        removed_edge: best.edge,
        edge_name: best.name,
        test: best.test,
        resulting_form: best.model.form().clone(),
        blocked,
    };
    Ok(Some((step, best.model)))
}

#[derive(Clone, Debug)]
pub struct ChainLink {
    pub model: FittedModel,
    /// The step that produced this model; `None` for the saturated start.
    pub step: Option<EliminationStep>,
}

impl ChainLink {
    pub fn form(&self) -> &ModelForm {
        self.model.form()
    }
}

/// Number of forms from saturated down to Naive Bayes with `features`
/// feature variables: `C(n+1, 2) − n + 1`.
pub fn chain_length(features: usize) -> usize {
    (features + 1) * features / 2 - features + 1
}

/// The whole elimination chain on `train`.
pub fn run_chain(
    train: &Dataset,
    domain: &Domain,
    config: &TesterConfig,
) -> Result<Vec<ChainLink>> {
    if train.is_empty() {
        return Err(Error::invalid(
            "cannot build a chain from empty training data",
        ));
    }
    let saturated = ModelForm::saturated(domain.names().to_vec())?;
    let mut chain = vec![ChainLink {
        model: fit_ml(&saturated, train, domain)?,
        step: None,
    }];
    while let Some((step, model)) =
        next_model(&chain[chain.len() - 1].model, train, domain, config)?
    {
        chain.push(ChainLink {
            model,
            step: Some(step),
        });
    }
    let want = chain_length(domain.len() - 1);
    if chain.len() != want {
        return Err(Error::Invariant(format!(
            "chain has {} forms, expected {want}",
            chain.len()
        )));
    }
    Ok(chain)
}
