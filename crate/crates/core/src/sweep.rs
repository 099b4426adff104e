//! One complexity sweep: split, build features, run the elimination chain
//! on the training side and measure every model of the chain on the test
//! side.

use rayon::prelude::*;

use crate::corpus::{split_indices, FeatureCorpus, Instance};
use crate::domain::{Dataset, Domain};
use crate::error::{Error, Result};
use crate::features::{
    select_collocations, CollocationScore, FeatureSchema, FeatureVector, WordClass,
};
use crate::measures::{measure_of_feature_set, suite, MeasureSuite};
use crate::selection::{run_chain, ChainLink};
use crate::stats::TesterConfig;

#[derive(Clone, Debug)]
pub struct FeatureOptions {
    pub word_class: WordClass,
    pub case_sensitive: bool,
    pub pool_size: usize,
    pub collocations: usize,
}

#[derive(Clone, Debug)]
pub enum SweepInput {
    Features(FeatureCorpus),
    Text {
        instances: Vec<Instance>,
        options: FeatureOptions,
    },
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub word: String,
    pub test_fraction: f64,
    pub seed: u64,
    pub mc_samples: usize,
}

impl SweepConfig {
    pub fn tester(&self) -> TesterConfig {
        TesterConfig::monte_carlo(self.mc_samples, self.seed)
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub complexity: usize,
    pub removed_edge: Option<String>,
    pub p_value: Option<f64>,
    pub measures: MeasureSuite,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub word: String,
    pub domain: Domain,
    pub train_size: usize,
    pub test_size: usize,
    pub chain: Vec<ChainLink>,
    pub rows: Vec<SweepRow>,
    pub schema: Option<FeatureSchema>,
    pub collocation_scores: Vec<CollocationScore>,
    pub warnings: Vec<String>,
}

/// Selects collocations on `train` and builds the schema for a word class.
pub fn build_schema(
    train: &[Instance],
    options: &FeatureOptions,
    tester: &TesterConfig,
) -> Result<(FeatureSchema, Vec<CollocationScore>, Vec<String>)> {
    let scores = select_collocations(
        train,
        options.pool_size,
        options.collocations,
        options.case_sensitive,
        tester,
    )?;
    let mut warnings = Vec::new();
    if scores.len() < options.collocations {
        warnings.push(format!(
            "only {} collocation candidates available, wanted {}",
            scores.len(),
            options.collocations
        ));
    }
    let schema = FeatureSchema::new(
        options.word_class.morphology(),
        scores.iter().map(|s| s.form.clone()).collect(),
        options.case_sensitive,
    )?;
    Ok((schema, scores, warnings))
}

pub fn run_sweep(input: &SweepInput, config: &SweepConfig) -> Result<SweepResult> {
    let tester = config.tester();
    let mut warnings = Vec::new();
    let (names, rows, train_idx, test_idx, schema, scores) = match input {
        SweepInput::Features(corpus) => {
            let (tr, te) = split_indices(corpus.rows.len(), config.test_fraction, config.seed)?;
            (
                corpus.names.clone(),
                corpus.rows.clone(),
                tr,
                te,
                None,
                Vec::new(),
            )
        }
        SweepInput::Text { instances, options } => {
            let (tr, te) = split_indices(instances.len(), config.test_fraction, config.seed)?;
            let train: Vec<Instance> = tr.iter().map(|&i| instances[i].clone()).collect();
            let (schema, scores, w) = build_schema(&train, options, &tester)?;
            warnings.extend(w);
            let rows: Vec<FeatureVector> = instances.iter().map(|i| schema.extract(i)).collect();
            (schema.variable_names(), rows, tr, te, Some(schema), scores)
        }
    };
    if test_idx.is_empty() {
        return Err(Error::invalid("the split left the test set empty"));
    }
    let domain = Domain::from_rows(&names, &rows)?;
    let coded = domain.encode_all(&rows)?;
    let pick = |idx: &[usize]| {
        let mut d = Dataset::with_capacity(coded.width(), idx.len());
        for &i in idx {
            d.push(coded.row(i));
        }
        d
    };
    let train = pick(&train_idx);
    let test = pick(&test_idx);

    let chain = run_chain(&train, &domain, &tester)?;
    let featureset = measure_of_feature_set(&test, &domain)?;
    let sweep_rows = chain
        .par_iter()
        .map(|link| {
            let measures = suite(link.form(), &link.model, &test, &domain, Some(featureset))?;
            measures.validate()?;
            Ok(SweepRow {
                complexity: link.form().complexity(),
                removed_edge: link.step.as_ref().map(|s| s.edge_name.clone()),
                p_value: link.step.as_ref().map(|s| s.p_value()),
                measures,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // support only grows as edges are removed
    for w in sweep_rows.windows(2) {
        if w[1].measures.recall + 1e-12 < w[0].measures.recall {
            return Err(Error::Invariant(format!(
                "recall fell from {} to {} at complexity {}",
                w[0].measures.recall, w[1].measures.recall, w[1].complexity
            )));
        }
    }
    Ok(SweepResult {
        word: config.word.clone(),
        domain,
        train_size: train.len(),
        test_size: test.len(),
        chain,
        rows: sweep_rows,
        schema,
        collocation_scores: scores,
        warnings,
    })
}
