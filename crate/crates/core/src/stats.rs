//! Contingency tables, the G² statistic and the test used to score a single
//! interdependency between two nested decomposable forms.
//!
//! The test statistic is the deviance difference `G²(without) − G²(with)`.
//! Its reference distribution is either the asymptotic chi-square with the
//! difference in free parameters as degrees of freedom, or a Monte Carlo
//! parametric bootstrap drawn from the fitted reduced model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::domain::{Dataset, Domain};
use crate::error::{Error, Result};
use crate::graphmodel::{fit_with_tree, CountTable, FittedModel};
use crate::synth::ForwardSampler;

#[derive(Clone, Debug, PartialEq)]
pub struct ContingencyTable {
    pub variables: Vec<String>,
    pub levels: Vec<Vec<String>>,
    /// Row-major over `variables`, last varying fastest.
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ContingencyTable {
    /// Counts of `data` over the listed variables of `domain`.
    pub fn from_data(domain: &Domain, data: &Dataset, vars: &[usize]) -> Self {
        let table = CountTable::count(vars, &domain.cardinalities(), data);
        ContingencyTable {
            variables: vars.iter().map(|&v| domain.name(v).to_string()).collect(),
            levels: vars.iter().map(|&v| domain.levels(v).to_vec()).collect(),
            total: table.total(),
            counts: table.to_dense(),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub df: u64,
    pub p_asymptotic: f64,
    pub p_exact: Option<f64>,
    pub mc_samples: Option<usize>,
}

impl TestResult {
    /// The Monte Carlo p-value when one was computed, else the asymptotic one.
    pub fn p_value(&self) -> f64 {
        self.p_exact.unwrap_or(self.p_asymptotic)
    }
}

/// How edge tests compute their p-values. `mc_samples == 0` means
/// asymptotic only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TesterConfig {
    pub mc_samples: usize,
    pub seed: u64,
}

impl TesterConfig {
    pub fn asymptotic() -> Self {
        TesterConfig {
            mc_samples: 0,
            seed: 0,
        }
    }

    pub fn monte_carlo(mc_samples: usize, seed: u64) -> Self {
        TesterConfig { mc_samples, seed }
    }

    pub fn describe(&self) -> String {
        if self.mc_samples == 0 {
            "asymptotic chi-square on the deviance difference".to_string()
        } else {
            format!(
                "Monte Carlo parametric bootstrap from the reduced model ({} samples, seed {}), \
                 deviance-difference statistic, p = (r+1)/(samples+1)",
                self.mc_samples, self.seed
            )
        }
    }
}

/// `2 Σ O ln(O/E)` over the cells with `O > 0`.
pub fn g2(observed: &ContingencyTable, fitted: &[f64]) -> Result<f64> {
    if fitted.len() != observed.counts.len() {
        return Err(Error::invalid(format!(
            "fitted table has {} cells, observed has {}",
            fitted.len(),
            observed.counts.len()
        )));
    }
    if fitted.iter().any(|&e| e < 0.0 || e.is_nan()) {
        return Err(Error::invalid("fitted values must be nonnegative"));
    }
    let mass: f64 = fitted.iter().sum();
    if (mass - observed.total as f64).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "fitted values sum to {mass}, observed total is {}",
            observed.total
        )));
    }
    let mut sum = 0.0;
    for (&o, &e) in observed.counts.iter().zip(fitted) {
        if o == 0 {
            continue;
        }
        if e == 0.0 {
            return Ok(f64::INFINITY);
        }
        let o = o as f64;
        sum += o * (o / e).ln();
    }
    Ok((2.0 * sum).max(0.0))
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(x: f64, df: u64) -> Result<f64> {
    if df < 1 {
        return Err(Error::invalid(
            "chi-square needs at least one degree of freedom",
        ));
    }
    if x.is_nan() {
        return Err(Error::invalid("chi-square statistic is NaN"));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(dist.sf(x).clamp(0.0, 1.0))
}

fn deviance_difference(with: &FittedModel, without: &FittedModel) -> f64 {
    (2.0 * (with.log_likelihood() - without.log_likelihood())).max(0.0)
}

fn check_nested(with: &FittedModel, without: &FittedModel) -> Result<()> {
    let a = with.form();
    let b = without.form();
    if a.names() != b.names() {
        return Err(Error::NotNested("forms declare different variables".into()));
    }
    let ea = a.edges();
    let eb = b.edges();
    if !eb.iter().all(|e| ea.contains(e)) {
        return Err(Error::NotNested(
            "reduced form has an edge the larger form lacks".into(),
        ));
    }
    if ea.len() != eb.len() + 1 {
        return Err(Error::NotNested(format!(
            "forms differ by {} edges",
            ea.len() as isize - eb.len() as isize
        )));
    }
    if with.cardinalities() != without.cardinalities() {
        return Err(Error::NotNested(
            "forms were fitted over different domains".into(),
        ));
    }
    Ok(())
}

/// Tests the one edge that `with` has and `without` lacks, both fitted on
/// `data`.
pub fn edge_test(
    with: &FittedModel,
    without: &FittedModel,
    data: &Dataset,
    config: &TesterConfig,
) -> Result<TestResult> {
    check_nested(with, without)?;
    if with.n() != data.len() as u64 || without.n() != data.len() as u64 {
        return Err(Error::invalid("models were not fitted on this data"));
    }
    let statistic = deviance_difference(with, without);
    let df = with
        .free_parameters()
        .saturating_sub(without.free_parameters());
    let p_asymptotic = if df == 0 {
        1.0
    } else {
        chi2_sf(statistic, df)?
    };

    let (p_exact, mc_samples) = if config.mc_samples > 0 {
        let exceed = monte_carlo_exceedances(with, without, statistic, config)?;
        let p = (exceed as f64 + 1.0) / (config.mc_samples as f64 + 1.0);
        (Some(p), Some(config.mc_samples))
    } else {
        (None, None)
    };
    Ok(TestResult {
        statistic,
        df,
        p_asymptotic,
        p_exact,
        mc_samples,
    })
}

fn monte_carlo_exceedances(
    with: &FittedModel,
    without: &FittedModel,
    observed: f64,
    config: &TesterConfig,
) -> Result<usize> {
    let sampler = ForwardSampler::from_fitted(without);
    let n = without.n() as usize;
    let cards = without.cardinalities();
    let threshold = observed - 1e-9 * observed.abs().max(1.0);
    let hits = (0..config.mc_samples)
        .into_par_iter()
        .map(|r| -> Result<bool> {
            let mut rng = replicate_rng(config.seed, r as u64);
            let sample = sampler.sample(n, &mut rng);
            let w = fit_with_tree(with.form(), with.junction_tree().clone(), &sample, cards)?;
            let wo = fit_with_tree(
                without.form(),
                without.junction_tree().clone(),
                &sample,
                cards,
            )?;
            Ok(deviance_difference(&w, &wo) >= threshold)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.into_iter().filter(|&h| h).count())
}

/// Independent stream per (seed, replicate) so serial and parallel runs
/// draw the same samples.
pub(crate) fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}
