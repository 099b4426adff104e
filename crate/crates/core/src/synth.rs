//! Synthetic feature corpora drawn from decomposable models.
//!
//! Sampling walks the junction tree from the root: the root clique is drawn
//! from its marginal, every later clique from its conditional given the
//! separator shared with its parent.
//!
//! Generator specs are plain text, one directive per line:
//!
//! ```text
//! variable tag 1 2 3
//! variable A yes no
//! edge tag A
//! potential tag A : 1 2 3 4 5 6
//! n 1000
//! seed 7
//! ```
//!
//! Each `potential` lists variables that must be pairwise joined in the form,
//! then `:` and one nonnegative weight per cell (last variable fastest).
//! Variables not covered by any potential are uniform given the rest.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::corpus::FeatureCorpus;
use crate::domain::{Dataset, Domain};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::graphmodel::{FittedModel, JunctionTree, ModelForm, TableIndex};
use crate::stats::{replicate_rng, ContingencyTable};

/// Rows per independently seeded sampling block.
const BLOCK_ROWS: usize = 4096;

struct CliqueSampler {
    clique: TableIndex,
    separator: TableIndex,
    /// separator cell -> (clique cells, weights over them)
    conditionals: BTreeMap<usize, (Vec<usize>, WeightedIndex<f64>)>,
}

/// Draws full assignments from a junction-tree factorization.
pub struct ForwardSampler {
    width: usize,
    steps: Vec<CliqueSampler>,
}

impl ForwardSampler {
    /// `weights[i]` lists the nonzero cells of clique `i` of `tree`. For a
    /// child clique, the weights need only be proportional to its
    /// conditional distribution given the separator.
    pub fn new(
        tree: &JunctionTree,
        cards: &[usize],
        weights: &[Vec<(usize, f64)>],
    ) -> Result<Self> {
        let mut steps = Vec::with_capacity(tree.cliques.len());
        let mut full = vec![0u32; cards.len()];
        for (i, clique) in tree.cliques.iter().enumerate() {
            let clique = TableIndex::new(clique, cards);
            let separator = TableIndex::new(&tree.separators[i], cards);
            let mut groups: BTreeMap<usize, (Vec<usize>, Vec<f64>)> = BTreeMap::new();
            for &(cell, w) in &weights[i] {
                if w > 0.0 {
                    clique.scatter(cell, &mut full);
                    let g = groups.entry(separator.index(&full)).or_default();
                    g.0.push(cell);
                    g.1.push(w);
                }
            }
            if i == 0 && groups.is_empty() {
                return Err(Error::Unnormalizable);
            }
            let mut conditionals = BTreeMap::new();
            for (s, (cells, ws)) in groups {
                let dist = WeightedIndex::new(&ws).map_err(|_| Error::Unnormalizable)?;
                conditionals.insert(s, (cells, dist));
            }
            steps.push(CliqueSampler {
                clique,
                separator,
                conditionals,
            });
        }
        Ok(ForwardSampler {
            width: cards.len(),
            steps,
        })
    }

    /// Sampler for the ML joint of a fitted model: clique counts are
    /// proportional to root marginal and child conditionals alike.
    pub fn from_fitted(model: &FittedModel) -> Self {
        let weights: Vec<Vec<(usize, f64)>> = model
            .clique_tables()
            .iter()
            .map(|t| t.nonzero().map(|(i, c)| (i, c as f64)).collect())
            .collect();
        Self::new(model.junction_tree(), model.cardinalities(), &weights)
            .expect("a fitted model has positive mass")
    }

    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R, row: &mut [u32]) {
        for step in &self.steps {
            let s = step.separator.index(row);
            let (cells, dist) = step
                .conditionals
                .get(&s)
                .expect("separator configuration with positive mass");
            step.clique.scatter(cells[dist.sample(rng)], row);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Dataset {
        let mut data = Dataset::with_capacity(self.width, n);
        let mut row = vec![0u32; self.width];
        for _ in 0..n {
            self.sample_row(rng, &mut row);
            data.push(&row);
        }
        data
    }

    /// `n` rows drawn in fixed-size blocks, block `b` from stream
    /// `(seed, b)`. The result does not depend on the thread count.
    pub fn sample_blocks(&self, n: usize, seed: u64) -> Dataset {
        let blocks: Vec<Dataset> = (0..n.div_ceil(BLOCK_ROWS))
            .into_par_iter()
            .map(|b| {
                let rows = BLOCK_ROWS.min(n - b * BLOCK_ROWS);
                self.sample(rows, &mut replicate_rng(seed, b as u64))
            })
            .collect();
        let mut out = Dataset::with_capacity(self.width, n);
        for b in &blocks {
            out.extend(b);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub vars: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    pub domain: Domain,
    pub form: ModelForm,
    pub potentials: Vec<Potential>,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(
        domain: Domain,
        form: ModelForm,
        potentials: Vec<Potential>,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        if form.names() != domain.names() {
            return Err(Error::invalid(
                "form and domain declare different variables",
            ));
        }
        if !form.is_decomposable() {
            return Err(Error::NotDecomposable);
        }
        let cards = domain.cardinalities();
        for p in &potentials {
            let mut sorted = p.vars.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != p.vars.len() || p.vars.iter().any(|&v| v >= domain.len()) {
                return Err(Error::invalid(
                    "potential lists a variable twice or an unknown variable",
                ));
            }
            for (i, &a) in p.vars.iter().enumerate() {
                for &b in &p.vars[i + 1..] {
                    if !form.has_edge(a, b) {
                        return Err(Error::invalid(format!(
                            "potential over {} and {} but the form has no such edge",
                            domain.name(a),
                            domain.name(b)
                        )));
                    }
                }
            }
            let size: usize = p.vars.iter().map(|&v| cards[v]).product();
            if p.values.len() != size {
                return Err(Error::invalid(format!(
                    "potential needs {size} values, has {}",
                    p.values.len()
                )));
            }
            if p.values.iter().any(|&w| w < 0.0 || !w.is_finite()) {
                return Err(Error::invalid(
                    "potential values must be finite and nonnegative",
                ));
            }
        }
        Ok(GeneratorSpec {
            domain,
            form,
            potentials,
            n,
            seed,
        })
    }

    /// Parses the declarative spec format described in the module docs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut levels: Vec<Vec<String>> = Vec::new();
        let mut edges: Vec<(String, String, usize)> = Vec::new();
        let mut potentials: Vec<(Vec<String>, Vec<f64>, usize)> = Vec::new();
        let mut n = None;
        let mut seed = 0u64;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let key = words.next().unwrap_or("");
            let rest: Vec<&str> = words.collect();
            match key {
                "variable" => {
                    if rest.len() < 2 {
                        return Err(Error::parse(
                            lineno,
                            "variable needs a name and at least one level",
                        ));
                    }
                    names.push(rest[0].to_string());
                    levels.push(rest[1..].iter().map(|s| s.to_string()).collect());
                }
                "edge" => {
                    if rest.len() != 2 {
                        return Err(Error::parse(lineno, "edge needs two variable names"));
                    }
                    edges.push((rest[0].to_string(), rest[1].to_string(), lineno));
                }
                "potential" => {
                    let colon = rest.iter().position(|&w| w == ":").ok_or_else(|| {
                        Error::parse(lineno, "potential needs ':' before its values")
                    })?;
                    let vars = rest[..colon].iter().map(|s| s.to_string()).collect();
                    let values = rest[colon + 1..]
                        .iter()
                        .map(|w| {
                            w.parse::<f64>()
                                .map_err(|_| Error::parse(lineno, format!("bad weight {w:?}")))
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    potentials.push((vars, values, lineno));
                }
                "n" | "seed" => {
                    let v: u64 = rest
                        .first()
                        .filter(|_| rest.len() == 1)
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| Error::parse(lineno, format!("{key} needs one integer")))?;
                    if key == "n" {
                        n = Some(v as usize);
                    } else {
                        seed = v;
                    }
                }
                _ => return Err(Error::parse(lineno, format!("unknown directive {key:?}"))),
            }
        }
        let n = n.ok_or_else(|| Error::parse(1, "spec lacks an `n` line"))?;
        let domain = Domain::new(names, levels)?;
        let var = |name: &str, lineno: usize| -> Result<usize> {
            domain
                .names()
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| Error::parse(lineno, format!("unknown variable {name:?}")))
        };
        let mut form = ModelForm::independence(domain.names().to_vec())?;
        for (a, b, lineno) in &edges {
            form.add_edge(var(a, *lineno)?, var(b, *lineno)?)
                .map_err(|e| Error::parse(*lineno, e.to_string()))?;
        }
        let potentials = potentials
            .into_iter()
            .map(|(vars, values, lineno)| {
                Ok(Potential {
                    vars: vars.iter().map(|v| var(v, lineno)).collect::<Result<_>>()?,
                    values,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        GeneratorSpec::new(domain, form, potentials, n, seed)
    }

    /// Unnormalized clique tables: each potential multiplied into the first
    /// clique that holds all of its variables.
    fn clique_potentials(&self, tree: &JunctionTree) -> Vec<(TableIndex, Vec<f64>)> {
        let cards = self.domain.cardinalities();
        let mut tables: Vec<(TableIndex, Vec<f64>)> = tree
            .cliques
            .iter()
            .map(|c| {
                let idx = TableIndex::new(c, &cards);
                let size = idx.size();
                (idx, vec![1.0; size])
            })
            .collect();
        let mut full = vec![0u32; cards.len()];
        for p in &self.potentials {
            let home = tree
                .cliques
                .iter()
                .position(|c| p.vars.iter().all(|v| c.contains(v)))
                .expect("a complete vertex set lies inside some maximal clique");
            let pidx = TableIndex::new(&p.vars, &cards);
            let (cidx, values) = &mut tables[home];
            for (cell, value) in values.iter_mut().enumerate() {
                cidx.scatter(cell, &mut full);
                *value *= p.values[pidx.index(&full)];
            }
        }
        tables
    }

    /// Sampler whose clique weights are the upward (collect-pass) beliefs.
    pub fn sampler(&self) -> Result<ForwardSampler> {
        let tree = self.form.junction_tree()?;
        let cards = self.domain.cardinalities();
        let mut beliefs = self.clique_potentials(&tree);
        let mut full = vec![0u32; cards.len()];
        for i in (1..tree.cliques.len()).rev() {
            let parent = tree.parents[i].expect("non-root clique has a parent");
            let sep = TableIndex::new(&tree.separators[i], &cards);
            let mut message = vec![0.0; sep.size()];
            let (cidx, values) = &beliefs[i];
            for (cell, &w) in values.iter().enumerate() {
                cidx.scatter(cell, &mut full);
                message[sep.index(&full)] += w;
            }
            let (pidx, pvalues) = &mut beliefs[parent];
            for (cell, w) in pvalues.iter_mut().enumerate() {
                pidx.scatter(cell, &mut full);
                *w *= message[sep.index(&full)];
            }
        }
        let total: f64 = beliefs[0].1.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::Unnormalizable);
        }
        let weights: Vec<Vec<(usize, f64)>> = beliefs
            .iter()
            .map(|(_, v)| {
                v.iter()
                    .copied()
                    .enumerate()
                    .filter(|&(_, w)| w > 0.0)
                    .collect()
            })
            .collect();
        ForwardSampler::new(&tree, &cards, &weights)
    }

    /// The normalized joint by direct enumeration of the potential product.
    pub fn joint_table(&self) -> Result<Vec<f64>> {
        let cards = self.domain.cardinalities();
        let all: Vec<usize> = (0..cards.len()).collect();
        let idx = TableIndex::new(&all, &cards);
        let pidx: Vec<TableIndex> = self
            .potentials
            .iter()
            .map(|p| TableIndex::new(&p.vars, &cards))
            .collect();
        let mut full = vec![0u32; cards.len()];
        let mut joint = Vec::with_capacity(idx.size());
        for cell in 0..idx.size() {
            idx.scatter(cell, &mut full);
            let w: f64 = self
                .potentials
                .iter()
                .zip(&pidx)
                .map(|(p, i)| p.values[i.index(&full)])
                .product();
            joint.push(w);
        }
        let z: f64 = joint.iter().sum();
        if z <= 0.0 || !z.is_finite() {
            return Err(Error::Unnormalizable);
        }
        joint.iter_mut().for_each(|w| *w /= z);
        Ok(joint)
    }

    pub fn generate_coded(&self) -> Result<Dataset> {
        Ok(self.sampler()?.sample_blocks(self.n, self.seed))
    }
}

/// `spec.n` i.i.d. rows from the spec's joint.
pub fn generate(spec: &GeneratorSpec) -> Result<Vec<FeatureVector>> {
    let data = spec.generate_coded()?;
    Ok(data.rows().map(|r| spec.domain.decode(r)).collect())
}

pub fn generate_corpus(spec: &GeneratorSpec) -> Result<FeatureCorpus> {
    Ok(FeatureCorpus {
        names: spec.domain.names().to_vec(),
        rows: generate(spec)?,
    })
}

/// Full joint counts of `rows` over every variable of `domain`.
pub fn empirical_joint(rows: &[FeatureVector], domain: &Domain) -> Result<ContingencyTable> {
    if rows.is_empty() {
        return Err(Error::invalid("no rows"));
    }
    let data = domain.encode_all(rows)?;
    let all: Vec<usize> = (0..domain.len()).collect();
    Ok(ContingencyTable::from_data(domain, &data, &all))
}
