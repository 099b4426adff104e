#![allow(dead_code)]

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::collections::HashMap;

use modelmeasure::corpus::{FeatureCorpus, Instance, Token};
use modelmeasure::graphmodel::ModelForm;
use modelmeasure::synth::{GeneratorSpec, Potential};
use modelmeasure::{Dataset, Domain};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i == 0 {
                "tag".to_string()
            } else {
                format!("F{i}")
            }
        })
        .collect()
}

pub fn domain(cards: &[usize]) -> Domain {
    let levels = cards
        .iter()
        .map(|&c| (0..c).map(|i| format!("v{i}")).collect())
        .collect();
    Domain::new(names(cards.len()), levels).unwrap()
}

pub fn random_chordal<R: Rng>(k: usize, r: &mut R) -> ModelForm {
    loop {
        let mut f = ModelForm::independence(names(k)).unwrap();
        for a in 0..k {
            for b in a + 1..k {
                if r.random_bool(0.5) {
                    f.add_edge(a, b).unwrap();
                }
            }
        }
        if f.is_decomposable() {
            return f;
        }
    }
}

/// Rows drawn i.i.d. from a random joint in which some cells are empty.
pub fn random_data<R: Rng>(cards: &[usize], n: usize, r: &mut R) -> Dataset {
    let size: usize = cards.iter().product();
    let weights: Vec<f64> = (0..size)
        .map(|_| {
            if r.random_bool(0.2) {
                0.0
            } else {
                r.random::<f64>() + 0.05
            }
        })
        .collect();
    let dist = WeightedIndex::new(&weights).unwrap();
    let mut data = Dataset::with_capacity(cards.len(), n);
    let mut row = vec![0u32; cards.len()];
    for _ in 0..n {
        let mut cell = dist.sample(r);
        for v in (0..cards.len()).rev() {
            row[v] = (cell % cards[v]) as u32;
            cell /= cards[v];
        }
        data.push(&row);
    }
    data
}

/// Row-major position of `x`, last variable fastest.
pub fn flat(x: &[u32], cards: &[usize]) -> usize {
    x.iter()
        .zip(cards)
        .fold(0, |acc, (&v, &c)| acc * c + v as usize)
}

pub fn unflat(mut cell: usize, cards: &[usize]) -> Vec<u32> {
    let mut x = vec![0u32; cards.len()];
    for v in (0..cards.len()).rev() {
        x[v] = (cell % cards[v]) as u32;
        cell /= cards[v];
    }
    x
}

/// Maximal complete vertex sets by exhaustive search.
pub fn maximal_cliques(form: &ModelForm) -> Vec<Vec<usize>> {
    let k = form.len();
    let complete = |mask: u32| {
        (0..k).all(|a| {
            (a + 1..k).all(|b| mask & (1 << a) == 0 || mask & (1 << b) == 0 || form.has_edge(a, b))
        })
    };
    let all: Vec<u32> = (1u32..1 << k).filter(|&m| complete(m)).collect();
    all.iter()
        .filter(|&&m| !all.iter().any(|&o| o != m && o & m == m))
        .map(|&m| (0..k).filter(|&v| m & (1 << v) != 0).collect())
        .collect()
}

/// Iterative proportional fitting of the clique margins of `data`, started
/// from the uniform table. Returns probabilities in row-major order.
pub fn ipf(cliques: &[Vec<usize>], cards: &[usize], data: &Dataset) -> Vec<f64> {
    let size: usize = cards.iter().product();
    let n = data.len() as f64;
    let margin_key = |x: &[u32], c: &[usize]| -> Vec<u32> { c.iter().map(|&v| x[v]).collect() };
    let observed: Vec<HashMap<Vec<u32>, f64>> = cliques
        .iter()
        .map(|c| {
            let mut m = HashMap::new();
            for row in data.rows() {
                *m.entry(margin_key(row, c)).or_insert(0.0) += 1.0 / n;
            }
            m
        })
        .collect();
    let cells: Vec<Vec<u32>> = (0..size).map(|i| unflat(i, cards)).collect();
    let mut p = vec![1.0 / size as f64; size];
    for _ in 0..1000 {
        let mut change: f64 = 0.0;
        for (c, obs) in cliques.iter().zip(&observed) {
            let mut fitted: HashMap<Vec<u32>, f64> = HashMap::new();
            for (x, &px) in cells.iter().zip(&p) {
                *fitted.entry(margin_key(x, c)).or_insert(0.0) += px;
            }
            for (x, px) in cells.iter().zip(p.iter_mut()) {
                let key = margin_key(x, c);
                let o = obs.get(&key).copied().unwrap_or(0.0);
                let f = fitted[&key];
                let new = if f > 0.0 { *px * o / f } else { 0.0 };
                change = change.max((new - *px).abs());
                *px = new;
            }
        }
        if change < 1e-15 {
            break;
        }
    }
    p
}

/// Accuracy of predicting, for every context, the tag seen most often with
/// it in `data` itself.
pub fn context_majority_accuracy(data: &Dataset) -> f64 {
    let mut by_context: HashMap<Vec<u32>, HashMap<u32, usize>> = HashMap::new();
    for row in data.rows() {
        *by_context
            .entry(row[1..].to_vec())
            .or_default()
            .entry(row[0])
            .or_default() += 1;
    }
    let hits: usize = by_context
        .values()
        .map(|t| t.values().copied().max().unwrap())
        .sum();
    hits as f64 / data.len() as f64
}

pub fn to_corpus(domain: &Domain, data: &Dataset) -> FeatureCorpus {
    FeatureCorpus {
        names: domain.names().to_vec(),
        rows: data.rows().map(|r| domain.decode(r)).collect(),
    }
}

/// Binary tag with `features` binary features, each tied to the tag by a
/// potential with odds ratio `tag_or`; `extra` adds feature pairs with the
/// given odds ratio.
pub fn naive_bayes_spec(
    features: usize,
    tag_or: f64,
    extra: &[(usize, usize, f64)],
    n: usize,
    seed: u64,
) -> GeneratorSpec {
    let cards = vec![2; features + 1];
    let d = domain(&cards);
    let mut form = ModelForm::naive_bayes(names(features + 1)).unwrap();
    let mut potentials = Vec::new();
    for f in 1..=features {
        potentials.push(Potential {
            vars: vec![0, f],
            values: vec![tag_or.sqrt(), 1.0, 1.0, tag_or.sqrt()],
        });
    }
    for &(a, b, or) in extra {
        form.add_edge(a, b).unwrap();
        potentials.push(Potential {
            vars: vec![a, b],
            values: vec![or.sqrt(), 1.0, 1.0, or.sqrt()],
        });
    }
    GeneratorSpec::new(d, form, potentials, n, seed).unwrap()
}

const FILLER: [(&str, &str); 8] = [
    ("the", "DT"),
    ("a", "DT"),
    ("of", "IN"),
    ("rose", "VBD"),
    ("Bank", "NNP"),
    ("quickly", "RB"),
    ("new", "JJ"),
    ("said", "VBD"),
];

/// Sentences around "bill"; sense 1 favours "senate", sense 2 "dollar",
/// sense 3 "paid".
pub fn bill_corpus(n: usize, seed: u64) -> Vec<Instance> {
    let mut r = rng(seed);
    let cues = [("senate", "NN"), ("dollar", "NN"), ("paid", "VBN")];
    (0..n)
        .map(|_| {
            let sense = r.random_range(0..3usize);
            let len = r.random_range(3..9);
            let mut tokens: Vec<Token> = (0..len)
                .map(|_| {
                    let (w, p) = FILLER[r.random_range(0..FILLER.len())];
                    Token {
                        word: w.into(),
                        pos: p.into(),
                    }
                })
                .collect();
            for (i, (w, p)) in cues.iter().enumerate() {
                let chance = if i == sense { 0.7 } else { 0.1 };
                if r.random_bool(chance) {
                    let at = r.random_range(0..=tokens.len());
                    tokens.insert(
                        at,
                        Token {
                            word: w.to_string(),
                            pos: p.to_string(),
                        },
                    );
                }
            }
            let at = r.random_range(0..=tokens.len());
            let plural = r.random_bool(0.3);
            tokens.insert(
                at,
                Token {
                    word: if plural { "bills" } else { "bill" }.into(),
                    pos: if plural { "NNS" } else { "NN" }.into(),
                },
            );
            Instance::new((sense + 1).to_string(), tokens, at).unwrap()
        })
        .collect()
}
