//! Contextual features of an ambiguous word: one morphological variable
//! (nouns and verbs only), up to three collocation variables and four POS
//! variables for the two words on either side.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::corpus::{Instance, NULL_VALUE};
use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::graphmodel::{fit_with_cards, ModelForm};
use crate::stats::{edge_test, TesterConfig};

pub const TAG_NAME: &str = "tag";
pub const POS_OFFSETS: [isize; 4] = [-2, -1, 1, 2];
pub const DEFAULT_POOL_SIZE: usize = 400;
pub const DEFAULT_COLLOCATIONS: usize = 3;

/// Values of the non-classification variables, plus the tag when known.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    pub tag: Option<String>,
    pub values: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordClass {
    Noun,
    Verb,
    Adjective,
}

impl WordClass {
    pub fn morphology(self) -> MorphRule {
        match self {
            WordClass::Noun => MorphRule::NounPlural,
            WordClass::Verb => MorphRule::VerbTenseSuffix,
            WordClass::Adjective => MorphRule::None,
        }
    }
}

impl FromStr for WordClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noun" => Ok(WordClass::Noun),
            "verb" => Ok(WordClass::Verb),
            "adj" | "adjective" => Ok(WordClass::Adjective),
            _ => Err(Error::invalid(format!("unknown word class {s:?}"))),
        }
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordClass::Noun => "noun",
            WordClass::Verb => "verb",
            WordClass::Adjective => "adj",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MorphRule {
    None,
    NounPlural,
    VerbTenseSuffix,
}

impl MorphRule {
    fn as_str(self) -> &'static str {
        match self {
            MorphRule::None => "none",
            MorphRule::NounPlural => "noun-plural",
            MorphRule::VerbTenseSuffix => "verb-tense-suffix",
        }
    }
}

impl FromStr for MorphRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(MorphRule::None),
            "noun-plural" => Ok(MorphRule::NounPlural),
            "verb-tense-suffix" => Ok(MorphRule::VerbTenseSuffix),
            _ => Err(Error::invalid(format!("unknown morphology rule {s:?}"))),
        }
    }
}

/// Coarse POS class: the first character of the Penn tag, or the null value
/// past a sentence boundary.
pub fn map_pos(penn_tag: Option<&str>) -> String {
    match penn_tag.and_then(|t| t.chars().next()) {
        Some(c) => c.to_string(),
        None => NULL_VALUE.to_string(),
    }
}

const TENSE_SUFFIXES: [&str; 3] = ["ing", "ed", "s"];

pub fn morph_value(instance: &Instance, rule: MorphRule) -> String {
    let target = instance.target();
    match rule {
        MorphRule::None => "-".to_string(),
        MorphRule::NounPlural => {
            let plural = match target.pos.as_str() {
                "NNS" | "NNPS" => true,
                "NN" | "NNP" => false,
                _ => {
                    let w = target.word.to_lowercase();
                    w.ends_with('s') && !w.ends_with("ss")
                }
            };
            if plural { "plural" } else { "singular" }.to_string()
        }
        MorphRule::VerbTenseSuffix => {
            let w = target.word.to_lowercase();
            TENSE_SUFFIXES
                .iter()
                .find(|s| w.len() > s.len() && w.ends_with(*s))
                .map(|s| format!("-{s}"))
                .unwrap_or_else(|| "base".to_string())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSchema {
    pub morphology: MorphRule,
    pub collocations: Vec<String>,
    pub case_sensitive: bool,
}

impl FeatureSchema {
    pub fn new(
        morphology: MorphRule,
        collocations: Vec<String>,
        case_sensitive: bool,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &collocations {
            if !seen.insert(c.as_str()) {
                return Err(Error::invalid(format!("duplicate collocation {c:?}")));
            }
        }
        Ok(FeatureSchema {
            morphology,
            collocations,
            case_sensitive,
        })
    }

    /// Variable names, tag first.
    pub fn variable_names(&self) -> Vec<String> {
        let mut names = vec![TAG_NAME.to_string()];
        if self.morphology != MorphRule::None {
            names.push("M".to_string());
        }
        for i in 0..self.collocations.len() {
            names.push(format!("C{}", i + 1));
        }
        for off in POS_OFFSETS {
            names.push(format!("P_{off:+}"));
        }
        names
    }

    pub fn arity(&self) -> usize {
        self.variable_names().len() - 1
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("morphology\t{}\n", self.morphology.as_str()));
        s.push_str(&format!("case_sensitive\t{}\n", self.case_sensitive));
        for c in &self.collocations {
            s.push_str(&format!("collocation\t{c}\n"));
        }
        s.push_str(&format!(
            "variables\t{}\n",
            self.variable_names().join("\t")
        ));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut morphology = None;
        let mut case_sensitive = false;
        let mut collocations = Vec::new();
        let mut variables = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line.split_once('\t').unwrap_or((line, ""));
            match key {
                "morphology" => morphology = Some(rest.parse::<MorphRule>()?),
                "case_sensitive" => {
                    case_sensitive = rest
                        .parse()
                        .map_err(|_| Error::parse(i + 1, format!("bad boolean {rest:?}")))?
                }
                "collocation" => collocations.push(rest.to_string()),
                "variables" => {
                    variables = Some(rest.split('\t').map(str::to_string).collect::<Vec<_>>())
                }
                _ => return Err(Error::parse(i + 1, format!("unknown schema key {key:?}"))),
            }
        }
        let morphology =
            morphology.ok_or_else(|| Error::parse(1, "schema lacks a morphology line"))?;
        let schema = FeatureSchema::new(morphology, collocations, case_sensitive)?;
        if let Some(v) = variables {
            if v != schema.variable_names() {
                return Err(Error::invalid(
                    "schema variable list does not match its rules",
                ));
            }
        }
        Ok(schema)
    }

    fn fold(&self, word: &str) -> String {
        if self.case_sensitive {
            word.to_string()
        } else {
            word.to_lowercase()
        }
    }

    /// Feature vector `[morph?, C1.., P_-2, P_-1, P_+1, P_+2]` with the tag
    /// filled from the instance.
    pub fn extract(&self, instance: &Instance) -> FeatureVector {
        let mut values = Vec::with_capacity(self.arity());
        if self.morphology != MorphRule::None {
            values.push(morph_value(instance, self.morphology));
        }
        if !self.collocations.is_empty() {
            let present: HashSet<String> = instance
                .tokens
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != instance.target_index)
                .map(|(_, t)| self.fold(&t.word))
                .collect();
            for c in &self.collocations {
                let hit = present.contains(&self.fold(c));
                values.push(if hit { "yes" } else { "no" }.to_string());
            }
        }
        for off in POS_OFFSETS {
            let pos = instance
                .target_index
                .checked_add_signed(off)
                .and_then(|i| instance.tokens.get(i))
                .map(|t| t.pos.as_str());
            values.push(map_pos(pos));
        }
        FeatureVector {
            tag: Some(instance.sense.clone()),
            values,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollocationScore {
    pub form: String,
    pub frequency: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Scores the `pool_size` most frequent spelling forms of the training
/// sentences by the dependence of their presence on the tag, and returns the
/// `k` most dependent (smallest p-value, then higher frequency, then
/// lexicographic).
pub fn select_collocations(
    train: &[Instance],
    pool_size: usize,
    k: usize,
    case_sensitive: bool,
    tester: &TesterConfig,
) -> Result<Vec<CollocationScore>> {
    if train.is_empty() {
        return Err(Error::invalid(
            "collocation selection needs training instances",
        ));
    }
    let fold = |w: &str| {
        if case_sensitive {
            w.to_string()
        } else {
            w.to_lowercase()
        }
    };
    let targets: HashSet<String> = train.iter().map(|i| fold(&i.target().word)).collect();
    let mut freq: HashMap<String, usize> = HashMap::new();
    for inst in train {
        for t in &inst.tokens {
            let w = fold(&t.word);
            if !targets.contains(&w) {
                *freq.entry(w).or_default() += 1;
            }
        }
    }
    let mut pool: Vec<(String, usize)> = freq.into_iter().collect();
    pool.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    pool.truncate(pool_size);

    let mut senses: Vec<&str> = train.iter().map(|i| i.sense.as_str()).collect();
    senses.sort_unstable();
    senses.dedup();
    let sense_code: HashMap<&str, u32> = senses
        .iter()
        .enumerate()
        .map(|(i, s)| (*s, i as u32))
        .collect();
    let sentence_words: Vec<HashSet<String>> = train
        .iter()
        .map(|i| i.tokens.iter().map(|t| fold(&t.word)).collect())
        .collect();

    let names = vec![TAG_NAME.to_string(), "present".to_string()];
    let dependent = ModelForm::saturated(names.clone())?;
    let independent = ModelForm::independence(names)?;
    let cards = [senses.len(), 2];

    let mut scored = Vec::with_capacity(pool.len());
    for (form, frequency) in pool {
        let mut data = Dataset::with_capacity(2, train.len());
        for (inst, words) in train.iter().zip(&sentence_words) {
            data.push(&[
                sense_code[inst.sense.as_str()],
                words.contains(&form) as u32,
            ]);
        }
        let with = fit_with_cards(&dependent, &data, &cards)?;
        let without = fit_with_cards(&independent, &data, &cards)?;
        let r = edge_test(&with, &without, &data, tester)?;
        scored.push(CollocationScore {
            form,
            frequency,
            statistic: r.statistic,
            p_value: r.p_value(),
        });
    }
    scored.sort_by(|a, b| {
        a.p_value
            .total_cmp(&b.p_value)
            .then(b.frequency.cmp(&a.frequency))
            .then_with(|| a.form.cmp(&b.form))
    });
    scored.truncate(k);
    Ok(scored)
}
