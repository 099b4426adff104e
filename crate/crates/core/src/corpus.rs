//! Sense-tagged corpora and pre-extracted feature corpora.
//!
//! Two line formats are read here. The text corpus carries one sentence per
//! line:
//!
//! ```text
//! sense<TAB>target_index<TAB>word/POS word/POS ...
//! ```
//!
//! The feature corpus is a header line naming the tag column and then each
//! feature variable, followed by one `<TAB>`-separated row per instance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// The null POS value used at sentence boundaries.
pub const NULL_VALUE: &str = "\u{2205}";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub word: String,
    pub pos: String,
}

/// One occurrence of the ambiguous word within its sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub sense: String,
    pub tokens: Vec<Token>,
    pub target_index: usize,
}

impl Instance {
    pub fn new(sense: impl Into<String>, tokens: Vec<Token>, target_index: usize) -> Result<Self> {
        let sense = sense.into();
        if sense.is_empty() {
            return Err(Error::invalid("sense tag is empty"));
        }
        if tokens.is_empty() {
            return Err(Error::invalid("instance has no tokens"));
        }
        if target_index >= tokens.len() {
            return Err(Error::invalid(format!(
                "target index {target_index} out of range for {} tokens",
                tokens.len()
            )));
        }
        Ok(Instance {
            sense,
            tokens,
            target_index,
        })
    }

    pub fn target(&self) -> &Token {
        &self.tokens[self.target_index]
    }
}

/// Parses the text corpus format. Blank lines are skipped.
pub fn parse_text_corpus(text: &str) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let sense = fields.next().unwrap_or("");
        let index = fields
            .next()
            .ok_or_else(|| Error::parse(lineno, "expected 3 tab-separated fields"))?;
        let body = fields
            .next()
            .ok_or_else(|| Error::parse(lineno, "expected 3 tab-separated fields"))?;
        let target_index: usize = index
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad target index {index:?}")))?;
        let tokens = body
            .split_whitespace()
            .map(|tok| {
                // the last '/' separates word from POS
                let cut = tok
                    .rfind('/')
                    .filter(|&p| p > 0 && p + 1 < tok.len())
                    .ok_or_else(|| {
                        Error::parse(lineno, format!("token {tok:?} is not word/POS"))
                    })?;
                Ok(Token {
                    word: tok[..cut].to_string(),
                    pos: tok[cut + 1..].to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let inst = Instance::new(sense, tokens, target_index)
            .map_err(|e| Error::parse(lineno, e.to_string()))?;
        out.push(inst);
    }
    Ok(out)
}

pub fn write_text_corpus(instances: &[Instance]) -> String {
    let mut s = String::new();
    for inst in instances {
        s.push_str(&inst.sense);
        s.push('\t');
        s.push_str(&inst.target_index.to_string());
        s.push('\t');
        for (i, t) in inst.tokens.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&t.word);
            s.push('/');
            s.push_str(&t.pos);
        }
        s.push('\n');
    }
    s
}

/// Feature-vector rows plus the names of their variables. `names[0]` is the
/// tag column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureCorpus {
    pub names: Vec<String>,
    pub rows: Vec<FeatureVector>,
}

impl FeatureCorpus {
    pub fn feature_names(&self) -> &[String] {
        &self.names[1..]
    }
}

pub fn parse_feature_corpus(text: &str) -> Result<FeatureCorpus> {
    let mut lines = text.lines().enumerate();
    let names: Vec<String> = loop {
        match lines.next() {
            None => return Err(Error::parse(1, "missing header line")),
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l.split('\t').map(|s| s.trim().to_string()).collect(),
        }
    };
    if names.iter().any(|n| n.is_empty()) {
        return Err(Error::parse(1, "empty column name in header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != names.len() {
            return Err(Error::parse(
                i + 1,
                format!("expected {} fields, found {}", names.len(), fields.len()),
            ));
        }
        let tag = fields[0].trim();
        if tag.is_empty() {
            return Err(Error::parse(i + 1, "empty tag"));
        }
        rows.push(FeatureVector {
            tag: Some(tag.to_string()),
            values: fields[1..].iter().map(|s| s.trim().to_string()).collect(),
        });
    }
    Ok(FeatureCorpus { names, rows })
}

pub fn write_feature_corpus(corpus: &FeatureCorpus) -> String {
    let mut s = corpus.names.join("\t");
    s.push('\n');
    for row in &corpus.rows {
        s.push_str(row.tag.as_deref().unwrap_or(""));
        for v in &row.values {
            s.push('\t');
            s.push_str(v);
        }
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug)]
pub struct SplitCorpus<T> {
    pub train: Vec<T>,
    pub test: Vec<T>,
    pub seed: u64,
}

/// Number of test items for `n` items: `test_fraction * n` rounded half to
/// even, then kept inside `[1, n-1]` whenever `n >= 2`.
pub fn test_size(n: usize, test_fraction: f64) -> usize {
    let k = (test_fraction * n as f64).round_ties_even() as usize;
    if n >= 2 {
        k.clamp(1, n - 1)
    } else {
        k.min(n)
    }
}

/// Train and test index lists, each ascending.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 {
        return Err(Error::invalid("cannot split an empty corpus"));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction {test_fraction} is not in (0, 1)"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = test_size(n, test_fraction);
    let mut test = perm[..k].to_vec();
    let mut train = perm[k..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Unstratified random split. Both sides keep the source order.
pub fn split<T: Clone>(items: &[T], test_fraction: f64, seed: u64) -> Result<SplitCorpus<T>> {
    let (train, test) = split_indices(items.len(), test_fraction, seed)?;
    Ok(SplitCorpus {
        train: train.iter().map(|&i| items[i].clone()).collect(),
        test: test.iter().map(|&i| items[i].clone()).collect(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_is_empty_list() {
        assert!(parse_text_corpus("").unwrap().is_empty());
        assert!(parse_text_corpus("\n\n").unwrap().is_empty());
    }

    #[test]
    fn parses_interest_line() {
        let v = parse_text_corpus("6\t3\tThe/DT rate/NN of/IN interest/NN rose/VBD\n").unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].sense, "6");
        assert_eq!(v[0].target_index, 3);
        assert_eq!(v[0].tokens.len(), 5);
        assert_eq!(v[0].target().word, "interest");
        assert_eq!(v[0].tokens[4].pos, "VBD");
    }

    #[test]
    fn target_out_of_range_reports_line() {
        let err = parse_text_corpus("1\t0\tx/NN\n1\t9\ta/DT b/NN\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_lines() {
        assert!(parse_text_corpus("1\tx\ta/DT\n").is_err());
        assert!(parse_text_corpus("1\t0\n").is_err());
        assert!(parse_text_corpus("1\t0\tnoslash\n").is_err());
        assert!(parse_text_corpus("\t0\ta/DT\n").is_err());
    }

    #[test]
    fn last_slash_separates_pos() {
        let v = parse_text_corpus("1\t0\tand/or/CC x/NN\n").unwrap();
        assert_eq!(v[0].tokens[0].word, "and/or");
        assert_eq!(v[0].tokens[0].pos, "CC");
    }

    #[test]
    fn split_sizes_and_repeatability() {
        let items: Vec<u32> = (0..10).collect();
        let a = split(&items, 0.2, 7).unwrap();
        let b = split(&items, 0.2, 7).unwrap();
        assert_eq!(a.train.len(), 8);
        assert_eq!(a.test.len(), 2);
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        let c = split(&items, 0.2, 8).unwrap();
        assert_eq!(c.test.len(), 2);
        let mut all: Vec<u32> = a.train.iter().chain(&a.test).copied().collect();
        all.sort();
        assert_eq!(all, items);
    }

    #[test]
    fn single_item_goes_to_train() {
        // round_half_even(0.5) = 0
        let s = split(&["x"], 0.5, 1).unwrap();
        assert_eq!(s.train, vec!["x"]);
        assert!(s.test.is_empty());
    }

    #[test]
    fn split_rejects_empty_and_bad_fraction() {
        assert!(split::<u8>(&[], 0.2, 1).is_err());
        assert!(split(&[1, 2], 0.0, 1).is_err());
        assert!(split(&[1, 2], 1.0, 1).is_err());
    }

    #[test]
    fn feature_corpus_basic() {
        let c = parse_feature_corpus("tag\tC1\tP_-1\n1\tyes\tN\n").unwrap();
        assert_eq!(c.names, vec!["tag", "C1", "P_-1"]);
        assert_eq!(c.rows.len(), 1);
        assert_eq!(c.rows[0].tag.as_deref(), Some("1"));
        assert_eq!(c.rows[0].values, vec!["yes", "N"]);

        let h = parse_feature_corpus("tag\tC1\tP_-1\n").unwrap();
        assert!(h.rows.is_empty());

        match parse_feature_corpus("tag\tC1\tP_-1\n1\tyes\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_feature_corpus("").is_err());
    }

    #[test]
    fn null_value_survives_feature_round_trip() {
        let text = format!("tag\tP_-1\n3\t{NULL_VALUE}\n");
        let c = parse_feature_corpus(&text).unwrap();
        assert_eq!(c.rows[0].values[0], NULL_VALUE);
        assert_eq!(write_feature_corpus(&c), text);
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        let word = "[a-z/]{0,4}[a-z]";
        let pos = "[A-Z$]{1,4}";
        (
            "[0-9a-z]{1,3}",
            prop::collection::vec((word, pos), 1..8),
            any::<prop::sample::Index>(),
        )
            .prop_map(|(sense, toks, idx)| {
                let tokens: Vec<Token> = toks
                    .into_iter()
                    .map(|(word, pos)| Token { word, pos })
                    .collect();
                let target_index = idx.index(tokens.len());
                Instance::new(sense, tokens, target_index).unwrap()
            })
    }

    proptest! {
        #[test]
        fn text_round_trip(insts in prop::collection::vec(arb_instance(), 0..6)) {
            let text = write_text_corpus(&insts);
            prop_assert_eq!(parse_text_corpus(&text).unwrap(), insts);
        }

        #[test]
        fn split_partitions(n in 1usize..60, frac in 0.01f64..0.99, seed in any::<u64>()) {
            let (tr, te) = split_indices(n, frac, seed).unwrap();
            let (tr2, te2) = split_indices(n, frac, seed).unwrap();
            prop_assert_eq!(&tr, &tr2);
            prop_assert_eq!(&te, &te2);
            prop_assert_eq!(tr.len() + te.len(), n);
            let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            if n >= 2 {
                prop_assert!(!tr.is_empty() && !te.is_empty());
            }
        }
    }
}
