//! Variable domains and integer-coded datasets.
//!
//! Variable 0 is always the classification variable (the tag); variables
//! `1..` are the features in schema order.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub const TAG: usize = 0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    names: Vec<String>,
    levels: Vec<Vec<String>>,
    index: Vec<HashMap<String, u32>>,
}

impl Domain {
    pub fn new(names: Vec<String>, levels: Vec<Vec<String>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::invalid("domain needs at least the tag variable"));
        }
        if names.len() != levels.len() {
            return Err(Error::invalid("one level list is required per variable"));
        }
        let mut index = Vec::with_capacity(levels.len());
        for (name, lv) in names.iter().zip(&levels) {
            if lv.is_empty() {
                return Err(Error::invalid(format!("variable {name:?} has no levels")));
            }
            let map: HashMap<String, u32> = lv
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), i as u32))
                .collect();
            if map.len() != lv.len() {
                return Err(Error::invalid(format!(
                    "variable {name:?} has duplicate levels"
                )));
            }
            index.push(map);
        }
        Ok(Domain {
            names,
            levels,
            index,
        })
    }

    /// Domain whose levels are the sorted union of values seen in `rows`.
    /// Every row must carry a tag.
    pub fn from_rows<'a>(
        names: &[String],
        rows: impl IntoIterator<Item = &'a FeatureVector>,
    ) -> Result<Self> {
        let mut seen: Vec<BTreeSet<String>> = vec![BTreeSet::new(); names.len()];
        for (i, row) in rows.into_iter().enumerate() {
            if row.values.len() + 1 != names.len() {
                return Err(Error::invalid(format!(
                    "row {} has {} features, expected {}",
                    i + 1,
                    row.values.len(),
                    names.len() - 1
                )));
            }
            let tag = row
                .tag
                .as_ref()
                .ok_or_else(|| Error::invalid(format!("row {} has no tag", i + 1)))?;
            seen[TAG].insert(tag.clone());
            for (j, v) in row.values.iter().enumerate() {
                seen[j + 1].insert(v.clone());
            }
        }
        if seen[TAG].is_empty() {
            return Err(Error::invalid("no rows to build a domain from"));
        }
        let levels = seen.into_iter().map(|s| s.into_iter().collect()).collect();
        Domain::new(names.to_vec(), levels)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn levels(&self, var: usize) -> &[String] {
        &self.levels[var]
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn code(&self, var: usize, value: &str) -> Result<u32> {
        self.index[var]
            .get(value)
            .copied()
            .ok_or_else(|| Error::OutOfDomain {
                variable: self.names[var].clone(),
                value: value.to_string(),
            })
    }

    pub fn label(&self, var: usize, code: u32) -> &str {
        &self.levels[var][code as usize]
    }

    fn check_arity(&self, row: &FeatureVector) -> Result<()> {
        if row.values.len() + 1 != self.len() {
            return Err(Error::invalid(format!(
                "feature vector has {} values, domain has {} features",
                row.values.len(),
                self.len() - 1
            )));
        }
        Ok(())
    }

    /// Full coded row `[tag, f_1, .., f_n]`.
    pub fn encode(&self, row: &FeatureVector) -> Result<Vec<u32>> {
        self.check_arity(row)?;
        let tag = row
            .tag
            .as_deref()
            .ok_or_else(|| Error::invalid("feature vector has no tag"))?;
        let mut out = Vec::with_capacity(self.len());
        out.push(self.code(TAG, tag)?);
        for (j, v) in row.values.iter().enumerate() {
            out.push(self.code(j + 1, v)?);
        }
        Ok(out)
    }

    /// Coded feature values only, `[f_1, .., f_n]`.
    pub fn encode_context(&self, row: &FeatureVector) -> Result<Vec<u32>> {
        self.check_arity(row)?;
        row.values
            .iter()
            .enumerate()
            .map(|(j, v)| self.code(j + 1, v))
            .collect()
    }

    pub fn encode_all(&self, rows: &[FeatureVector]) -> Result<Dataset> {
        let mut data = Dataset::with_capacity(self.len(), rows.len());
        for row in rows {
            data.push(&self.encode(row)?);
        }
        Ok(data)
    }

    pub fn decode(&self, row: &[u32]) -> FeatureVector {
        FeatureVector {
            tag: Some(self.label(TAG, row[TAG]).to_string()),
            values: row[1..]
                .iter()
                .enumerate()
                .map(|(j, &c)| self.label(j + 1, c).to_string())
                .collect(),
        }
    }
}

/// Coded rows stored contiguously.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    width: usize,
    values: Vec<u32>,
}

impl Dataset {
    pub fn new(width: usize) -> Self {
        Dataset {
            width,
            values: Vec::new(),
        }
    }

    pub fn with_capacity(width: usize, rows: usize) -> Self {
        Dataset {
            width,
            values: Vec::with_capacity(width * rows),
        }
    }

    pub fn from_rows(width: usize, rows: &[Vec<u32>]) -> Self {
        let mut d = Dataset::with_capacity(width, rows.len());
        for r in rows {
            d.push(r);
        }
        d
    }

    pub fn push(&mut self, row: &[u32]) {
        assert_eq!(row.len(), self.width, "row width mismatch");
        self.values.extend_from_slice(row);
    }

    pub fn extend(&mut self, other: &Dataset) {
        assert_eq!(other.width, self.width, "row width mismatch");
        self.values.extend_from_slice(&other.values);
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.values.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.values.chunks_exact(self.width.max(1))
    }
}
