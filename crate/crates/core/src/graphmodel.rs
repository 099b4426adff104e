//! Decomposable model forms over `{Tag, F_1..F_n}` and their maximum
//! likelihood fits.
//!
//! A form is an undirected graph. When the graph is chordal the ML estimate
//! of the joint is closed form:
//!
//! ```text
//! P(x) = prod_C n_C(x_C)/n  /  prod_S n_S(x_S)/n
//! ```
//!
//! over the maximal cliques `C` and the separators `S` of a junction tree.
//! Nothing is smoothed: a clique configuration that never occurs in the
//! training data gives every assignment containing it probability zero.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::domain::{Dataset, Domain, TAG};
use crate::error::{Error, Result};

/// Forms are limited to this many variables (adjacency is a bit mask).
pub const MAX_VARIABLES: usize = 64;

/// Largest full joint that [`FittedModel::joint_table`] will enumerate.
pub const MAX_ENUMERATION: usize = 1 << 24;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ModelForm {
    names: Vec<String>,
    adj: Vec<u64>,
}

impl ModelForm {
    /// Form with no edges: the model for independence among all variables.
    pub fn independence(names: Vec<String>) -> Result<Self> {
        if names.is_empty() || names.len() > MAX_VARIABLES {
            return Err(Error::invalid(format!(
                "a form needs between 1 and {MAX_VARIABLES} variables"
            )));
        }
        let n = names.len();
        Ok(ModelForm {
            names,
            adj: vec![0; n],
        })
    }

    /// Every pair of variables interdependent.
    pub fn saturated(names: Vec<String>) -> Result<Self> {
        let mut f = Self::independence(names)?;
        let full = if f.len() == 64 {
            u64::MAX
        } else {
            (1u64 << f.len()) - 1
        };
        for v in 0..f.len() {
            f.adj[v] = full & !(1 << v);
        }
        Ok(f)
    }

    /// Features conditionally independent given the tag.
    pub fn naive_bayes(names: Vec<String>) -> Result<Self> {
        let mut f = Self::independence(names)?;
        for v in 1..f.len() {
            f.add_edge(TAG, v)?;
        }
        Ok(f)
    }

    pub fn from_edges(names: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut f = Self::independence(names)?;
        for &(a, b) in edges {
            f.add_edge(a, b)?;
        }
        Ok(f)
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

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(Error::invalid(format!("self-loop on variable {a}")));
        }
        if a >= self.len() || b >= self.len() {
            return Err(Error::invalid(format!(
                "edge {a}-{b} names an undeclared variable"
            )));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_pair(a, b)?;
        self.adj[a] |= 1 << b;
        self.adj[b] |= 1 << a;
        Ok(())
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_pair(a, b)?;
        self.adj[a] &= !(1 << b);
        self.adj[b] &= !(1 << a);
        Ok(())
    }

    pub fn without_edge(&self, a: usize, b: usize) -> Result<Self> {
        let mut f = self.clone();
        f.remove_edge(a, b)?;
        Ok(f)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.len() && b < self.len() && self.adj[a] & (1 << b) != 0
    }

    pub fn neighbors(&self, v: usize) -> u64 {
        self.adj[v]
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                if self.has_edge(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Number of pairwise interdependencies.
    pub fn complexity(&self) -> usize {
        self.adj
            .iter()
            .map(|m| m.count_ones() as usize)
            .sum::<usize>()
            / 2
    }

    pub fn edge_name(&self, a: usize, b: usize) -> String {
        format!("{}-{}", self.names[a], self.names[b])
    }

    /// Vertex visit order of a maximum cardinality search started at the tag;
    /// ties go to the smallest index.
    fn mcs_order(&self) -> Vec<usize> {
        let n = self.len();
        let mut weight = vec![0usize; n];
        let mut visited = 0u64;
        let mut order = Vec::with_capacity(n);
        for _ in 0..n {
            let v = (0..n)
                .filter(|&v| visited & (1 << v) == 0)
                .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
                .expect("unvisited vertex");
            visited |= 1 << v;
            order.push(v);
            let mut nb = self.adj[v] & !visited;
            while nb != 0 {
                let u = nb.trailing_zeros() as usize;
                weight[u] += 1;
                nb &= nb - 1;
            }
        }
        order
    }

    /// True iff the graph is chordal, i.e. the reverse of a maximum
    /// cardinality search order is a perfect elimination order.
    pub fn is_decomposable(&self) -> bool {
        let order = self.mcs_order();
        let mut earlier = 0u64;
        for &v in &order {
            let prior = self.adj[v] & earlier;
            // the most recently visited earlier neighbour must see all the others
            if let Some(&u) = order.iter().rev().find(|&&u| prior & (1 << u) != 0) {
                let rest = prior & !(1 << u);
                if rest & !self.adj[u] != 0 {
                    return false;
                }
            }
            earlier |= 1 << v;
        }
        true
    }

    /// Maximal cliques paired with a junction tree. Cliques are ordered so
    /// that each one's parent comes before it (running intersection order).
    pub fn junction_tree(&self) -> Result<JunctionTree> {
        if !self.is_decomposable() {
            return Err(Error::NotDecomposable);
        }
        let order = self.mcs_order();
        let mut candidates: Vec<u64> = Vec::with_capacity(order.len());
        let mut earlier = 0u64;
        for &v in &order {
            candidates.push((self.adj[v] & earlier) | (1 << v));
            earlier |= 1 << v;
        }
        let mut cliques: Vec<u64> = Vec::new();
        for (i, &c) in candidates.iter().enumerate() {
            let dominated = candidates
                .iter()
                .enumerate()
                .any(|(j, &d)| j != i && c & d == c && (c != d || j < i));
            if !dominated {
                cliques.push(c);
            }
        }

        // Prim's maximum-weight spanning tree on the clique intersection graph.
        let k = cliques.len();
        let mut in_tree = vec![false; k];
        let mut best: Vec<(u32, usize)> = vec![(0, 0); k];
        let mut placed: Vec<(usize, Option<usize>)> = Vec::with_capacity(k);
        in_tree[0] = true;
        placed.push((0, None));
        for j in 1..k {
            best[j] = ((cliques[0] & cliques[j]).count_ones(), 0);
        }
        while placed.len() < k {
            let next = (0..k)
                .filter(|&j| !in_tree[j])
                .max_by(|&a, &b| best[a].0.cmp(&best[b].0).then(b.cmp(&a)))
                .expect("clique outside tree");
            in_tree[next] = true;
            placed.push((next, Some(best[next].1)));
            for j in 0..k {
                if !in_tree[j] {
                    let w = (cliques[next] & cliques[j]).count_ones();
                    if w > best[j].0 {
                        best[j] = (w, next);
                    }
                }
            }
        }
        let mut position = vec![0usize; k];
        for (pos, &(c, _)) in placed.iter().enumerate() {
            position[c] = pos;
        }
        let to_vars = |m: u64| -> Vec<usize> { (0..64).filter(|&v| m & (1 << v) != 0).collect() };
        let mut tree = JunctionTree {
            cliques: Vec::with_capacity(k),
            parents: Vec::with_capacity(k),
            separators: Vec::with_capacity(k),
        };
        for &(c, parent) in &placed {
            tree.cliques.push(to_vars(cliques[c]));
            match parent {
                None => {
                    tree.parents.push(None);
                    tree.separators.push(Vec::new());
                }
                Some(p) => {
                    tree.parents.push(Some(position[p]));
                    tree.separators.push(to_vars(cliques[c] & cliques[p]));
                }
            }
        }
        Ok(tree)
    }

    /// Edge list, one `a-b` per line.
    pub fn edge_list(&self) -> String {
        let mut s = String::new();
        for (a, b) in self.edges() {
            s.push_str(&self.edge_name(a, b));
            s.push('\n');
        }
        s
    }
}

impl fmt::Debug for ModelForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self
            .edges()
            .iter()
            .map(|&(a, b)| self.edge_name(a, b))
            .collect();
        f.debug_struct("ModelForm")
            .field("variables", &self.names)
            .field("edges", &edges)
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JunctionTree {
    /// Maximal cliques as ascending variable lists.
    pub cliques: Vec<Vec<usize>>,
    /// Parent of each clique; `None` only for the root at index 0.
    /// Disconnected components are joined through empty separators.
    pub parents: Vec<Option<usize>>,
    /// Intersection of each clique with its parent; empty for the root.
    pub separators: Vec<Vec<usize>>,
}

/// Cell indexing over a subset of variables, last variable varying fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableIndex {
    pub vars: Vec<usize>,
    pub dims: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl TableIndex {
    pub fn new(vars: &[usize], cards: &[usize]) -> Self {
        let dims: Vec<usize> = vars.iter().map(|&v| cards[v]).collect();
        let mut strides = vec![1usize; vars.len()];
        for k in (0..vars.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1]
                .checked_mul(dims[k + 1])
                .expect("table index overflows usize");
        }
        let size = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .expect("table index overflows usize");
        TableIndex {
            vars: vars.to_vec(),
            dims,
            strides,
            size,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Cell index of a full assignment.
    #[inline]
    pub fn index(&self, assignment: &[u32]) -> usize {
        self.vars
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| assignment[v] as usize * s)
            .sum()
    }

    /// Values of this table's variables at cell `idx`.
    pub fn cell_values(&self, mut idx: usize) -> Vec<u32> {
        self.strides
            .iter()
            .map(|&s| {
                let v = (idx / s) as u32;
                idx %= s;
                v
            })
            .collect()
    }

    /// Writes the values of cell `idx` into a full assignment.
    pub fn scatter(&self, mut idx: usize, assignment: &mut [u32]) {
        for k in 0..self.vars.len() {
            assignment[self.vars[k]] = (idx / self.strides[k]) as u32;
            idx %= self.strides[k];
        }
    }
}

/// Tables up to this many cells are stored densely; larger ones keep only
/// their nonzero cells.
pub const DENSE_LIMIT: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Cells {
    Dense(Vec<u64>),
    Sparse(BTreeMap<usize, u64>),
}

/// Observed counts over a subset of variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    pub index: TableIndex,
    cells: Cells,
}

impl CountTable {
    pub fn zeros(vars: &[usize], cards: &[usize]) -> Self {
        let index = TableIndex::new(vars, cards);
        let cells = if index.size() <= DENSE_LIMIT {
            Cells::Dense(vec![0; index.size()])
        } else {
            Cells::Sparse(BTreeMap::new())
        };
        CountTable { index, cells }
    }

    pub fn count(vars: &[usize], cards: &[usize], data: &Dataset) -> Self {
        let mut t = Self::zeros(vars, cards);
        for row in data.rows() {
            let i = t.index.index(row);
            t.add(i, 1);
        }
        t
    }

    pub fn vars(&self) -> &[usize] {
        &self.index.vars
    }

    pub fn add(&mut self, cell: usize, by: u64) {
        match &mut self.cells {
            Cells::Dense(v) => v[cell] += by,
            Cells::Sparse(m) => *m.entry(cell).or_default() += by,
        }
    }

    pub fn cell(&self, cell: usize) -> u64 {
        match &self.cells {
            Cells::Dense(v) => v[cell],
            Cells::Sparse(m) => m.get(&cell).copied().unwrap_or(0),
        }
    }

    #[inline]
    pub fn get(&self, assignment: &[u32]) -> u64 {
        self.cell(self.index.index(assignment))
    }

    /// Nonzero cells in ascending cell order.
    pub fn nonzero(&self) -> Box<dyn Iterator<Item = (usize, u64)> + '_> {
        match &self.cells {
            Cells::Dense(v) => Box::new(
                v.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(i, &c)| (i, c)),
            ),
            Cells::Sparse(m) => Box::new(m.iter().filter(|(_, &c)| c > 0).map(|(&i, &c)| (i, c))),
        }
    }

    /// All cells, zeros included.
    pub fn to_dense(&self) -> Vec<u64> {
        let mut out = vec![0; self.index.size()];
        for (i, c) in self.nonzero() {
            out[i] = c;
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.nonzero().map(|(_, c)| c).sum()
    }

    /// `Σ n ln(n / total)` over the nonzero cells.
    pub fn log_likelihood(&self, total: u64) -> f64 {
        let total = total as f64;
        self.nonzero()
            .map(|(_, c)| {
                let c = c as f64;
                c * (c / total).ln()
            })
            .sum()
    }
}

/// A form together with its observed clique and separator count tables.
#[derive(Clone, Debug)]
pub struct FittedModel {
    form: ModelForm,
    tree: JunctionTree,
    cards: Vec<usize>,
    cliques: Vec<CountTable>,
    separators: Vec<CountTable>,
    tag_counts: Vec<u64>,
    n: u64,
}

/// ML fit of a decomposable form: clique and separator tables are the
/// observed counts.
pub fn fit_ml(form: &ModelForm, data: &Dataset, domain: &Domain) -> Result<FittedModel> {
    if form.len() != domain.len() || form.names() != domain.names() {
        return Err(Error::invalid(
            "form and domain declare different variables",
        ));
    }
    fit_with_cards(form, data, &domain.cardinalities())
}

pub(crate) fn fit_with_cards(
    form: &ModelForm,
    data: &Dataset,
    cards: &[usize],
) -> Result<FittedModel> {
    let tree = form.junction_tree()?;
    fit_with_tree(form, tree, data, cards)
}

pub(crate) fn fit_with_tree(
    form: &ModelForm,
    tree: JunctionTree,
    data: &Dataset,
    cards: &[usize],
) -> Result<FittedModel> {
    if data.is_empty() {
        return Err(Error::invalid("cannot fit a model to empty data"));
    }
    if data.width() != form.len() {
        return Err(Error::invalid(format!(
            "data rows have {} values, form has {} variables",
            data.width(),
            form.len()
        )));
    }
    for row in data.rows() {
        if let Some(v) = row.iter().zip(cards).position(|(&x, &c)| x as usize >= c) {
            return Err(Error::invalid(format!(
                "code {} out of range for variable {:?}",
                row[v],
                form.names()[v]
            )));
        }
    }
    let cliques: Vec<CountTable> = tree
        .cliques
        .iter()
        .map(|c| CountTable::count(c, cards, data))
        .collect();
    // separators are marginals of the cliques, so there is no need to rescan
    let separators: Vec<CountTable> = tree
        .separators
        .iter()
        .zip(&cliques)
        .map(|(s, clique)| marginalize(clique, s, cards))
        .collect();
    let tag_counts = CountTable::count(&[TAG], cards, data).to_dense();
    Ok(FittedModel {
        form: form.clone(),
        tree,
        cards: cards.to_vec(),
        cliques,
        separators,
        tag_counts,
        n: data.len() as u64,
    })
}

/// Sums `table` down to `vars`, which must be a subset of its variables.
pub fn marginalize(table: &CountTable, vars: &[usize], cards: &[usize]) -> CountTable {
    let mut out = CountTable::zeros(vars, cards);
    let mut full = vec![0u32; cards.len()];
    for (idx, c) in table.nonzero() {
        table.index.scatter(idx, &mut full);
        let j = out.index.index(&full);
        out.add(j, c);
    }
    out
}

impl FittedModel {
    pub fn form(&self) -> &ModelForm {
        &self.form
    }

    pub fn junction_tree(&self) -> &JunctionTree {
        &self.tree
    }

    pub fn clique_tables(&self) -> &[CountTable] {
        &self.cliques
    }

    pub fn separator_tables(&self) -> &[CountTable] {
        &self.separators
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Training-set count of each tag.
    pub fn tag_counts(&self) -> &[u64] {
        &self.tag_counts
    }

    fn check_assignment(&self, assignment: &[u32]) -> Result<()> {
        if assignment.len() != self.cards.len() {
            return Err(Error::invalid(format!(
                "assignment has {} values, model has {} variables",
                assignment.len(),
                self.cards.len()
            )));
        }
        for (v, (&x, &c)) in assignment.iter().zip(&self.cards).enumerate() {
            if x as usize >= c {
                return Err(Error::OutOfDomain {
                    variable: self.form.names()[v].clone(),
                    value: x.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Factorized joint probability of a full assignment.
    pub fn joint_prob(&self, assignment: &[u32]) -> Result<f64> {
        self.check_assignment(assignment)?;
        Ok(self.joint_unchecked(assignment))
    }

    fn joint_unchecked(&self, assignment: &[u32]) -> f64 {
        let n = self.n as f64;
        let mut p = 1.0;
        for c in &self.cliques {
            let k = c.get(assignment);
            if k == 0 {
                return 0.0;
            }
            p *= k as f64 / n;
        }
        for s in &self.separators {
            // nonzero: the separator is a marginal of a nonzero clique cell
            p /= s.get(assignment) as f64 / n;
        }
        p
    }

    /// `P(tag | context)` for every tag code, or `None` when every tag has
    /// zero joint probability with this context.
    pub fn posterior(&self, context: &[u32]) -> Result<Option<Vec<f64>>> {
        let mut full = Vec::with_capacity(self.cards.len());
        full.push(0);
        full.extend_from_slice(context);
        self.check_assignment(&full)?;
        let mut numer = Vec::with_capacity(self.cards[TAG]);
        for t in 0..self.cards[TAG] {
            full[TAG] = t as u32;
            numer.push(self.joint_unchecked(&full));
        }
        let total: f64 = numer.iter().sum();
        if total > 0.0 {
            Ok(Some(numer.into_iter().map(|p| p / total).collect()))
        } else {
            Ok(None)
        }
    }

    /// Most probable tag given the context. Ties go to the tag seen more
    /// often in training, then to the lower tag code (levels are sorted, so
    /// this is lexicographic order). `None` means unassigned.
    pub fn classify(&self, context: &[u32]) -> Result<Option<u32>> {
        let Some(post) = self.posterior(context)? else {
            return Ok(None);
        };
        let mut best = 0usize;
        for t in 1..post.len() {
            match compare_probability(post[t], post[best]) {
                Ordering::Greater => best = t,
                Ordering::Equal if self.tag_counts[t] > self.tag_counts[best] => best = t,
                _ => {}
            }
        }
        Ok(Some(best as u32))
    }

    /// `Σ_C Σ n_C ln(n_C/n) − Σ_S Σ n_S ln(n_S/n)`, the maximized log
    /// likelihood of the training data.
    pub fn log_likelihood(&self) -> f64 {
        let c: f64 = self.cliques.iter().map(|t| t.log_likelihood(self.n)).sum();
        let s: f64 = self
            .separators
            .iter()
            .map(|t| t.log_likelihood(self.n))
            .sum();
        c - s
    }

    /// Number of free parameters of the form over these domains:
    /// `Σ_C |dom C| − Σ_S |dom S| − 1`.
    pub fn free_parameters(&self) -> u64 {
        free_parameters(&self.tree, &self.cards)
    }

    /// Likelihood-ratio deviance against the saturated fit of `data`, the
    /// data this model was fitted on.
    pub fn deviance(&self, data: &Dataset) -> f64 {
        (2.0 * (saturated_log_likelihood(data) - self.log_likelihood())).max(0.0)
    }

    /// The full joint as a dense array in row-major order over all
    /// variables.
    pub fn joint_table(&self) -> Result<Vec<f64>> {
        let size = self
            .cards
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .filter(|&s| s <= MAX_ENUMERATION)
            .ok_or_else(|| Error::invalid("joint domain too large to enumerate"))?;
        let mut out = Vec::with_capacity(size);
        let mut x = vec![0u32; self.cards.len()];
        for _ in 0..size {
            out.push(self.joint_unchecked(&x));
            for v in (0..x.len()).rev() {
                x[v] += 1;
                if (x[v] as usize) < self.cards[v] {
                    break;
                }
                x[v] = 0;
            }
        }
        Ok(out)
    }
}

pub(crate) fn free_parameters(tree: &JunctionTree, cards: &[usize]) -> u64 {
    let dim = |vars: &[usize]| {
        vars.iter()
            .fold(1u64, |a, &v| a.saturating_mul(cards[v] as u64))
    };
    let c: u64 = tree
        .cliques
        .iter()
        .map(|c| dim(c))
        .fold(0, u64::saturating_add);
    let s: u64 = tree
        .separators
        .iter()
        .skip(1)
        .map(|s| dim(s))
        .fold(0, u64::saturating_add);
    c.saturating_sub(s).saturating_sub(1)
}

/// `Σ_x O(x) ln(O(x)/N)` for the empirical joint of `data`.
pub fn saturated_log_likelihood(data: &Dataset) -> f64 {
    let mut rows: Vec<&[u32]> = data.rows().collect();
    rows.sort_unstable();
    let n = rows.len() as f64;
    let mut ll = 0.0;
    let mut i = 0;
    while i < rows.len() {
        let mut j = i + 1;
        while j < rows.len() && rows[j] == rows[i] {
            j += 1;
        }
        let c = (j - i) as f64;
        ll += c * (c / n).ln();
        i = j;
    }
    ll
}

/// Orders probabilities with a relative tolerance so that values equal up to
/// rounding count as ties.
fn compare_probability(a: f64, b: f64) -> Ordering {
    let scale = a.abs().max(b.abs());
    if (a - b).abs() <= 1e-12 * scale {
        Ordering::Equal
    } else {
        a.partial_cmp(&b).unwrap_or(Ordering::Equal)
    }
}
