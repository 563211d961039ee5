//! Measurement contexts: orthogonal block decompositions of the identity,
//! one per commuting family of observables, ordered by coarsening.
//!
//! A context is the finite-dimensional stand-in for an abelian subalgebra:
//! it remembers which projections can be measured together. Coarser contexts
//! sit below finer ones, so restriction maps run downward, which is the
//! shape the presheaf layer builds on.

use crate::linop::{
    commutator_norm, eig_hermitian, frobenius, mats_close, proj_leq_tol, proj_meet, trace_re,
    CMatrix, HermitianOperator, LinopError, Projection,
};
use thiserror::Error;

/// Slack for block orthogonality, completeness, and membership tests.
pub const CONTEXT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("operators do not commute: commutator norm {0:.3e}")]
    NotCommuting(f64),
    #[error("context would have a single block; scalars generate no structure")]
    TrivialContext,
    #[error("bad block decomposition: {0}")]
    BadBlocks(String),
    #[error("no inclusion between contexts: {0}")]
    NotIncluded(String),
    #[error("unknown context label {0:?}")]
    UnknownLabel(String),
    #[error(transparent)]
    Linop(#[from] LinopError),
}

/// An orthogonal resolution of the identity into at least two nonzero
/// blocks, tagged with a label for reporting.
#[derive(Clone, Debug)]
pub struct Context {
    label: String,
    dim: usize,
    blocks: Vec<Projection>,
}

impl Context {
    pub fn new<S: Into<String>>(label: S, blocks: Vec<Projection>) -> Result<Self, ContextError> {
        if blocks.len() < 2 {
            return Err(ContextError::TrivialContext);
        }
        let dim = blocks[0].dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for (i, b) in blocks.iter().enumerate() {
            if b.dim() != dim {
                return Err(ContextError::BadBlocks("blocks of mixed dimension".into()));
            }
            if b.rank() == 0 {
                return Err(ContextError::BadBlocks(format!("block {i} is zero")));
            }
            for (j, c) in blocks.iter().enumerate().skip(i + 1) {
                let overlap = frobenius(&(b.matrix() * c.matrix()));
                if overlap > CONTEXT_TOL {
                    return Err(ContextError::BadBlocks(format!(
                        "blocks {i} and {j} overlap with norm {overlap:.3e}"
                    )));
                }
            }
            sum += b.matrix();
        }
        if !mats_close(&sum, &CMatrix::identity(dim, dim), CONTEXT_TOL) {
            return Err(ContextError::BadBlocks("blocks do not sum to the identity".into()));
        }
        let mut blocks = blocks;
        // Canonical order: by the first basis direction each block touches,
        // then by rank; stable, so equal keys keep construction order.
        let lead = |p: &Projection| (0..dim).find(|&k| p.matrix()[(k, k)].re > 1e-9).unwrap_or(dim);
        blocks.sort_by_key(|b| (lead(b), b.rank()));
        Ok(Context { label: label.into(), dim, blocks })
    }

    /// The joint eigenspace decomposition of a commuting family, found by
    /// refining blocks through one operator at a time.
    pub fn from_commuting<S: Into<String>>(
        label: S,
        ops: &[HermitianOperator],
    ) -> Result<Self, ContextError> {
        if ops.is_empty() {
            return Err(ContextError::BadBlocks("no operators given".into()));
        }
        let dim = ops[0].dim();
        for (i, a) in ops.iter().enumerate() {
            if a.dim() != dim {
                return Err(ContextError::BadBlocks("operators of mixed dimension".into()));
            }
            for b in ops.iter().skip(i + 1) {
                let scale = 1.0 + a.frobenius_norm() * b.frobenius_norm();
                let comm = commutator_norm(a.matrix(), b.matrix());
                if comm > CONTEXT_TOL * scale {
                    return Err(ContextError::NotCommuting(comm));
                }
            }
        }
        let mut blocks = vec![Projection::identity(dim)];
        for a in ops {
            let mut refined = Vec::new();
            for b in &blocks {
                let restricted = HermitianOperator::new(b.matrix() * a.matrix() * b.matrix())
                    .map_err(|e| ContextError::BadBlocks(format!("restriction failed: {e}")))?;
                let decomp = eig_hermitian(&restricted, None);
                for q in &decomp.projections {
                    // The zero eigenspace of the restriction also contains
                    // everything outside the block; meeting with the block
                    // trims that away.
                    let piece = proj_meet(q, b)?;
                    if piece.rank() > 0 {
                        refined.push(piece);
                    }
                }
            }
            blocks = refined;
        }
        Context::new(label, blocks)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Projection] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Structural equality up to block permutation, labels ignored.
    pub fn approx_eq(&self, other: &Context, tol: f64) -> bool {
        if self.dim != other.dim || self.blocks.len() != other.blocks.len() {
            return false;
        }
        let mut used = vec![false; other.blocks.len()];
        'outer: for b in &self.blocks {
            for (j, c) in other.blocks.iter().enumerate() {
                if !used[j] && b.approx_eq(c, tol) {
                    used[j] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }

    /// Whether the operator is constant on every block, i.e. lies in the
    /// algebra the blocks generate. Checked by comparing against its
    /// block-averaged compression.
    pub fn contains_operator(&self, a: &HermitianOperator) -> bool {
        let mut expected = CMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let lambda = trace_re(&(b.matrix() * a.matrix())) / b.rank() as f64;
            expected += b.matrix() * nalgebra::Complex::new(lambda, 0.0);
        }
        let scale = 1.0 + a.frobenius_norm();
        mats_close(&expected, a.matrix(), CONTEXT_TOL * scale)
    }

    /// The constant value a contained operator takes on block `i`.
    pub fn eigenvalue_on_block(&self, a: &HermitianOperator, i: usize) -> f64 {
        let b = &self.blocks[i];
        trace_re(&(b.matrix() * a.matrix())) / b.rank() as f64
    }

    /// Merges blocks according to the given partition of block indices.
    pub fn coarsen<S: Into<String>>(
        &self,
        label: S,
        partition: &[Vec<usize>],
    ) -> Result<Context, ContextError> {
        let mut seen = vec![false; self.blocks.len()];
        let mut merged = Vec::with_capacity(partition.len());
        for group in partition {
            if group.is_empty() {
                return Err(ContextError::BadBlocks("empty group in partition".into()));
            }
            let mut sum = CMatrix::zeros(self.dim, self.dim);
            for &i in group {
                if i >= self.blocks.len() || seen[i] {
                    return Err(ContextError::BadBlocks(format!("bad or repeated block index {i}")));
                }
                seen[i] = true;
                sum += self.blocks[i].matrix();
            }
            merged.push(
                Projection::new(sum)
                    .map_err(|e| ContextError::BadBlocks(format!("merged block: {e}")))?,
            );
        }
        if !seen.iter().all(|s| *s) {
            return Err(ContextError::BadBlocks("partition does not cover all blocks".into()));
        }
        Context::new(label, merged)
    }

    /// Whether every block of `self` is a sum of blocks of `finer`; this is
    /// the inclusion order on contexts, coarser below finer.
    pub fn is_coarsening_of(&self, finer: &Context) -> bool {
        if self.dim != finer.dim {
            return false;
        }
        for big in &self.blocks {
            let mut sum = CMatrix::zeros(self.dim, self.dim);
            for small in &finer.blocks {
                if proj_leq_tol(small, big, CONTEXT_TOL).unwrap_or(false) {
                    sum += small.matrix();
                }
            }
            if !mats_close(&sum, big.matrix(), CONTEXT_TOL) {
                return false;
            }
        }
        true
    }
}

/// A point of a context: the choice of one block, standing for a definite
/// measurement outcome cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Character {
    pub context: usize,
    pub block: usize,
}

/// How [`ContextPoset::build`] closes the given family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosurePolicy {
    /// Add every proper coarsening of every context.
    #[default]
    Coarsenings,
    /// Add finest common coarsenings of pairs until stable.
    Intersections,
    /// Use the family exactly as given.
    None,
}

/// A finite family of contexts with its coarsening order tabulated.
#[derive(Clone, Debug)]
pub struct ContextPoset {
    contexts: Vec<Context>,
    below: Vec<Vec<bool>>,
}

impl ContextPoset {
    pub fn build(contexts: Vec<Context>, policy: ClosurePolicy) -> Result<Self, ContextError> {
        if contexts.is_empty() {
            return Err(ContextError::BadBlocks("no contexts given".into()));
        }
        let dim = contexts[0].dim();
        if contexts.iter().any(|c| c.dim() != dim) {
            return Err(ContextError::BadBlocks("contexts of mixed dimension".into()));
        }
        let mut family: Vec<Context> = Vec::new();
        for c in contexts {
            push_dedup(&mut family, c);
        }
        match policy {
            ClosurePolicy::Coarsenings => {
                let given = family.clone();
                for c in &given {
                    for part in proper_partitions(c.len()) {
                        let label = partition_label(c.label(), &part);
                        if let Ok(coarse) = c.coarsen(label, &part) {
                            push_dedup(&mut family, coarse);
                        }
                    }
                }
            }
            ClosurePolicy::Intersections => loop {
                let snapshot = family.clone();
                let mut grew = false;
                for i in 0..snapshot.len() {
                    for j in (i + 1)..snapshot.len() {
                        if let Some(meet) = common_coarsening(&snapshot[i], &snapshot[j]) {
                            grew |= push_dedup(&mut family, meet);
                        }
                    }
                }
                if !grew {
                    break;
                }
            },
            ClosurePolicy::None => {}
        }
        let n = family.len();
        let mut below = vec![vec![false; n]; n];
        for i in 0..n {
            for (j, row) in below.iter_mut().enumerate().take(n) {
                if i != j {
                    row[i] = family[j].is_coarsening_of(&family[i]);
                }
            }
        }
        for (i, row) in below.iter_mut().enumerate() {
            row[i] = true;
        }
        Ok(ContextPoset { contexts: family, below })
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn context(&self, i: usize) -> &Context {
        &self.contexts[i]
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn index_of(&self, label: &str) -> Result<usize, ContextError> {
        self.contexts
            .iter()
            .position(|c| c.label() == label)
            .ok_or_else(|| ContextError::UnknownLabel(label.into()))
    }

    /// `leq(i, j)` holds when context `i` is a coarsening of context `j`.
    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.below[i][j]
    }

    /// All strict inclusions `(coarser, finer)`.
    pub fn inclusion_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..self.len() {
            for j in 0..self.len() {
                if i != j && self.leq(i, j) {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    /// Moves a character on a finer context down to a coarser one by finding
    /// the unique coarse block containing its block.
    pub fn restrict_character(&self, ch: Character, to: usize) -> Result<Character, ContextError> {
        if !self.leq(to, ch.context) {
            return Err(ContextError::NotIncluded(format!(
                "{:?} is not a coarsening of {:?}",
                self.contexts[to].label(),
                self.contexts[ch.context].label()
            )));
        }
        let fine = &self.contexts[ch.context].blocks()[ch.block];
        for (j, big) in self.contexts[to].blocks().iter().enumerate() {
            if proj_leq_tol(fine, big, CONTEXT_TOL)? {
                return Ok(Character { context: to, block: j });
            }
        }
        Err(ContextError::BadBlocks(format!(
            "no block of {:?} contains the chosen block of {:?}",
            self.contexts[to].label(),
            self.contexts[ch.context].label()
        )))
    }

    /// The first context whose algebra contains the operator.
    pub fn context_of_operator(&self, a: &HermitianOperator) -> Option<usize> {
        (0..self.len()).find(|&i| self.contexts[i].contains_operator(a))
    }
}

/// Appends the context unless a structurally equal one is present; the first
/// label is kept, later duplicates are dropped. Returns whether it grew.
fn push_dedup(family: &mut Vec<Context>, c: Context) -> bool {
    if family.iter().any(|d| d.approx_eq(&c, CONTEXT_TOL)) {
        return false;
    }
    let mut label = c.label().to_string();
    let mut bump = 1;
    while family.iter().any(|d| d.label() == label) {
        bump += 1;
        label = format!("{}#{bump}", c.label());
    }
    let relabeled = Context { label, ..c };
    family.push(relabeled);
    true
}

/// Set partitions of `{0..n}` with at least two groups, excluding the
/// discrete one, via restricted growth strings.
fn proper_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut assign = vec![0usize; n];
    loop {
        let groups = assign.iter().max().copied().unwrap_or(0) + 1;
        if groups >= 2 && groups < n {
            let mut part = vec![Vec::new(); groups];
            for (i, &g) in assign.iter().enumerate() {
                part[g].push(i);
            }
            out.push(part);
        }
        // Next restricted growth string.
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if i == 0 {
                return out;
            }
            let cap = assign[..i].iter().max().copied().unwrap_or(0) + 1;
            if assign[i] < cap {
                assign[i] += 1;
                for a in assign.iter_mut().skip(i + 1) {
                    *a = 0;
                }
                break;
            }
        }
    }
}

fn partition_label(base: &str, part: &[Vec<usize>]) -> String {
    let groups: Vec<String> = part
        .iter()
        .map(|g| g.iter().map(usize::to_string).collect::<Vec<_>>().join(""))
        .collect();
    format!("{base}[{}]", groups.join("|"))
}

/// Finest common coarsening of two contexts: connected components of the
/// block overlap graph, one merged projection per component. Components of
/// one side sum to the same projection as those of the other, so either sum
/// works. Returns `None` when everything fuses into a single block.
fn common_coarsening(v: &Context, w: &Context) -> Option<Context> {
    let nv = v.len();
    let nw = w.len();
    let mut parent: Vec<usize> = (0..nv + nw).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for (i, b) in v.blocks().iter().enumerate() {
        for (j, c) in w.blocks().iter().enumerate() {
            if frobenius(&(b.matrix() * c.matrix())) > CONTEXT_TOL {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, nv + j));
                parent[ri] = rj;
            }
        }
    }
    let mut sums: std::collections::BTreeMap<usize, CMatrix> = std::collections::BTreeMap::new();
    for (i, b) in v.blocks().iter().enumerate() {
        let root = find(&mut parent, i);
        let entry = sums
            .entry(root)
            .or_insert_with(|| CMatrix::zeros(v.dim(), v.dim()));
        *entry += b.matrix();
    }
    if sums.len() < 2 {
        return None;
    }
    let blocks: Option<Vec<Projection>> =
        sums.into_values().map(|m| Projection::new(m).ok()).collect();
    Context::new(format!("{}&{}", v.label(), w.label()), blocks?).ok()
}
