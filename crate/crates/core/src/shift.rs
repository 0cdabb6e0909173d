//! Finite-alphabet subshifts of finite type.
//!
//! A [`TransitionMatrix`] is a 0/1 adjacency over labelled states. States are
//! indexed densely in the order they were declared; every enumeration below
//! is lexicographic in that index order.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default cap on the number of words any enumeration may produce.
pub const DEFAULT_WORD_CAP: u128 = 10_000_000;

#[derive(Debug, PartialEq)]
struct Inner {
    labels: Vec<String>,
    adjacency: Vec<bool>,
    successors: Vec<Vec<usize>>,
    predecessors: Vec<Vec<usize>>,
}

/// Adjacency matrix of a one-sided subshift of finite type.
///
/// Cheap to clone; the data is shared. Every state has at least one incoming
/// and one outgoing edge.
#[derive(Clone)]
pub struct TransitionMatrix {
    inner: Arc<Inner>,
}

impl PartialEq for TransitionMatrix {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner
    }
}

impl fmt::Debug for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self
            .edges()
            .map(|(i, j)| format!("{}{}", self.label(i), self.label(j)))
            .collect();
        f.debug_struct("TransitionMatrix")
            .field("states", &self.inner.labels)
            .field("edges", &edges)
            .finish()
    }
}

/// Result of [`build_sft`]: the pruned shift and the labels that were removed.
#[derive(Debug, Clone)]
pub struct BuiltShift {
    pub matrix: TransitionMatrix,
    pub removed: Vec<String>,
}

/// Builds a shift from labels and edges, iteratively pruning states that have
/// no incoming or no outgoing edge until every survivor lies on a bi-infinite
/// path.
pub fn build_sft<S: AsRef<str>>(states: &[S], edges: &[(S, S)]) -> Result<BuiltShift> {
    if states.is_empty() {
        return Err(Error::InvalidParameter("state list is empty".into()));
    }
    let mut index = HashMap::new();
    for (i, s) in states.iter().enumerate() {
        if index.insert(s.as_ref().to_string(), i).is_some() {
            return Err(Error::DuplicateState(s.as_ref().to_string()));
        }
    }
    let n = states.len();
    let mut adjacency = vec![false; n * n];
    for (a, b) in edges {
        let i = *index
            .get(a.as_ref())
            .ok_or_else(|| Error::UnknownState(a.as_ref().to_string()))?;
        let j = *index
            .get(b.as_ref())
            .ok_or_else(|| Error::UnknownState(b.as_ref().to_string()))?;
        adjacency[i * n + j] = true;
    }
    let labels = states.iter().map(|s| s.as_ref().to_string()).collect();
    prune(labels, adjacency)
}

fn prune(labels: Vec<String>, adjacency: Vec<bool>) -> Result<BuiltShift> {
    let n = labels.len();
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let out = (0..n).any(|j| alive[j] && adjacency[i * n + j]);
            let inc = (0..n).any(|j| alive[j] && adjacency[j * n + i]);
            if !out || !inc {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let removed: Vec<String> = (0..n)
        .filter(|&i| !alive[i])
        .map(|i| labels[i].clone())
        .collect();
    let kept: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    if kept.is_empty() {
        return Err(Error::EmptyShift { removed });
    }
    let m = kept.len();
    let mut adj = vec![false; m * m];
    for (a, &i) in kept.iter().enumerate() {
        for (b, &j) in kept.iter().enumerate() {
            adj[a * m + b] = adjacency[i * n + j];
        }
    }
    let labels = kept.iter().map(|&i| labels[i].clone()).collect();
    Ok(BuiltShift {
        matrix: TransitionMatrix::from_parts(labels, adj),
        removed,
    })
}

impl TransitionMatrix {
    fn from_parts(labels: Vec<String>, adjacency: Vec<bool>) -> Self {
        let n = labels.len();
        let successors = (0..n)
            .map(|i| (0..n).filter(|&j| adjacency[i * n + j]).collect())
            .collect();
        let predecessors = (0..n)
            .map(|j| (0..n).filter(|&i| adjacency[i * n + j]).collect())
            .collect();
        TransitionMatrix {
            inner: Arc::new(Inner {
                labels,
                adjacency,
                successors,
                predecessors,
            }),
        }
    }

    /// Builds from a dense 0/1 matrix, pruning stranded states.
    pub fn from_adjacency<S: AsRef<str>>(labels: &[S], rows: &[Vec<bool>]) -> Result<BuiltShift> {
        let n = labels.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("adjacency must be square".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("state list is empty".into()));
        }
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(Error::DuplicateState(l.clone()));
            }
        }
        prune(labels, rows.iter().flatten().copied().collect())
    }

    /// Full shift on `k` states labelled `a, b, c, ...` (or `s0, s1, ...` past 26).
    pub fn full_shift(k: usize) -> Self {
        let labels = default_labels(k);
        Self::from_parts(labels, vec![true; k * k])
    }

    /// Full shift on states labelled `1..=k`.
    pub fn full_shift_numbered(k: usize) -> Self {
        let labels = (1..=k).map(|s| s.to_string()).collect();
        Self::from_parts(labels, vec![true; k * k])
    }

    /// Golden-mean shift: `b` may not follow `b`.
    pub fn golden_mean() -> Self {
        Self::from_parts(
            vec!["a".into(), "b".into()],
            vec![true, true, true, false],
        )
    }

    /// Three states with a loop at `a` and the cycle `a -> b -> c -> a`.
    pub fn loop3() -> Self {
        #[rustfmt::skip]
        let adj = vec![
            true, true, false,
            false, false, true,
            true, false, false,
        ];
        Self::from_parts(vec!["a".into(), "b".into(), "c".into()], adj)
    }

    pub fn size(&self) -> usize {
        self.inner.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.inner.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.inner.labels[i]
    }

    pub fn state_index(&self, label: &str) -> Result<usize> {
        self.inner
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownState(label.to_string()))
    }

    #[inline]
    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.inner.adjacency[i * self.size() + j]
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.inner.successors[i]
    }

    pub fn predecessors(&self, j: usize) -> &[usize] {
        &self.inner.predecessors[j]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.size()).flat_map(move |i| self.successors(i).iter().map(move |&j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.inner.adjacency.iter().filter(|&&b| b).count()
    }

    /// True when every consecutive pair of `symbols` is an edge.
    pub fn is_admissible(&self, symbols: &[usize]) -> bool {
        symbols.iter().all(|&s| s < self.size())
            && symbols.windows(2).all(|w| self.allowed(w[0], w[1]))
    }

    /// Admissible and closing up: the last symbol may be followed by the first.
    pub fn is_cyclically_admissible(&self, symbols: &[usize]) -> bool {
        !symbols.is_empty()
            && self.is_admissible(symbols)
            && self.allowed(symbols[symbols.len() - 1], symbols[0])
    }

    /// Irreducible and aperiodic.
    pub fn is_topologically_mixing(&self) -> bool {
        let n = self.size();
        let forward = bfs_levels(n, 0, |i| self.successors(i));
        if forward.iter().any(|l| l.is_none()) {
            return false;
        }
        let backward = bfs_levels(n, 0, |j| self.predecessors(j));
        if backward.iter().any(|l| l.is_none()) {
            return false;
        }
        // period = gcd over edges of level(u) + 1 - level(v)
        let mut g = 0u64;
        for (u, v) in self.edges() {
            let lu = forward[u].unwrap() as i64;
            let lv = forward[v].unwrap() as i64;
            g = gcd(g, (lu + 1 - lv).unsigned_abs());
        }
        g == 1
    }

    pub fn require_mixing(&self) -> Result<()> {
        if self.is_topologically_mixing() {
            Ok(())
        } else {
            Err(Error::NotMixing)
        }
    }

    /// Number of admissible words of length `n` (saturating).
    pub fn count_words(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let mut counts = vec![1u128; self.size()];
        for _ in 1..n {
            counts = self.step_counts(&counts);
        }
        counts.iter().fold(0u128, |acc, &c| acc.saturating_add(c))
    }

    /// trace(A^k): the number of points of period `k` (saturating).
    pub fn count_periodic(&self, k: usize) -> u128 {
        let n = self.size();
        let mut total = 0u128;
        for start in 0..n {
            let mut counts = vec![0u128; n];
            counts[start] = 1;
            for _ in 0..k {
                counts = self.step_counts_forward(&counts);
            }
            total = total.saturating_add(counts[start]);
        }
        total
    }

    // counts[i] = number of words of current length starting at i
    fn step_counts(&self, counts: &[u128]) -> Vec<u128> {
        (0..self.size())
            .map(|i| {
                self.successors(i)
                    .iter()
                    .fold(0u128, |acc, &j| acc.saturating_add(counts[j]))
            })
            .collect()
    }

    // counts[j] = number of paths ending at j
    fn step_counts_forward(&self, counts: &[u128]) -> Vec<u128> {
        (0..self.size())
            .map(|j| {
                self.predecessors(j)
                    .iter()
                    .fold(0u128, |acc, &i| acc.saturating_add(counts[i]))
            })
            .collect()
    }

    /// Calls `visit` on every admissible word of length `n` in lexicographic order.
    pub fn for_each_word<F: FnMut(&[usize])>(&self, n: usize, cap: u128, mut visit: F) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidParameter("word length must be >= 1".into()));
        }
        let count = self.count_words(n);
        if count > cap {
            return Err(Error::ResourceLimit {
                requested: count,
                cap,
            });
        }
        let mut word = Vec::with_capacity(n);
        for s in 0..self.size() {
            word.push(s);
            self.extend_words(&mut word, n, &mut visit);
            word.pop();
        }
        Ok(())
    }

    fn extend_words<F: FnMut(&[usize])>(&self, word: &mut Vec<usize>, n: usize, visit: &mut F) {
        if word.len() == n {
            visit(word);
            return;
        }
        let last = word[word.len() - 1];
        for &next in self.successors(last) {
            word.push(next);
            self.extend_words(word, n, visit);
            word.pop();
        }
    }

    pub fn enumerate_words(&self, n: usize) -> Result<Vec<Word>> {
        self.enumerate_words_capped(n, DEFAULT_WORD_CAP)
    }

    pub fn enumerate_words_capped(&self, n: usize, cap: u128) -> Result<Vec<Word>> {
        let mut out = Vec::new();
        self.for_each_word(n, cap, |w| out.push(Word(w.to_vec())))?;
        Ok(out)
    }

    /// Visits every cyclically admissible word of length `k`; each stands for
    /// the periodic point `w w w ...` of `Fix_k`.
    pub fn for_each_periodic<F: FnMut(&[usize])>(&self, k: usize, cap: u128, mut visit: F) -> Result<()> {
        self.for_each_word(k, cap, |w| {
            if self.allowed(w[w.len() - 1], w[0]) {
                visit(w)
            }
        })
    }

    pub fn enumerate_periodic(&self, k: usize) -> Result<Vec<Word>> {
        let mut out = Vec::new();
        self.for_each_periodic(k, DEFAULT_WORD_CAP, |w| out.push(Word(w.to_vec())))?;
        Ok(out)
    }

    /// Recodes to the shift on admissible `(ell - 1)`-blocks.
    pub fn higher_block_recode(&self, ell: usize) -> Result<BlockRecoding> {
        BlockRecoding::new(self, ell, DEFAULT_WORD_CAP)
    }

    /// Parses a word: whitespace-separated labels, or one character per
    /// symbol when every label is a single character.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        let tokens: Vec<String> = if text.contains(char::is_whitespace) {
            text.split_whitespace().map(str::to_string).collect()
        } else if self.labels().iter().all(|l| l.chars().count() == 1) {
            text.chars().map(|c| c.to_string()).collect()
        } else {
            vec![text.to_string()]
        };
        if tokens.is_empty() {
            return Err(Error::InvalidWord {
                word: text.into(),
                reason: "empty".into(),
            });
        }
        let symbols = tokens
            .iter()
            .map(|t| self.state_index(t))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidWord {
                word: text.into(),
                reason: e.to_string(),
            })?;
        Word::new(self, symbols).map_err(|_| Error::InvalidWord {
            word: text.into(),
            reason: "inadmissible transition".into(),
        })
    }

    /// Renders symbols with the shift's labels.
    pub fn format_word(&self, symbols: &[usize]) -> String {
        let single = self.labels().iter().all(|l| l.chars().count() == 1);
        let parts: Vec<&str> = symbols.iter().map(|&s| self.label(s)).collect();
        if single {
            parts.concat()
        } else {
            parts.join(" ")
        }
    }

    /// Dense 0/1 matrix as f64 rows.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.size())
            .map(|i| {
                (0..self.size())
                    .map(|j| if self.allowed(i, j) { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    }
}

fn default_labels(k: usize) -> Vec<String> {
    if k <= 26 {
        (0..k).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    } else {
        (0..k).map(|i| format!("s{i}")).collect()
    }
}

fn bfs_levels<'a, F>(n: usize, start: usize, next: F) -> Vec<Option<usize>>
where
    F: Fn(usize) -> &'a [usize],
{
    let mut level = vec![None; n];
    let mut queue = std::collections::VecDeque::new();
    level[start] = Some(0);
    queue.push_back(start);
    while let Some(u) = queue.pop_front() {
        let lu = level[u].unwrap();
        for &v in next(u) {
            if level[v].is_none() {
                level[v] = Some(lu + 1);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// An admissible finite word; also names a cylinder set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(shift: &TransitionMatrix, symbols: Vec<usize>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidWord {
                word: String::new(),
                reason: "empty".into(),
            });
        }
        if !shift.is_admissible(&symbols) {
            return Err(Error::InvalidWord {
                word: format!("{symbols:?}"),
                reason: "inadmissible transition".into(),
            });
        }
        Ok(Word(symbols))
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_symbols(self) -> Vec<usize> {
        self.0
    }
}

/// Conjugacy between a shift and its `(ell - 1)`-block presentation.
#[derive(Debug, Clone)]
pub struct BlockRecoding {
    original: TransitionMatrix,
    recoded: TransitionMatrix,
    block: usize,
    blocks: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl BlockRecoding {
    pub fn new(shift: &TransitionMatrix, ell: usize, cap: u128) -> Result<Self> {
        if ell < 2 {
            return Err(Error::InvalidParameter(format!(
                "block length must be >= 2, got {ell}"
            )));
        }
        let block = ell - 1;
        let blocks: Vec<Vec<usize>> = shift
            .enumerate_words_capped(block, cap)?
            .into_iter()
            .map(Word::into_symbols)
            .collect();
        let m = blocks.len();
        if (m as u128) * (m as u128) > cap {
            return Err(Error::ResourceLimit {
                requested: (m as u128) * (m as u128),
                cap,
            });
        }
        let index: HashMap<Vec<usize>, usize> =
            blocks.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect();
        let mut adjacency = vec![false; m * m];
        for (u, bu) in blocks.iter().enumerate() {
            let last = bu[block - 1];
            for &s in shift.successors(last) {
                let mut next = bu[1..].to_vec();
                next.push(s);
                if let Some(&v) = index.get(&next) {
                    adjacency[u * m + v] = true;
                }
            }
        }
        let labels = blocks.iter().map(|b| block_label(shift, b)).collect();
        let recoded = TransitionMatrix::from_parts(labels, adjacency);
        Ok(BlockRecoding {
            original: shift.clone(),
            recoded,
            block,
            blocks,
            index,
        })
    }

    pub fn original(&self) -> &TransitionMatrix {
        &self.original
    }

    pub fn recoded(&self) -> &TransitionMatrix {
        &self.recoded
    }

    /// The block length `ell` this recoding was built with.
    pub fn ell(&self) -> usize {
        self.block + 1
    }

    /// Length of the words that serve as recoded states.
    pub fn block_len(&self) -> usize {
        self.block
    }

    pub fn block_of(&self, state: usize) -> &[usize] {
        &self.blocks[state]
    }

    pub fn state_of(&self, block: &[usize]) -> Option<usize> {
        self.index.get(block).copied()
    }

    /// Maps a word of length `L >= block_len` to the recoded word of length
    /// `L - block_len + 1`.
    pub fn encode(&self, symbols: &[usize]) -> Result<Vec<usize>> {
        if symbols.len() < self.block {
            return Err(Error::WordTooShort {
                len: symbols.len(),
                need: self.block,
            });
        }
        symbols
            .windows(self.block)
            .map(|w| {
                self.state_of(w).ok_or_else(|| Error::InvalidWord {
                    word: format!("{w:?}"),
                    reason: "not an admissible block".into(),
                })
            })
            .collect()
    }

    /// Inverse of [`encode`](Self::encode) on admissible recoded words.
    pub fn decode(&self, states: &[usize]) -> Vec<usize> {
        let mut out = Vec::with_capacity(states.len() + self.block - 1);
        if let Some(&first) = states.first() {
            out.extend_from_slice(&self.blocks[first]);
            for &s in &states[1..] {
                out.push(self.blocks[s][self.block - 1]);
            }
        }
        out
    }
}

fn block_label(shift: &TransitionMatrix, block: &[usize]) -> String {
    let single = shift.labels().iter().all(|l| l.chars().count() == 1);
    let parts: Vec<&str> = block.iter().map(|&s| shift.label(s)).collect();
    if single {
        parts.concat()
    } else {
        parts.join(".")
    }
}

/// Named shifts available to configs and tests.
pub fn builtin_shift(name: &str) -> Option<TransitionMatrix> {
    match name {
        "full2" => Some(TransitionMatrix::full_shift(2)),
        "full3" => Some(TransitionMatrix::full_shift(3)),
        "golden" => Some(TransitionMatrix::golden_mean()),
        "loop3" => Some(TransitionMatrix::loop3()),
        _ => None,
    }
}

pub const BUILTIN_SHIFTS: &[(&str, &str)] = &[
    ("full2", "full shift on {a, b}"),
    ("full3", "full shift on {a, b, c}"),
    ("golden", "golden-mean shift on {a, b}, bb forbidden"),
    ("loop3", "{a, b, c} with edges aa, ab, bc, ca"),
];

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(words: &[Word], a: &TransitionMatrix) -> Vec<String> {
        words.iter().map(|w| a.format_word(w.symbols())).collect()
    }

    // Independent count: sum of entries of A^(n-1) by explicit matrix powers.
    fn power_entry_sum(a: &TransitionMatrix, n: usize) -> u128 {
        let m = a.size();
        let base: Vec<Vec<u128>> = (0..m)
            .map(|i| (0..m).map(|j| a.allowed(i, j) as u128).collect())
            .collect();
        let mut acc: Vec<Vec<u128>> = (0..m)
            .map(|i| (0..m).map(|j| (i == j) as u128).collect())
            .collect();
        for _ in 1..n {
            acc = (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| (0..m).map(|k| acc[i][k] * base[k][j]).sum())
                        .collect()
                })
                .collect();
        }
        acc.iter().flatten().sum()
    }

    fn power_trace(a: &TransitionMatrix, k: usize) -> u128 {
        let m = a.size();
        let base: Vec<Vec<u128>> = (0..m)
            .map(|i| (0..m).map(|j| a.allowed(i, j) as u128).collect())
            .collect();
        let mut acc = base.clone();
        for _ in 1..k {
            acc = (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| (0..m).map(|l| acc[i][l] * base[l][j]).sum())
                        .collect()
                })
                .collect();
        }
        (0..m).map(|i| acc[i][i]).sum()
    }

    #[test]
    fn build_full_and_golden() {
        let full = build_sft(
            &["a", "b"],
            &[("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")],
        )
        .unwrap();
        assert!(full.removed.is_empty());
        assert_eq!(full.matrix, TransitionMatrix::full_shift(2));

        let golden = build_sft(&["a", "b"], &[("a", "a"), ("a", "b"), ("b", "a")]).unwrap();
        assert!(golden.removed.is_empty());
        assert_eq!(golden.matrix, TransitionMatrix::golden_mean());
    }

    #[test]
    fn build_prunes_to_empty() {
        let err = build_sft(&["a", "b"], &[("a", "b")]).unwrap_err();
        assert!(matches!(err, Error::EmptyShift { .. }));
    }

    #[test]
    fn build_prunes_iteratively() {
        // c -> d -> a, and a <-> b; c has no predecessor, then d loses its only one.
        let built = build_sft(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "a"), ("c", "d"), ("d", "a"), ("a", "a")],
        )
        .unwrap();
        assert_eq!(built.removed, vec!["c".to_string(), "d".to_string()]);
        assert_eq!(built.matrix.size(), 2);
    }

    #[test]
    fn unknown_state_in_edges() {
        assert!(matches!(
            build_sft(&["a"], &[("a", "z")]),
            Err(Error::UnknownState(_))
        ));
    }

    #[test]
    fn mixing() {
        assert!(TransitionMatrix::full_shift(2).is_topologically_mixing());
        assert!(TransitionMatrix::golden_mean().is_topologically_mixing());
        assert!(TransitionMatrix::loop3().is_topologically_mixing());
        let two_cycle = build_sft(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap();
        assert!(!two_cycle.matrix.is_topologically_mixing());
        let reducible = build_sft(&["a", "b"], &[("a", "a"), ("b", "b")]).unwrap();
        assert!(!reducible.matrix.is_topologically_mixing());
    }

    #[test]
    fn mixing_agrees_with_positive_power() {
        // Wielandt: primitive iff A^((n-1)^2+1) > 0.
        let shifts = [
            TransitionMatrix::full_shift(2),
            TransitionMatrix::golden_mean(),
            TransitionMatrix::loop3(),
            build_sft(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap().matrix,
            build_sft(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")])
                .unwrap()
                .matrix,
        ];
        for a in shifts {
            let n = a.size();
            let power = (n - 1) * (n - 1) + 1;
            let positive = (0..n).all(|i| {
                let mut v = vec![0u128; n];
                v[i] = 1;
                for _ in 0..power {
                    v = a.step_counts_forward(&v);
                }
                v.iter().all(|&c| c > 0)
            });
            assert_eq!(positive, a.is_topologically_mixing(), "{a:?}");
        }
    }

    #[test]
    fn words_full_and_golden() {
        let full = TransitionMatrix::full_shift(2);
        assert_eq!(full.enumerate_words(3).unwrap().len(), 8);
        let g = TransitionMatrix::golden_mean();
        let w = g.enumerate_words(3).unwrap();
        assert_eq!(strings(&w, &g), vec!["aaa", "aab", "aba", "baa", "bab"]);
        assert_eq!(strings(&g.enumerate_words(1).unwrap(), &g), vec!["a", "b"]);
    }

    #[test]
    fn periodic_counts() {
        let full = TransitionMatrix::full_shift(2);
        assert_eq!(full.enumerate_periodic(2).unwrap().len(), 4);
        let g = TransitionMatrix::golden_mean();
        let p3 = g.enumerate_periodic(3).unwrap();
        assert_eq!(strings(&p3, &g), vec!["aaa", "aab", "aba", "baa"]);
        assert_eq!(strings(&g.enumerate_periodic(1).unwrap(), &g), vec!["a"]);
    }

    #[test]
    fn word_and_periodic_counts_match_matrix_powers() {
        for (name, _) in BUILTIN_SHIFTS {
            let a = builtin_shift(name).unwrap();
            for n in 1..=10 {
                assert_eq!(a.enumerate_words(n).unwrap().len() as u128, power_entry_sum(&a, n));
                assert_eq!(a.count_words(n), power_entry_sum(&a, n));
            }
            for k in 1..=12 {
                assert_eq!(a.enumerate_periodic(k).unwrap().len() as u128, power_trace(&a, k));
                assert_eq!(a.count_periodic(k), power_trace(&a, k));
            }
        }
    }

    #[test]
    fn resource_guard() {
        let full = TransitionMatrix::full_shift(2);
        let err = full.enumerate_words_capped(10, 100).unwrap_err();
        assert_eq!(
            err,
            Error::ResourceLimit {
                requested: 1024,
                cap: 100
            }
        );
    }

    #[test]
    fn recode_examples() {
        let full = TransitionMatrix::full_shift(2);
        let r2 = full.higher_block_recode(2).unwrap();
        assert_eq!(r2.recoded(), &full);

        let r3 = full.higher_block_recode(3).unwrap();
        assert_eq!(r3.recoded().size(), 4);
        assert_eq!(r3.recoded().edge_count(), 8);

        let g = TransitionMatrix::golden_mean();
        let rg = g.higher_block_recode(3).unwrap();
        assert_eq!(rg.recoded().labels(), &["aa", "ab", "ba"]);
        let edges: Vec<String> = rg
            .recoded()
            .edges()
            .map(|(i, j)| format!("{}>{}", rg.recoded().label(i), rg.recoded().label(j)))
            .collect();
        assert_eq!(edges, vec!["aa>aa", "aa>ab", "ab>ba", "ba>aa", "ba>ab"]);
        assert!(full.higher_block_recode(1).is_err());
    }

    #[test]
    fn recode_preserves_word_counts_and_roundtrips() {
        for (name, _) in BUILTIN_SHIFTS {
            let a = builtin_shift(name).unwrap();
            for ell in 2..=4 {
                let rec = a.higher_block_recode(ell).unwrap();
                for n in 1..=6 {
                    assert_eq!(rec.recoded().count_words(n), a.count_words(n + ell - 2));
                }
                a.for_each_word(ell + 3, DEFAULT_WORD_CAP, |w| {
                    let y = rec.encode(w).unwrap();
                    assert!(rec.recoded().is_admissible(&y));
                    assert_eq!(rec.decode(&y), w);
                })
                .unwrap();
            }
        }
    }

    #[test]
    fn parse_and_format_words() {
        let g = TransitionMatrix::golden_mean();
        let w = g.parse_word("aba").unwrap();
        assert_eq!(w.symbols(), &[0, 1, 0]);
        assert_eq!(g.parse_word("a b a").unwrap(), w);
        assert!(g.parse_word("abb").is_err());
        assert!(g.parse_word("az").is_err());
        let numbered = TransitionMatrix::full_shift_numbered(12);
        let w = numbered.parse_word("1 12").unwrap();
        assert_eq!(w.symbols(), &[0, 11]);
        assert_eq!(numbered.format_word(w.symbols()), "1 12");
    }
}
