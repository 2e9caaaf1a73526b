//! Sparse crew x crew x genre acquaintance tensor.
//!
//! Only the upper triangle (`n < m`) is stored. The full tensor is
//! symmetric in its first two slots with a zero diagonal, so the ordered
//! triple sum counts every unordered pair twice:
//!
//! ```text
//! acquaintance(x) = sum_{n,m,l} W[n][m][l] x[n] x[m] x[C + l]
//!                 = sum_{n<m,l} 2 W[n][m][l] x[n] x[m] x[C + l]
//! ```
//!
//! Crew indices are feature positions in `[0, C)`; genre indices `l` are
//! local to the genre block and address configuration position `C + l`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{FeatureIndex, KnowledgeLibrary, Role};

/// One stored upper-triangle entry; also the tensor file line shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TensorEntry {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcquaintanceTensor {
    /// Sorted by `(n, m, l)`, `n < m`, `count > 0`.
    entries: Vec<TensorEntry>,
    crew_len: usize,
    genre_len: usize,
}

impl AcquaintanceTensor {
    /// Builds from upper-triangle entries. Duplicate keys are summed.
    pub fn from_entries(
        crew_len: usize,
        genre_len: usize,
        entries: impl IntoIterator<Item = TensorEntry>,
    ) -> Result<Self> {
        let mut acc: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
        for e in entries {
            if e.n >= e.m {
                return Err(Error::InvalidArgument(format!(
                    "tensor entry ({}, {}, {}) is not upper triangular",
                    e.n, e.m, e.l
                )));
            }
            if e.m >= crew_len || e.l >= genre_len {
                return Err(Error::InvalidArgument(format!(
                    "tensor entry ({}, {}, {}) outside {crew_len}x{crew_len}x{genre_len}",
                    e.n, e.m, e.l
                )));
            }
            if e.count > 0 {
                *acc.entry((e.n, e.m, e.l)).or_default() += e.count;
            }
        }
        Ok(Self {
            entries: acc
                .into_iter()
                .map(|((n, m, l), count)| TensorEntry { n, m, l, count })
                .collect(),
            crew_len,
            genre_len,
        })
    }

    /// Counts, for every movie and each of its genres, every unordered pair
    /// of distinct crew features of that movie.
    pub fn build(lib: &KnowledgeLibrary, index: &FeatureIndex) -> Result<Self> {
        let crew_len = index.crew_len();
        let genre_start = index.genre_range().start;
        let mut acc: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
        for movie in lib.records() {
            let positions = index.positions_of(movie)?;
            let (crew, genres): (Vec<usize>, Vec<usize>) =
                positions.into_iter().partition(|&p| p < crew_len);
            for (i, &a) in crew.iter().enumerate() {
                for &b in &crew[i + 1..] {
                    for &g in &genres {
                        *acc.entry((a, b, g - genre_start)).or_default() += 1;
                    }
                }
            }
        }
        Ok(Self {
            entries: acc
                .into_iter()
                .map(|((n, m, l), count)| TensorEntry { n, m, l, count })
                .collect(),
            crew_len,
            genre_len: index.genre_len(),
        })
    }

    pub fn crew_len(&self) -> usize {
        self.crew_len
    }

    pub fn genre_len(&self) -> usize {
        self.genre_len
    }

    /// Configuration dimension `C + G`.
    pub fn dim(&self) -> usize {
        self.crew_len + self.genre_len
    }

    /// Same dimensions, keeping only entries whose three indices all lie in
    /// `positions` (configuration positions).
    pub fn restricted(&self, positions: &[usize]) -> Self {
        let mut keep = vec![false; self.dim()];
        for &p in positions {
            if p < keep.len() {
                keep[p] = true;
            }
        }
        let c = self.crew_len;
        Self {
            entries: self
                .entries
                .iter()
                .filter(|e| keep[e.n] && keep[e.m] && keep[c + e.l])
                .copied()
                .collect(),
            crew_len: self.crew_len,
            genre_len: self.genre_len,
        }
    }

    /// Removes one movie's co-credits: one count per crew pair and genre of
    /// the configuration `positions`. Fails if the tensor does not contain
    /// them.
    pub fn without_movie(&self, positions: &[usize]) -> Result<Self> {
        let c = self.crew_len;
        let mut crew: Vec<usize> = positions.iter().copied().filter(|&p| p < c).collect();
        crew.sort_unstable();
        crew.dedup();
        let mut genres: Vec<usize> = positions
            .iter()
            .filter(|&&p| p >= c && p < self.dim())
            .map(|&p| p - c)
            .collect();
        genres.sort_unstable();
        genres.dedup();
        let mut entries = self.entries.clone();
        for (i, &a) in crew.iter().enumerate() {
            for &b in &crew[i + 1..] {
                for &l in &genres {
                    let at = entries
                        .binary_search_by(|e| (e.n, e.m, e.l).cmp(&(a, b, l)))
                        .map_err(|_| {
                            Error::InvalidArgument(format!(
                                "tensor has no co-credit ({a}, {b}, {l}) to remove"
                            ))
                        })?;
                    entries[at].count -= 1;
                }
            }
        }
        entries.retain(|e| e.count > 0);
        Ok(Self {
            entries,
            crew_len: self.crew_len,
            genre_len: self.genre_len,
        })
    }

    /// Stored upper-triangle entries.
    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }

    /// Nonzero entries of the full symmetric tensor.
    pub fn nnz(&self) -> usize {
        2 * self.entries.len()
    }

    /// Sum of all entries of the full symmetric tensor.
    pub fn total_mass(&self) -> u64 {
        2 * self.entries.iter().map(|e| e.count).sum::<u64>()
    }

    /// `W[n][m][l]` of the full tensor.
    pub fn get(&self, n: usize, m: usize, l: usize) -> u64 {
        if n == m {
            return 0;
        }
        let (a, b) = if n < m { (n, m) } else { (m, n) };
        self.entries
            .binary_search_by(|e| (e.n, e.m, e.l).cmp(&(a, b, l)))
            .map_or(0, |i| self.entries[i].count)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }

    pub fn acquaintance(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let c = self.crew_len;
        Ok(self
            .entries
            .iter()
            .map(|e| 2.0 * e.count as f64 * x[e.n] * x[e.m] * x[c + e.l])
            .sum())
    }

    /// Exact acquaintance of a binary configuration given by its selected
    /// positions.
    pub fn acquaintance_of(&self, selected: &[usize]) -> Result<u64> {
        let mut on = vec![false; self.dim()];
        for &p in selected {
            if p >= on.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    actual: p + 1,
                });
            }
            on[p] = true;
        }
        let c = self.crew_len;
        Ok(self
            .entries
            .iter()
            .filter(|e| on[e.n] && on[e.m] && on[c + e.l])
            .map(|e| 2 * e.count)
            .sum())
    }

    pub fn acquaintance_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let c = self.crew_len;
        let mut grad = vec![0.0; x.len()];
        for e in &self.entries {
            let w = 2.0 * e.count as f64;
            let g = c + e.l;
            grad[e.n] += w * x[e.m] * x[g];
            grad[e.m] += w * x[e.n] * x[g];
            grad[g] += w * x[e.n] * x[e.m];
        }
        Ok(grad)
    }

    /// Entries touching crew position `k`, as `(partner, genre, count)`.
    pub fn partners(&self, k: usize) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.entries.iter().filter_map(move |e| {
            if e.n == k {
                Some((e.m, e.l, e.count))
            } else if e.m == k {
                Some((e.n, e.l, e.count))
            } else {
                None
            }
        })
    }

    /// The cubic form restricted to `active` positions, reindexed so that
    /// variable `i` of the result is configuration position `active[i]`.
    /// Terms with any index outside `active` are dropped.
    pub fn restrict(&self, active: &[usize]) -> CubicForm {
        let mut local = vec![usize::MAX; self.dim()];
        for (i, &p) in active.iter().enumerate() {
            if p < local.len() {
                local[p] = i;
            }
        }
        let c = self.crew_len;
        let terms = self
            .entries
            .iter()
            .filter_map(|e| {
                let (a, b, g) = (local[e.n], local[e.m], local[c + e.l]);
                (a != usize::MAX && b != usize::MAX && g != usize::MAX).then_some(CubicTerm {
                    a,
                    b,
                    g,
                    weight: 2.0 * e.count as f64,
                })
            })
            .collect();
        CubicForm {
            n_vars: active.len(),
            terms,
        }
    }

    /// Writes the stored entries, one JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads a tensor file. Lines must hold `n < m`; the lower triangle is
    /// implied.
    pub fn read_jsonl<R: BufRead>(input: R, crew_len: usize, genre_len: usize) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |reason: String| Error::TensorFormat {
                line: i + 1,
                reason,
            };
            let e: TensorEntry =
                serde_json::from_str(line.trim()).map_err(|e| err(e.to_string()))?;
            if e.n >= e.m {
                return Err(err(format!("expected n < m, got n={} m={}", e.n, e.m)));
            }
            if e.m >= crew_len || e.l >= genre_len {
                return Err(err("index out of range".into()));
            }
            if !seen.insert((e.n, e.m, e.l)) {
                return Err(err("duplicate entry".into()));
            }
            entries.push(e);
        }
        Self::from_entries(crew_len, genre_len, entries)
    }

    /// Tensor for an index, checking its crew/genre split.
    pub fn read_for_index<R: BufRead>(input: R, index: &FeatureIndex) -> Result<Self> {
        debug_assert_eq!(index.block_range(Role::Genre).start, index.crew_len());
        Self::read_jsonl(input, index.crew_len(), index.genre_len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicTerm {
    pub a: usize,
    pub b: usize,
    pub g: usize,
    pub weight: f64,
}

/// `sum weight * x[a] * x[b] * x[g]` over distinct-variable terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CubicForm {
    pub n_vars: usize,
    pub terms: Vec<CubicTerm>,
}

impl CubicForm {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * x[t.a] * x[t.b] * x[t.g])
            .sum()
    }

    /// Adds `scale * gradient` into `out`.
    pub fn add_gradient(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        for t in &self.terms {
            let w = scale * t.weight;
            out[t.a] += w * x[t.b] * x[t.g];
            out[t.b] += w * x[t.a] * x[t.g];
            out[t.g] += w * x[t.a] * x[t.b];
        }
    }

    /// Value at a binary point given as a mask.
    pub fn value_mask(&self, on: &[bool]) -> f64 {
        self.terms
            .iter()
            .filter(|t| on[t.a] && on[t.b] && on[t.g])
            .map(|t| t.weight)
            .sum()
    }
}
