//! Layout similarity by maximum-weight box matching.
//!
//! Two boxes of the same category get a weight that grows with their area and
//! decays with the distance between their centers and with their difference in
//! shape; boxes of different categories get weight zero. The score of two
//! layouts is the mean weight over a maximum-weight matching of their boxes.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DocumentLayout, LabeledBox};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocSimConfig {
    /// Exponent of the area factor.
    pub area_exponent: f64,
    /// Multiplier of the shape difference.
    pub shape_constant: f64,
}

impl Default for DocSimConfig {
    fn default() -> Self {
        Self {
            area_exponent: 0.5,
            shape_constant: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub score: f64,
    pub matches: Vec<MatchedPair>,
}

/// Edge weight between two boxes; zero across categories.
pub fn pair_weight(b1: &LabeledBox, b2: &LabeledBox, config: &DocSimConfig) -> f64 {
    if b1.label != b2.label {
        return 0.0;
    }
    let (r1, r2) = (&b1.rect, &b2.rect);
    let dx = r1.x_center() - r2.x_center();
    let dy = r1.y_center() - r2.y_center();
    let center_dist = libm::sqrt(dx * dx + dy * dy);
    let shape_diff = (r1.w - r2.w).abs() + (r1.h - r2.h).abs();
    let area_factor = libm::pow(r1.area().min(r2.area()), config.area_exponent);
    area_factor * libm::exp2(-center_dist - config.shape_constant * shape_diff)
}

/// A set of disjoint `(row, col)` pairs and their summed weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub total: f64,
}

/// Maximum-weight bipartite matching of a `rows x cols` nonnegative weight
/// matrix given row-major, via the Hungarian method on a zero-padded square
/// matrix. Pairs with zero weight are left out of the result.
pub fn max_weight_matching(weights: &[f64], rows: usize, cols: usize) -> Matching {
    assert_eq!(weights.len(), rows * cols, "weight matrix shape");
    let n = rows.max(cols);
    if n == 0 {
        return Matching {
            pairs: Vec::new(),
            total: 0.0,
        };
    }
    let max_w = weights.iter().copied().fold(0.0f64, f64::max);
    // Minimize max_w - w; padded cells carry weight 0.
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            max_w - weights[i * cols + j]
        } else {
            max_w
        }
    };
    let assignment = hungarian_min(n, cost);

    let mut pairs = Vec::new();
    let mut total = 0.0;
    for (i, &j) in assignment.iter().enumerate() {
        if i < rows && j < cols {
            let w = weights[i * cols + j];
            if w > 0.0 {
                pairs.push((i, j));
                total += w;
            }
        }
    }
    Matching { pairs, total }
}

/// Square min-cost assignment with row/column potentials and shortest
/// augmenting paths, `O(n^3)`. Returns the column assigned to each row.
fn hungarian_min(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // 1-based internally; index 0 is the virtual source column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = col0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Row-major `|d1| x |d2|` matrix of pair weights.
pub fn weight_matrix(d1: &DocumentLayout, d2: &DocumentLayout, config: &DocSimConfig) -> Vec<f64> {
    let mut w = Vec::with_capacity(d1.len() * d2.len());
    for b1 in &d1.boxes {
        for b2 in &d2.boxes {
            w.push(pair_weight(b1, b2, config));
        }
    }
    w
}

/// Mean matched weight; zero when no same-category pair exists.
pub fn docsim(d1: &DocumentLayout, d2: &DocumentLayout, config: &DocSimConfig) -> SimilarityReport {
    let w = weight_matrix(d1, d2, config);
    let m = max_weight_matching(&w, d1.len(), d2.len());
    let matches: Vec<MatchedPair> = m
        .pairs
        .iter()
        .map(|&(i, j)| MatchedPair {
            i,
            j,
            w: w[i * d2.len() + j],
        })
        .collect();
    let score = if matches.is_empty() {
        0.0
    } else {
        m.total / matches.len() as f64
    };
    SimilarityReport { score, matches }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NearestResult {
    /// `(corpus index, score)`, best first.
    Ranked(Vec<(usize, f64)>),
    /// Every candidate differed from the query by more than the allowed count
    /// in some category.
    FilteredAll,
}

/// Largest per-category box-count difference a candidate may have.
pub const COUNT_TOLERANCE: usize = 3;

/// Corpus documents ranked by similarity to `query`, after dropping candidates
/// whose count in any category differs from the query's by more than three.
/// Ties keep corpus order.
pub fn nearest_neighbor(
    query: &DocumentLayout,
    corpus: &[DocumentLayout],
    config: &DocSimConfig,
) -> Result<NearestResult> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let num_labels = core::iter::once(query)
        .chain(corpus)
        .flat_map(|d| d.boxes.iter().map(|b| b.label + 1))
        .max()
        .unwrap_or(0);
    let q_counts = query.label_counts(num_labels);
    let mut ranked: Vec<(usize, f64)> = corpus
        .iter()
        .enumerate()
        .filter(|(_, d)| {
            d.label_counts(num_labels)
                .iter()
                .zip(&q_counts)
                .all(|(a, b)| a.abs_diff(*b) <= COUNT_TOLERANCE)
        })
        .map(|(i, d)| (i, docsim(query, d, config).score))
        .collect();
    if ranked.is_empty() {
        return Ok(NearestResult::FilteredAll);
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(NearestResult::Ranked(ranked))
}

/// All-pairs similarity, symmetric by construction.
pub fn similarity_matrix(corpus: &[DocumentLayout], config: &DocSimConfig) -> Result<Vec<Vec<f64>>> {
    if corpus.len() < 2 {
        return Err(Error::InvalidInput(
            alloc::string::String::from("similarity matrix needs at least two documents"),
        ));
    }
    let n = corpus.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let s = docsim(&corpus[i], &corpus[j], config).score;
            m[i][j] = s;
            m[j][i] = s;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(boxes: Vec<LabeledBox>) -> DocumentLayout {
        DocumentLayout::unit("t", boxes)
    }

    #[test]
    fn pair_weight_examples() {
        let c = DocSimConfig::default();
        let a = LabeledBox::new(0, 0.0, 0.0, 0.5, 0.5);
        assert!((pair_weight(&a, &a, &c) - 0.5).abs() < 1e-15);
        let b1 = LabeledBox::new(0, 0.0, 0.0, 0.4, 0.2);
        let b2 = LabeledBox::new(0, 0.1, 0.0, 0.4, 0.2);
        assert!((pair_weight(&b1, &b2, &c) - 0.263_901_582_154_4).abs() < 1e-9);
        let other = LabeledBox::new(1, 0.1, 0.0, 0.4, 0.2);
        assert_eq!(pair_weight(&b1, &other, &c), 0.0);
    }

    #[test]
    fn matching_examples() {
        let m = max_weight_matching(&[0.5], 1, 1);
        assert_eq!(m.pairs, vec![(0, 0)]);
        assert_eq!(m.total, 0.5);

        let m = max_weight_matching(&[1.0, 0.9, 0.9, 0.0], 2, 2);
        assert_eq!(m.pairs, vec![(0, 1), (1, 0)]);
        assert!((m.total - 1.8).abs() < 1e-12);

        let m = max_weight_matching(&[0.0; 6], 2, 3);
        assert!(m.pairs.is_empty());
        assert_eq!(m.total, 0.0);

        let m = max_weight_matching(&[], 0, 4);
        assert!(m.pairs.is_empty());
    }

    #[test]
    fn rectangular_matrices() {
        // 3 x 2, best is rows 0 and 2.
        let m = max_weight_matching(&[0.9, 0.1, 0.8, 0.2, 0.1, 0.7], 3, 2);
        assert_eq!(m.pairs, vec![(0, 0), (2, 1)]);
        assert!((m.total - 1.6).abs() < 1e-12);
        // Transposed.
        let m = max_weight_matching(&[0.9, 0.8, 0.1, 0.1, 0.2, 0.7], 2, 3);
        assert_eq!(m.pairs, vec![(0, 0), (1, 2)]);
    }

    #[test]
    fn docsim_examples() {
        let c = DocSimConfig::default();
        let d = doc(vec![LabeledBox::new(0, 0.25, 0.25, 0.5, 0.5)]);
        assert!((docsim(&d, &d, &c).score - 0.5).abs() < 1e-15);
        let e = doc(vec![LabeledBox::new(1, 0.25, 0.25, 0.5, 0.5)]);
        let r = docsim(&d, &e, &c);
        assert_eq!(r.score, 0.0);
        assert!(r.matches.is_empty());
    }

    #[test]
    fn nearest_filters_and_ranks() {
        let c = DocSimConfig::default();
        let q = doc(vec![
            LabeledBox::new(0, 0.1, 0.1, 0.3, 0.1),
            LabeledBox::new(1, 0.1, 0.3, 0.8, 0.2),
        ]);
        let mut crowded = q.clone();
        for k in 0..4 {
            crowded
                .boxes
                .push(LabeledBox::new(1, 0.1, 0.55 + 0.1 * k as f64, 0.8, 0.05));
        }
        let shifted = doc(vec![
            LabeledBox::new(0, 0.5, 0.1, 0.3, 0.1),
            LabeledBox::new(1, 0.1, 0.5, 0.8, 0.2),
        ]);
        let corpus = vec![shifted, crowded, q.clone()];
        let NearestResult::Ranked(r) = nearest_neighbor(&q, &corpus, &c).unwrap() else {
            panic!("expected ranking")
        };
        assert_eq!(r.iter().map(|x| x.0).collect::<Vec<_>>(), vec![2, 0]);

        let only_crowded = vec![corpus[1].clone()];
        assert_eq!(nearest_neighbor(&q, &only_crowded, &c).unwrap(), NearestResult::FilteredAll);
        assert_eq!(nearest_neighbor(&q, &[], &c), Err(Error::EmptyCorpus));
    }

    #[test]
    fn similarity_matrix_shape() {
        let c = DocSimConfig::default();
        let a = doc(vec![LabeledBox::new(0, 0.1, 0.1, 0.3, 0.1)]);
        let b = doc(vec![LabeledBox::new(0, 0.2, 0.1, 0.3, 0.2)]);
        let m = similarity_matrix(&[a.clone(), b], &c).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0][1], m[1][0]);
        assert!(similarity_matrix(&[a], &c).is_err());
    }
}
