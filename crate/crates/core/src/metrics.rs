//! Spatial-quality indices and corpus statistics.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DocumentLayout;

/// Summed pairwise intersection area over unordered box pairs, as a
/// percentage of the unit page. Labels are ignored.
pub fn overlap_index(layout: &DocumentLayout) -> f64 {
    let b = &layout.boxes;
    let mut total = 0.0;
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            total += b[i].rect.intersection_area(&b[j].rect);
        }
    }
    100.0 * total
}

/// `100 * min(std(left edges), std(horizontal centers))`, population standard
/// deviation in page-width units. Zero for empty and single-box layouts.
pub fn alignment_index(layout: &DocumentLayout) -> f64 {
    if layout.boxes.len() < 2 {
        return 0.0;
    }
    let lefts: Vec<f64> = layout.boxes.iter().map(|b| b.rect.x).collect();
    let centers: Vec<f64> = layout.boxes.iter().map(|b| b.rect.x_center()).collect();
    100.0 * population_std(&lefts).min(population_std(&centers))
}

fn population_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    libm::sqrt(v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub box_counts: Vec<usize>,
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    /// Total boxes per label id.
    pub per_category: Vec<usize>,
}

pub fn corpus_stats(corpus: &[DocumentLayout], num_labels: usize) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let box_counts: Vec<usize> = corpus.iter().map(DocumentLayout::len).collect();
    let mut per_category = alloc::vec![0usize; num_labels];
    for d in corpus {
        for (total, c) in per_category.iter_mut().zip(d.label_counts(num_labels)) {
            *total += c;
        }
    }
    Ok(CorpusStats {
        mean: box_counts.iter().sum::<usize>() as f64 / box_counts.len() as f64,
        min: *box_counts.iter().min().unwrap(),
        max: *box_counts.iter().max().unwrap(),
        box_counts,
        per_category,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LabeledBox;
    use alloc::vec;

    fn doc(boxes: Vec<LabeledBox>) -> DocumentLayout {
        DocumentLayout::unit("t", boxes)
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(
            overlap_index(&doc(vec![
                LabeledBox::new(0, 0.0, 0.0, 0.2, 0.2),
                LabeledBox::new(1, 0.5, 0.5, 0.2, 0.2)
            ])),
            0.0
        );
        let two = doc(vec![
            LabeledBox::new(0, 0.0, 0.0, 0.3, 0.3),
            LabeledBox::new(1, 0.2, 0.2, 0.3, 0.3),
        ]);
        assert!((overlap_index(&two) - 1.0).abs() < 1e-12);
        let b = LabeledBox::new(0, 0.1, 0.1, 0.2, 0.3);
        assert!((overlap_index(&doc(vec![b, b, b])) - 100.0 * 3.0 * 0.06).abs() < 1e-12);
    }

    #[test]
    fn alignment_examples() {
        let shared = doc(vec![
            LabeledBox::new(0, 0.1, 0.0, 0.2, 0.1),
            LabeledBox::new(0, 0.1, 0.3, 0.5, 0.1),
        ]);
        assert_eq!(alignment_index(&shared), 0.0);
        assert_eq!(alignment_index(&doc(vec![LabeledBox::new(0, 0.4, 0.0, 0.2, 0.1)])), 0.0);
        let spread = doc(vec![
            LabeledBox::new(0, 0.1, 0.0, 0.2, 0.1),
            LabeledBox::new(0, 0.3, 0.3, 0.2, 0.1),
        ]);
        assert!((alignment_index(&spread) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn stats() {
        let five = doc(vec![LabeledBox::new(0, 0.1, 0.1, 0.1, 0.1); 5]);
        let s = corpus_stats(&[five], 2).unwrap();
        assert_eq!((s.mean, s.min, s.max), (5.0, 5, 5));
        assert_eq!(s.per_category, vec![5, 0]);
        let three = doc(vec![LabeledBox::new(1, 0.1, 0.1, 0.1, 0.1); 3]);
        let seven = doc(vec![LabeledBox::new(0, 0.1, 0.1, 0.1, 0.1); 7]);
        assert_eq!(corpus_stats(&[three, seven], 2).unwrap().mean, 5.0);
        assert_eq!(corpus_stats(&[], 2), Err(Error::EmptyCorpus));
    }
}
