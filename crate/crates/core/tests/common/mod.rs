#![allow(dead_code)]

use rand::Rng;
use read_core::hierarchy::{LayoutTree, RelativePosition, SpatialRelation};
use read_core::{DocumentLayout, LabeledBox};

/// Random layout with `n` boxes of random labels inside the unit page.
pub fn random_layout<R: Rng>(rng: &mut R, n: usize, num_labels: usize) -> DocumentLayout {
    let boxes = (0..n)
        .map(|_| {
            let w = rng.random_range(0.02..0.6);
            let h = rng.random_range(0.01..0.3);
            let x = rng.random_range(0.0..(1.0 - w));
            let y = rng.random_range(0.0..(1.0 - h));
            LabeledBox::new(rng.random_range(0..num_labels), x, y, w, h)
        })
        .collect();
    DocumentLayout::unit("random", boxes)
}

/// Random binary tree of depth at most `depth`, not necessarily left-deep.
pub fn random_tree<R: Rng>(rng: &mut R, depth: usize, num_labels: usize) -> LayoutTree {
    if depth == 0 || rng.random_bool(0.3) {
        let w = rng.random_range(0.02..0.6);
        let h = rng.random_range(0.01..0.3);
        return LayoutTree::Leaf(LabeledBox::new(rng.random_range(0..num_labels), 0.0, 0.0, w, h));
    }
    let relation = SpatialRelation::from_index(rng.random_range(0..7)).unwrap();
    let rel = RelativePosition::new(rng.random_range(-0.5..0.5), rng.random_range(0.0..0.5));
    let left = random_tree(rng, depth - 1, num_labels);
    let right = random_tree(rng, depth - 1, num_labels);
    LayoutTree::compose(relation, rel, left, right)
}

/// Best total over all partial injections of rows into columns, by exhaustive
/// search.
pub fn brute_force_matching(w: &[f64], rows: usize, cols: usize) -> f64 {
    fn go(w: &[f64], cols: usize, row: usize, rows: usize, used: &mut Vec<bool>) -> f64 {
        if row == rows {
            return 0.0;
        }
        let mut best = go(w, cols, row + 1, rows, used);
        for c in 0..cols {
            if !used[c] {
                used[c] = true;
                best = best.max(w[row * cols + c] + go(w, cols, row + 1, rows, used));
                used[c] = false;
            }
        }
        best
    }
    go(w, cols, 0, rows, &mut vec![false; cols])
}
