mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use read_core::docsim::{docsim, max_weight_matching, pair_weight, DocSimConfig};
use read_core::generate::{realign, remove_overlaps, remove_tiny};
use read_core::hierarchy::{extract_hierarchy, flatten, reading_order};
use read_core::metrics::{alignment_index, overlap_index};
use read_core::{DocumentLayout, LabeledBox, Rect};

use common::{brute_force_matching, random_layout};

fn rect() -> impl Strategy<Value = Rect> {
    (0.0..0.9f64, 0.0..0.9f64, 0.001..0.5f64, 0.001..0.5f64).prop_map(|(x, y, w, h)| Rect::new(x, y, w, h))
}

fn layout(max: usize) -> impl Strategy<Value = DocumentLayout> {
    (any::<u64>(), 1..=max).prop_map(|(seed, n)| random_layout(&mut ChaCha8Rng::seed_from_u64(seed), n, 5))
}

proptest! {
    #[test]
    fn union_contains_both_and_commutes(a in rect(), b in rect()) {
        let u = a.union(&b);
        prop_assert!(u.contains(&a, 1e-12) && u.contains(&b, 1e-12));
        prop_assert_eq!(u, b.union(&a));
        prop_assert_eq!(a.union(&a), a);
    }

    #[test]
    fn intersection_bounded_by_smaller_area(a in rect(), b in rect()) {
        let i = a.intersection_area(&b);
        prop_assert!(i >= 0.0);
        prop_assert!(i <= a.area().min(b.area()) + 1e-15);
    }

    #[test]
    fn hierarchy_round_trip(d in layout(40)) {
        let tree = extract_hierarchy(&d).unwrap();
        prop_assert_eq!(tree.num_leaves(), d.len());
        prop_assert_eq!(tree.num_internal(), d.len() - 1);
        prop_assert!(tree.is_left_deep());
        prop_assert!(tree.bboxes_consistent());
        let bbox = d.bbox().unwrap();
        let back = flatten(&tree, (bbox.x, bbox.y));
        let want = reading_order(&d).unwrap();
        prop_assert_eq!(back.len(), want.len());
        for (a, b) in back.iter().zip(&want) {
            prop_assert_eq!(a.label, b.label);
            for (p, q) in [(a.rect.x, b.rect.x), (a.rect.y, b.rect.y), (a.rect.w, b.rect.w), (a.rect.h, b.rect.h)] {
                prop_assert!((p - q).abs() <= 1e-9, "{} vs {}", p, q);
            }
        }
    }

    #[test]
    fn docsim_symmetric_and_self_bounded(a in layout(12), b in layout(12)) {
        let c = DocSimConfig::default();
        let ab = docsim(&a, &b, &c).score;
        let ba = docsim(&b, &a, &c).score;
        prop_assert!((ab - ba).abs() <= 1e-12);
        let floor = a.boxes.iter().map(|x| x.rect.area().sqrt()).sum::<f64>() / a.len() as f64;
        prop_assert!(docsim(&a, &a, &c).score >= floor - 1e-12);
    }

    #[test]
    fn pair_weight_bounds(a in rect(), b in rect(), same in any::<bool>()) {
        let c = DocSimConfig::default();
        let x = LabeledBox { label: 0, rect: a };
        let y = LabeledBox { label: usize::from(!same), rect: b };
        let w = pair_weight(&x, &y, &c);
        prop_assert!(w >= 0.0);
        prop_assert!(w <= a.area().min(b.area()).sqrt() + 1e-15);
        if !same {
            prop_assert_eq!(w, 0.0);
        }
    }

    #[test]
    fn hungarian_matches_enumeration(
        rows in 0usize..=6,
        cols in 0usize..=6,
        seed in any::<u64>(),
        sparsity in 0.0..0.8f64,
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..rows * cols)
            .map(|_| if rng.random_bool(sparsity) { 0.0 } else { rng.random_range(0.0..1.0) })
            .collect();
        let m = max_weight_matching(&w, rows, cols);
        prop_assert!((m.total - brute_force_matching(&w, rows, cols)).abs() <= 1e-9);
        let sum: f64 = m.pairs.iter().map(|&(i, j)| w[i * cols + j]).sum();
        prop_assert!((sum - m.total).abs() <= 1e-12);
    }

    #[test]
    fn overlap_nonnegative_and_alignment_translation_invariant(d in layout(15), dx in -0.3..0.3f64) {
        prop_assert!(overlap_index(&d) >= 0.0);
        let mut moved = d.clone();
        for b in &mut moved.boxes {
            b.rect.x += dx;
        }
        prop_assert!((alignment_index(&d) - alignment_index(&moved)).abs() <= 1e-9);
    }

    #[test]
    fn cleanup_returns_subsets(d in layout(20), t in 0.01..0.5f64) {
        for out in [remove_overlaps(&d, t), remove_tiny(&d, t)] {
            prop_assert!(out.boxes.iter().all(|b| d.boxes.contains(b)));
        }
        let kept = remove_overlaps(&d, t);
        for a in &kept.boxes {
            for b in &kept.boxes {
                if a != b && a.label == b.label && a.rect.area() <= b.rect.area() {
                    prop_assert!(a.rect.intersection_area(&b.rect) / a.rect.area() <= t);
                }
            }
        }
    }

    #[test]
    fn realign_keeps_sizes(d in layout(20), seed in any::<u64>()) {
        let out = realign(&d, 1.0, 0.01, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(out.len(), d.len());
        for (a, b) in out.boxes.iter().zip(&d.boxes) {
            prop_assert_eq!(a.label, b.label);
            prop_assert!((a.rect.w - b.rect.w).abs() < 1e-12 && (a.rect.h - b.rect.h).abs() < 1e-12);
        }
    }
}
