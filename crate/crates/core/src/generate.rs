//! Sampling layouts from a trained model, plus optional clean-up passes.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DocumentLayout, LabeledBox, Rect};
use crate::hierarchy::{extract_hierarchy, flatten};
use crate::model::{DecodedTree, ModelParams, DEFAULT_MAX_NODES};
use crate::train::standard_normal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PostProcess {
    pub remove_overlaps: bool,
    pub remove_tiny: bool,
    pub realign: bool,
}

impl Default for PostProcess {
    fn default() -> Self {
        Self {
            remove_overlaps: true,
            remove_tiny: true,
            realign: true,
        }
    }
}

impl PostProcess {
    pub const NONE: PostProcess = PostProcess {
        remove_overlaps: false,
        remove_tiny: false,
        realign: false,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub count: usize,
    pub seed: u64,
    pub max_nodes: usize,
    pub postprocess: PostProcess,
    pub overlap_threshold: f64,
    pub tiny_threshold: f64,
    pub realign_probability: f64,
    pub align_epsilon: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            count: 1,
            seed: 0,
            max_nodes: DEFAULT_MAX_NODES,
            postprocess: PostProcess::default(),
            overlap_threshold: 0.10,
            tiny_threshold: 0.01,
            realign_probability: 0.5,
            align_epsilon: 0.01,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if self.count == 0 || self.max_nodes == 0 {
            return Err(Error::InvalidInput("count and max_nodes must be at least 1".into()));
        }
        if !unit(self.overlap_threshold) || !unit(self.tiny_threshold) || !unit(self.align_epsilon)
        {
            return Err(Error::InvalidInput("thresholds must lie in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.realign_probability) {
            return Err(Error::InvalidInput("realign_probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub layout: DocumentLayout,
    pub truncated: bool,
}

/// Generator for sample `index`: the master seed picks the key, the index
/// picks the ChaCha stream.
pub fn sample_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Decodes a standard-normal latent draw into a layout anchored at the page
/// origin, clipped to the unit page. Boxes left with no area are dropped.
pub fn sample_layout<R: Rng + ?Sized>(
    params: &ModelParams,
    max_nodes: usize,
    rng: &mut R,
) -> Sample {
    let z = standard_normal(rng, params.config.code_size);
    decode_latent(params, &z, max_nodes)
}

/// Same as [`sample_layout`] for a given latent vector.
pub fn decode_latent(params: &ModelParams, z: &[f64], max_nodes: usize) -> Sample {
    let root = params.decode_root(z);
    let decoded = params.decode_tree(&root, max_nodes);
    let boxes = clip_to_page(&flatten(&decoded.tree, (0.0, 0.0)));
    Sample {
        layout: DocumentLayout::unit("", boxes),
        truncated: decoded.truncated,
    }
}

/// Deterministic reconstruction: the posterior mean of `layout`'s hierarchy,
/// decoded without noise. The returned tree is anchored at the page origin
/// and not clipped.
pub fn reconstruct(
    params: &ModelParams,
    layout: &DocumentLayout,
    max_nodes: usize,
) -> Result<DecodedTree> {
    let tree = extract_hierarchy(layout)?;
    let root = params.encode_tree(&tree);
    let latent = params.reparameterize(&root, &alloc::vec![0.0; params.config.code_size]);
    Ok(params.decode_tree(&params.decode_root(&latent.z), max_nodes))
}

pub fn clip_to_page(boxes: &[LabeledBox]) -> Vec<LabeledBox> {
    let page = Rect::new(0.0, 0.0, 1.0, 1.0);
    boxes
        .iter()
        .filter_map(|b| {
            b.rect.intersect(&page).map(|rect| LabeledBox {
                label: b.label,
                rect,
            })
        })
        .collect()
}

/// Samples `config.count` layouts. Sample `i` uses [`sample_rng`]`(seed, i)`
/// and the clean-up order realign, clip, remove tiny, remove overlaps.
pub fn generate(params: &ModelParams, config: &GenerationConfig) -> Result<Vec<Sample>> {
    config.validate()?;
    (0..config.count)
        .map(|i| {
            let mut rng = sample_rng(config.seed, i as u64);
            let mut s = sample_layout(params, config.max_nodes, &mut rng);
            s.layout = postprocess(&s.layout, config, &mut rng);
            s.layout.source_id = format!("sample_{i}");
            Ok(s)
        })
        .collect()
}

pub fn postprocess<R: Rng + ?Sized>(
    layout: &DocumentLayout,
    config: &GenerationConfig,
    rng: &mut R,
) -> DocumentLayout {
    let pp = config.postprocess;
    let mut out = layout.clone();
    if pp.realign {
        out = realign(&out, config.realign_probability, config.align_epsilon, rng);
        out.boxes = clip_to_page(&out.boxes);
    }
    if pp.remove_tiny {
        out = remove_tiny(&out, config.tiny_threshold);
    }
    if pp.remove_overlaps {
        out = remove_overlaps(&out, config.overlap_threshold);
    }
    out
}

/// Drops a box when a larger retained box of the same label covers more than
/// `threshold` of its area. Boxes are visited by descending area; survivors
/// keep their original order.
pub fn remove_overlaps(layout: &DocumentLayout, threshold: f64) -> DocumentLayout {
    let boxes = &layout.boxes;
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| {
        boxes[b]
            .rect
            .area()
            .partial_cmp(&boxes[a].rect.area())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut keep = alloc::vec![false; boxes.len()];
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let b = &boxes[i];
        let area = b.rect.area();
        let covered = kept.iter().any(|&j| {
            boxes[j].label == b.label && b.rect.intersection_area(&boxes[j].rect) / area > threshold
        });
        if !covered {
            keep[i] = true;
            kept.push(i);
        }
    }
    let mut out = layout.clone();
    out.boxes = boxes
        .iter()
        .zip(keep)
        .filter_map(|(b, k)| k.then_some(*b))
        .collect();
    out
}

/// Drops boxes narrower or shorter than `threshold`.
pub fn remove_tiny(layout: &DocumentLayout, threshold: f64) -> DocumentLayout {
    let mut out = layout.clone();
    out.boxes
        .retain(|b| b.rect.w >= threshold && b.rect.h >= threshold);
    out
}

#[derive(Clone, Copy)]
enum Edge {
    Left,
    Right,
    Top,
    Bottom,
}

/// With probability `p`, snaps groups of boxes sharing an edge coordinate.
///
/// Passes run in the order left, right, top, bottom edge. A group is a maximal
/// run of at least two boxes (sorted by that edge) whose edge values all lie
/// within `epsilon` of the run's first value; every member is translated so
/// its center along that axis equals the group's mean center.
pub fn realign<R: Rng + ?Sized>(
    layout: &DocumentLayout,
    p: f64,
    epsilon: f64,
    rng: &mut R,
) -> DocumentLayout {
    let mut out = layout.clone();
    if p <= 0.0 || !(rng.random::<f64>() < p) {
        return out;
    }
    for edge in [Edge::Left, Edge::Right, Edge::Top, Edge::Bottom] {
        align_pass(&mut out.boxes, edge, epsilon);
    }
    out
}

fn align_pass(boxes: &mut [LabeledBox], edge: Edge, epsilon: f64) {
    let key = |r: &Rect| match edge {
        Edge::Left => r.x,
        Edge::Right => r.x_max(),
        Edge::Top => r.y,
        Edge::Bottom => r.y_max(),
    };
    let horizontal = matches!(edge, Edge::Left | Edge::Right);
    let center = |r: &Rect| if horizontal { r.x_center() } else { r.y_center() };

    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| {
        key(&boxes[a].rect)
            .partial_cmp(&key(&boxes[b].rect))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&i| key(&boxes[i].rect)).collect();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[end] - values[start] <= epsilon {
            end += 1;
        }
        if end - start >= 2 {
            let group = &order[start..end];
            let mean = group.iter().map(|&i| center(&boxes[i].rect)).sum::<f64>()
                / group.len() as f64;
            for &i in group {
                let shift = mean - center(&boxes[i].rect);
                boxes[i].rect = if horizontal {
                    boxes[i].rect.translated(shift, 0.0)
                } else {
                    boxes[i].rect.translated(0.0, shift)
                };
            }
        }
        start = end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn doc(boxes: Vec<LabeledBox>) -> DocumentLayout {
        DocumentLayout::unit("t", boxes)
    }

    #[test]
    fn overlap_removal_examples() {
        let big = LabeledBox::new(0, 0.0, 0.0, 0.5, 0.5);
        let small = LabeledBox::new(0, 0.1, 0.1, 0.1, 0.1);
        assert_eq!(remove_overlaps(&doc(vec![small, big]), 0.1).boxes, vec![big]);
        let other = LabeledBox::new(1, 0.1, 0.1, 0.1, 0.1);
        assert_eq!(remove_overlaps(&doc(vec![big, other]), 0.1).boxes.len(), 2);
        // Exactly 10% of the small box is covered: kept.
        let edge = LabeledBox::new(0, 0.49, 0.0, 0.1, 0.1);
        let out = remove_overlaps(&doc(vec![big, edge]), 0.1 + 1e-12);
        assert_eq!(out.boxes.len(), 2);
        let exact = LabeledBox::new(0, 0.0, 0.0, 1.0, 0.5);
        let half = LabeledBox::new(0, 0.0, 0.25, 0.5, 0.5);
        assert_eq!(remove_overlaps(&doc(vec![exact, half]), 0.5).boxes.len(), 2);
    }

    #[test]
    fn tiny_removal_examples() {
        let thin = LabeledBox::new(0, 0.0, 0.0, 0.005, 0.3);
        let ok = LabeledBox::new(0, 0.0, 0.0, 0.02, 0.02);
        assert_eq!(remove_tiny(&doc(vec![thin, ok]), 0.01).boxes, vec![ok]);
        assert!(remove_tiny(&doc(vec![thin]), 0.01).boxes.is_empty());
    }

    #[test]
    fn realign_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = doc(vec![
            LabeledBox::new(0, 0.1, 0.1, 0.2, 0.1),
            LabeledBox::new(0, 0.1, 0.4, 0.4, 0.1),
        ]);
        assert_eq!(realign(&d, 0.0, 0.01, &mut rng), d);

        let same = doc(vec![
            LabeledBox::new(0, 0.1, 0.1, 0.2, 0.1),
            LabeledBox::new(0, 0.1, 0.4, 0.2, 0.1),
        ]);
        assert_eq!(realign(&same, 1.0, 0.01, &mut rng), same);

        let out = realign(&d, 1.0, 0.01, &mut rng);
        assert!((out.boxes[0].rect.x - 0.15).abs() < 1e-12);
        assert!((out.boxes[1].rect.x - 0.05).abs() < 1e-12);
        assert_eq!(out.boxes[0].rect.y, 0.1);
    }

    #[test]
    fn sample_is_deterministic_and_in_page() {
        let p = ModelParams::init(
            crate::model::ModelConfig {
                code_size: 8,
                hidden: 8,
                num_labels: 3,
            },
            &mut ChaCha8Rng::seed_from_u64(1),
        );
        let a = sample_layout(&p, 20, &mut sample_rng(5, 2));
        let b = sample_layout(&p, 20, &mut sample_rng(5, 2));
        assert_eq!(a, b);
        assert!(a.layout.len() <= 20);
        for bx in &a.layout.boxes {
            assert!(Rect::new(0.0, 0.0, 1.0, 1.0).contains(&bx.rect, 0.0));
        }
        let cfg = GenerationConfig {
            count: 3,
            seed: 4,
            ..GenerationConfig::default()
        };
        assert_eq!(generate(&p, &cfg).unwrap(), generate(&p, &cfg).unwrap());
    }
}
