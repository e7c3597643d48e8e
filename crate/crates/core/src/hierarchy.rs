//! Layout hierarchies.
//!
//! A layout is turned into a left-deep binary tree by visiting its boxes in
//! reading order and merging each new box into the tree built so far. Every
//! merge records which of the seven spatial relations the new box has to the
//! accumulated bounding box, and the offset between their min corners. Those
//! offsets are enough to place every box again, which is what [`flatten`] does.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DocumentLayout, LabeledBox, Rect};

pub const NUM_RELATIONS: usize = 7;

const ENCLOSED_TOL: f64 = 1e-6;
const BAND_OVERLAP: f64 = 0.5;
const SIDE_OVERLAP: f64 = 0.5;
const SIDE_SHIFT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum SpatialRelation {
    Right = 0,
    Left = 1,
    Bottom = 2,
    BottomLeft = 3,
    BottomRight = 4,
    Enclosed = 5,
    WideBottom = 6,
}

impl SpatialRelation {
    pub const ALL: [SpatialRelation; NUM_RELATIONS] = [
        SpatialRelation::Right,
        SpatialRelation::Left,
        SpatialRelation::Bottom,
        SpatialRelation::BottomLeft,
        SpatialRelation::BottomRight,
        SpatialRelation::Enclosed,
        SpatialRelation::WideBottom,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SpatialRelation::Right => "right",
            SpatialRelation::Left => "left",
            SpatialRelation::Bottom => "bottom",
            SpatialRelation::BottomLeft => "bottom-left",
            SpatialRelation::BottomRight => "bottom-right",
            SpatialRelation::Enclosed => "enclosed",
            SpatialRelation::WideBottom => "wide-bottom",
        }
    }
}

/// Offset from the reference (left child) min corner to the candidate min corner.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RelativePosition {
    pub dx: f64,
    pub dy: f64,
}

impl RelativePosition {
    pub const fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayoutTree {
    Leaf(LabeledBox),
    Internal(Box<InternalNode>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InternalNode {
    pub relation: SpatialRelation,
    pub rel_pos: RelativePosition,
    pub left: LayoutTree,
    pub right: LayoutTree,
    pub bbox: Rect,
}

impl LayoutTree {
    pub fn bbox(&self) -> Rect {
        match self {
            LayoutTree::Leaf(b) => b.rect,
            LayoutTree::Internal(n) => n.bbox,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, LayoutTree::Leaf(_))
    }

    /// Merges `right` into `left`: `right` is translated so its min corner sits at
    /// `left`'s min corner plus `rel_pos`, and the node's box is the union.
    pub fn compose(
        relation: SpatialRelation,
        rel_pos: RelativePosition,
        left: LayoutTree,
        right: LayoutTree,
    ) -> LayoutTree {
        let lb = left.bbox();
        let rb = right.bbox();
        let right = right.translated(lb.x + rel_pos.dx - rb.x, lb.y + rel_pos.dy - rb.y);
        let bbox = lb.union(&right.bbox());
        LayoutTree::Internal(Box::new(InternalNode {
            relation,
            rel_pos,
            left,
            right,
            bbox,
        }))
    }

    /// Shifts every stored box by `(dx, dy)`.
    pub fn translated(mut self, dx: f64, dy: f64) -> LayoutTree {
        if dx != 0.0 || dy != 0.0 {
            self.translate_in_place(dx, dy);
        }
        self
    }

    fn translate_in_place(&mut self, dx: f64, dy: f64) {
        match self {
            LayoutTree::Leaf(b) => b.rect = b.rect.translated(dx, dy),
            LayoutTree::Internal(n) => {
                n.bbox = n.bbox.translated(dx, dy);
                n.left.translate_in_place(dx, dy);
                n.right.translate_in_place(dx, dy);
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            LayoutTree::Leaf(_) => 1,
            LayoutTree::Internal(n) => n.left.num_leaves() + n.right.num_leaves(),
        }
    }

    pub fn num_internal(&self) -> usize {
        match self {
            LayoutTree::Leaf(_) => 0,
            LayoutTree::Internal(n) => 1 + n.left.num_internal() + n.right.num_internal(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            LayoutTree::Leaf(_) => 0,
            LayoutTree::Internal(n) => 1 + n.left.depth().max(n.right.depth()),
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<LabeledBox> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<LabeledBox>) {
        match self {
            LayoutTree::Leaf(b) => out.push(*b),
            LayoutTree::Internal(n) => {
                n.left.collect_leaves(out);
                n.right.collect_leaves(out);
            }
        }
    }

    /// Every internal box equals the union of its children's boxes.
    pub fn bboxes_consistent(&self) -> bool {
        match self {
            LayoutTree::Leaf(_) => true,
            LayoutTree::Internal(n) => {
                n.bbox == n.left.bbox().union(&n.right.bbox())
                    && n.left.bboxes_consistent()
                    && n.right.bboxes_consistent()
            }
        }
    }

    /// Right children are always leaves.
    pub fn is_left_deep(&self) -> bool {
        match self {
            LayoutTree::Leaf(_) => true,
            LayoutTree::Internal(n) => n.right.is_leaf() && n.left.is_left_deep(),
        }
    }
}

fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Boxes grouped into horizontal bands from top to bottom, each band read left to right.
///
/// A box joins the current band when its vertical overlap with the band covers
/// at least half of the smaller of the two heights; the band then grows to
/// include it.
pub fn reading_order(layout: &DocumentLayout) -> Result<Vec<LabeledBox>> {
    if layout.boxes.is_empty() {
        return Err(Error::EmptyLayout);
    }
    let mut by_top: Vec<LabeledBox> = layout.boxes.clone();
    by_top.sort_by(|a, b| {
        cmp_f64(a.rect.y, b.rect.y)
            .then(cmp_f64(a.rect.x, b.rect.x))
            .then(a.label.cmp(&b.label))
            .then(cmp_f64(a.rect.w, b.rect.w))
            .then(cmp_f64(a.rect.h, b.rect.h))
    });

    let mut bands: Vec<Vec<LabeledBox>> = Vec::new();
    let (mut top, mut bottom) = (0.0f64, 0.0f64);
    for b in by_top {
        let r = b.rect;
        let joins = match bands.last() {
            None => false,
            Some(_) => {
                let overlap = r.y_max().min(bottom) - r.y.max(top);
                overlap >= BAND_OVERLAP * r.h.min(bottom - top)
            }
        };
        if joins {
            top = top.min(r.y);
            bottom = bottom.max(r.y_max());
            bands.last_mut().unwrap().push(b);
        } else {
            top = r.y;
            bottom = r.y_max();
            bands.push(alloc::vec![b]);
        }
    }

    let mut out = Vec::with_capacity(layout.boxes.len());
    for mut band in bands {
        band.sort_by(|a, b| {
            cmp_f64(a.rect.x, b.rect.x)
                .then(cmp_f64(a.rect.y, b.rect.y))
                .then(a.label.cmp(&b.label))
                .then(cmp_f64(a.rect.w, b.rect.w))
                .then(cmp_f64(a.rect.h, b.rect.h))
        });
        out.extend(band);
    }
    Ok(out)
}

/// Which of the seven relations `candidate` has to `reference`.
pub fn classify_relation(reference: &Rect, candidate: &Rect) -> SpatialRelation {
    let (a, b) = (reference, candidate);
    if a.contains(b, ENCLOSED_TOL) {
        return SpatialRelation::Enclosed;
    }
    let min_h = a.h.min(b.h);
    let v = if min_h > 0.0 { a.y_overlap(b) / min_h } else { 0.0 };
    if v >= SIDE_OVERLAP {
        return if b.x_center() >= a.x_center() {
            SpatialRelation::Right
        } else {
            SpatialRelation::Left
        };
    }
    if b.x <= a.x + ENCLOSED_TOL && b.x_max() >= a.x_max() - ENCLOSED_TOL {
        SpatialRelation::WideBottom
    } else if b.x_center() < a.x_center() - SIDE_SHIFT * a.w {
        SpatialRelation::BottomLeft
    } else if b.x_center() > a.x_center() + SIDE_SHIFT * a.w {
        SpatialRelation::BottomRight
    } else {
        SpatialRelation::Bottom
    }
}

pub fn relative_position(reference: &Rect, candidate: &Rect) -> RelativePosition {
    RelativePosition::new(candidate.x - reference.x, candidate.y - reference.y)
}

/// Left-deep hierarchy over the layout's boxes in reading order.
pub fn extract_hierarchy(layout: &DocumentLayout) -> Result<LayoutTree> {
    let order = reading_order(layout)?;
    let mut it = order.into_iter();
    let mut tree = LayoutTree::Leaf(it.next().ok_or(Error::EmptyLayout)?);
    for b in it {
        let reference = tree.bbox();
        let relation = classify_relation(&reference, &b.rect);
        let rel_pos = relative_position(&reference, &b.rect);
        let bbox = reference.union(&b.rect);
        tree = LayoutTree::Internal(Box::new(InternalNode {
            relation,
            rel_pos,
            left: tree,
            right: LayoutTree::Leaf(b),
            bbox,
        }));
    }
    Ok(tree)
}

/// Places every leaf from the stored relative positions alone, then shifts the
/// arrangement so the root box's min corner lands on `anchor`.
///
/// Leaf coordinates stored in the tree are ignored; only leaf sizes and labels
/// are read.
pub fn flatten(tree: &LayoutTree, anchor: (f64, f64)) -> Vec<LabeledBox> {
    let mut boxes = Vec::with_capacity(tree.num_leaves());
    let bbox = place(tree, &mut boxes);
    let (dx, dy) = (anchor.0 - bbox.x, anchor.1 - bbox.y);
    for b in &mut boxes {
        b.rect = b.rect.translated(dx, dy);
    }
    boxes
}

fn place(tree: &LayoutTree, out: &mut Vec<LabeledBox>) -> Rect {
    match tree {
        LayoutTree::Leaf(b) => {
            let rect = Rect::new(0.0, 0.0, b.rect.w, b.rect.h);
            out.push(LabeledBox { label: b.label, rect });
            rect
        }
        LayoutTree::Internal(n) => {
            let lb = place(&n.left, out);
            let start = out.len();
            let rb = place(&n.right, out);
            let dx = lb.x + n.rel_pos.dx - rb.x;
            let dy = lb.y + n.rel_pos.dy - rb.y;
            for b in &mut out[start..] {
                b.rect = b.rect.translated(dx, dy);
            }
            lb.union(&rb.translated(dx, dy))
        }
    }
}

/// Flattens back into a layout anchored at `anchor`.
pub fn flatten_layout(
    tree: &LayoutTree,
    anchor: (f64, f64),
    source_id: impl Into<alloc::string::String>,
) -> DocumentLayout {
    DocumentLayout::unit(source_id, flatten(tree, anchor))
}
