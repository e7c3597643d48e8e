//! Layout data model and box geometry.
//!
//! All coordinates inside a [`DocumentLayout`] are page-normalized: the page is
//! the unit square and each axis is scaled independently, so the source aspect
//! ratio is not preserved by the coordinates themselves (the page size is kept
//! alongside for rendering).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the far page edges after normalization.
pub const PAGE_EPS: f64 = 1e-9;

/// Axis-aligned box given by its min corner and extent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn x_max(&self) -> f64 {
        self.x + self.w
    }

    pub fn y_max(&self) -> f64 {
        self.y + self.h
    }

    pub fn x_center(&self) -> f64 {
        self.x + 0.5 * self.w
    }

    pub fn y_center(&self) -> f64 {
        self.y + 0.5 * self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Smallest box containing both `self` and `other`.
    pub fn union(&self, other: &Rect) -> Rect {
        let (x, w) = span_union(self.x, self.w, other.x, other.w);
        let (y, h) = span_union(self.y, self.h, other.y, other.h);
        Rect::new(x, y, w, h)
    }

    pub fn x_overlap(&self, other: &Rect) -> f64 {
        (self.x_max().min(other.x_max()) - self.x.max(other.x)).max(0.0)
    }

    pub fn y_overlap(&self, other: &Rect) -> f64 {
        (self.y_max().min(other.y_max()) - self.y.max(other.y)).max(0.0)
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        self.x_overlap(other) * self.y_overlap(other)
    }

    /// Intersection with `other`, or `None` when they do not overlap with positive area.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.x_max().min(other.x_max());
        let y1 = self.y_max().min(other.y_max());
        (x1 > x0 && y1 > y0).then(|| Rect::from_corners(x0, y0, x1, y1))
    }

    /// `other` lies inside `self`, allowing `tol` slack on every side.
    pub fn contains(&self, other: &Rect, tol: f64) -> bool {
        other.x >= self.x - tol
            && other.y >= self.y - tol
            && other.x_max() <= self.x_max() + tol
            && other.y_max() <= self.y_max() + tol
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Rect {
        Rect::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }
}

// Reuses an input interval verbatim when it covers the other one, so that
// unions with a contained box are exact.
fn span_union(a0: f64, alen: f64, b0: f64, blen: f64) -> (f64, f64) {
    let (a1, b1) = (a0 + alen, b0 + blen);
    if a0 <= b0 && a1 >= b1 {
        (a0, alen)
    } else if b0 <= a0 && b1 >= a1 {
        (b0, blen)
    } else {
        let lo = a0.min(b0);
        (lo, a1.max(b1) - lo)
    }
}

pub fn union_bbox(a: &Rect, b: &Rect) -> Rect {
    a.union(b)
}

pub fn intersection_area(a: &Rect, b: &Rect) -> f64 {
    a.intersection_area(b)
}

/// Index into a [`LabelVocabulary`].
pub type LabelId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledBox {
    pub label: LabelId,
    pub rect: Rect,
}

impl LabeledBox {
    pub const fn new(label: LabelId, x: f64, y: f64, w: f64, h: f64) -> Self {
        Self {
            label,
            rect: Rect::new(x, y, w, h),
        }
    }
}

// Fallback palette for categories without a fixed color.
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Ordered category names. The order fixes one-hot indices for a model's lifetime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVocabulary {
    names: Vec<String>,
    colors: Vec<String>,
}

impl LabelVocabulary {
    /// Builds a vocabulary; names must be unique and non-empty.
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidInput("vocabulary has no labels".to_string()));
        }
        let mut out: Vec<String> = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            if out.iter().any(|n| n == name) {
                return Err(Error::InvalidInput(format!("duplicate label {name:?}")));
            }
            out.push(name.to_string());
        }
        let colors = out
            .iter()
            .enumerate()
            .map(|(i, n)| named_color(n).unwrap_or(PALETTE[i % PALETTE.len()]).to_string())
            .collect();
        Ok(Self { names: out, colors })
    }

    /// Scanned-article categories: title, paragraph, footer, page number, figure.
    pub fn icdar() -> Self {
        Self::new(&["title", "paragraph", "footer", "page number", "figure"]).unwrap()
    }

    /// Form categories: key-value, title, paragraph.
    pub fn forms() -> Self {
        let mut v = Self::new(&["key-value", "title", "paragraph"]).unwrap();
        // The form legend uses a lighter title color and a blue paragraph.
        v.colors = ["#000000", "#90ee90", "#0000ff"].iter().map(|c| c.to_string()).collect();
        v
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

    pub fn name(&self, id: LabelId) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Result<LabelId> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    /// Fill color for a category as an `#rrggbb` string.
    pub fn color(&self, id: LabelId) -> &str {
        self.colors
            .get(id)
            .map(String::as_str)
            .unwrap_or(PALETTE[id % PALETTE.len()])
    }
}

fn named_color(name: &str) -> Option<&'static str> {
    Some(match name {
        "title" => "#006400",
        "paragraph" => "#8b4513",
        "footer" => "#000000",
        "page number" => "#ff0000",
        "figure" => "#0000ff",
        "key-value" => "#000000",
        _ => return None,
    })
}

/// A page of labeled boxes in page-normalized coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentLayout {
    pub source_id: String,
    pub page_width: f64,
    pub page_height: f64,
    pub boxes: Vec<LabeledBox>,
}

impl DocumentLayout {
    /// Layout on a unit page; boxes are assumed already normalized.
    pub fn unit(source_id: impl Into<String>, boxes: Vec<LabeledBox>) -> Self {
        Self {
            source_id: source_id.into(),
            page_width: 1.0,
            page_height: 1.0,
            boxes,
        }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Union of all boxes, `None` for an empty layout.
    pub fn bbox(&self) -> Option<Rect> {
        let mut it = self.boxes.iter().map(|b| b.rect);
        let first = it.next()?;
        Some(it.fold(first, |acc, r| acc.union(&r)))
    }

    /// Number of boxes per label id, indexed `0..num_labels`.
    pub fn label_counts(&self, num_labels: usize) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; num_labels];
        for b in &self.boxes {
            if b.label >= counts.len() {
                counts.resize(b.label + 1, 0);
            }
            counts[b.label] += 1;
        }
        counts
    }

    /// Checks every box against the normalized-box invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.page_width > 0.0 && self.page_height > 0.0) {
            return Err(Error::InvalidInput(format!(
                "page size must be positive, got {}x{}",
                self.page_width, self.page_height
            )));
        }
        for (index, b) in self.boxes.iter().enumerate() {
            check_normalized(index, &b.rect)?;
        }
        Ok(())
    }
}

fn check_normalized(index: usize, r: &Rect) -> Result<()> {
    let bad = |reason: String| Err(Error::InvalidBox { index, reason });
    if !r.is_finite() {
        return bad("non-finite coordinate".to_string());
    }
    if !(r.w > 0.0 && r.h > 0.0) {
        return bad(format!("non-positive extent {}x{}", r.w, r.h));
    }
    if r.x < 0.0 || r.y < 0.0 || r.x_max() > 1.0 + PAGE_EPS || r.y_max() > 1.0 + PAGE_EPS {
        return bad(format!(
            "box ({}, {}, {}, {}) leaves the unit page",
            r.x, r.y, r.w, r.h
        ));
    }
    Ok(())
}

/// Divides source-unit boxes by the page size.
///
/// Fails on a non-positive page dimension or on any box with non-positive
/// extent or lying outside the page, naming the offending box index.
pub fn normalize(
    source_id: impl Into<String>,
    raw: &[LabeledBox],
    page_width: f64,
    page_height: f64,
) -> Result<DocumentLayout> {
    if !(page_width > 0.0 && page_height > 0.0) || !page_width.is_finite() || !page_height.is_finite()
    {
        return Err(Error::InvalidInput(format!(
            "page size must be positive, got {page_width}x{page_height}"
        )));
    }
    let mut boxes = Vec::with_capacity(raw.len());
    for (index, b) in raw.iter().enumerate() {
        if !(b.rect.w > 0.0 && b.rect.h > 0.0) {
            return Err(Error::InvalidBox {
                index,
                reason: format!("non-positive extent {}x{}", b.rect.w, b.rect.h),
            });
        }
        let rect = Rect::new(
            b.rect.x / page_width,
            b.rect.y / page_height,
            b.rect.w / page_width,
            b.rect.h / page_height,
        );
        check_normalized(index, &rect)?;
        boxes.push(LabeledBox {
            label: b.label,
            rect,
        });
    }
    Ok(DocumentLayout {
        source_id: source_id.into(),
        page_width,
        page_height,
        boxes,
    })
}

/// Re-applies normalization to an already normalized layout. This is the identity.
pub fn renormalize(layout: &DocumentLayout) -> Result<DocumentLayout> {
    let mut out = normalize(layout.source_id.clone(), &layout.boxes, 1.0, 1.0)?;
    out.page_width = layout.page_width;
    out.page_height = layout.page_height;
    Ok(out)
}
