//! SVG rendering of layouts.

use std::fmt::Write as _;
use std::path::Path;

use read_core::{DocumentLayout, LabelVocabulary};

use crate::error::Result;
use crate::layout_io::write_text;

pub const CANVAS_WIDTH: f64 = 800.0;

/// Page frame plus one filled `<rect>` per box, in layout order. The canvas is
/// 800 units wide and keeps the page's aspect ratio.
pub fn render_svg(layout: &DocumentLayout, vocab: &LabelVocabulary) -> String {
    let aspect = if layout.page_width > 0.0 && layout.page_height > 0.0 {
        layout.page_height / layout.page_width
    } else {
        1.0
    };
    let (cw, ch) = (CANVAS_WIDTH, CANVAS_WIDTH * aspect);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{cw:.2}" height="{ch:.2}" viewBox="0 0 {cw:.2} {ch:.2}">"#
    );
    let _ = writeln!(
        s,
        r##"  <rect class="page" x="0" y="0" width="{cw:.2}" height="{ch:.2}" fill="#ffffff" stroke="#000000" stroke-width="1"/>"##
    );
    for b in &layout.boxes {
        let r = b.rect;
        let color = vocab.color(b.label);
        let name = vocab.name(b.label).unwrap_or("unknown");
        let _ = writeln!(
            s,
            r#"  <rect class="box" data-label="{name}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.6" stroke="{color}" stroke-width="1"/>"#,
            r.x * cw,
            r.y * ch,
            r.w * cw,
            r.h * ch,
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(layout: &DocumentLayout, vocab: &LabelVocabulary, out: impl AsRef<Path>) -> Result<()> {
    write_text(out.as_ref(), &render_svg(layout, vocab))
}
