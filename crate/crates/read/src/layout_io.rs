//! Layout JSON files.

use std::fs;
use std::path::{Path, PathBuf};

use read_core::{DocumentLayout, LabelVocabulary, LabeledBox, Rect};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutFile {
    pub source_id: String,
    pub page: PageSize,
    pub boxes: Vec<BoxRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageSize {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRecord {
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// Resolves a `--vocab` argument: `icdar`, `forms`, or a comma-separated list.
pub fn vocabulary_from_arg(arg: &str) -> Result<LabelVocabulary> {
    match arg {
        "icdar" => Ok(LabelVocabulary::icdar()),
        "forms" | "us" => Ok(LabelVocabulary::forms()),
        list => {
            let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            Ok(LabelVocabulary::new(&names)?)
        }
    }
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        at: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Converts a parsed file into a layout, checking labels and box invariants.
pub fn from_file(file: LayoutFile, vocab: &LabelVocabulary) -> read_core::Result<DocumentLayout> {
    let mut boxes = Vec::with_capacity(file.boxes.len());
    for b in &file.boxes {
        boxes.push(LabeledBox {
            label: vocab.id(&b.label)?,
            rect: Rect::new(b.x, b.y, b.w, b.h),
        });
    }
    let layout = DocumentLayout {
        source_id: file.source_id,
        page_width: file.page.width,
        page_height: file.page.height,
        boxes,
    };
    layout.validate()?;
    Ok(layout)
}

pub fn to_file(layout: &DocumentLayout, vocab: &LabelVocabulary) -> Result<LayoutFile> {
    let boxes = layout
        .boxes
        .iter()
        .map(|b| {
            let label = vocab
                .name(b.label)
                .ok_or_else(|| Error::Invalid(format!("label id {} outside vocabulary", b.label)))?;
            Ok(BoxRecord {
                label: label.to_string(),
                x: b.rect.x,
                y: b.rect.y,
                w: b.rect.w,
                h: b.rect.h,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LayoutFile {
        source_id: layout.source_id.clone(),
        page: PageSize {
            width: layout.page_width,
            height: layout.page_height,
        },
        boxes,
    })
}

pub fn parse_layout(text: &str, path: &Path, vocab: &LabelVocabulary) -> Result<DocumentLayout> {
    let file: LayoutFile = parse_json(text, path)?;
    from_file(file, vocab).map_err(|source| Error::Data {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_layout(path: impl AsRef<Path>, vocab: &LabelVocabulary) -> Result<DocumentLayout> {
    let path = path.as_ref();
    parse_layout(&read_text(path)?, path, vocab)
}

pub fn layout_to_json(layout: &DocumentLayout, vocab: &LabelVocabulary) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&to_file(layout, vocab)?)
        .map_err(|e| Error::Invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn save_layout(
    layout: &DocumentLayout,
    vocab: &LabelVocabulary,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_text(path.as_ref(), &layout_to_json(layout, vocab)?)
}

/// `*.json` files of a directory in lexicographic order.
pub fn list_json(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Every layout of a directory, in lexicographic file order.
pub fn load_corpus(
    dir: impl AsRef<Path>,
    vocab: &LabelVocabulary,
) -> Result<Vec<(PathBuf, DocumentLayout)>> {
    list_json(dir)?
        .into_iter()
        .map(|p| load_layout(&p, vocab).map(|d| (p, d)))
        .collect()
}
