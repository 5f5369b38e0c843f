//! On-disk corpus layout.
//!
//! A corpus directory holds `classes.json` (shared by all splits) and, per
//! split, `<split>.jsonl` (header line + one row per sample) and
//! `<split>.feats` (`CMAUGFT1`, u32 count, u32 dim, count*dim f32, all
//! little-endian, rows in id order).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use super::{Annotation, ClassId, ClassSet, Corpus, PairedSample, SemanticClassTable, Split};
use crate::error::{Error, Result};

pub const FORMAT_NAME: &str = "cmaug-corpus";
pub const FORMAT_VERSION: u32 = 1;
pub const BLOB_MAGIC: &[u8; 8] = b"CMAUGFT1";
const BLOB_HEADER_LEN: usize = 16;

/// File names of one split inside a corpus directory.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub classes: PathBuf,
    pub metadata: PathBuf,
    pub features: PathBuf,
}

impl CorpusPaths {
    pub fn new(dir: &Path, split: Split) -> Self {
        CorpusPaths {
            classes: dir.join("classes.json"),
            metadata: dir.join(format!("{split}.jsonl")),
            features: dir.join(format!("{split}.feats")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    dim: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    id: u32,
    caption: String,
    verbs: Vec<ClassId>,
    nouns: Vec<ClassId>,
}

struct OrderedClasses<'a>(&'a [Vec<String>]);

impl Serialize for OrderedClasses<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (id, tokens) in self.0.iter().enumerate() {
            map.serialize_entry(&id.to_string(), tokens)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct ClassFileOut<'a> {
    verbs: OrderedClasses<'a>,
    nouns: OrderedClasses<'a>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassFileIn {
    verbs: BTreeMap<String, Vec<String>>,
    nouns: BTreeMap<String, Vec<String>>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn format_err(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

pub fn save_class_table(table: &SemanticClassTable, path: &Path) -> Result<()> {
    let out = ClassFileOut {
        verbs: OrderedClasses(table.verbs()),
        nouns: OrderedClasses(table.nouns()),
    };
    let mut text = serde_json::to_string_pretty(&out).expect("class table serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn load_class_table(path: &Path) -> Result<SemanticClassTable> {
    let bytes = read_file(path)?;
    let parsed: ClassFileIn = serde_json::from_slice(&bytes).map_err(|e| {
        let offset = line_col_offset(&bytes, e.line(), e.column());
        format_err(path, offset, e.to_string())
    })?;
    let dense = |kind: &str, map: BTreeMap<String, Vec<String>>| -> Result<Vec<Vec<String>>> {
        let mut by_id = BTreeMap::new();
        for (key, tokens) in map {
            let id: usize = key
                .parse()
                .map_err(|_| Error::validation(format!("{kind} class id {key:?} is not an integer")))?;
            by_id.insert(id, tokens);
        }
        if by_id.keys().copied().ne(0..by_id.len()) {
            return Err(Error::validation(format!("{kind} class ids are not dense from 0")));
        }
        Ok(by_id.into_values().collect())
    };
    SemanticClassTable::new(dense("verb", parsed.verbs)?, dense("noun", parsed.nouns)?)
}

fn line_col_offset(bytes: &[u8], line: usize, column: usize) -> u64 {
    let mut offset = 0usize;
    for (i, l) in bytes.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1).min(l.len())) as u64;
        }
        offset += l.len() + 1;
    }
    bytes.len() as u64
}

/// Write `classes.json`, `<split>.jsonl` and `<split>.feats` under `dir`.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = CorpusPaths::new(dir, corpus.split());
    save_class_table(corpus.class_table(), &paths.classes)?;

    let mut meta = Vec::new();
    let header = Header {
        format: FORMAT_NAME.to_owned(),
        version: FORMAT_VERSION,
        dim: corpus.feature_dim(),
        count: corpus.len(),
    };
    serde_json::to_writer(&mut meta, &header).expect("header serializes");
    meta.push(b'\n');
    for s in corpus.samples() {
        let row = Row {
            id: s.id,
            caption: s.caption(),
            verbs: s.annotation.verbs.clone().into(),
            nouns: s.annotation.nouns.clone().into(),
        };
        serde_json::to_writer(&mut meta, &row).expect("row serializes");
        meta.push(b'\n');
    }
    write_file(&paths.metadata, &meta)?;

    let mut blob = Vec::with_capacity(BLOB_HEADER_LEN + 4 * corpus.len() * corpus.feature_dim());
    blob.extend_from_slice(BLOB_MAGIC);
    blob.write_all(&(corpus.len() as u32).to_le_bytes()).unwrap();
    blob.write_all(&(corpus.feature_dim() as u32).to_le_bytes()).unwrap();
    for s in corpus.samples() {
        for x in &s.video_feat {
            blob.extend_from_slice(&x.to_le_bytes());
        }
    }
    write_file(&paths.features, &blob)
}

/// Read one split of a corpus directory written by [`save_corpus`].
pub fn load_corpus(dir: &Path, split: Split) -> Result<Corpus> {
    let paths = CorpusPaths::new(dir, split);
    let table = load_class_table(&paths.classes)?;
    let (header, rows) = read_metadata(&paths.metadata)?;
    let features = read_features(&paths.features, header.count, header.dim)?;

    let samples = rows
        .into_iter()
        .zip(features)
        .map(|(row, video_feat)| {
            let annotation = Annotation::new(ClassSet::new(row.verbs), ClassSet::new(row.nouns))
                .map_err(|e| Error::validation(format!("sample {}: {e}", row.id)))?;
            Ok(PairedSample {
                id: row.id,
                caption_tokens: row.caption.split_whitespace().map(str::to_owned).collect(),
                video_feat,
                annotation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(samples, table, header.dim, split)
}

fn read_metadata(path: &Path) -> Result<(Header, Vec<Row>)> {
    let bytes = read_file(path)?;
    let mut offset = 0u64;
    let mut lines = bytes.split(|&b| b == b'\n');

    let first = lines.next().unwrap_or_default();
    let header: Header =
        serde_json::from_slice(first).map_err(|e| format_err(path, 0, format!("bad header line: {e}")))?;
    if header.format != FORMAT_NAME {
        return Err(format_err(path, 0, format!("unexpected format {:?}", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(format_err(path, 0, format!("unsupported version {}", header.version)));
    }
    offset += first.len() as u64 + 1;

    let mut rows = Vec::with_capacity(header.count);
    for line in lines {
        let len = line.len() as u64;
        if !line.iter().all(u8::is_ascii_whitespace) {
            let row: Row = serde_json::from_slice(line)
                .map_err(|e| format_err(path, offset, format!("bad row {}: {e}", rows.len())))?;
            rows.push(row);
        }
        offset += len + 1;
    }
    if rows.len() != header.count {
        return Err(format_err(
            path,
            bytes.len() as u64,
            format!("header declares {} rows, found {}", header.count, rows.len()),
        ));
    }
    Ok((header, rows))
}

fn read_features(path: &Path, count: usize, dim: usize) -> Result<Vec<Vec<f32>>> {
    let bytes = read_file(path)?;
    if bytes.len() < BLOB_HEADER_LEN {
        return Err(format_err(
            path,
            bytes.len() as u64,
            format!(
                "truncated header: expected {BLOB_HEADER_LEN} bytes, found {}",
                bytes.len()
            ),
        ));
    }
    if &bytes[..8] != BLOB_MAGIC {
        return Err(format_err(path, 0, "bad magic, expected CMAUGFT1"));
    }
    let blob_count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let blob_dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if blob_count != count {
        return Err(format_err(
            path,
            8,
            format!("count {blob_count} disagrees with metadata count {count}"),
        ));
    }
    if blob_dim != dim {
        return Err(format_err(
            path,
            12,
            format!("dim {blob_dim} disagrees with metadata dim {dim}"),
        ));
    }
    let expected = BLOB_HEADER_LEN + 4 * count * dim;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            bytes.len().min(expected) as u64,
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    if dim == 0 {
        return Ok(vec![Vec::new(); count]);
    }
    Ok(bytes[BLOB_HEADER_LEN..]
        .chunks_exact(4 * dim)
        .map(|row| {
            row.chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect())
}
