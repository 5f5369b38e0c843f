//! Dataset model: semantic class tables, annotated video/caption pairs and
//! the corpus container, plus the synthetic generator and on-disk formats.

mod generate;
mod io;

pub use generate::{generate_split, generate_synthetic, GenConfig, Prototypes};
pub use io::{
    load_class_table, load_corpus, save_class_table, save_corpus, CorpusPaths, BLOB_MAGIC, FORMAT_NAME, FORMAT_VERSION,
};

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ClassId = u32;
pub type SampleId = u32;

/// A sorted, duplicate-free set of class ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<ClassId>", into = "Vec<ClassId>")]
pub struct ClassSet(Vec<ClassId>);

impl ClassSet {
    pub fn new(mut ids: Vec<ClassId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        ClassSet(ids)
    }

    pub fn as_slice(&self) -> &[ClassId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.0.iter().copied()
    }

    /// Size of the intersection, by merging the two sorted lists.
    pub fn intersection_len(&self, other: &ClassSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn intersects(&self, other: &ClassSet) -> bool {
        self.intersection_len(other) > 0
    }

    pub fn union_len(&self, other: &ClassSet) -> usize {
        self.len() + other.len() - self.intersection_len(other)
    }
}

impl From<Vec<ClassId>> for ClassSet {
    fn from(ids: Vec<ClassId>) -> Self {
        ClassSet::new(ids)
    }
}

impl From<ClassSet> for Vec<ClassId> {
    fn from(set: ClassSet) -> Self {
        set.0
    }
}

impl FromIterator<ClassId> for ClassSet {
    fn from_iter<I: IntoIterator<Item = ClassId>>(iter: I) -> Self {
        ClassSet::new(iter.into_iter().collect())
    }
}

/// Verb and noun semantic classes observed in one caption.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Annotation {
    pub verbs: ClassSet,
    pub nouns: ClassSet,
}

impl Annotation {
    pub fn new(verbs: impl Into<ClassSet>, nouns: impl Into<ClassSet>) -> Result<Self> {
        let annotation = Annotation {
            verbs: verbs.into(),
            nouns: nouns.into(),
        };
        if annotation.verbs.is_empty() {
            return Err(Error::validation("annotation has an empty verb set"));
        }
        if annotation.nouns.is_empty() {
            return Err(Error::validation("annotation has an empty noun set"));
        }
        Ok(annotation)
    }

    /// Class set of the requested kind.
    pub fn classes(&self, kind: ClassKind) -> &ClassSet {
        match kind {
            ClassKind::Verb => &self.verbs,
            ClassKind::Noun => &self.nouns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    Verb,
    Noun,
}

impl ClassKind {
    pub fn other(self) -> ClassKind {
        match self {
            ClassKind::Verb => ClassKind::Noun,
            ClassKind::Noun => ClassKind::Verb,
        }
    }
}

/// Verb and noun classes, each a dense list of surface-token groups.
///
/// Class ids are positions in the lists. Tokens may span several words
/// (`"washing up liquid"`); words inside a token are separated by one space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticClassTable {
    verbs: Vec<Vec<String>>,
    nouns: Vec<Vec<String>>,
}

impl SemanticClassTable {
    pub fn new(verbs: Vec<Vec<String>>, nouns: Vec<Vec<String>>) -> Result<Self> {
        for (kind, classes) in [("verb", &verbs), ("noun", &nouns)] {
            let mut seen = HashSet::new();
            for (id, tokens) in classes.iter().enumerate() {
                if tokens.is_empty() {
                    return Err(Error::validation(format!("{kind} class {id} has no surface tokens")));
                }
                for token in tokens {
                    let normalized = token.split_whitespace().collect::<Vec<_>>().join(" ");
                    if token.is_empty() || normalized != *token {
                        return Err(Error::validation(format!(
                            "{kind} class {id}: malformed token {token:?}"
                        )));
                    }
                    if !seen.insert(token.as_str()) {
                        return Err(Error::validation(format!(
                            "{kind} token {token:?} belongs to more than one class"
                        )));
                    }
                }
            }
        }
        Ok(SemanticClassTable { verbs, nouns })
    }

    pub fn verbs(&self) -> &[Vec<String>] {
        &self.verbs
    }

    pub fn nouns(&self) -> &[Vec<String>] {
        &self.nouns
    }

    pub fn classes(&self, kind: ClassKind) -> &[Vec<String>] {
        match kind {
            ClassKind::Verb => &self.verbs,
            ClassKind::Noun => &self.nouns,
        }
    }

    pub fn num_verbs(&self) -> usize {
        self.verbs.len()
    }

    pub fn num_nouns(&self) -> usize {
        self.nouns.len()
    }

    fn check_annotation(&self, annotation: &Annotation) -> Result<()> {
        if let Some(&v) = annotation
            .verbs
            .as_slice()
            .iter()
            .find(|&&v| v as usize >= self.verbs.len())
        {
            return Err(Error::validation(format!("unknown verb class {v}")));
        }
        if let Some(&n) = annotation
            .nouns
            .as_slice()
            .iter()
            .find(|&&n| n as usize >= self.nouns.len())
        {
            return Err(Error::validation(format!("unknown noun class {n}")));
        }
        Ok(())
    }
}

/// One video/caption pair with its frozen backbone feature.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub id: SampleId,
    pub caption_tokens: Vec<String>,
    pub video_feat: Vec<f32>,
    pub annotation: Annotation,
}

impl PairedSample {
    pub fn caption(&self) -> String {
        self.caption_tokens.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An immutable, validated collection of paired samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    samples: Vec<PairedSample>,
    class_table: SemanticClassTable,
    feature_dim: usize,
    split: Split,
}

impl Corpus {
    pub fn new(
        samples: Vec<PairedSample>,
        class_table: SemanticClassTable,
        feature_dim: usize,
        split: Split,
    ) -> Result<Self> {
        for (pos, sample) in samples.iter().enumerate() {
            if sample.id as usize != pos {
                return Err(Error::validation(format!(
                    "sample ids must be contiguous from 0: position {pos} holds id {}",
                    sample.id
                )));
            }
            if sample.caption_tokens.is_empty() {
                return Err(Error::validation(format!("sample {pos} has an empty caption")));
            }
            if sample.video_feat.len() != feature_dim {
                return Err(Error::validation(format!(
                    "sample {pos} has {} features, expected {feature_dim}",
                    sample.video_feat.len()
                )));
            }
            if sample.video_feat.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!("sample {pos} has non-finite features")));
            }
            if sample.annotation.verbs.is_empty() || sample.annotation.nouns.is_empty() {
                return Err(Error::validation(format!("sample {pos} has an empty class set")));
            }
            class_table
                .check_annotation(&sample.annotation)
                .map_err(|e| Error::validation(format!("sample {pos}: {e}")))?;
        }
        Ok(Corpus {
            samples,
            class_table,
            feature_dim,
            split,
        })
    }

    pub fn samples(&self) -> &[PairedSample] {
        &self.samples
    }

    pub fn sample(&self, id: SampleId) -> &PairedSample {
        &self.samples[id as usize]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_table(&self) -> &SemanticClassTable {
        &self.class_table
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn annotations(&self) -> Vec<Annotation> {
        self.samples.iter().map(|s| s.annotation.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn class_set_is_sorted_and_deduplicated() {
        let set = ClassSet::new(vec![3, 1, 3, 2]);
        assert_eq!(set.as_slice(), &[1, 2, 3]);
        let other = ClassSet::new(vec![2, 5]);
        assert_eq!(set.intersection_len(&other), 1);
        assert_eq!(set.union_len(&other), 4);
        assert!(!set.intersects(&ClassSet::new(vec![7])));
    }

    #[test]
    fn annotation_rejects_empty_sets() {
        assert!(Annotation::new(vec![], vec![1]).is_err());
        assert!(Annotation::new(vec![0], vec![]).is_err());
        assert!(Annotation::new(vec![0], vec![1]).is_ok());
    }

    #[test]
    fn class_table_rejects_duplicate_and_empty_classes() {
        let dup = SemanticClassTable::new(vec![toks(&["take"]), toks(&["take", "grab"])], vec![toks(&["fork"])]);
        assert!(matches!(dup, Err(Error::Validation(_))));
        let empty = SemanticClassTable::new(vec![vec![]], vec![toks(&["fork"])]);
        assert!(empty.is_err());
        let spaced = SemanticClassTable::new(vec![toks(&["take"])], vec![toks(&["slice  of pizza"])]);
        assert!(spaced.is_err());
        // The same surface token may live in both tables; the lexicon rejects that later.
        assert!(SemanticClassTable::new(vec![toks(&["wash"])], vec![toks(&["washing up liquid"])]).is_ok());
    }

    #[test]
    fn corpus_validates_ids_dims_and_classes() {
        let table = SemanticClassTable::new(vec![toks(&["take"])], vec![toks(&["fork"])]).unwrap();
        let sample = |id, feat: Vec<f32>, verbs: Vec<u32>| PairedSample {
            id,
            caption_tokens: toks(&["take", "fork"]),
            video_feat: feat,
            annotation: Annotation {
                verbs: verbs.into(),
                nouns: vec![0].into(),
            },
        };
        assert!(Corpus::new(vec![sample(0, vec![0.0; 2], vec![0])], table.clone(), 2, Split::Train).is_ok());
        assert!(Corpus::new(vec![sample(1, vec![0.0; 2], vec![0])], table.clone(), 2, Split::Train).is_err());
        assert!(Corpus::new(vec![sample(0, vec![0.0; 3], vec![0])], table.clone(), 2, Split::Train).is_err());
        assert!(Corpus::new(
            vec![sample(0, vec![f32::NAN, 0.0], vec![0])],
            table.clone(),
            2,
            Split::Train
        )
        .is_err());
        assert!(Corpus::new(vec![sample(0, vec![0.0; 2], vec![4])], table, 2, Split::Train).is_err());
    }
}
