//! Caption → semantic class extraction through an explicit lexicon.
//!
//! Captions are scanned left to right with greedy longest match over all
//! lexicon entries (verbs and nouns together), so a multi-word noun such as
//! `slice of pizza` wins over `pizza` and swallows any words inside it.
//! Words that match nothing are skipped.

use std::collections::HashMap;

use crate::corpus::{ClassId, ClassKind, ClassSet, SemanticClassTable};
use crate::error::{Error, Result};

/// One lexicon hit inside a caption.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match {
    /// Index of the first caption word.
    pub start: usize,
    /// Number of caption words covered.
    pub len: usize,
    pub kind: ClassKind,
    pub class: ClassId,
    /// Position of the surface form inside its class's token list.
    pub form: usize,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashMap<Vec<String>, (ClassKind, ClassId, usize)>,
    max_words: usize,
    table: SemanticClassTable,
}

impl Lexicon {
    pub fn from_table(table: &SemanticClassTable) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut max_words = 1;
        for kind in [ClassKind::Verb, ClassKind::Noun] {
            for (class, tokens) in table.classes(kind).iter().enumerate() {
                for (form, token) in tokens.iter().enumerate() {
                    let words: Vec<String> = token.split(' ').map(str::to_owned).collect();
                    max_words = max_words.max(words.len());
                    if let Some((other, _, _)) = entries.insert(words, (kind, class as ClassId, form)) {
                        return Err(Error::validation(format!(
                            "token {token:?} is listed as both {other:?} and {kind:?}"
                        )));
                    }
                }
            }
        }
        Ok(Lexicon {
            entries,
            max_words,
            table: table.clone(),
        })
    }

    pub fn table(&self) -> &SemanticClassTable {
        &self.table
    }

    /// Greedy longest-match segmentation of `tokens`.
    pub fn segment<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<Match> {
        let words: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
        let mut out = Vec::new();
        let mut i = 0;
        let mut key: Vec<String> = Vec::with_capacity(self.max_words);
        while i < words.len() {
            let longest = self.max_words.min(words.len() - i);
            let hit = (1..=longest).rev().find_map(|len| {
                key.clear();
                key.extend(words[i..i + len].iter().map(|w| (*w).to_owned()));
                self.entries.get(&key).map(|&(kind, class, form)| Match {
                    start: i,
                    len,
                    kind,
                    class,
                    form,
                })
            });
            match hit {
                Some(m) => {
                    out.push(m);
                    i += m.len;
                }
                None => i += 1,
            }
        }
        out
    }

    fn classes_of<S: AsRef<str>>(&self, tokens: &[S], kind: ClassKind) -> ClassSet {
        self.segment(tokens)
            .into_iter()
            .filter(|m| m.kind == kind)
            .map(|m| m.class)
            .collect()
    }

    /// Verb classes mentioned in the caption.
    pub fn act<S: AsRef<str>>(&self, tokens: &[S]) -> ClassSet {
        self.classes_of(tokens, ClassKind::Verb)
    }

    /// Noun classes mentioned in the caption.
    pub fn ent<S: AsRef<str>>(&self, tokens: &[S]) -> ClassSet {
        self.classes_of(tokens, ClassKind::Noun)
    }

    pub fn classes<S: AsRef<str>>(&self, tokens: &[S], kind: ClassKind) -> ClassSet {
        self.classes_of(tokens, kind)
    }
}
