//! Candidate substitutes for augmentation.
//!
//! `phi_*` find substitute videos and `psi_*` substitute captions. Given a
//! class `c` of kind K and an anchor sample, a candidate must carry `c`; in
//! [`Criterion::Fine`] mode it must also share at least one class of the
//! other kind with the anchor. Postings are stored per single class and the
//! fine-mode intersection is checked per query.

use serde::{Deserialize, Serialize};

use crate::corpus::{Annotation, ClassId, ClassKind, Corpus, SampleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Fine,
    Coarse,
}

#[derive(Debug, Clone)]
pub struct CandidateIndex {
    mode: Criterion,
    by_verb: Vec<Vec<SampleId>>,
    by_noun: Vec<Vec<SampleId>>,
    annotations: Vec<Annotation>,
}

impl CandidateIndex {
    pub fn build(corpus: &Corpus, mode: Criterion) -> Self {
        let table = corpus.class_table();
        let mut by_verb = vec![Vec::new(); table.num_verbs()];
        let mut by_noun = vec![Vec::new(); table.num_nouns()];
        // Samples are visited in id order, so every posting list is sorted.
        for s in corpus.samples() {
            for v in s.annotation.verbs.iter() {
                by_verb[v as usize].push(s.id);
            }
            for n in s.annotation.nouns.iter() {
                by_noun[n as usize].push(s.id);
            }
        }
        CandidateIndex {
            mode,
            by_verb,
            by_noun,
            annotations: corpus.annotations(),
        }
    }

    pub fn mode(&self) -> Criterion {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn annotation(&self, id: SampleId) -> &Annotation {
        &self.annotations[id as usize]
    }

    /// Samples carrying `class` of `kind`, sorted by id.
    pub fn postings(&self, kind: ClassKind, class: ClassId) -> &[SampleId] {
        let lists = match kind {
            ClassKind::Verb => &self.by_verb,
            ClassKind::Noun => &self.by_noun,
        };
        lists.get(class as usize).map_or(&[], Vec::as_slice)
    }

    /// Samples sharing `class` of `kind` with the anchor, under the index mode.
    pub fn candidates(&self, kind: ClassKind, class: ClassId, anchor: SampleId, exclude_self: bool) -> Vec<SampleId> {
        let anchor_other = self.annotation(anchor).classes(kind.other());
        self.postings(kind, class)
            .iter()
            .copied()
            .filter(|&w| !(exclude_self && w == anchor))
            .filter(|&w| match self.mode {
                Criterion::Coarse => true,
                Criterion::Fine => self.annotations[w as usize]
                    .classes(kind.other())
                    .intersects(anchor_other),
            })
            .collect()
    }

    /// Videos with verb class `a` (and, in fine mode, a noun shared with `v`).
    pub fn phi_v(&self, a: ClassId, v: SampleId, exclude_self: bool) -> Vec<SampleId> {
        self.candidates(ClassKind::Verb, a, v, exclude_self)
    }

    /// Videos with noun class `o` (and, in fine mode, a verb shared with `v`).
    pub fn phi_n(&self, o: ClassId, v: SampleId, exclude_self: bool) -> Vec<SampleId> {
        self.candidates(ClassKind::Noun, o, v, exclude_self)
    }

    /// Captions with verb class `a`. Each sample pairs one video with one
    /// caption, so the ids coincide with [`phi_v`](Self::phi_v); the separate
    /// entry point keeps the video and caption draws independent.
    pub fn psi_v(&self, a: ClassId, q: SampleId, exclude_self: bool) -> Vec<SampleId> {
        self.candidates(ClassKind::Verb, a, q, exclude_self)
    }

    pub fn psi_n(&self, o: ClassId, q: SampleId, exclude_self: bool) -> Vec<SampleId> {
        self.candidates(ClassKind::Noun, o, q, exclude_self)
    }
}
