//! Triple corpus: parsing, string records, feature sets, inverted index.
//!
//! Input is UTF-8 TSV, one `relation TAB arg1 TAB arg2` assertion per line,
//! fields trimmed, `#` starting a comment line. Assertions are deduplicated
//! on the full triple. Every distinct string gets one record per role it
//! plays: an object record counts the distinct assertions containing it in
//! either argument slot and carries `(relation, co-argument)` property keys;
//! a relation record counts the assertions it heads and carries
//! `(arg1, arg2)` instance keys. The inverted index maps each feature key to
//! the distinct strings carrying it, which later drives candidate
//! generation.
//!
//! Strings failing the minimum extraction count, or the proper-noun /
//! plain-relation heuristics when enabled, are kept as feature material but
//! marked non-clusterable.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use thiserror::Error;

use crate::{ArgSlot, StringKind};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("corpus contains no assertions")]
    Empty,
    #[error("unknown {kind} string: {text:?}")]
    UnknownString { kind: StringKind, text: String },
    #[error("kind mismatch: {0} vs {1}")]
    KindMismatch(StringKind, StringKind),
}

/// Identifier of a string record. A string appearing as both a relation and
/// an argument has two ids, one per kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StringId(pub u32);

/// Interned feature id, stable across clustering rounds.
pub type FeatureId = u32;

/// A property of an object (relation paired with a co-argument) or an
/// instance of a relation (its argument pair), resolved to strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKey {
    ObjectProperty {
        relation: String,
        coargument: String,
        slot: Option<ArgSlot>,
    },
    RelationInstance {
        arg1: String,
        arg2: String,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Minimum extraction count for a string to be clusterable.
    pub min_count: u32,
    /// Restrict clustering to proper-noun objects and plain lowercase
    /// relations.
    pub proper_nouns_only: bool,
    /// Record the argument slot in object property keys.
    pub slot_tagged: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            min_count: 25,
            proper_nouns_only: true,
            slot_tagged: false,
        }
    }
}

// Tag values for packed feature keys. Object properties are slotless by
// default; slot-tagged keys are distinct features.
const TAG_OBJ: u8 = 0;
const TAG_OBJ_ARG1: u8 = 1;
const TAG_OBJ_ARG2: u8 = 2;
const TAG_REL: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct PackedFeature {
    tag: u8,
    a: u32,
    b: u32,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RawAssertion {
    pub rel: u32,
    pub arg1: u32,
    pub arg2: u32,
}

#[derive(Debug)]
pub struct StringRecord {
    text: u32,
    kind: StringKind,
    /// Distinct assertions containing the string in its role.
    n: u32,
    /// Distinct assertions with the string at argument 1 / argument 2.
    arg1_n: u32,
    arg2_n: u32,
    clusterable: bool,
    feat_start: u32,
    feat_len: u32,
}

#[derive(Debug, Default)]
struct StringPool {
    map: HashMap<Box<str>, u32>,
    items: Vec<Box<str>>,
}

impl StringPool {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.map.get(s) {
            return id;
        }
        let id = self.items.len() as u32;
        self.items.push(s.into());
        self.map.insert(s.into(), id);
        id
    }

    fn get(&self, id: u32) -> &str {
        &self.items[id as usize]
    }
}

pub struct Corpus {
    pool: StringPool,
    assertions: Vec<RawAssertion>,
    records: Vec<StringRecord>,
    by_text: HashMap<(u32, StringKind), StringId>,
    object_ids: Vec<StringId>,
    relation_ids: Vec<StringId>,
    feat_keys: Vec<PackedFeature>,
    feat_arena: Vec<FeatureId>,
    posting_offsets: Vec<u32>,
    posting_arena: Vec<StringId>,
    feat_degree: Vec<u32>,
    options: LoadOptions,
}

/// Proper-noun heuristic: only alphabetic characters, whitespace, and
/// periods, with the first character of every word capitalized.
pub fn is_proper_noun(s: &str) -> bool {
    if !s
        .chars()
        .all(|c| c.is_alphabetic() || c.is_whitespace() || c == '.')
    {
        return false;
    }
    let mut words = s.split_whitespace().peekable();
    if words.peek().is_none() {
        return false;
    }
    words.all(|w| w.chars().next().is_some_and(|c| c.is_uppercase()))
}

/// Relations are comparable only when they contain no punctuation and no
/// capital letters.
pub fn is_plain_relation(s: &str) -> bool {
    !s.chars()
        .any(|c| c.is_uppercase() || (!c.is_alphanumeric() && !c.is_whitespace()))
}

impl Corpus {
    pub fn load(path: &Path, options: LoadOptions) -> Result<Corpus, CorpusError> {
        let file = File::open(path)?;
        Corpus::from_reader(BufReader::new(file), options)
    }

    pub fn from_reader<R: Read>(reader: R, options: LoadOptions) -> Result<Corpus, CorpusError> {
        let mut pool = StringPool::default();
        let mut seen: HashSet<(u32, u32, u32)> = HashSet::new();
        let mut assertions: Vec<RawAssertion> = Vec::new();

        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (rel, a1, a2) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
                (Some(r), Some(a), Some(b), None) => (r.trim(), a.trim(), b.trim()),
                _ => {
                    return Err(CorpusError::Parse {
                        line: line_no,
                        reason: "expected 3 tab-separated fields".into(),
                    })
                }
            };
            if rel.is_empty() || a1.is_empty() || a2.is_empty() {
                return Err(CorpusError::Parse {
                    line: line_no,
                    reason: "empty field after trimming".into(),
                });
            }
            let triple = (pool.intern(rel), pool.intern(a1), pool.intern(a2));
            if seen.insert(triple) {
                assertions.push(RawAssertion {
                    rel: triple.0,
                    arg1: triple.1,
                    arg2: triple.2,
                });
            }
        }
        if assertions.is_empty() {
            return Err(CorpusError::Empty);
        }
        Ok(Corpus::build(pool, assertions, options))
    }

    fn build(pool: StringPool, assertions: Vec<RawAssertion>, options: LoadOptions) -> Corpus {
        let mut records: Vec<StringRecord> = Vec::new();
        let mut by_text: HashMap<(u32, StringKind), StringId> = HashMap::new();
        let mut record_of = |records: &mut Vec<StringRecord>, sym: u32, kind: StringKind| {
            *by_text.entry((sym, kind)).or_insert_with(|| {
                records.push(StringRecord {
                    text: sym,
                    kind,
                    n: 0,
                    arg1_n: 0,
                    arg2_n: 0,
                    clusterable: false,
                    feat_start: 0,
                    feat_len: 0,
                });
                StringId(records.len() as u32 - 1)
            })
        };

        let mut feat_map: HashMap<PackedFeature, FeatureId> = HashMap::new();
        let mut feat_keys: Vec<PackedFeature> = Vec::new();
        let mut feat_degree: Vec<u32> = Vec::new();
        let mut emissions: Vec<(StringId, FeatureId)> = Vec::with_capacity(assertions.len() * 3);

        let (obj1_tag, obj2_tag) = if options.slot_tagged {
            (TAG_OBJ_ARG1, TAG_OBJ_ARG2)
        } else {
            (TAG_OBJ, TAG_OBJ)
        };

        for a in &assertions {
            let rid = record_of(&mut records, a.rel, StringKind::Relation);
            records[rid.0 as usize].n += 1;
            let oid1 = record_of(&mut records, a.arg1, StringKind::Object);
            let oid2 = record_of(&mut records, a.arg2, StringKind::Object);
            records[oid1.0 as usize].n += 1;
            if oid2 != oid1 {
                records[oid2.0 as usize].n += 1;
            }
            records[oid1.0 as usize].arg1_n += 1;
            records[oid2.0 as usize].arg2_n += 1;

            let mut intern_feat = |key: PackedFeature| -> FeatureId {
                *feat_map.entry(key).or_insert_with(|| {
                    feat_keys.push(key);
                    feat_degree.push(0);
                    feat_keys.len() as u32 - 1
                })
            };
            let mut per_assertion: [(StringId, FeatureId); 3] = [
                (
                    rid,
                    intern_feat(PackedFeature {
                        tag: TAG_REL,
                        a: a.arg1,
                        b: a.arg2,
                    }),
                ),
                (
                    oid1,
                    intern_feat(PackedFeature {
                        tag: obj1_tag,
                        a: a.rel,
                        b: a.arg2,
                    }),
                ),
                (
                    oid2,
                    intern_feat(PackedFeature {
                        tag: obj2_tag,
                        a: a.rel,
                        b: a.arg1,
                    }),
                ),
            ];
            per_assertion.sort_unstable();
            for (i, &(sid, fid)) in per_assertion.iter().enumerate() {
                if i > 0 && per_assertion[i - 1] == (sid, fid) {
                    continue; // an (r, x, x) assertion yields one key, not two
                }
                feat_degree[fid as usize] += 1;
                emissions.push((sid, fid));
            }
        }

        // Per-record sorted feature sets.
        emissions.sort_unstable();
        emissions.dedup();
        let mut feat_arena: Vec<FeatureId> = Vec::with_capacity(emissions.len());
        for &(sid, fid) in &emissions {
            let rec = &mut records[sid.0 as usize];
            if rec.feat_len == 0 {
                rec.feat_start = feat_arena.len() as u32;
            }
            rec.feat_len += 1;
            feat_arena.push(fid);
        }

        // Inverted index: feature -> distinct string ids.
        let mut inverted: Vec<(FeatureId, StringId)> =
            emissions.iter().map(|&(sid, fid)| (fid, sid)).collect();
        drop(emissions);
        inverted.sort_unstable();
        inverted.dedup();
        let mut posting_offsets = vec![0u32; feat_keys.len() + 1];
        for &(fid, _) in &inverted {
            posting_offsets[fid as usize + 1] += 1;
        }
        for i in 1..posting_offsets.len() {
            posting_offsets[i] += posting_offsets[i - 1];
        }
        let posting_arena: Vec<StringId> = inverted.into_iter().map(|(_, sid)| sid).collect();

        for rec in &mut records {
            rec.clusterable = rec.n >= options.min_count
                && (!options.proper_nouns_only
                    || match rec.kind {
                        StringKind::Object => is_proper_noun(pool.get(rec.text)),
                        StringKind::Relation => is_plain_relation(pool.get(rec.text)),
                    });
        }

        let mut object_ids: Vec<StringId> = Vec::new();
        let mut relation_ids: Vec<StringId> = Vec::new();
        for (i, rec) in records.iter().enumerate() {
            match rec.kind {
                StringKind::Object => object_ids.push(StringId(i as u32)),
                StringKind::Relation => relation_ids.push(StringId(i as u32)),
            }
        }
        object_ids.sort_by(|a, b| {
            pool.get(records[a.0 as usize].text)
                .cmp(pool.get(records[b.0 as usize].text))
        });
        relation_ids.sort_by(|a, b| {
            pool.get(records[a.0 as usize].text)
                .cmp(pool.get(records[b.0 as usize].text))
        });

        Corpus {
            pool,
            assertions,
            records,
            by_text,
            object_ids,
            relation_ids,
            feat_keys,
            feat_arena,
            posting_offsets,
            posting_arena,
            feat_degree,
            options,
        }
    }

    pub fn options(&self) -> &LoadOptions {
        &self.options
    }

    pub fn assertion_count(&self) -> usize {
        self.assertions.len()
    }

    pub fn assertions(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.assertions.iter().map(|a| {
            (
                self.pool.get(a.rel),
                self.pool.get(a.arg1),
                self.pool.get(a.arg2),
            )
        })
    }

    pub(crate) fn raw_assertions(&self) -> &[RawAssertion] {
        &self.assertions
    }

    pub(crate) fn symbol_of(&self, text: &str) -> Option<u32> {
        self.pool.map.get(text).copied()
    }

    pub(crate) fn resolve_symbol(&self, sym: u32) -> &str {
        self.pool.get(sym)
    }

    pub fn string_id(&self, text: &str, kind: StringKind) -> Option<StringId> {
        let sym = self.pool.map.get(text)?;
        self.by_text.get(&(*sym, kind)).copied()
    }

    pub fn require_id(&self, text: &str, kind: StringKind) -> Result<StringId, CorpusError> {
        self.string_id(text, kind)
            .ok_or_else(|| CorpusError::UnknownString {
                kind,
                text: text.to_string(),
            })
    }

    pub fn record_count(&self) -> usize {
        self.records.len()
    }

    pub fn text(&self, id: StringId) -> &str {
        self.pool.get(self.records[id.0 as usize].text)
    }

    pub fn kind(&self, id: StringId) -> StringKind {
        self.records[id.0 as usize].kind
    }

    /// Distinct assertions containing the string in its role.
    pub fn extraction_count(&self, id: StringId) -> u64 {
        self.records[id.0 as usize].n as u64
    }

    /// Distinct assertions with the string in the given argument slot.
    pub fn slot_count(&self, id: StringId, slot: ArgSlot) -> u64 {
        let rec = &self.records[id.0 as usize];
        match slot {
            ArgSlot::Arg1 => rec.arg1_n as u64,
            ArgSlot::Arg2 => rec.arg2_n as u64,
        }
    }

    pub fn is_clusterable(&self, id: StringId) -> bool {
        self.records[id.0 as usize].clusterable
    }

    /// Ids of all strings of one kind, ordered by text.
    pub fn ids_of_kind(&self, kind: StringKind) -> &[StringId] {
        match kind {
            StringKind::Object => &self.object_ids,
            StringKind::Relation => &self.relation_ids,
        }
    }

    /// Sorted, deduplicated feature ids of a record.
    pub fn feature_ids(&self, id: StringId) -> &[FeatureId] {
        let rec = &self.records[id.0 as usize];
        &self.feat_arena[rec.feat_start as usize..(rec.feat_start + rec.feat_len) as usize]
    }

    pub fn feature_count(&self) -> usize {
        self.feat_keys.len()
    }

    /// Number of assertions that contributed the feature.
    pub fn feature_degree(&self, fid: FeatureId) -> u64 {
        self.feat_degree[fid as usize] as u64
    }

    /// Distinct strings carrying the feature.
    pub fn posting(&self, fid: FeatureId) -> &[StringId] {
        let lo = self.posting_offsets[fid as usize] as usize;
        let hi = self.posting_offsets[fid as usize + 1] as usize;
        &self.posting_arena[lo..hi]
    }

    pub fn feature_key(&self, fid: FeatureId) -> FeatureKey {
        let key = self.feat_keys[fid as usize];
        match key.tag {
            TAG_REL => FeatureKey::RelationInstance {
                arg1: self.pool.get(key.a).to_string(),
                arg2: self.pool.get(key.b).to_string(),
            },
            tag => FeatureKey::ObjectProperty {
                relation: self.pool.get(key.a).to_string(),
                coargument: self.pool.get(key.b).to_string(),
                slot: match tag {
                    TAG_OBJ_ARG1 => Some(ArgSlot::Arg1),
                    TAG_OBJ_ARG2 => Some(ArgSlot::Arg2),
                    _ => None,
                },
            },
        }
    }

    /// Raw symbol parts of a feature: (part1, part2) as pool symbols.
    pub(crate) fn feature_parts(&self, fid: FeatureId) -> (u32, u32) {
        let key = self.feat_keys[fid as usize];
        (key.a, key.b)
    }

    /// The feature set of a string, resolved to keys.
    pub fn features_of(&self, id: StringId) -> Vec<FeatureKey> {
        self.feature_ids(id)
            .iter()
            .map(|&fid| self.feature_key(fid))
            .collect()
    }

    /// Number of distinct shared feature keys between two same-kind strings.
    pub fn shared_feature_count(&self, a: StringId, b: StringId) -> Result<u64, CorpusError> {
        let (ka, kb) = (self.kind(a), self.kind(b));
        if ka != kb {
            return Err(CorpusError::KindMismatch(ka, kb));
        }
        Ok(intersection_size(self.feature_ids(a), self.feature_ids(b)))
    }

    /// Shared feature ids of two same-kind strings.
    pub fn shared_features(&self, a: StringId, b: StringId) -> Result<Vec<FeatureId>, CorpusError> {
        let (ka, kb) = (self.kind(a), self.kind(b));
        if ka != kb {
            return Err(CorpusError::KindMismatch(ka, kb));
        }
        Ok(intersect_sorted(self.feature_ids(a), self.feature_ids(b)))
    }
}

/// Size of the intersection of two sorted id slices. Gallops through the
/// larger side when the sizes are lopsided.
pub(crate) fn intersection_size(a: &[u32], b: &[u32]) -> u64 {
    let (small, big) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if small.is_empty() {
        return 0;
    }
    if big.len() / small.len() >= 16 {
        let mut count = 0u64;
        let mut lo = 0usize;
        for &x in small {
            match big[lo..].binary_search(&x) {
                Ok(pos) => {
                    count += 1;
                    lo += pos + 1;
                }
                Err(pos) => lo += pos,
            }
        }
        return count;
    }
    let mut count = 0u64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < small.len() && j < big.len() {
        match small[i].cmp(&big[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

pub(crate) fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Parse a cluster file: one cluster per line, TAB-separated members,
/// `#` comments, blank lines skipped.
pub fn parse_cluster_lines<R: Read>(reader: R) -> Result<Vec<Vec<String>>, CorpusError> {
    let mut clusters = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let members: Vec<String> = line
            .split('\t')
            .map(|m| m.trim().to_string())
            .filter(|m| !m.is_empty())
            .collect();
        if members.is_empty() {
            return Err(CorpusError::Parse {
                line: idx + 1,
                reason: "cluster line with no members".into(),
            });
        }
        clusters.push(members);
    }
    Ok(clusters)
}

pub fn load_cluster_file(path: &Path) -> Result<Vec<Vec<String>>, CorpusError> {
    parse_cluster_lines(BufReader::new(File::open(path)?))
}
