//! CoNLL-U ingestion: dependency-annotated utterances, topic segments and
//! background corpora.
//!
//! Only five of the ten CoNLL-U columns are consumed: ID, FORM, UPOS (or
//! XPOS, see [`PosColumn`]), HEAD and DEPREL. Multiword-token ranges
//! (`3-4`) and empty nodes (`3.1`) are skipped. Sentence ids come from
//! `# sent_id = ...` comments when present, otherwise the 1-based ordinal
//! of the sentence in the document; speakers from `# speaker = ...`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which CoNLL-U column supplies the POS tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PosColumn {
    /// Column 4, universal POS tags.
    #[default]
    Upos,
    /// Column 5, language-specific tags (Penn-style for English).
    Xpos,
}

impl std::str::FromStr for PosColumn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "upos" => Ok(PosColumn::Upos),
            "xpos" => Ok(PosColumn::Xpos),
            other => Err(format!("unknown pos column '{other}' (expected upos|xpos)")),
        }
    }
}

/// One token of a parsed utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position within the utterance.
    pub index: usize,
    /// Word form as it appeared in the input.
    pub surface: String,
    /// POS tag from the configured column.
    pub pos: String,
    /// Governor index; 0 means the token is the sentence root.
    pub head: usize,
    /// Dependency relation to the governor.
    pub label: String,
}

impl Token {
    /// Lowercased word form, the merge key used throughout the pipeline.
    pub fn word(&self) -> String {
        self.surface.to_lowercase()
    }
}

/// A single dependency-parsed utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    /// Speaker label; empty when the input does not record one.
    pub speaker: String,
    pub tokens: Vec<Token>,
    /// 1-based position p_x within its topic segment; 0 until assigned.
    pub position: usize,
}

impl Utterance {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The token with head 0, if the utterance has exactly one.
    pub fn root(&self) -> Option<&Token> {
        let mut roots = self.tokens.iter().filter(|t| t.head == 0);
        match (roots.next(), roots.next()) {
            (Some(root), None) => Some(root),
            _ => None,
        }
    }
}

/// An ordered block of utterances discussing one topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicSegment {
    pub id: String,
    pub utterances: Vec<Utterance>,
}

impl TopicSegment {
    /// Total number of utterances N in the segment.
    pub fn size(&self) -> usize {
        self.utterances.len()
    }
}

/// A plain corpus of parsed sentences used to estimate statistics.
#[derive(Debug, Clone, Default)]
pub struct BackgroundCorpus {
    pub sentences: Vec<Utterance>,
}

impl BackgroundCorpus {
    /// Total token count F_A.
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }
}

/// Parses a CoNLL-U document into utterances.
///
/// Every sentence must form a single-rooted tree; a sentence with zero or
/// multiple roots, an out-of-range head, or a head cycle is rejected with
/// an error naming the sentence.
pub fn parse_conllu(text: &str, pos_column: PosColumn) -> Result<Vec<Utterance>> {
    let mut utterances = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut sent_id: Option<String> = None;
    let mut speaker = String::new();

    let mut flush = |tokens: &mut Vec<Token>,
                     sent_id: &mut Option<String>,
                     speaker: &mut String,
                     utterances: &mut Vec<Utterance>|
     -> Result<()> {
        if tokens.is_empty() {
            return Ok(());
        }
        let id = sent_id
            .take()
            .unwrap_or_else(|| (utterances.len() + 1).to_string());
        let utt = Utterance {
            id,
            speaker: std::mem::take(speaker),
            tokens: std::mem::take(tokens),
            position: 0,
        };
        let violations = validate_utterance(&utt);
        if !violations.is_empty() {
            return Err(Error::validation(
                format!("sentence {}", utt.id),
                violations.join("; "),
            ));
        }
        utterances.push(utt);
        Ok(())
    };

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim_end_matches(['\r']);
        if line.trim().is_empty() {
            flush(&mut tokens, &mut sent_id, &mut speaker, &mut utterances)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => sent_id = Some(value.trim().to_string()),
                    "speaker" => speaker = value.trim().to_string(),
                    _ => {}
                }
            }
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        // Skip multiword-token ranges ("3-4") and empty nodes ("3.1").
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-integer token ID '{}'", cols[0])))?;
        if index == 0 {
            return Err(Error::parse(lineno, "token ID must be >= 1"));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-integer HEAD '{}'", cols[6])))?;
        let surface = cols[1].to_string();
        if surface.is_empty() {
            return Err(Error::parse(lineno, "empty FORM column"));
        }
        let pos = match pos_column {
            PosColumn::Upos => cols[3],
            PosColumn::Xpos => cols[4],
        }
        .to_string();
        if pos.is_empty() {
            return Err(Error::parse(lineno, "empty POS column"));
        }
        tokens.push(Token {
            index,
            surface,
            pos,
            head,
            label: cols[7].to_string(),
        });
    }
    flush(&mut tokens, &mut sent_id, &mut speaker, &mut utterances)?;
    Ok(utterances)
}

/// Serializes utterances back to CoNLL-U, filling unused columns with `_`.
///
/// The POS tag is written into the column named by `pos_column`, so a
/// parse/serialize/parse round trip preserves all consumed fields.
pub fn to_conllu(utterances: &[Utterance], pos_column: PosColumn) -> String {
    let mut out = String::new();
    for utt in utterances {
        out.push_str(&format!("# sent_id = {}\n", utt.id));
        if !utt.speaker.is_empty() {
            out.push_str(&format!("# speaker = {}\n", utt.speaker));
        }
        for tok in &utt.tokens {
            let (upos, xpos) = match pos_column {
                PosColumn::Upos => (tok.pos.as_str(), "_"),
                PosColumn::Xpos => ("_", tok.pos.as_str()),
            };
            out.push_str(&format!(
                "{}\t{}\t_\t{}\t{}\t_\t{}\t{}\t_\t_\n",
                tok.index, tok.surface, upos, xpos, tok.head, tok.label
            ));
        }
        out.push('\n');
    }
    out
}

/// Checks the tree invariants of an utterance and reports every violation.
///
/// An empty vector means the utterance is a well-formed single-rooted tree:
/// token indices are 1..len in order, heads are in range and non-reflexive,
/// exactly one token has head 0, and following heads never loops.
pub fn validate_utterance(utt: &Utterance) -> Vec<String> {
    let mut violations = Vec::new();
    let len = utt.tokens.len();
    if len == 0 {
        violations.push("no tokens".to_string());
        return violations;
    }
    for (i, tok) in utt.tokens.iter().enumerate() {
        if tok.index != i + 1 {
            violations.push(format!(
                "token {} has index {} (expected {})",
                i + 1,
                tok.index,
                i + 1
            ));
        }
        if tok.surface.is_empty() {
            violations.push(format!("token {} has empty surface", tok.index));
        }
        if tok.pos.is_empty() {
            violations.push(format!("token {} has empty POS", tok.index));
        }
        if tok.head > len {
            violations.push(format!(
                "token {} head {} out of range (sentence has {} tokens)",
                tok.index, tok.head, len
            ));
        }
        if tok.head == tok.index {
            violations.push(format!("token {} is its own head", tok.index));
        }
    }
    let roots = utt.tokens.iter().filter(|t| t.head == 0).count();
    match roots {
        0 => violations.push("no root".to_string()),
        1 => {}
        n => violations.push(format!("{n} roots")),
    }
    // Cycle check: walk head chains; a chain longer than the sentence loops.
    for tok in &utt.tokens {
        let mut current = tok.head;
        let mut steps = 0;
        while current != 0 && current <= len {
            current = utt.tokens[current - 1].head;
            steps += 1;
            if steps > len {
                violations.push(format!("cycle through token {}", tok.index));
                break;
            }
        }
    }
    violations
}

/// Builds topic segments from a manifest over already-parsed utterances.
///
/// The manifest is line-oriented text: `segment_id<TAB>utterance_id`, one
/// pair per line, `#` comments and blank lines ignored. Segments appear in
/// first-mention order; utterances get positions 1..N in listing order.
pub fn load_segment_manifest(
    manifest: &str,
    utterances: &[Utterance],
) -> Result<Vec<TopicSegment>> {
    use std::collections::HashMap;

    let mut by_id: HashMap<&str, &Utterance> = HashMap::new();
    for utt in utterances {
        by_id.insert(utt.id.as_str(), utt);
    }

    let mut order: Vec<String> = Vec::new();
    let mut members: HashMap<String, Vec<Utterance>> = HashMap::new();
    for (lineno, raw) in manifest.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (seg_id, utt_id) = line.split_once('\t').ok_or_else(|| {
            Error::parse(lineno, "expected `segment_id<TAB>utterance_id`")
        })?;
        let seg_id = seg_id.trim();
        let utt_id = utt_id.trim();
        if seg_id.is_empty() || utt_id.is_empty() {
            return Err(Error::parse(lineno, "empty segment or utterance id"));
        }
        let utt = by_id
            .get(utt_id)
            .ok_or_else(|| Error::validation("manifest", format!("unknown utterance {utt_id}")))?;
        let entry = members.entry(seg_id.to_string()).or_insert_with(|| {
            order.push(seg_id.to_string());
            Vec::new()
        });
        if entry.iter().any(|u| u.id == utt_id) {
            return Err(Error::validation(
                "manifest",
                format!("utterance {utt_id} listed twice in segment {seg_id}"),
            ));
        }
        let mut utt = (*utt).clone();
        utt.position = entry.len() + 1;
        entry.push(utt);
    }

    if order.is_empty() {
        return Err(Error::validation("manifest", "no segments defined"));
    }

    let mut segments = Vec::with_capacity(order.len());
    for seg_id in order {
        let utts = members.remove(&seg_id).unwrap_or_default();
        if utts.is_empty() {
            return Err(Error::EmptySegment(seg_id));
        }
        segments.push(TopicSegment {
            id: seg_id,
            utterances: utts,
        });
    }
    Ok(segments)
}
