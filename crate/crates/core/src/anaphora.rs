//! Pronoun substitution: rewrites pronouns as copies of their antecedent
//! noun phrase from the immediately preceding utterance, so that the two
//! utterances share nodes and can be fused.
//!
//! Resolution is a recency heuristic: the rightmost noun in the previous
//! utterance whose grammatical number agrees with the pronoun wins, expanded
//! to its contiguous determiner/adjective/noun-modifier dependents. An
//! external coreference chains file can override the heuristic entirely.

use std::collections::{BTreeSet, HashMap};

use crate::conllu::{Token, TopicSegment, Utterance};
use crate::{Error, Result};

/// Grammatical number classes used for pronoun/noun agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Number {
    Singular,
    Plural,
}

/// The pronoun inventory, split by number.
#[derive(Debug, Clone)]
pub struct PronounLexicon {
    pub singular: BTreeSet<String>,
    pub plural: BTreeSet<String>,
}

impl Default for PronounLexicon {
    fn default() -> Self {
        let singular = ["it", "its", "this", "that"];
        let plural = ["they", "them", "their", "these", "those"];
        PronounLexicon {
            singular: singular.iter().map(|s| s.to_string()).collect(),
            plural: plural.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Demonstratives double as determiners, so they only count as pronoun
/// occurrences when the tagger says they are pronouns.
const DEMONSTRATIVES: [&str; 4] = ["this", "that", "these", "those"];

fn is_pronoun_pos(pos: &str) -> bool {
    matches!(pos, "PRON" | "PRP" | "PRP$" | "WP" | "WP$")
}

impl PronounLexicon {
    /// Parses a lexicon file: `singular<TAB>word` / `plural<TAB>word` lines,
    /// `#` comments allowed.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lexicon = PronounLexicon {
            singular: BTreeSet::new(),
            plural: BTreeSet::new(),
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (class, word) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(lineno + 1, "expected `class<TAB>word`"))?;
            let word = word.trim().to_lowercase();
            match class.trim() {
                "singular" => {
                    lexicon.singular.insert(word);
                }
                "plural" => {
                    lexicon.plural.insert(word);
                }
                other => {
                    return Err(Error::parse(
                        lineno + 1,
                        format!("unknown pronoun class '{other}'"),
                    ))
                }
            }
        }
        Ok(lexicon)
    }

    /// The number class of a token if it is a resolvable pronoun occurrence.
    fn classify(&self, token: &Token) -> Option<Number> {
        let word = token.word();
        if DEMONSTRATIVES.contains(&word.as_str()) && !is_pronoun_pos(&token.pos) {
            return None;
        }
        if self.singular.contains(&word) {
            Some(Number::Singular)
        } else if self.plural.contains(&word) {
            Some(Number::Plural)
        } else {
            None
        }
    }
}

fn is_noun(pos: &str) -> bool {
    matches!(pos, "NN" | "NNS" | "NNP" | "NNPS" | "NOUN" | "PROPN")
}

/// Number of a noun. Penn tags encode it directly; universal tags fall back
/// to a plural-suffix heuristic.
fn noun_number(token: &Token) -> Number {
    match token.pos.as_str() {
        "NNS" | "NNPS" => Number::Plural,
        "NN" | "NNP" => Number::Singular,
        _ => {
            let word = token.word();
            if word.len() > 3 && word.ends_with('s') {
                Number::Plural
            } else {
                Number::Singular
            }
        }
    }
}

/// Dependency labels that pull a modifier into the antecedent span.
const SPAN_LABELS: [&str; 4] = ["det", "amod", "compound", "nn"];

/// A noun-phrase span in a source utterance, 1-based inclusive indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AntecedentSpan {
    pub utterance_id: String,
    pub start: usize,
    pub end: usize,
    /// Index of the span's head token, within start..=end.
    pub head: usize,
}

/// Finds the antecedent noun phrase for a pronoun in the previous utterance.
///
/// Returns the rightmost noun whose number agrees with the pronoun class,
/// expanded to the contiguous run of its determiner/adjective/noun-modifier
/// dependents and clipped to `max_span` tokens; `None` when no agreeing noun
/// exists or the token is not a lexicon pronoun.
pub fn find_antecedent(
    pronoun: &Token,
    previous: &Utterance,
    lexicon: &PronounLexicon,
    max_span: usize,
) -> Option<AntecedentSpan> {
    let class = lexicon.classify(pronoun)?;
    let head_tok = previous
        .tokens
        .iter()
        .rev()
        .find(|t| is_noun(&t.pos) && noun_number(t) == class)?;
    let head = head_tok.index;

    let in_span: BTreeSet<usize> = previous
        .tokens
        .iter()
        .filter(|t| t.index == head || (t.head == head && SPAN_LABELS.contains(&t.label.as_str())))
        .map(|t| t.index)
        .collect();

    let mut start = head;
    while start > 1 && in_span.contains(&(start - 1)) {
        start -= 1;
    }
    let mut end = head;
    while end < previous.tokens.len() && in_span.contains(&(end + 1)) {
        end += 1;
    }
    // Clip to max_span, keeping the head inside.
    while end - start + 1 > max_span && start < head {
        start += 1;
    }
    while end - start + 1 > max_span && end > head {
        end -= 1;
    }

    Some(AntecedentSpan {
        utterance_id: previous.id.clone(),
        start,
        end,
        head,
    })
}

/// One replacement to splice into an utterance.
struct Replacement {
    /// 1-based index of the pronoun token being replaced.
    pronoun_index: usize,
    /// Copies of the span tokens in order (indices/heads still in source
    /// coordinates).
    span_tokens: Vec<Token>,
    /// Source-coordinate index of the span head.
    span_head: usize,
}

/// Rebuilds an utterance with the given replacements spliced in, renumbering
/// token indices and re-attaching arcs. The pronoun's incoming arc moves to
/// the span head; the pronoun's dependents and span tokens whose governor
/// lies outside the span re-attach to the span head.
fn splice(utterance: &Utterance, mut replacements: Vec<Replacement>) -> Utterance {
    if replacements.is_empty() {
        return utterance.clone();
    }
    replacements.sort_by_key(|r| r.pronoun_index);

    // Lay out the new token sequence: new index per kept token, and for a
    // replaced pronoun the new index of its span-head copy.
    let mut new_index_of_old: HashMap<usize, usize> = HashMap::new();
    // (replacement idx, source idx) -> new index for span copies.
    let mut span_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut next = 1;
    let mut ri = 0;
    for tok in &utterance.tokens {
        if ri < replacements.len() && replacements[ri].pronoun_index == tok.index {
            let repl = &replacements[ri];
            for span_tok in &repl.span_tokens {
                span_index.insert((ri, span_tok.index), next);
                next += 1;
            }
            new_index_of_old.insert(tok.index, span_index[&(ri, repl.span_head)]);
            ri += 1;
        } else {
            new_index_of_old.insert(tok.index, next);
            next += 1;
        }
    }
    let remap = |old_head: usize| -> usize {
        if old_head == 0 {
            0
        } else {
            *new_index_of_old.get(&old_head).unwrap_or(&0)
        }
    };

    let mut out: Vec<Token> = Vec::with_capacity(next - 1);
    ri = 0;
    for tok in &utterance.tokens {
        if ri < replacements.len() && replacements[ri].pronoun_index == tok.index {
            let repl = &replacements[ri];
            let head_new = span_index[&(ri, repl.span_head)];
            for span_tok in &repl.span_tokens {
                let mut copy = span_tok.clone();
                copy.index = span_index[&(ri, span_tok.index)];
                if span_tok.index == repl.span_head {
                    // Span head takes over the pronoun's arc.
                    copy.head = remap(tok.head);
                    copy.label = tok.label.clone();
                } else if let Some(&inner) = span_index.get(&(ri, span_tok.head)) {
                    copy.head = inner;
                } else {
                    copy.head = head_new;
                }
                out.push(copy);
            }
            ri += 1;
        } else {
            let mut copy = tok.clone();
            copy.index = new_index_of_old[&tok.index];
            copy.head = remap(tok.head);
            out.push(copy);
        }
    }

    Utterance {
        id: utterance.id.clone(),
        speaker: utterance.speaker.clone(),
        tokens: out,
        position: utterance.position,
    }
}

fn span_tokens(source: &Utterance, start: usize, end: usize) -> Vec<Token> {
    source.tokens[start - 1..end].to_vec()
}

/// Resolves pronouns across a segment with the lexicon heuristic.
///
/// Utterances 2..N are processed in order; each pronoun with an antecedent
/// in the already-resolved previous utterance is replaced by copies of the
/// span tokens. The first utterance and unresolvable pronouns are left
/// intact.
pub fn resolve_segment(
    segment: &TopicSegment,
    lexicon: &PronounLexicon,
    max_span: usize,
) -> TopicSegment {
    let mut resolved: Vec<Utterance> = Vec::with_capacity(segment.utterances.len());
    for (i, utt) in segment.utterances.iter().enumerate() {
        if i == 0 {
            resolved.push(utt.clone());
            continue;
        }
        let previous = &resolved[i - 1];
        let mut replacements = Vec::new();
        for tok in &utt.tokens {
            if lexicon.classify(tok).is_none() {
                continue;
            }
            if let Some(span) = find_antecedent(tok, previous, lexicon, max_span) {
                replacements.push(Replacement {
                    pronoun_index: tok.index,
                    span_tokens: span_tokens(previous, span.start, span.end),
                    span_head: span.head,
                });
            }
        }
        resolved.push(splice(utt, replacements));
    }
    TopicSegment {
        id: segment.id.clone(),
        utterances: resolved,
    }
}

// ---------------------------------------------------------------------------
// External coreference chains
// ---------------------------------------------------------------------------

/// Externally supplied pronoun-to-antecedent links, keyed by segment and
/// utterance. When chains are supplied they drive resolution and the
/// lexicon heuristic is skipped.
#[derive(Debug, Clone, Default)]
pub struct CorefChains {
    entries: HashMap<(String, String), Vec<ChainEntry>>,
}

#[derive(Debug, Clone)]
struct ChainEntry {
    pronoun_index: usize,
    source_utt: String,
    start: usize,
    end: usize,
}

impl CorefChains {
    /// Parses a chains file. Format per line:
    /// `segment_id<TAB>utt_id:tok_idx<TAB>utt_id:start-end`.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut chains = CorefChains::default();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(lineno, "expected 3 tab-separated fields"));
            }
            let (pron_utt, pron_idx) = cols[1]
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, "expected `utt_id:tok_idx`"))?;
            let (src_utt, range) = cols[2]
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, "expected `utt_id:start-end`"))?;
            let (start, end) = range
                .split_once('-')
                .ok_or_else(|| Error::parse(lineno, "expected `start-end` range"))?;
            let entry = ChainEntry {
                pronoun_index: pron_idx
                    .parse()
                    .map_err(|_| Error::parse(lineno, "bad token index"))?,
                source_utt: src_utt.to_string(),
                start: start
                    .parse()
                    .map_err(|_| Error::parse(lineno, "bad span start"))?,
                end: end
                    .parse()
                    .map_err(|_| Error::parse(lineno, "bad span end"))?,
            };
            if entry.start == 0 || entry.end < entry.start {
                return Err(Error::parse(lineno, "invalid span range"));
            }
            chains
                .entries
                .entry((cols[0].to_string(), pron_utt.to_string()))
                .or_default()
                .push(entry);
        }
        Ok(chains)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Span head for an externally given span: the rightmost token whose
/// governor lies outside the span.
fn external_span_head(source: &Utterance, start: usize, end: usize) -> usize {
    source.tokens[start - 1..end]
        .iter()
        .rev()
        .find(|t| t.head < start || t.head > end)
        .map(|t| t.index)
        .unwrap_or(end)
}

/// Resolves a segment from an external chains file. Spans are copied from
/// the original (pre-resolution) form of the source utterance; coordinates
/// in the file refer to original token indices.
pub fn resolve_segment_with_chains(
    segment: &TopicSegment,
    chains: &CorefChains,
) -> Result<TopicSegment> {
    let originals: HashMap<&str, &Utterance> = segment
        .utterances
        .iter()
        .map(|u| (u.id.as_str(), u))
        .collect();

    let mut resolved = Vec::with_capacity(segment.utterances.len());
    for utt in &segment.utterances {
        let key = (segment.id.clone(), utt.id.clone());
        let Some(entries) = chains.entries.get(&key) else {
            resolved.push(utt.clone());
            continue;
        };
        let mut replacements = Vec::new();
        for entry in entries {
            let source = originals.get(entry.source_utt.as_str()).ok_or_else(|| {
                Error::validation(
                    "coref chains",
                    format!("unknown source utterance {}", entry.source_utt),
                )
            })?;
            if entry.end > source.tokens.len() || entry.pronoun_index > utt.tokens.len() {
                return Err(Error::validation(
                    "coref chains",
                    format!(
                        "span or pronoun index out of range for {} -> {}",
                        utt.id, entry.source_utt
                    ),
                ));
            }
            replacements.push(Replacement {
                pronoun_index: entry.pronoun_index,
                span_tokens: span_tokens(source, entry.start, entry.end),
                span_head: external_span_head(source, entry.start, entry.end),
            });
        }
        resolved.push(splice(utt, replacements));
    }
    Ok(TopicSegment {
        id: segment.id.clone(),
        utterances: resolved,
    })
}
