//! Background-corpus statistics behind the edge weights.
//!
//! Three ingredients are computed here: `p(l|g)`, the probability of a
//! dependency label given its governor (word, POS); `I(d)`, the
//! informativeness of a dependent word (segment frequency times log inverse
//! corpus frequency); and the positional weight `p_x / N` of the utterance
//! an edge came from.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::conllu::{BackgroundCorpus, TopicSegment};
use crate::{Error, Result};

/// Smallest probability ever returned, so no edge is silently forbidden by
/// a zero weight.
pub const PROBABILITY_FLOOR: f64 = 1e-6;

/// A governor node identity: lowercased word form plus POS tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GovernorKey {
    pub word: String,
    pub pos: String,
}

impl GovernorKey {
    pub fn new(word: &str, pos: &str) -> Self {
        GovernorKey {
            word: word.to_lowercase(),
            pos: pos.to_string(),
        }
    }

    /// Sentinel key for per-utterance ROOT nodes. Real governor words are
    /// lowercased, so the uppercase sentinel can never collide with one and
    /// always takes the global-backoff path in [`label_probability`].
    pub fn root() -> Self {
        GovernorKey {
            word: "__ROOT__".to_string(),
            pos: "__ROOT__".to_string(),
        }
    }
}

/// Outgoing-label counts per governor plus a global label distribution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelStats {
    /// Per-governor counts of outgoing dependency labels.
    pub counts: BTreeMap<GovernorKey, BTreeMap<String, u64>>,
    /// Label counts aggregated over all arcs, including root arcs that have
    /// no lexical governor.
    pub global_label_counts: BTreeMap<String, u64>,
    /// Counts of arcs whose governor is the virtual sentence root; kept
    /// separately so the cache file can reconstruct the global counts.
    pub root_label_counts: BTreeMap<String, u64>,
    pub total_global: u64,
}

/// Counts every outgoing arc per governor over a background corpus.
pub fn count_label_stats(corpus: &BackgroundCorpus) -> Result<LabelStats> {
    if corpus.sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut stats = LabelStats::default();
    for sentence in &corpus.sentences {
        for token in &sentence.tokens {
            *stats
                .global_label_counts
                .entry(token.label.clone())
                .or_insert(0) += 1;
            stats.total_global += 1;
            if token.head == 0 {
                *stats
                    .root_label_counts
                    .entry(token.label.clone())
                    .or_insert(0) += 1;
            } else if token.head <= sentence.tokens.len() {
                let governor = &sentence.tokens[token.head - 1];
                let key = GovernorKey::new(&governor.surface, &governor.pos);
                *stats
                    .counts
                    .entry(key)
                    .or_default()
                    .entry(token.label.clone())
                    .or_insert(0) += 1;
            }
        }
    }
    Ok(stats)
}

/// Probability of label `l` emerging from governor `g`.
///
/// Observed governors use the ratio of the label's frequency to all labels
/// emerging from the node; unseen governors back off to the global label
/// distribution; the result is floored at [`PROBABILITY_FLOOR`].
pub fn label_probability(stats: &LabelStats, g: &GovernorKey, l: &str) -> f64 {
    let raw = match stats.counts.get(g) {
        Some(labels) => {
            let total: u64 = labels.values().sum();
            if total == 0 {
                0.0
            } else {
                *labels.get(l).unwrap_or(&0) as f64 / total as f64
            }
        }
        None => {
            if stats.total_global == 0 {
                0.0
            } else {
                *stats.global_label_counts.get(l).unwrap_or(&0) as f64
                    / stats.total_global as f64
            }
        }
    };
    raw.max(PROBABILITY_FLOOR)
}

/// Corpus word frequencies feeding the informativeness score.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyModel {
    /// Frequency F_w per lowercased word.
    pub word_counts: BTreeMap<String, u64>,
    /// Total corpus token count F_A.
    pub total: u64,
}

/// Counts lowercased word frequencies over a background corpus.
pub fn build_frequency_model(corpus: &BackgroundCorpus) -> Result<FrequencyModel> {
    if corpus.sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut fm = FrequencyModel::default();
    for sentence in &corpus.sentences {
        for token in &sentence.tokens {
            *fm.word_counts.entry(token.word()).or_insert(0) += 1;
            fm.total += 1;
        }
    }
    Ok(fm)
}

/// Informativeness `I = f_seg * ln(F_A / F_w)` of a word.
///
/// Unseen words back off to F_w = 1; the score is 0 when the word does not
/// occur in the segment and never negative.
pub fn informativeness(fm: &FrequencyModel, word: &str, f_seg: u64) -> f64 {
    if f_seg == 0 || fm.total == 0 {
        return 0.0;
    }
    let f_w = *fm.word_counts.get(&word.to_lowercase()).unwrap_or(&1) as f64;
    let score = f_seg as f64 * (fm.total as f64 / f_w).ln();
    score.max(0.0)
}

/// Positional weight p_x / N of an utterance within its segment.
pub fn position_weight(p_x: usize, n: usize) -> Result<f64> {
    if p_x < 1 || p_x > n {
        return Err(Error::validation(
            "position_weight",
            format!("position {p_x} out of range 1..={n}"),
        ));
    }
    Ok(p_x as f64 / n as f64)
}

/// Lowercased word frequencies within one (post-anaphora) segment.
#[derive(Debug, Clone, Default)]
pub struct SegmentFrequencies {
    counts: BTreeMap<String, u64>,
}

impl SegmentFrequencies {
    pub fn of(segment: &TopicSegment) -> Self {
        let mut counts = BTreeMap::new();
        for utt in &segment.utterances {
            for token in &utt.tokens {
                *counts.entry(token.word()).or_insert(0) += 1;
            }
        }
        SegmentFrequencies { counts }
    }

    pub fn get(&self, word: &str) -> u64 {
        *self.counts.get(word).unwrap_or(&0)
    }
}

// ---------------------------------------------------------------------------
// Cache serialization
// ---------------------------------------------------------------------------

impl LabelStats {
    /// Serializes to sorted TSV: `#root<TAB>label<TAB>count` header lines for
    /// arcs with no lexical governor, then `word<TAB>pos<TAB>label<TAB>count`
    /// rows. Byte-stable for identical stats.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (label, count) in &self.root_label_counts {
            let _ = writeln!(out, "#root\t{label}\t{count}");
        }
        for (key, labels) in &self.counts {
            for (label, count) in labels {
                let _ = writeln!(out, "{}\t{}\t{}\t{}", key.word, key.pos, label, count);
            }
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut stats = LabelStats::default();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if let Some(rest) = line.strip_prefix("#root\t") {
                let (label, count) = rest
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(lineno, "expected `#root<TAB>label<TAB>count`"))?;
                let count: u64 = count
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad count '{count}'")))?;
                stats.root_label_counts.insert(label.to_string(), count);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            if cols.len() != 4 {
                return Err(Error::parse(
                    lineno,
                    format!("expected 4 columns, found {}", cols.len()),
                ));
            }
            let count: u64 = cols[3]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad count '{}'", cols[3])))?;
            if count == 0 {
                return Err(Error::parse(lineno, "zero count"));
            }
            let key = GovernorKey {
                word: cols[0].to_string(),
                pos: cols[1].to_string(),
            };
            *stats
                .counts
                .entry(key)
                .or_default()
                .entry(cols[2].to_string())
                .or_insert(0) += count;
        }
        for (label, count) in &stats.root_label_counts {
            *stats.global_label_counts.entry(label.clone()).or_insert(0) += count;
        }
        for labels in stats.counts.values() {
            for (label, count) in labels {
                *stats.global_label_counts.entry(label.clone()).or_insert(0) += count;
            }
        }
        stats.total_global = stats.global_label_counts.values().sum();
        Ok(stats)
    }
}

impl FrequencyModel {
    /// Serializes to TSV with a `#total` header followed by sorted
    /// `word<TAB>count` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("#total\t{}\n", self.total);
        for (word, count) in &self.word_counts {
            let _ = writeln!(out, "{word}\t{count}");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut fm = FrequencyModel::default();
        let mut saw_total = false;
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(total) = line.strip_prefix("#total\t") {
                fm.total = total
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad total '{total}'")))?;
                saw_total = true;
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(lineno, "expected `word<TAB>count`"))?;
            let count: u64 = count
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad count '{count}'")))?;
            fm.word_counts.insert(word.to_string(), count);
        }
        if !saw_total {
            return Err(Error::parse(0, "missing #total header"));
        }
        Ok(fm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{Token, Utterance};

    fn tok(index: usize, surface: &str, pos: &str, head: usize, label: &str) -> Token {
        Token {
            index,
            surface: surface.to_string(),
            pos: pos.to_string(),
            head,
            label: label.to_string(),
        }
    }

    fn sentence(tokens: Vec<Token>) -> Utterance {
        Utterance {
            id: "s".to_string(),
            speaker: String::new(),
            tokens,
            position: 0,
        }
    }

    /// The corpus from the worked probability table: one sentence whose root
    /// `produced/VBN` governs 14 dependents with a fixed label multiset.
    fn produced_corpus() -> BackgroundCorpus {
        let labels = [
            "auxpass", "auxpass", "auxpass", "auxpass", "nsubjpass", "nsubjpass", "nsubjpass",
            "aux", "aux", "aux", "prep_with", "agent", "prep_in", "advmod",
        ];
        let mut tokens = vec![tok(1, "produced", "VBN", 0, "root")];
        for (i, label) in labels.iter().enumerate() {
            tokens.push(tok(i + 2, &format!("w{i}"), "XX", 1, label));
        }
        BackgroundCorpus {
            sentences: vec![sentence(tokens)],
        }
    }

    #[test]
    fn counts_single_observation() {
        let corpus = BackgroundCorpus {
            sentences: vec![sentence(vec![
                tok(1, "run", "VB", 0, "root"),
                tok(2, "he", "PRP", 1, "nsubj"),
            ])],
        };
        let stats = count_label_stats(&corpus).unwrap();
        let key = GovernorKey::new("run", "VB");
        assert_eq!(stats.counts[&key]["nsubj"], 1);
        assert_eq!(stats.root_label_counts["root"], 1);
        assert_eq!(stats.total_global, 2);
    }

    #[test]
    fn counts_constructed_produced_corpus_exactly() {
        let stats = count_label_stats(&produced_corpus()).unwrap();
        let key = GovernorKey::new("produced", "VBN");
        let labels = &stats.counts[&key];
        assert_eq!(labels["auxpass"], 4);
        assert_eq!(labels["nsubjpass"], 3);
        assert_eq!(labels["aux"], 3);
        assert_eq!(labels["prep_with"], 1);
        assert_eq!(labels["agent"], 1);
        assert_eq!(labels["prep_in"], 1);
        assert_eq!(labels["advmod"], 1);
        assert_eq!(labels.values().sum::<u64>(), 14);
    }

    #[test]
    fn zero_arc_corpus_yields_empty_counts() {
        let corpus = BackgroundCorpus {
            sentences: vec![
                sentence(vec![tok(1, "yes", "UH", 0, "root")]),
                sentence(vec![tok(1, "no", "UH", 0, "root")]),
            ],
        };
        let stats = count_label_stats(&corpus).unwrap();
        assert!(stats.counts.is_empty());
        assert_eq!(stats.root_label_counts["root"], 2);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            count_label_stats(&BackgroundCorpus::default()),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            build_frequency_model(&BackgroundCorpus::default()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn probabilities_match_published_rounding() {
        let stats = count_label_stats(&produced_corpus()).unwrap();
        let key = GovernorKey::new("produced", "VBN");
        let round3 = |p: f64| (p * 1000.0).round() / 1000.0;
        assert_eq!(round3(label_probability(&stats, &key, "auxpass")), 0.286);
        assert_eq!(round3(label_probability(&stats, &key, "nsubjpass")), 0.214);
        assert_eq!(round3(label_probability(&stats, &key, "aux")), 0.214);
        assert_eq!(round3(label_probability(&stats, &key, "prep_with")), 0.071);
        assert_eq!(round3(label_probability(&stats, &key, "agent")), 0.071);
        assert_eq!(round3(label_probability(&stats, &key, "prep_in")), 0.071);
        assert_eq!(round3(label_probability(&stats, &key, "advmod")), 0.071);
    }

    #[test]
    fn single_label_governor_has_probability_one() {
        let corpus = BackgroundCorpus {
            sentences: vec![sentence(vec![
                tok(1, "run", "VB", 0, "root"),
                tok(2, "he", "PRP", 1, "nsubj"),
            ])],
        };
        let stats = count_label_stats(&corpus).unwrap();
        let key = GovernorKey::new("run", "VB");
        assert_eq!(label_probability(&stats, &key, "nsubj"), 1.0);
    }

    #[test]
    fn unseen_governor_backs_off_to_global() {
        let stats = count_label_stats(&produced_corpus()).unwrap();
        let unseen = GovernorKey::new("zzz", "NN");
        // 4 auxpass arcs out of 15 total (14 dependents + 1 root arc).
        let expected = 4.0 / 15.0;
        assert!((label_probability(&stats, &unseen, "auxpass") - expected).abs() < 1e-12);
        // Completely unknown label floors.
        assert_eq!(
            label_probability(&stats, &unseen, "nope"),
            PROBABILITY_FLOOR
        );
    }

    #[test]
    fn root_key_uses_backoff_distribution() {
        let stats = count_label_stats(&produced_corpus()).unwrap();
        let expected = 1.0 / 15.0;
        assert!(
            (label_probability(&stats, &GovernorKey::root(), "root") - expected).abs() < 1e-12
        );
    }

    #[test]
    fn observed_probabilities_sum_to_one() {
        let stats = count_label_stats(&produced_corpus()).unwrap();
        let key = GovernorKey::new("produced", "VBN");
        let sum: f64 = stats.counts[&key]
            .keys()
            .map(|l| label_probability(&stats, &key, l))
            .sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn probability_is_scale_invariant() {
        let base = count_label_stats(&produced_corpus()).unwrap();
        let mut scaled = base.clone();
        let key = GovernorKey::new("produced", "VBN");
        for count in scaled.counts.get_mut(&key).unwrap().values_mut() {
            *count *= 7;
        }
        for label in base.counts[&key].keys() {
            let p0 = label_probability(&base, &key, label);
            let p1 = label_probability(&scaled, &key, label);
            assert!((p0 - p1).abs() < 1e-12);
        }
    }

    #[test]
    fn frequency_model_counts_and_lowercases() {
        let corpus = BackgroundCorpus {
            sentences: vec![sentence(vec![
                tok(1, "The", "DT", 2, "det"),
                tok(2, "the", "DT", 0, "root"),
            ])],
        };
        let fm = build_frequency_model(&corpus).unwrap();
        assert_eq!(fm.word_counts["the"], 2);
        assert_eq!(fm.total, 2);
    }

    #[test]
    fn frequency_model_direct_count() {
        let corpus = BackgroundCorpus {
            sentences: vec![sentence(vec![
                tok(1, "a", "DT", 3, "det"),
                tok(2, "a", "DT", 3, "det"),
                tok(3, "b", "NN", 0, "root"),
            ])],
        };
        let fm = build_frequency_model(&corpus).unwrap();
        assert_eq!(fm.word_counts["a"], 2);
        assert_eq!(fm.word_counts["b"], 1);
        assert_eq!(fm.total, 3);
    }

    #[test]
    fn informativeness_formula_cases() {
        let fm = FrequencyModel {
            word_counts: [("common".to_string(), 10u64), ("all".to_string(), 1000)]
                .into_iter()
                .collect(),
            total: 1000,
        };
        // Word saturating the corpus: ln(1) = 0.
        assert_eq!(informativeness(&fm, "all", 3), 0.0);
        // Direct evaluation: 2 * ln(1000/10).
        let expected = 2.0 * (100.0f64).ln();
        assert!((informativeness(&fm, "common", 2) - expected).abs() < 1e-12);
        assert!((informativeness(&fm, "common", 2) - 9.21034).abs() < 1e-5);
        // Unseen word backs off to F_w = 1: ln(1000).
        let expected = (1000.0f64).ln();
        assert!((informativeness(&fm, "rare", 1) - expected).abs() < 1e-12);
        assert!((informativeness(&fm, "rare", 1) - 6.90776).abs() < 1e-5);
        // Zero segment frequency.
        assert_eq!(informativeness(&fm, "common", 0), 0.0);
    }

    #[test]
    fn informativeness_monotone_in_corpus_frequency_linear_in_segment() {
        let mut fm = FrequencyModel {
            word_counts: BTreeMap::new(),
            total: 10_000,
        };
        let mut last = f64::INFINITY;
        for f_w in [1u64, 5, 50, 500, 10_000] {
            fm.word_counts.insert("w".to_string(), f_w);
            let score = informativeness(&fm, "w", 1);
            assert!(score <= last);
            last = score;
            assert!((informativeness(&fm, "w", 3) - 3.0 * score).abs() < 1e-9);
        }
    }

    #[test]
    fn position_weight_cases() {
        assert_eq!(position_weight(3, 6).unwrap(), 0.5);
        assert_eq!(position_weight(4, 4).unwrap(), 1.0);
        assert_eq!(position_weight(1, 4).unwrap(), 0.25);
        assert!(position_weight(0, 4).is_err());
        assert!(position_weight(5, 4).is_err());
    }

    #[test]
    fn position_weight_strictly_increasing() {
        let n = 9;
        let mut last = 0.0;
        for p in 1..=n {
            let w = position_weight(p, n).unwrap();
            assert!(w > last);
            last = w;
        }
    }

    #[test]
    fn label_stats_tsv_round_trip_is_byte_stable() {
        let stats = count_label_stats(&produced_corpus()).unwrap();
        let tsv = stats.to_tsv();
        let reloaded = LabelStats::from_tsv(&tsv).unwrap();
        assert_eq!(stats, reloaded);
        assert_eq!(tsv, reloaded.to_tsv());
    }

    #[test]
    fn frequency_tsv_round_trip() {
        let corpus = produced_corpus();
        let fm = build_frequency_model(&corpus).unwrap();
        let tsv = fm.to_tsv();
        assert!(tsv.starts_with("#total\t15\n"));
        let reloaded = FrequencyModel::from_tsv(&tsv).unwrap();
        assert_eq!(fm, reloaded);
    }
}
