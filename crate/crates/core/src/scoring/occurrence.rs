//! Guide-word occurrence detection over a growing text.
//!
//! Words are maximal runs of alphabetic characters. A word that touches the
//! end of the text may still grow (the next subword token can extend it), so
//! the scan state remembers it as an open tail:
//!
//! - if the open tail already matches, it is credited at once and never again;
//! - if it does not match yet but later grows into a match, it is credited
//!   then, to the call in which its final characters arrived.
//!
//! A credited tail that later grows into a non-matching word keeps its credit.
//! Apart from that case, splitting a text at arbitrary points and summing the
//! counts gives the same total as scanning the whole text once.

use serde::{Deserialize, Serialize};

use super::stem;

/// Byte spans of the words of `text`.
pub fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphabetic(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

pub fn words(text: &str) -> Vec<&str> {
    word_spans(text)
        .into_iter()
        .map(|(s, e)| &text[s..e])
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceScanState {
    /// Words already settled (followed by a separator) and never rescanned.
    pub consumed: usize,
    /// Whether the open tail word (index `consumed`, if any) was credited.
    pub tail_credited: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOutcome {
    pub count: u32,
    pub state: OccurrenceScanState,
    /// Word index of the last newly credited match.
    pub last_match: Option<usize>,
}

/// Matches words against a fixed guide word by stem.
#[derive(Debug, Clone)]
pub struct StemMatcher {
    guide_stem: String,
}

impl StemMatcher {
    pub fn new(guide_word: &str) -> Self {
        Self {
            guide_stem: stem(guide_word.trim()),
        }
    }

    pub fn guide_stem(&self) -> &str {
        &self.guide_stem
    }

    pub fn matches(&self, word: &str) -> bool {
        stem(word) == self.guide_stem
    }

    /// True if any word of `text` matches.
    pub fn occurs_in(&self, text: &str) -> bool {
        words(text).into_iter().any(|w| self.matches(w))
    }

    /// Counts matches among the words of `text` not yet attributed by `state`.
    pub fn count_new(&self, text: &str, state: OccurrenceScanState) -> ScanOutcome {
        let spans = word_spans(text);
        let open_tail = spans.last().is_some_and(|&(_, e)| e == text.len());
        let mut count = 0;
        let mut last_match = None;
        let mut next = state;
        for (i, &(s, e)) in spans.iter().enumerate().skip(state.consumed) {
            let settled = !(open_tail && i + 1 == spans.len());
            let already = i == state.consumed && state.tail_credited;
            let matched = !already && self.matches(&text[s..e]);
            if matched {
                count += 1;
                last_match = Some(i);
            }
            if settled {
                next = OccurrenceScanState {
                    consumed: i + 1,
                    tail_credited: false,
                };
            } else {
                next = OccurrenceScanState {
                    consumed: i,
                    tail_credited: matched || already,
                };
            }
        }
        ScanOutcome {
            count,
            state: next,
            last_match,
        }
    }
}

/// Convenience wrapper around [`StemMatcher::count_new`].
pub fn count_new_occurrences(
    text: &str,
    state: OccurrenceScanState,
    guide_word: &str,
) -> ScanOutcome {
    StemMatcher::new(guide_word).count_new(text, state)
}
