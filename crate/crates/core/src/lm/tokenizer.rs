//! Word-level tokenization for the in-process n-gram model.
//!
//! A token is either a maximal run of alphanumeric characters (an apostrophe
//! between two alphanumerics stays inside the word, so `people's` is one token)
//! or a single non-space, non-word character. The reserved surfaces `<unk>`
//! and `<s>` are recognised literally.
//!
//! Detokenization joins tokens with single spaces, except that no space is
//! put before closing punctuation or after opening brackets. Whitespace is
//! therefore normalised: `tokenize(detokenize(ids)) == ids` holds, while
//! `detokenize(tokenize(text))` reproduces `text` only up to spacing.

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";

#[derive(Debug, Clone, Copy, Default)]
pub struct WordTokenizer;

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_closing(s: &str) -> bool {
    matches!(
        s,
        "." | "," | ";" | ":" | "!" | "?" | ")" | "]" | "}" | "\u{2019}" | "\u{201d}"
    )
}

fn is_opening(s: &str) -> bool {
    matches!(s, "(" | "[" | "{" | "\u{2018}" | "\u{201c}")
}

impl WordTokenizer {
    /// Splits `text` into token surfaces.
    pub fn split<'a>(&self, text: &'a str) -> Vec<&'a str> {
        let mut out = Vec::new();
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (start, c) = chars[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '<' {
                let rest = &text[start..];
                if let Some(special) = [UNK, BOS].into_iter().find(|s| rest.starts_with(s)) {
                    out.push(&rest[..special.len()]);
                    i += special.chars().count();
                    continue;
                }
            }
            if c.is_alphanumeric() {
                let mut j = i + 1;
                while j < chars.len() {
                    let cj = chars[j].1;
                    if cj.is_alphanumeric() {
                        j += 1;
                    } else if is_apostrophe(cj)
                        && j + 1 < chars.len()
                        && chars[j + 1].1.is_alphanumeric()
                    {
                        j += 2;
                    } else {
                        break;
                    }
                }
                let end = chars.get(j).map_or(text.len(), |&(e, _)| e);
                out.push(&text[start..end]);
                i = j;
            } else {
                let end = chars.get(i + 1).map_or(text.len(), |&(e, _)| e);
                out.push(&text[start..end]);
                i += 1;
            }
        }
        out
    }

    /// Joins surfaces back into text.
    pub fn join<'a>(&self, surfaces: impl IntoIterator<Item = &'a str>) -> String {
        let mut out = String::new();
        let mut prev: Option<&str> = None;
        for s in surfaces {
            if let Some(p) = prev {
                if !is_closing(s) && !is_opening(p) {
                    out.push(' ');
                }
            }
            out.push_str(s);
            prev = Some(s);
        }
        out
    }
}
