use crate::lm::{LanguageModel, TokenId};
use crate::scoring::StemMatcher;
use crate::{Error, Result};

/// Fraction of `keywords` whose stem occurs among the words of `text`.
///
/// An empty keyword list counts as fully satisfied.
pub fn success_rate(text: &str, keywords: &[String]) -> f64 {
    if keywords.is_empty() {
        return 1.0;
    }
    let found = keywords
        .iter()
        .filter(|k| StemMatcher::new(k).occurs_in(text))
        .count();
    found as f64 / keywords.len() as f64
}

/// Detokenized text after each generated token: entry `i` covers tokens `..=i`.
pub fn prefix_texts<M: LanguageModel + ?Sized>(lm: &M, tokens: &[TokenId]) -> Result<Vec<String>> {
    (1..=tokens.len())
        .map(|n| lm.detokenize(&tokens[..n]))
        .collect()
}

/// Tokens generated until every keyword has occurred, or `max_tokens` if
/// some keyword never does.
pub fn success_length(prefix_texts: &[String], keywords: &[String], max_tokens: usize) -> usize {
    let mut needed = 0;
    for k in keywords {
        let m = StemMatcher::new(k);
        match prefix_texts.iter().position(|t| m.occurs_in(t)) {
            Some(i) => needed = needed.max(i + 1),
            None => return max_tokens,
        }
    }
    needed
}

/// Perplexity of `text` under `evaluator`, conditioned on `context`.
pub fn eval_perplexity<M: LanguageModel + ?Sized>(
    evaluator: &M,
    context: &str,
    text: &str,
) -> Result<f64> {
    let prefix = evaluator.tokenize(context)?;
    let target = evaluator.tokenize(text)?;
    if target.is_empty() {
        return Err(Error::invalid("cannot score an empty text"));
    }
    Ok(evaluator.sequence_nll(&prefix, &target)?.exp())
}
