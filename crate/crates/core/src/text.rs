//! Description tokens and Jaccard distances.

use alloc::collections::BTreeSet;
use alloc::string::String;

/// Set of lowercase ASCII alphanumeric tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSet(BTreeSet<String>);

impl TokenSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSet(iter.into_iter().map(Into::into).collect())
    }
}

/// Splits on every non-alphanumeric character and lowercases. No stemming,
/// no stop words.
pub fn tokenize(description: &str) -> TokenSet {
    let mut tokens = BTreeSet::new();
    let mut current = String::new();
    for c in description.chars() {
        if c.is_ascii_alphanumeric() {
            current.push(c.to_ascii_lowercase());
        } else if !current.is_empty() {
            tokens.insert(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.insert(current);
    }
    TokenSet(tokens)
}

/// `1 - |a ∩ b| / |a ∪ b|`, with two empty sets at distance 0.
pub fn jaccard_distance(a: &TokenSet, b: &TokenSet) -> f64 {
    let inter = a.0.intersection(&b.0).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return 0.0;
    }
    1.0 - inter as f64 / union as f64
}

pub fn description_distance(a: &str, b: &str) -> f64 {
    jaccard_distance(&tokenize(a), &tokenize(b))
}

/// Minimum distance from `tokens` to any of `others`; 1.0 when there are none.
pub fn novelty_of<'a, I>(tokens: &TokenSet, others: I) -> f64
where
    I: IntoIterator<Item = &'a TokenSet>,
{
    others.into_iter().map(|o| jaccard_distance(tokens, o)).fold(1.0, f64::min)
}

pub fn novelty<S: AsRef<str>>(description: &str, recent: &[S]) -> f64 {
    let tokens = tokenize(description);
    let recent: alloc::vec::Vec<TokenSet> = recent.iter().map(|d| tokenize(d.as_ref())).collect();
    novelty_of(&tokens, &recent)
}
