//! Tokenization shared by retrieval, segmentation and the keyword oracles.

/// Lowercased alphanumeric runs. Every non-alphanumeric codepoint separates
/// tokens; no stemming and no stopword removal.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_lowercase())
        .collect()
}

/// Byte ranges of the tokens returned by [`tokenize`].
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            spans.push((s, i));
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// True when `needle` occurs as a contiguous token subsequence of `haystack`.
pub fn contains_phrase(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("Lung opacity, present."),
            vec!["lung", "opacity", "present"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("X-ray X-RAY"), vec!["x", "ray", "x", "ray"]);
    }

    #[test]
    fn unicode_letters_are_kept() {
        assert_eq!(tokenize("Ödem—Größe 3"), vec!["ödem", "größe", "3"]);
    }

    #[test]
    fn phrase_containment() {
        let hay = tokenize("bibasilar atelectasis noted");
        assert!(contains_phrase(&hay, &tokenize("atelectasis")));
        assert!(contains_phrase(&hay, &tokenize("bibasilar atelectasis")));
        assert!(!contains_phrase(&hay, &tokenize("atelectasis bibasilar")));
        assert!(!contains_phrase(&hay, &[]));
    }
}
