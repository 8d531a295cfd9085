use std::ops::Range;

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Byte spans of the sentences in `text`.
///
/// A sentence ends after a run of `.`, `!` or `?` that is followed either by
/// the end of the text, or by whitespace and then an uppercase letter or the
/// end of the text. Whitespace between sentences belongs to no span.
pub fn sentence_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let byte_at = |i: usize| if i < n { chars[i].0 } else { text.len() };

    let skip_ws = |mut i: usize| {
        while i < n && chars[i].1.is_whitespace() {
            i += 1;
        }
        i
    };

    let mut start = skip_ws(0);
    let mut i = start;
    while i < n {
        if !is_terminator(chars[i].1) {
            i += 1;
            continue;
        }
        let mut end = i;
        while end < n && is_terminator(chars[end].1) {
            end += 1;
        }
        let boundary = if end == n {
            Some(end)
        } else if chars[end].1.is_whitespace() {
            let next = skip_ws(end);
            (next == n || chars[next].1.is_uppercase()).then_some(next)
        } else {
            None
        };
        match boundary {
            Some(next) => {
                spans.push(byte_at(start)..byte_at(end));
                start = next;
                i = next;
            }
            None => i = end,
        }
    }
    if start < n {
        let tail = text[byte_at(start)..].trim_end();
        if !tail.is_empty() {
            let s = byte_at(start);
            spans.push(s..s + tail.len());
        }
    }
    spans
}

/// Splits `text` into sentences; see [`sentence_spans`] for the rule.
pub fn split_sentences(text: &str) -> Vec<&str> {
    sentence_spans(text)
        .into_iter()
        .map(|r| &text[r])
        .collect()
}
