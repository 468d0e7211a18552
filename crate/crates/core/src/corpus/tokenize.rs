//! Deterministic review tokenization.
//!
//! Lowercase, split on Unicode whitespace, detach punctuation as
//! separate single-character tokens. An apostrophe immediately followed
//! by a letter starts a clitic token, so "it's" becomes `[it, 's]`.

/// Tokenizes one review text.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            flush(&mut tokens, &mut current);
        } else if c.is_alphanumeric() {
            current.push(c);
        } else if c == '\'' && i + 1 < chars.len() && chars[i + 1].is_alphanumeric() {
            // clitic: flush the stem, start a token at the apostrophe
            flush(&mut tokens, &mut current);
            current.push(c);
        } else {
            flush(&mut tokens, &mut current);
            tokens.push(c.to_string());
        }
        i += 1;
    }
    flush(&mut tokens, &mut current);
    tokens
}

fn flush(tokens: &mut Vec<String>, current: &mut String) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}
