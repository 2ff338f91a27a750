use super::LlmError;

/// Pulls a traversal out of model output.
///
/// The first fenced block wins. Otherwise the first line containing `g.` at
/// the start of the line or after whitespace or a colon is taken from `g.`
/// to the end of that line. The result is trimmed; nothing after the
/// traversal on that line is removed, so trailing prose fails to parse later
/// instead of being silently dropped.
pub fn extract_script(text: &str) -> Result<String, LlmError> {
    if let Some(block) = first_fence(text) {
        let trimmed = block.trim();
        if !trimmed.is_empty() {
            return Ok(trimmed.to_string());
        }
    }
    for line in text.lines() {
        if let Some(pos) = script_start(line) {
            let s = line[pos..].trim();
            if !s.is_empty() {
                return Ok(s.to_string());
            }
        }
    }
    Err(LlmError::NoScriptFound)
}

fn first_fence(text: &str) -> Option<&str> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    // skip an info string such as ```groovy
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
    let info = &after[..body_start];
    let body = if info.trim().starts_with("g.") {
        after
    } else {
        &after[body_start..]
    };
    let end = body.find("```")?;
    Some(&body[..end])
}

fn script_start(line: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(i) = line[from..].find("g.") {
        let pos = from + i;
        let ok = pos == 0
            || line[..pos]
                .chars()
                .next_back()
                .is_some_and(|c| c.is_whitespace() || c == ':' || c == '`');
        if ok {
            return Some(pos);
        }
        from = pos + 2;
    }
    None
}
