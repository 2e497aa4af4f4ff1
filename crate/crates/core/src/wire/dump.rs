//! Plain-text transcript dumps: one `"{time_ms} {hex}"` line per message.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DumpError {
    #[error("line {0}: expected `<time> <hex>`")]
    Shape(usize),
    #[error("line {0}: bad timestamp")]
    Time(usize),
    #[error("line {0}: bad hex")]
    Hex(usize),
}

pub fn format_line(time_ms: u64, bytes: &[u8]) -> String {
    format!("{time_ms} {}", hex::encode(bytes))
}

pub fn format_dump<'a>(entries: impl IntoIterator<Item = (u64, &'a [u8])>) -> String {
    let mut out = String::new();
    for (t, b) in entries {
        out.push_str(&format_line(t, b));
        out.push('\n');
    }
    out
}

/// Blank lines are skipped.
pub fn parse_dump(text: &str) -> Result<Vec<(u64, Vec<u8>)>, DumpError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let n = i + 1;
            let line = line.trim_start();
            let (t, h) = line.split_once(' ').ok_or(DumpError::Shape(n))?;
            let t = t.parse().map_err(|_| DumpError::Time(n))?;
            let b = hex::decode(h.trim()).map_err(|_| DumpError::Hex(n))?;
            Ok((t, b))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_roundtrip() {
        let entries: Vec<(u64, Vec<u8>)> = vec![(0, vec![1, 2, 0xff]), (10, vec![]), (25, vec![0xab])];
        let text = format_dump(entries.iter().map(|(t, b)| (*t, b.as_slice())));
        assert!(text.starts_with("0 0102ff\n"));
        assert_eq!(parse_dump(&text).unwrap(), entries);
    }

    #[test]
    fn dump_errors() {
        assert_eq!(parse_dump("nope"), Err(DumpError::Shape(1)));
        assert_eq!(parse_dump("x 00"), Err(DumpError::Time(1)));
        assert_eq!(parse_dump("\n1 0g"), Err(DumpError::Hex(2)));
    }
}
