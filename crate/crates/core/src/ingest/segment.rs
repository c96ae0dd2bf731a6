/// Splits a text body into sentences.
///
/// Implementations return slices of `text` in reading order; the caller trims
/// them and drops empty ones.
pub trait SentenceSegmenter: Send + Sync {
    fn split<'a>(&self, text: &'a str) -> Vec<&'a str>;
}

const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "vs.", "u.s.",
    "u.k.", "u.n.", "a.m.", "p.m.", "no.", "approx.", "cf.", "fig.", "inc.", "ltd.", "co.",
    "gov.", "sen.", "rep.", "gen.", "lt.", "col.", "mt.", "ph.d.",
];

const CLOSERS: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', ')', ']', '*', '_'];
const OPENERS: &[char] = &['"', '\'', '\u{201c}', '\u{2018}', '(', '[', '*', '_', '>'];

/// Rule-based splitter.
///
/// A sentence ends at a run of `.`, `!` or `?` (plus any closing quotes or
/// brackets) that is followed by whitespace and then an uppercase letter or an
/// opening quote. Periods ending a known abbreviation never end a sentence.
/// Every line break is a hard boundary, since forum markup puts list items and
/// quotes on their own lines.
#[derive(Debug, Clone, Default)]
pub struct RuleSegmenter;

impl RuleSegmenter {
    fn split_line<'a>(line: &'a str, out: &mut Vec<&'a str>) {
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut start = 0usize;
        let mut i = 0usize;
        while i < chars.len() {
            let (_, c) = chars[i];
            if !matches!(c, '.' | '!' | '?') {
                i += 1;
                continue;
            }
            let mark_pos = i;
            let mut j = i;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
                j += 1;
            }
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let end_byte = chars.get(j).map_or(line.len(), |(b, _)| *b);
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let followed_by_space = k > j;
            let next_opens = chars
                .get(k)
                .is_some_and(|(_, n)| n.is_uppercase() || OPENERS.contains(n));
            let is_abbreviation = chars[mark_pos].1 == '.'
                && j == mark_pos + 1
                && ends_with_abbreviation(&line[start..end_byte]);

            if followed_by_space && next_opens && !is_abbreviation {
                out.push(&line[start..end_byte]);
                start = end_byte;
            }
            i = j.max(i + 1);
        }
        if start < line.len() {
            out.push(&line[start..]);
        }
    }
}

fn ends_with_abbreviation(segment: &str) -> bool {
    let token = segment
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or_default()
        .trim_start_matches(OPENERS);
    let lowered = token.to_lowercase();
    ABBREVIATIONS.iter().any(|a| lowered == *a)
}

impl SentenceSegmenter for RuleSegmenter {
    fn split<'a>(&self, text: &'a str) -> Vec<&'a str> {
        let mut out = Vec::new();
        for line in text.lines() {
            Self::split_line(line, &mut out);
        }
        out
    }
}
