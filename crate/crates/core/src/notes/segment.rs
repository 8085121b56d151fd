//! Release-note segmentation.
//!
//! A body is cut into segments as follows:
//!
//! * every top-level list item is one segment (nested items fold into it);
//! * every table row is one segment;
//! * other paragraphs are split after `.`, `!` or `?` when followed by
//!   whitespace, except inside parentheses, code spans, and URLs;
//! * headings, code blocks, HTML, and images carry no segment text.
//!
//! References that may point at artifacts are collected per segment in
//! order of appearance: link destinations, bare URLs, `#N` / `owner/repo#N`
//! shorthands, and bare hex tokens that look like abbreviated commit hashes.

use std::ops::Range;
use std::sync::LazyLock;

use pulldown_cmark::{Event, Options, Parser, Tag, TagEnd};
use regex::Regex;

use crate::model::{ByteSpan, NoteSegment, RepoRef, SegmentId};

static BARE_URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"https?://[^\s<>()\[\]"'`]+"#).unwrap());

static SHORTHAND: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:^|[^\w/&#])((?:[A-Za-z0-9_.-]+/[A-Za-z0-9_.-]+)?#[0-9]+)\b").unwrap()
});

static HEX_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:^|[^\w/#])([0-9a-fA-F]{7,40})\b").unwrap());

const ABBREVIATIONS: &[&str] = &["e.g", "i.e", "vs", "cf", "approx", "incl"];

/// A segment before it is given a positional id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSegment {
    pub text: String,
    pub raw_span: ByteSpan,
    pub embedded_links: Vec<String>,
}

/// Segments `body` and assigns ids `(repo, tag, 0..)`.
pub fn segment_note(repo: &RepoRef, tag: &str, body: &str) -> Vec<NoteSegment> {
    segment_body(body)
        .into_iter()
        .enumerate()
        .map(|(ordinal, raw)| NoteSegment {
            id: SegmentId {
                repo: repo.clone(),
                tag: tag.to_string(),
                ordinal,
            },
            text: raw.text,
            raw_span: raw.raw_span,
            embedded_links: raw.embedded_links,
            category: None,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum UnitKind {
    Item,
    Paragraph,
    Row,
}

#[derive(Debug, Clone)]
struct PieceMap {
    text: Range<usize>,
    raw: Range<usize>,
}

#[derive(Debug, Clone)]
struct LinkZone {
    text: Range<usize>,
    dest: String,
    raw: Range<usize>,
}

/// Stripped text of one block plus the bookkeeping to map it back to the body.
#[derive(Debug)]
struct Unit {
    kind: UnitKind,
    span: Range<usize>,
    text: String,
    pieces: Vec<PieceMap>,
    code: Vec<Range<usize>>,
    links: Vec<LinkZone>,
    open_links: Vec<(usize, String, Range<usize>)>,
}

impl Unit {
    fn new(kind: UnitKind, span: Range<usize>) -> Self {
        Unit {
            kind,
            span,
            text: String::new(),
            pieces: Vec::new(),
            code: Vec::new(),
            links: Vec::new(),
            open_links: Vec::new(),
        }
    }

    fn push(&mut self, s: &str, raw: Range<usize>) {
        let start = self.text.len();
        self.text.push_str(s);
        self.pieces.push(PieceMap {
            text: start..self.text.len(),
            raw,
        });
    }

    fn push_code(&mut self, s: &str, raw: Range<usize>) {
        let start = self.text.len();
        self.push(s, raw);
        self.code.push(start..self.text.len());
    }

    fn separate(&mut self, raw: Range<usize>) {
        if !self.text.is_empty() && !self.text.ends_with(' ') {
            self.push(" ", raw);
        }
    }

    /// Raw offset of a text offset, rounding toward the piece start.
    fn raw_start(&self, at: usize) -> usize {
        for p in &self.pieces {
            if at < p.text.end || (at == p.text.start && p.text.is_empty()) {
                if p.text.len() == p.raw.len() {
                    return p.raw.start + (at - p.text.start);
                }
                return p.raw.start;
            }
        }
        self.pieces.last().map_or(self.span.end, |p| p.raw.end)
    }

    /// Raw offset just past a text offset, rounding toward the piece end.
    fn raw_end(&self, at: usize) -> usize {
        for p in &self.pieces {
            if at <= p.text.end && at > p.text.start {
                if p.text.len() == p.raw.len() {
                    return p.raw.start + (at - p.text.start);
                }
                return p.raw.end;
            }
        }
        self.pieces.first().map_or(self.span.start, |p| p.raw.start)
    }
}

/// Segments a markdown body. An empty or markup-only body yields no segments.
pub fn segment_body(body: &str) -> Vec<RawSegment> {
    let mut opts = Options::empty();
    opts.insert(Options::ENABLE_TABLES);
    opts.insert(Options::ENABLE_STRIKETHROUGH);
    opts.insert(Options::ENABLE_TASKLISTS);

    let mut units: Vec<Unit> = Vec::new();
    let mut current: Option<Unit> = None;
    let mut list_depth = 0usize;
    let mut skip_depth = 0usize;

    for (event, range) in Parser::new_ext(body, opts).into_offset_iter() {
        match event {
            Event::Start(tag) => match tag {
                Tag::List(_) => list_depth += 1,
                Tag::Item if list_depth == 1 && current.is_none() => {
                    current = Some(Unit::new(UnitKind::Item, range));
                }
                Tag::Item | Tag::Paragraph | Tag::TableCell => {
                    if let Some(u) = current.as_mut() {
                        u.separate(range.start..range.start);
                    } else if matches!(tag, Tag::Paragraph) {
                        current = Some(Unit::new(UnitKind::Paragraph, range));
                    }
                }
                Tag::TableHead | Tag::TableRow if current.is_none() => {
                    current = Some(Unit::new(UnitKind::Row, range));
                }
                Tag::Heading { .. } | Tag::CodeBlock(_) | Tag::HtmlBlock | Tag::Image { .. } => {
                    skip_depth += 1;
                }
                Tag::Link { dest_url, .. } => {
                    if let Some(u) = current.as_mut() {
                        if skip_depth == 0 {
                            u.open_links
                                .push((u.text.len(), dest_url.to_string(), range.clone()));
                        }
                    }
                }
                _ => {}
            },
            Event::End(tag) => match tag {
                TagEnd::List(_) => list_depth = list_depth.saturating_sub(1),
                TagEnd::Item if list_depth == 1 => {
                    if let Some(u) = current.take_if(|u| u.kind == UnitKind::Item) {
                        units.push(u);
                    }
                }
                TagEnd::Paragraph => {
                    if let Some(u) = current.take_if(|u| u.kind == UnitKind::Paragraph) {
                        units.push(u);
                    }
                }
                TagEnd::TableHead | TagEnd::TableRow => {
                    if let Some(u) = current.take_if(|u| u.kind == UnitKind::Row) {
                        units.push(u);
                    }
                }
                TagEnd::Heading(_) | TagEnd::CodeBlock | TagEnd::HtmlBlock | TagEnd::Image => {
                    skip_depth = skip_depth.saturating_sub(1);
                }
                TagEnd::Link => {
                    if let Some(u) = current.as_mut() {
                        if skip_depth == 0 {
                            if let Some((start, dest, raw)) = u.open_links.pop() {
                                let end = u.text.len();
                                u.links.push(LinkZone {
                                    text: start..end,
                                    dest,
                                    raw,
                                });
                            }
                        }
                    }
                }
                _ => {}
            },
            Event::Text(t) if skip_depth == 0 => {
                if let Some(u) = current.as_mut() {
                    u.push(&t, range);
                }
            }
            Event::Code(t) if skip_depth == 0 => {
                if let Some(u) = current.as_mut() {
                    u.push_code(&t, range);
                }
            }
            Event::SoftBreak | Event::HardBreak if skip_depth == 0 => {
                if let Some(u) = current.as_mut() {
                    u.separate(range);
                }
            }
            Event::InlineHtml(_) | Event::Html(_) => {
                if let Some(u) = current.as_mut() {
                    u.separate(range.start..range.start);
                }
            }
            _ => {}
        }
    }
    if let Some(u) = current.take() {
        units.push(u);
    }

    let mut out = Vec::new();
    for unit in &units {
        match unit.kind {
            UnitKind::Item | UnitKind::Row => {
                if let Some(seg) = make_segment(unit, 0..unit.text.len(), body, true) {
                    out.push(seg);
                }
            }
            UnitKind::Paragraph => {
                for r in split_sentences(&unit.text, &unit.code) {
                    if let Some(seg) = make_segment(unit, r, body, false) {
                        out.push(seg);
                    }
                }
            }
        }
    }
    out
}

fn make_segment(unit: &Unit, r: Range<usize>, body: &str, whole: bool) -> Option<RawSegment> {
    let slice = &unit.text[r.clone()];
    let text = collapse_whitespace(slice);
    if text.is_empty() {
        return None;
    }

    let (mut start, mut end) = if whole {
        (unit.span.start, unit.span.end)
    } else {
        let lead = slice.len() - slice.trim_start().len();
        let trail = slice.len() - slice.trim_end().len();
        (
            unit.raw_start(r.start + lead),
            unit.raw_end(r.end - trail).max(unit.raw_start(r.start + lead)),
        )
    };
    let mut refs: Vec<(usize, String)> = Vec::new();
    for z in unit.links.iter().filter(|z| r.contains(&z.text.start)) {
        refs.push((z.text.start, z.dest.clone()));
        start = start.min(z.raw.start);
        end = end.max(z.raw.end);
    }
    while end > start && body.as_bytes()[end - 1].is_ascii_whitespace() {
        end -= 1;
    }

    let in_link = |at: usize| unit.links.iter().any(|z| z.text.contains(&at));
    let urls = url_zones(slice);
    for u in &urls {
        let at = r.start + u.start;
        if !in_link(at) {
            refs.push((at, slice[u.clone()].to_string()));
        }
    }
    let blocked = |at: usize| in_link(r.start + at) || urls.iter().any(|u| u.contains(&at));
    for cap in SHORTHAND.captures_iter(slice) {
        let m = cap.get(1).unwrap();
        if !blocked(m.start()) {
            refs.push((r.start + m.start(), m.as_str().to_string()));
        }
    }
    for cap in HEX_TOKEN.captures_iter(slice) {
        let m = cap.get(1).unwrap();
        if !blocked(m.start()) && looks_like_hash(m.as_str()) {
            refs.push((r.start + m.start(), m.as_str().to_string()));
        }
    }
    refs.sort_by_key(|(at, _)| *at);
    let mut embedded_links: Vec<String> = Vec::new();
    for (_, s) in refs {
        if !embedded_links.contains(&s) {
            embedded_links.push(s);
        }
    }

    Some(RawSegment {
        text,
        raw_span: ByteSpan { start, end },
        embedded_links,
    })
}

/// Hex tokens in prose need a digit and a letter so words like "defaced"
/// and plain numbers are not taken for hashes.
fn looks_like_hash(tok: &str) -> bool {
    tok.bytes().any(|b| b.is_ascii_digit()) && tok.bytes().any(|b| b.is_ascii_alphabetic())
}

/// URL ranges with trailing sentence punctuation trimmed off.
fn url_zones(s: &str) -> Vec<Range<usize>> {
    BARE_URL
        .find_iter(s)
        .map(|m| {
            let trimmed = m.as_str().trim_end_matches(['.', ',', ';', ':', '!', '?']);
            m.start()..m.start() + trimmed.len()
        })
        .collect()
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Byte ranges of sentences in `text`. `code` lists ranges that never split.
pub(crate) fn split_sentences(text: &str, code: &[Range<usize>]) -> Vec<Range<usize>> {
    let mut atomic: Vec<Range<usize>> = code.to_vec();
    atomic.extend(url_zones(text));
    atomic.sort_by_key(|r| r.start);

    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut depth = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        if let Some(z) = atomic.iter().find(|z| z.contains(&i)) {
            i = z.end;
            continue;
        }
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b'.' | b'!' | b'?' if depth == 0 => {
                let mut j = i + 1;
                while j < bytes.len() && b".!?\"'".contains(&bytes[j]) {
                    j += 1;
                }
                // closing curly quotes
                while text[j..].starts_with(['\u{201d}', '\u{2019}']) {
                    j += text[j..].chars().next().unwrap().len_utf8();
                }
                let at_boundary = j == bytes.len() || text[j..].starts_with(char::is_whitespace);
                if at_boundary && !(bytes[i] == b'.' && is_abbreviation(&text[start..i])) {
                    out.push(start..j);
                    start = j;
                }
                i = j;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    if start < text.len() {
        out.push(start..text.len());
    }
    out.retain(|r| !text[r.clone()].trim().is_empty());
    out
}

fn is_abbreviation(before: &str) -> bool {
    let word = before
        .rsplit(|c: char| c.is_whitespace() || c == '(')
        .next()
        .unwrap_or("");
    ABBREVIATIONS.iter().any(|a| a.eq_ignore_ascii_case(word))
}
