//! Parser for the single-voice ABC subset used by folk tune collections.
//!
//! Header lines run up to and including `K:`. The body understands notes
//! with accidentals, octave marks and length suffixes, rests, bar lines,
//! repeats and endings, broken rhythm (`>`/`<`), tuplets (`(3`), chords
//! (`[CEG]`), inline `[K:]`/`[L:]`/`[M:]` fields and field lines between
//! body lines. Chord symbols and annotations (`"Am"`), decorations, grace
//! notes, slurs and ties are recognized and dropped. Anything else yields a
//! [`Diagnostic`] and is skipped.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

/// Note and rest lengths, in whole notes.
pub type Duration = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbcError {
    #[error("tune has no K: header")]
    MissingKey,
    #[error("tune has no body after the K: header")]
    EmptyBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Accidental {
    DoubleFlat,
    Flat,
    Natural,
    Sharp,
    DoubleSharp,
}

impl Accidental {
    pub fn semitones(self) -> i32 {
        match self {
            Accidental::DoubleFlat => -2,
            Accidental::Flat => -1,
            Accidental::Natural => 0,
            Accidental::Sharp => 1,
            Accidental::DoubleSharp => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoteEvent {
    /// Uppercase `A`..`G`.
    pub letter: char,
    pub accidental: Option<Accidental>,
    /// Octaves above the uppercase (middle C) octave; lowercase adds one.
    pub octave_shift: i32,
    pub duration: Duration,
}

/// Sharps (positive) or flats (negative) implied by a `K:` field, plus any
/// explicit per-letter overrides written after the mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeySignature {
    /// Semitone offset per letter, indexed C D E F G A B.
    offsets: [i8; 7],
}

const SHARP_ORDER: [char; 7] = ['F', 'C', 'G', 'D', 'A', 'E', 'B'];
const FLAT_ORDER: [char; 7] = ['B', 'E', 'A', 'D', 'G', 'C', 'F'];

pub(crate) fn letter_index(letter: char) -> usize {
    match letter.to_ascii_uppercase() {
        'C' => 0,
        'D' => 1,
        'E' => 2,
        'F' => 3,
        'G' => 4,
        'A' => 5,
        'B' => 6,
        other => panic!("not a note letter: {other}"),
    }
}

impl Default for KeySignature {
    fn default() -> Self {
        Self { offsets: [0; 7] }
    }
}

impl KeySignature {
    /// Key with `fifths` sharps (or `-fifths` flats), clamped to 7.
    pub fn from_fifths(fifths: i32) -> Self {
        let mut offsets = [0i8; 7];
        let n = fifths.clamp(-7, 7);
        if n > 0 {
            for &l in &SHARP_ORDER[..n as usize] {
                offsets[letter_index(l)] = 1;
            }
        } else {
            for &l in &FLAT_ORDER[..(-n) as usize] {
                offsets[letter_index(l)] = -1;
            }
        }
        Self { offsets }
    }

    pub fn offset(&self, letter: char) -> i32 {
        self.offsets[letter_index(letter)] as i32
    }

    /// Number of sharps (positive) or flats (negative) before overrides.
    pub fn fifths(&self) -> i32 {
        self.offsets.iter().map(|&o| o as i32).sum()
    }

    /// Parses the value of a `K:` field. Unknown tonics fall back to C
    /// and are reported as `Err` with that fallback.
    pub fn parse(text: &str) -> Result<Self, (Self, String)> {
        let text = text.trim();
        let lower = text.to_ascii_lowercase();
        if text.is_empty() || lower.starts_with("none") || text.starts_with("HP") {
            return Ok(Self::default());
        }
        if text.starts_with("Hp") {
            return Ok(Self::from_fifths(2));
        }
        let mut chars = text.chars().peekable();
        let tonic = match chars.next() {
            Some(c @ 'A'..='G') => c,
            _ => return Err((Self::default(), format!("unrecognized key {text:?}"))),
        };
        let mut fifths = match tonic {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => -1,
            'G' => 1,
            'A' => 3,
            _ => 5,
        };
        match chars.peek() {
            Some('#') => {
                fifths += 7;
                chars.next();
            }
            Some('b') => {
                fifths -= 7;
                chars.next();
            }
            _ => {}
        }
        let rest: String = chars.collect();
        let rest = rest.trim_start();
        let mode: String = rest
            .chars()
            .take_while(|c| c.is_ascii_alphabetic())
            .collect::<String>()
            .to_ascii_lowercase();
        let mode_offset = match mode.get(..3).unwrap_or(&mode) {
            "" | "maj" | "ion" => 0,
            "m" | "min" | "aeo" => -3,
            "mix" => -1,
            "dor" => -2,
            "phr" => -4,
            "lyd" => 1,
            "loc" => -5,
            // clef and other trailing words are not modes
            _ if mode.starts_with('m') && mode.len() == 1 => -3,
            _ => 0,
        };
        let mut key = Self::from_fifths(fifths + mode_offset);
        // explicit accidentals such as "K:D =c ^g"
        for tok in rest.split_whitespace().skip(usize::from(!mode.is_empty())) {
            let (acc, letter) = match tok.as_bytes() {
                [b'^', l] => (1, *l as char),
                [b'_', l] => (-1, *l as char),
                [b'=', l] => (0, *l as char),
                _ => continue,
            };
            if letter.is_ascii_alphabetic() && ('A'..='G').contains(&letter.to_ascii_uppercase()) {
                key.offsets[letter_index(letter)] = acc;
            }
        }
        Ok(key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BarLine {
    Single,
    Double,
    Final,
    Start,
    RepeatStart,
    RepeatEnd,
    RepeatBoth,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Note(NoteEvent),
    /// Simultaneous notes sharing the chord's duration.
    Chord(Vec<NoteEvent>),
    Rest(Duration),
    Bar(BarLine),
    /// Ending marker (`[1`, `:|2`, ...).
    Ending(String),
    Key(KeySignature),
}

impl Event {
    pub fn duration(&self) -> Option<Duration> {
        match self {
            Event::Note(n) => Some(n.duration),
            Event::Chord(ns) => ns.first().map(|n| n.duration),
            Event::Rest(d) => Some(*d),
            _ => None,
        }
    }

    fn scale_duration(&mut self, k: Duration) {
        match self {
            Event::Note(n) => n.duration *= k,
            Event::Chord(ns) => ns.iter_mut().for_each(|n| n.duration *= k),
            Event::Rest(d) => *d *= k,
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line within the tune text.
    pub line_no: usize,
    /// 1-based character column.
    pub column: usize,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}:{}: {}", self.line_no, self.column, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneAst {
    /// First occurrence of each header field.
    pub headers: BTreeMap<char, String>,
    pub key: KeySignature,
    pub unit_length: Duration,
    pub meter: (i64, i64),
    pub events: Vec<Event>,
    pub diagnostics: Vec<Diagnostic>,
}

impl TuneAst {
    pub fn notes(&self) -> impl Iterator<Item = &NoteEvent> {
        self.events.iter().flat_map(|e| match e {
            Event::Note(n) => std::slice::from_ref(n),
            Event::Chord(ns) => ns.as_slice(),
            _ => &[],
        })
    }
}

/// `M:` value as a fraction; `C` is 4/4 and `C|` is 2/2.
pub fn parse_meter(text: &str) -> Option<(i64, i64)> {
    let t = text.trim();
    match t {
        "C" => return Some((4, 4)),
        "C|" => return Some((2, 2)),
        "" | "none" => return None,
        _ => {}
    }
    let (n, d) = t.split_once('/')?;
    let num: i64 = n.split('+').map(|x| x.trim().parse::<i64>().ok()).sum::<Option<i64>>()?;
    let den: i64 = d.trim().parse().ok()?;
    (num > 0 && den > 0).then_some((num, den))
}

/// `L:` value such as `1/8`.
pub fn parse_unit_length(text: &str) -> Option<Duration> {
    let t = text.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim().parse::<i64>().ok()?, d.trim().parse::<i64>().ok()?),
        None => (t.parse::<i64>().ok()?, 1),
    };
    (n > 0 && d > 0).then(|| Ratio::new(n, d))
}

/// True for lines of the form `<letter>:<rest>`.
pub fn is_field_line(line: &str) -> bool {
    let mut c = line.chars();
    matches!((c.next(), c.next()), (Some(l), Some(':')) if l.is_ascii_alphabetic())
}

/// Context that carries across body lines.
#[derive(Debug, Clone)]
struct BodyState {
    unit: Duration,
    meter: (i64, i64),
    /// Remaining notes in the current tuplet and their time factor.
    tuplet: Option<(usize, Duration)>,
    /// Factor for the next note from a preceding `>`/`<`.
    pending_broken: Option<Duration>,
    /// Index of the last timed event, target of `>`/`<`.
    last_timed: Option<usize>,
}

impl BodyState {
    fn new(unit: Duration, meter: (i64, i64)) -> Self {
        Self {
            unit,
            meter,
            tuplet: None,
            pending_broken: None,
            last_timed: None,
        }
    }
}

struct LineParser<'a> {
    chars: Vec<char>,
    pos: usize,
    line_no: usize,
    state: &'a mut BodyState,
    events: &'a mut Vec<Event>,
    diags: &'a mut Vec<Diagnostic>,
}

const DECORATIONS: &str = ".~HLMOPSTuvR";

impl LineParser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn diag(&mut self, column: usize, reason: impl Into<String>) {
        self.diags.push(Diagnostic {
            line_no: self.line_no,
            column: column + 1,
            reason: reason.into(),
        });
    }

    fn number(&mut self) -> Option<i64> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        // digit runs are short in practice; saturate rather than fail
        let s: String = self.chars[start..self.pos].iter().collect();
        Some(s.parse().unwrap_or(i64::MAX / 4).min(1 << 20))
    }

    /// Length suffix such as `2`, `/`, `//`, `/4`, `3/2`. Returns the
    /// multiple of the unit length.
    fn length_suffix(&mut self) -> Option<Duration> {
        let start = self.pos;
        let num = self.number().unwrap_or(1);
        let mut den: i64 = 1;
        while self.peek() == Some('/') {
            self.pos += 1;
            match self.number() {
                Some(d) => den = den.saturating_mul(d),
                None => den = den.saturating_mul(2),
            }
        }
        if num == 0 || den == 0 {
            self.diag(start, "zero length");
            return None;
        }
        Some(Ratio::new(num, den))
    }

    fn note_head(&mut self) -> Option<(Option<Accidental>, char, i32)> {
        let start = self.pos;
        let accidental = match (self.peek(), self.peek_at(1)) {
            (Some('^'), Some('^')) => {
                self.pos += 2;
                Some(Accidental::DoubleSharp)
            }
            (Some('_'), Some('_')) => {
                self.pos += 2;
                Some(Accidental::DoubleFlat)
            }
            (Some('^'), _) => {
                self.pos += 1;
                Some(Accidental::Sharp)
            }
            (Some('_'), _) => {
                self.pos += 1;
                Some(Accidental::Flat)
            }
            (Some('='), _) => {
                self.pos += 1;
                Some(Accidental::Natural)
            }
            _ => None,
        };
        let letter = match self.peek() {
            Some(c @ ('A'..='G' | 'a'..='g')) => {
                self.pos += 1;
                c
            }
            _ => {
                self.diag(start, "accidental without a note");
                return None;
            }
        };
        let mut octave = i32::from(letter.is_ascii_lowercase());
        loop {
            match self.peek() {
                Some('\'') => octave += 1,
                Some(',') => octave -= 1,
                _ => break,
            }
            self.pos += 1;
        }
        Some((accidental, letter.to_ascii_uppercase(), octave))
    }

    fn note(&mut self) -> Option<NoteEvent> {
        let (accidental, letter, octave_shift) = self.note_head()?;
        let mult = self.length_suffix()?;
        Some(NoteEvent {
            letter,
            accidental,
            octave_shift,
            duration: self.state.unit * mult,
        })
    }

    /// Applies tuplet and broken-rhythm factors, then records the event.
    fn push_timed(&mut self, mut ev: Event) {
        if let Some((left, factor)) = self.state.tuplet {
            ev.scale_duration(factor);
            self.state.tuplet = (left > 1).then_some((left - 1, factor));
        }
        if let Some(k) = self.state.pending_broken.take() {
            ev.scale_duration(k);
        }
        self.events.push(ev);
        self.state.last_timed = Some(self.events.len() - 1);
    }

    fn skip_delimited(&mut self, close: char, what: &str) {
        let start = self.pos;
        self.pos += 1;
        while let Some(c) = self.peek() {
            self.pos += 1;
            if c == close {
                return;
            }
        }
        self.diag(start, format!("unterminated {what}"));
    }

    fn bar(&mut self) {
        let start = self.pos;
        while matches!(self.peek(), Some('|' | ':')) {
            self.pos += 1;
        }
        if self.peek() == Some(']') {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let kind = match text.as_str() {
            "|" => BarLine::Single,
            "||" => BarLine::Double,
            "|]" => BarLine::Final,
            t if t.starts_with(':') && t.ends_with(':') && t.len() > 1 => BarLine::RepeatBoth,
            t if t.starts_with(':') => BarLine::RepeatEnd,
            t if t.ends_with(':') => BarLine::RepeatStart,
            _ => BarLine::Double,
        };
        self.events.push(Event::Bar(kind));
        self.state.tuplet = None;
        self.ending_number();
    }

    /// Optional `1`, `2`, `1,3` or `1-2` right after a bar or `[`.
    fn ending_number(&mut self) {
        let start = self.pos;
        if !self.peek().is_some_and(|c| c.is_ascii_digit()) {
            return;
        }
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || c == ',' || c == '-')
        {
            // "|2-" could be a tie on nothing; digits must follow separators
            if matches!(self.peek(), Some(',' | '-'))
                && !self.peek_at(1).is_some_and(|c| c.is_ascii_digit())
            {
                break;
            }
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        self.events.push(Event::Ending(text));
    }

    fn inline_field(&mut self) {
        let start = self.pos;
        let field = self.peek_at(1).unwrap_or(' ');
        self.pos += 3;
        let vstart = self.pos;
        while self.peek().is_some_and(|c| c != ']') {
            self.pos += 1;
        }
        if self.peek() != Some(']') {
            self.diag(start, "unterminated inline field");
            return;
        }
        let value: String = self.chars[vstart..self.pos].iter().collect();
        self.pos += 1;
        self.apply_field(start, field, &value);
    }

    fn apply_field(&mut self, column: usize, field: char, value: &str) {
        match field {
            'K' => match KeySignature::parse(value) {
                Ok(k) => self.events.push(Event::Key(k)),
                Err((k, reason)) => {
                    self.events.push(Event::Key(k));
                    self.diag(column, reason);
                }
            },
            'L' => match parse_unit_length(value) {
                Some(u) => self.state.unit = u,
                None => self.diag(column, format!("bad unit length {value:?}")),
            },
            'M' => {
                if let Some(m) = parse_meter(value) {
                    self.state.meter = m;
                }
            }
            _ => {}
        }
    }

    fn chord(&mut self) {
        let start = self.pos;
        self.pos += 1;
        let mut notes = Vec::new();
        loop {
            match self.peek() {
                Some(']') => {
                    self.pos += 1;
                    break;
                }
                Some('^' | '_' | '=' | 'A'..='G' | 'a'..='g') => match self.note() {
                    Some(n) => notes.push(n),
                    None => self.pos += 1,
                },
                Some('-' | ' ' | '.' | '~') => self.pos += 1,
                Some('"') => self.skip_delimited('"', "annotation"),
                Some(c) => {
                    self.diag(self.pos, format!("unexpected {c:?} in chord"));
                    self.pos += 1;
                }
                None => {
                    self.diag(start, "unterminated chord");
                    return;
                }
            }
        }
        let Some(mult) = self.length_suffix() else {
            return;
        };
        if notes.is_empty() {
            self.diag(start, "empty chord");
            return;
        }
        let duration = notes[0].duration * mult;
        for n in &mut notes {
            n.duration = duration;
        }
        self.push_timed(Event::Chord(notes));
    }

    fn tuplet(&mut self) {
        self.pos += 1;
        let p = self.number().unwrap_or(3).max(1);
        let mut q = None;
        let mut r = None;
        if self.peek() == Some(':') {
            self.pos += 1;
            q = self.number();
            if self.peek() == Some(':') {
                self.pos += 1;
                r = self.number();
            }
        }
        let compound = self.state.meter.1 == 8 && self.state.meter.0 % 3 == 0 && self.state.meter.0 > 3;
        let q = q.unwrap_or(match p {
            2 | 4 | 8 => 3,
            3 | 6 => 2,
            _ if compound => 3,
            _ => 2,
        });
        let r = r.unwrap_or(p).max(1) as usize;
        self.state.tuplet = Some((r, Ratio::new(q, p)));
    }

    fn broken(&mut self, c: char) {
        let mut n = 0;
        while self.peek() == Some(c) {
            n += 1;
            self.pos += 1;
        }
        let short = Ratio::new(1, 1i64 << n.min(3));
        let long = Ratio::from_integer(2) - short;
        let (prev, next) = if c == '>' { (long, short) } else { (short, long) };
        match self.state.last_timed {
            Some(i) => {
                self.events[i].scale_duration(prev);
                self.state.pending_broken = Some(next);
            }
            None => self.diag(self.pos - n, "broken rhythm without a preceding note"),
        }
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            match c {
                ' ' | '\t' | 'y' => self.pos += 1,
                '%' => break,
                '\\' => self.pos += 1,
                '"' => self.skip_delimited('"', "annotation"),
                '!' => self.skip_delimited('!', "decoration"),
                '+' => self.skip_delimited('+', "decoration"),
                '{' => self.skip_delimited('}', "grace notes"),
                '(' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => self.tuplet(),
                '(' | ')' | '-' => self.pos += 1,
                '>' | '<' => self.broken(c),
                '|' | ':' => self.bar(),
                '[' => match (self.peek_at(1), self.peek_at(2)) {
                    (Some('|'), _) => {
                        self.pos += 2;
                        self.events.push(Event::Bar(BarLine::Start));
                    }
                    (Some(d), _) if d.is_ascii_digit() => {
                        self.pos += 1;
                        self.ending_number();
                    }
                    (Some(f), Some(':')) if f.is_ascii_alphabetic() => self.inline_field(),
                    _ => self.chord(),
                },
                '^' | '_' | '=' | 'A'..='G' | 'a'..='g' => {
                    if let Some(n) = self.note() {
                        self.push_timed(Event::Note(n));
                    } else if self.pos < self.chars.len() && !self.chars[self.pos].is_ascii_alphabetic() {
                        self.pos += 1;
                    }
                }
                'z' | 'x' => {
                    self.pos += 1;
                    if let Some(mult) = self.length_suffix() {
                        let d = self.state.unit * mult;
                        self.push_timed(Event::Rest(d));
                    }
                }
                'Z' => {
                    self.pos += 1;
                    let bars = self.number().unwrap_or(1);
                    let (n, d) = self.state.meter;
                    self.events.push(Event::Rest(Ratio::new(n * bars, d)));
                }
                c if DECORATIONS.contains(c) => self.pos += 1,
                c if c.is_ascii_digit() => {
                    self.diag(self.pos, "length without a note");
                    self.number();
                }
                c => {
                    self.diag(self.pos, format!("unexpected character {c:?}"));
                    self.pos += 1;
                }
            }
        }
    }
}

fn parse_body_line(
    line: &str,
    line_no: usize,
    state: &mut BodyState,
    events: &mut Vec<Event>,
    diags: &mut Vec<Diagnostic>,
) {
    let mut p = LineParser {
        chars: line.chars().collect(),
        pos: 0,
        line_no,
        state,
        events,
        diags,
    };
    if is_field_line(line) {
        let field = line.chars().next().expect("field line");
        let value = &line[2..];
        p.apply_field(0, field, value);
        return;
    }
    p.run();
}

/// Diagnostics for one body line parsed on its own (default `L:1/8`, 4/4).
pub fn check_body_line(line: &str) -> Vec<Diagnostic> {
    let mut state = BodyState::new(Ratio::new(1, 8), (4, 4));
    let mut events = Vec::new();
    let mut diags = Vec::new();
    parse_body_line(line, 1, &mut state, &mut events, &mut diags);
    diags
}

/// Parses one tune. Header lines precede the first `K:` line; `L:`
/// defaults to 1/8 and `M:` to 4/4.
pub fn parse_tune(text: &str) -> Result<TuneAst, AbcError> {
    let mut headers = BTreeMap::new();
    let lines: Vec<&str> = text.lines().collect();
    let key_line = lines
        .iter()
        .position(|l| l.starts_with("K:"))
        .ok_or(AbcError::MissingKey)?;
    let mut diagnostics = Vec::new();
    for line in &lines[..=key_line] {
        if is_field_line(line) {
            let field = line.chars().next().expect("field line");
            headers
                .entry(field)
                .or_insert_with(|| line[2..].trim().to_string());
        }
    }
    let unit = headers
        .get(&'L')
        .and_then(|v| parse_unit_length(v))
        .unwrap_or(Ratio::new(1, 8));
    let meter = headers.get(&'M').and_then(|v| parse_meter(v)).unwrap_or((4, 4));
    let key = match KeySignature::parse(&headers[&'K']) {
        Ok(k) => k,
        Err((k, reason)) => {
            diagnostics.push(Diagnostic {
                line_no: key_line + 1,
                column: 1,
                reason,
            });
            k
        }
    };

    let body: Vec<(usize, &str)> = lines
        .iter()
        .enumerate()
        .skip(key_line + 1)
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('%'))
        .map(|(i, l)| (i + 1, *l))
        .collect();
    if body.iter().all(|(_, l)| is_field_line(l)) {
        return Err(AbcError::EmptyBody);
    }

    let mut state = BodyState::new(unit, meter);
    let mut events = Vec::new();
    for (line_no, line) in body {
        parse_body_line(line, line_no, &mut state, &mut events, &mut diagnostics);
    }
    Ok(TuneAst {
        headers,
        key,
        unit_length: unit,
        meter,
        events,
        diagnostics,
    })
}
