//! Format-0 Standard MIDI File writer for parsed tunes.
//!
//! Middle C is MIDI 60. Explicit accidentals carry to the end of the bar
//! for the same letter and octave. Chords sound all their notes together;
//! repeats are played through once.

use std::collections::HashMap;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::abc::{Duration, Event, KeySignature, NoteEvent, TuneAst};

pub const TICKS_PER_QUARTER: u16 = 480;
/// Microseconds per quarter note (120 BPM).
pub const DEFAULT_TEMPO: u32 = 500_000;
pub const VELOCITY: u8 = 90;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MidiError {
    #[error("note {letter} with octave shift {octave_shift} maps to MIDI {value}, outside 0..=127")]
    PitchOutOfRange {
        letter: char,
        octave_shift: i32,
        value: i32,
    },
    #[error("tempo {0} does not fit in 24 bits")]
    BadTempo(u32),
    #[error("truncated variable-length quantity")]
    TruncatedVlq,
    #[error("variable-length quantity longer than 4 bytes")]
    VlqTooLong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MidiEvent {
    Tempo(u32),
    NoteOn { key: u8, velocity: u8 },
    NoteOff { key: u8 },
    EndOfTrack,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MidiDoc {
    pub ticks_per_quarter: u16,
    pub tempo: u32,
    /// `(delta_ticks, event)` in playback order.
    pub track: Vec<(u32, MidiEvent)>,
}

impl MidiDoc {
    pub fn note_count(&self) -> usize {
        self.track
            .iter()
            .filter(|(_, e)| matches!(e, MidiEvent::NoteOn { .. }))
            .count()
    }

    /// Absolute tick of every event.
    pub fn absolute_times(&self) -> Vec<u64> {
        self.track
            .iter()
            .scan(0u64, |t, (d, _)| {
                *t += *d as u64;
                Some(*t)
            })
            .collect()
    }
}

/// Explicit accidentals seen so far in the current bar.
#[derive(Debug, Clone, Default)]
pub struct BarAccidentals {
    by_note: HashMap<(char, i32), i32>,
}

impl BarAccidentals {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.by_note.clear();
    }
}

const LETTER_SEMITONES: [(char, i32); 7] = [
    ('C', 0),
    ('D', 2),
    ('E', 4),
    ('F', 5),
    ('G', 7),
    ('A', 9),
    ('B', 11),
];

pub fn pitch_to_midi(
    note: &NoteEvent,
    key: &KeySignature,
    bar: &mut BarAccidentals,
) -> Result<u8, MidiError> {
    let letter = note.letter.to_ascii_uppercase();
    let base = LETTER_SEMITONES
        .iter()
        .find(|(l, _)| *l == letter)
        .map(|(_, s)| *s)
        .expect("parser only produces A..G");
    let slot = (letter, note.octave_shift);
    let shift = match note.accidental {
        Some(acc) => {
            bar.by_note.insert(slot, acc.semitones());
            acc.semitones()
        }
        None => bar
            .by_note
            .get(&slot)
            .copied()
            .unwrap_or_else(|| key.offset(letter)),
    };
    let value = 60 + 12 * note.octave_shift + base + shift;
    u8::try_from(value)
        .ok()
        .filter(|v| *v <= 127)
        .ok_or(MidiError::PitchOutOfRange {
            letter: note.letter,
            octave_shift: note.octave_shift,
            value,
        })
}

/// `round(duration * 4 * tpq)`, halves rounded away from zero.
pub fn duration_to_ticks(duration: Duration, ticks_per_quarter: u16) -> u32 {
    let ticks = duration * Ratio::from_integer(4 * ticks_per_quarter as i64);
    ticks.round().to_integer().to_u32().unwrap_or(0)
}

pub fn vlq_encode(mut n: u32, out: &mut Vec<u8>) {
    let mut groups = [0u8; 5];
    let mut len = 0;
    loop {
        groups[len] = (n & 0x7F) as u8;
        len += 1;
        n >>= 7;
        if n == 0 {
            break;
        }
    }
    for i in (0..len).rev() {
        let cont = if i > 0 { 0x80 } else { 0 };
        out.push(groups[i] | cont);
    }
}

/// Decodes one quantity, returning it and the number of bytes read.
pub fn vlq_decode(bytes: &[u8]) -> Result<(u32, usize), MidiError> {
    let mut n: u32 = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if i == 4 {
            return Err(MidiError::VlqTooLong);
        }
        n = (n << 7) | (b & 0x7F) as u32;
        if b & 0x80 == 0 {
            return Ok((n, i + 1));
        }
    }
    Err(MidiError::TruncatedVlq)
}

pub fn build_midi_doc(ast: &TuneAst, tempo: u32) -> Result<MidiDoc, MidiError> {
    if tempo > 0xFF_FFFF {
        return Err(MidiError::BadTempo(tempo));
    }
    let tpq = TICKS_PER_QUARTER;
    let mut track = vec![(0, MidiEvent::Tempo(tempo))];
    let mut key = ast.key;
    let mut bar = BarAccidentals::new();
    let mut pending: u32 = 0;
    for event in &ast.events {
        match event {
            Event::Note(n) => {
                let k = pitch_to_midi(n, &key, &mut bar)?;
                push_sounding(&mut track, &mut pending, &[k], duration_to_ticks(n.duration, tpq));
            }
            Event::Chord(notes) => {
                let keys = notes
                    .iter()
                    .map(|n| pitch_to_midi(n, &key, &mut bar))
                    .collect::<Result<Vec<_>, _>>()?;
                let ticks = notes
                    .first()
                    .map_or(0, |n| duration_to_ticks(n.duration, tpq));
                push_sounding(&mut track, &mut pending, &keys, ticks);
            }
            Event::Rest(d) => pending += duration_to_ticks(*d, tpq),
            Event::Bar(_) | Event::Ending(_) => bar.clear(),
            Event::Key(k) => {
                key = *k;
                bar.clear();
            }
        }
    }
    track.push((pending, MidiEvent::EndOfTrack));
    Ok(MidiDoc {
        ticks_per_quarter: tpq,
        tempo,
        track,
    })
}

fn push_sounding(track: &mut Vec<(u32, MidiEvent)>, pending: &mut u32, keys: &[u8], ticks: u32) {
    for (i, &key) in keys.iter().enumerate() {
        let delta = if i == 0 { std::mem::take(pending) } else { 0 };
        track.push((
            delta,
            MidiEvent::NoteOn {
                key,
                velocity: VELOCITY,
            },
        ));
    }
    for (i, &key) in keys.iter().enumerate() {
        track.push((if i == 0 { ticks } else { 0 }, MidiEvent::NoteOff { key }));
    }
}

pub fn to_bytes(doc: &MidiDoc) -> Vec<u8> {
    let mut body = Vec::new();
    for &(delta, event) in &doc.track {
        vlq_encode(delta, &mut body);
        match event {
            MidiEvent::Tempo(t) => {
                body.extend_from_slice(&[0xFF, 0x51, 0x03]);
                body.extend_from_slice(&t.to_be_bytes()[1..]);
            }
            MidiEvent::NoteOn { key, velocity } => body.extend_from_slice(&[0x90, key, velocity]),
            MidiEvent::NoteOff { key } => body.extend_from_slice(&[0x80, key, 0]),
            MidiEvent::EndOfTrack => body.extend_from_slice(&[0xFF, 0x2F, 0x00]),
        }
    }
    let mut out = Vec::with_capacity(22 + body.len());
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&doc.ticks_per_quarter.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

pub fn render_smf(ast: &TuneAst, tempo: u32) -> Result<Vec<u8>, MidiError> {
    Ok(to_bytes(&build_midi_doc(ast, tempo)?))
}
