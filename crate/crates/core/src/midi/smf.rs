//! Standard MIDI File reading and writing.
//!
//! Only what the piano-roll pipeline needs is interpreted: note on/off pairs
//! and FF 51 tempo meta-events. Everything else (controllers, sustain pedal,
//! program changes, sysex) is skipped over correctly but ignored.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

/// One sounding note in absolute seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoteEvent {
    pub pitch: u8,
    pub onset: f64,
    pub offset: f64,
    pub velocity: u8,
}

impl NoteEvent {
    pub fn new(pitch: u8, onset: f64, offset: f64, velocity: u8) -> Self {
        debug_assert!(pitch < 128 && velocity < 128);
        Self {
            pitch,
            onset,
            offset,
            velocity,
        }
    }
}

pub const DEFAULT_US_PER_QUARTER: u32 = 500_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Timing {
    Metrical { ticks_per_quarter: u16 },
    Timecode { frames_per_second: u8, ticks_per_frame: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TempoSegment {
    tick: u64,
    seconds: f64,
    us_per_quarter: u32,
}

/// Piecewise-linear tick to seconds map built from the header division and
/// all tempo meta-events in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct TempoMap {
    timing: Timing,
    segments: Vec<TempoSegment>,
}

impl TempoMap {
    /// `changes` must be sorted by tick; a change at the same tick as an
    /// earlier one replaces it.
    pub fn new(timing: Timing, changes: &[(u64, u32)]) -> Self {
        let mut map = TempoMap {
            timing,
            segments: vec![TempoSegment {
                tick: 0,
                seconds: 0.0,
                us_per_quarter: DEFAULT_US_PER_QUARTER,
            }],
        };
        if let Timing::Metrical { .. } = timing {
            for &(tick, us) in changes {
                let seconds = map.seconds_at(tick);
                let last = map.segments.last_mut().expect("non-empty");
                if last.tick == tick {
                    last.us_per_quarter = us;
                } else {
                    map.segments.push(TempoSegment {
                        tick,
                        seconds,
                        us_per_quarter: us,
                    });
                }
            }
        }
        map
    }

    pub fn timing(&self) -> Timing {
        self.timing
    }

    /// Tempo changes as `(tick, microseconds per quarter)`.
    pub fn changes(&self) -> Vec<(u64, u32)> {
        self.segments.iter().map(|s| (s.tick, s.us_per_quarter)).collect()
    }

    fn seconds_per_tick(&self, us_per_quarter: u32) -> f64 {
        match self.timing {
            Timing::Metrical { ticks_per_quarter } => us_per_quarter as f64 / (1e6 * ticks_per_quarter as f64),
            Timing::Timecode {
                frames_per_second,
                ticks_per_frame,
            } => 1.0 / (frames_per_second as f64 * ticks_per_frame as f64),
        }
    }

    fn segment_for(&self, tick: u64) -> &TempoSegment {
        let idx = self.segments.partition_point(|s| s.tick <= tick);
        &self.segments[idx.saturating_sub(1)]
    }

    pub fn seconds_at(&self, tick: u64) -> f64 {
        let seg = self.segment_for(tick);
        seg.seconds + (tick - seg.tick) as f64 * self.seconds_per_tick(seg.us_per_quarter)
    }

    /// Largest tick whose time is `<= seconds` (0 for negative input).
    pub fn tick_at_or_before(&self, seconds: f64) -> u64 {
        if seconds <= 0.0 {
            return 0;
        }
        let idx = self.segments.partition_point(|s| s.seconds <= seconds);
        let seg = &self.segments[idx.saturating_sub(1)];
        let per_tick = self.seconds_per_tick(seg.us_per_quarter);
        let mut tick = seg.tick + ((seconds - seg.seconds) / per_tick).floor().max(0.0) as u64;
        while tick > 0 && self.seconds_at(tick) > seconds {
            tick -= 1;
        }
        while self.seconds_at(tick + 1) <= seconds {
            tick += 1;
        }
        tick
    }
}

/// Result of reading one Standard MIDI File.
#[derive(Debug, Clone)]
pub struct ParsedMidi {
    pub format: u16,
    pub notes: Vec<NoteEvent>,
    pub tempo_map: TempoMap,
    /// Time of the latest end-of-track (or last event) over all tracks.
    pub end_seconds: f64,
    /// Notes still open at end-of-track; they were closed there.
    pub unterminated: usize,
}

impl ParsedMidi {
    pub fn has_warnings(&self) -> bool {
        self.unterminated > 0
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Midi {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or_else(|| self.err("unexpected end of data"))?;
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(self.err(format!("need {n} bytes, {} left", self.remaining())));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u32> {
        let start = self.pos;
        let mut value: u32 = 0;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | (b & 0x7f) as u32;
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(Error::Midi {
            offset: start,
            reason: "variable-length quantity longer than 4 bytes".into(),
        })
    }
}

#[derive(Debug)]
enum RawKind {
    NoteOn { channel: u8, key: u8, velocity: u8 },
    NoteOff { channel: u8, key: u8 },
    Tempo(u32),
}

struct RawTrack {
    events: Vec<(u64, RawKind)>,
    end_tick: u64,
}

fn parse_track(r: &mut Reader<'_>, end: usize) -> Result<RawTrack> {
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;
    let mut events = Vec::new();
    while r.pos < end {
        tick += r.vlq()? as u64;
        let first = r.u8()?;
        let status = if first & 0x80 != 0 {
            first
        } else {
            let s = running.ok_or_else(|| Error::Midi {
                offset: r.pos - 1,
                reason: "data byte without running status".into(),
            })?;
            r.pos -= 1;
            s
        };
        match status {
            0xff => {
                running = None;
                let kind = r.u8()?;
                let len = r.vlq()? as usize;
                let data = r.take(len)?;
                match kind {
                    0x51 => {
                        if len != 3 {
                            return Err(r.err("tempo meta-event with length != 3"));
                        }
                        let us = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                        if us == 0 {
                            return Err(r.err("zero tempo"));
                        }
                        events.push((tick, RawKind::Tempo(us)));
                    }
                    0x2f => {
                        r.pos = end;
                        break;
                    }
                    _ => {}
                }
            }
            0xf0 | 0xf7 => {
                running = None;
                let len = r.vlq()? as usize;
                r.take(len)?;
            }
            0x80..=0xef => {
                running = Some(status);
                let channel = status & 0x0f;
                let a = r.u8()?;
                match status & 0xf0 {
                    0xc0 | 0xd0 => {}
                    hi => {
                        let b = r.u8()?;
                        if a > 127 || b > 127 {
                            return Err(r.err("data byte out of range"));
                        }
                        match hi {
                            0x90 if b > 0 => events.push((
                                tick,
                                RawKind::NoteOn {
                                    channel,
                                    key: a,
                                    velocity: b,
                                },
                            )),
                            0x90 | 0x80 => events.push((tick, RawKind::NoteOff { channel, key: a })),
                            _ => {}
                        }
                    }
                }
            }
            other => {
                return Err(Error::Midi {
                    offset: r.pos - 1,
                    reason: format!("unexpected status byte {other:#04x}"),
                })
            }
        }
        if r.pos > end {
            return Err(r.err("event runs past end of track chunk"));
        }
    }
    Ok(RawTrack { events, end_tick: tick })
}

/// Parse a format-0 or format-1 Standard MIDI File.
pub fn parse_midi(bytes: &[u8]) -> Result<ParsedMidi> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).map_err(|_| r.err("missing MThd"))? != b"MThd" {
        return Err(Error::Midi {
            offset: 0,
            reason: "missing MThd header".into(),
        });
    }
    let header_len = r.u32()? as usize;
    if header_len < 6 {
        return Err(Error::Midi {
            offset: 4,
            reason: format!("header length {header_len} < 6"),
        });
    }
    let header_start = r.pos;
    let format = r.u16()?;
    let ntracks = r.u16()?;
    let division = r.u16()?;
    if format == 2 {
        return Err(Error::UnsupportedMidi("format 2 files are not supported".into()));
    }
    if format > 2 {
        return Err(Error::Midi {
            offset: header_start,
            reason: format!("unknown format {format}"),
        });
    }
    let timing = if division & 0x8000 == 0 {
        if division == 0 {
            return Err(Error::Midi {
                offset: header_start + 4,
                reason: "zero ticks per quarter".into(),
            });
        }
        Timing::Metrical {
            ticks_per_quarter: division,
        }
    } else {
        let fps = (-((division >> 8) as u8 as i8)) as u8;
        let tpf = (division & 0xff) as u8;
        if fps == 0 || tpf == 0 {
            return Err(Error::Midi {
                offset: header_start + 4,
                reason: "invalid timecode division".into(),
            });
        }
        Timing::Timecode {
            frames_per_second: fps,
            ticks_per_frame: tpf,
        }
    };
    r.pos = header_start + header_len;
    if r.pos > bytes.len() {
        return Err(Error::Midi {
            offset: bytes.len(),
            reason: "header chunk truncated".into(),
        });
    }

    let mut tracks = Vec::with_capacity(ntracks as usize);
    while tracks.len() < ntracks as usize {
        if r.remaining() < 8 {
            return Err(r.err(format!("expected {ntracks} tracks, found {}", tracks.len())));
        }
        let id = r.take(4)?;
        let len = r.u32()? as usize;
        let end = r.pos + len;
        if end > bytes.len() {
            return Err(r.err("chunk length runs past end of file"));
        }
        if id == b"MTrk" {
            tracks.push(parse_track(&mut r, end)?);
        }
        r.pos = end;
    }

    let mut tempo_changes: Vec<(u64, u32)> = tracks
        .iter()
        .flat_map(|t| t.events.iter())
        .filter_map(|(tick, k)| match k {
            RawKind::Tempo(us) => Some((*tick, *us)),
            _ => None,
        })
        .collect();
    tempo_changes.sort_by_key(|&(tick, _)| tick);
    let tempo_map = TempoMap::new(timing, &tempo_changes);

    let mut notes = Vec::new();
    let mut unterminated = 0;
    let mut end_tick = 0;
    for track in &tracks {
        end_tick = end_tick.max(track.end_tick);
        let mut open: HashMap<(u8, u8), VecDeque<(u64, u8)>> = HashMap::new();
        let close = |key: u8, on: u64, off: u64, velocity: u8, notes: &mut Vec<NoteEvent>| {
            let onset = tempo_map.seconds_at(on);
            let offset = tempo_map.seconds_at(off);
            if offset > onset {
                notes.push(NoteEvent::new(key, onset, offset, velocity));
            }
        };
        for (tick, kind) in &track.events {
            match *kind {
                RawKind::NoteOn { channel, key, velocity } => {
                    open.entry((channel, key)).or_default().push_back((*tick, velocity))
                }
                RawKind::NoteOff { channel, key } => {
                    if let Some((on, velocity)) = open.get_mut(&(channel, key)).and_then(|q| q.pop_front()) {
                        close(key, on, *tick, velocity, &mut notes);
                    }
                }
                RawKind::Tempo(_) => {}
            }
        }
        let mut leftovers: Vec<_> = open.into_iter().collect();
        leftovers.sort_by_key(|((ch, key), _)| (*ch, *key));
        for ((_, key), queue) in leftovers {
            for (on, velocity) in queue {
                unterminated += 1;
                close(key, on, track.end_tick, velocity, &mut notes);
            }
        }
    }
    notes.sort_by(|a, b| {
        a.onset
            .total_cmp(&b.onset)
            .then(a.pitch.cmp(&b.pitch))
            .then(a.offset.total_cmp(&b.offset))
    });
    if unterminated > 0 {
        log::warn!("{unterminated} note(s) unterminated; closed at end of track");
    }
    Ok(ParsedMidi {
        format,
        notes,
        end_seconds: tempo_map.seconds_at(end_tick),
        tempo_map,
        unterminated,
    })
}

/// A note expressed in ticks, for writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickNote {
    pub pitch: u8,
    pub on: u64,
    pub off: u64,
    pub velocity: u8,
}

fn push_vlq(out: &mut Vec<u8>, mut value: u32) {
    let mut buf = [0u8; 4];
    let mut n = 0;
    loop {
        buf[n] = (value & 0x7f) as u8;
        n += 1;
        value >>= 7;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        out.push(if i > 0 { buf[i] | 0x80 } else { buf[i] });
    }
}

/// Write a single-track format-0 file on channel 0.
pub fn write_format0(ticks_per_quarter: u16, us_per_quarter: u32, notes: &[TickNote], end_tick: u64) -> Vec<u8> {
    // (tick, order, status, key, velocity); offs sort before ons at equal ticks
    let mut events: Vec<(u64, u8, u8, u8, u8)> = Vec::with_capacity(notes.len() * 2);
    for n in notes {
        events.push((n.on, 1, 0x90, n.pitch, n.velocity.max(1)));
        events.push((n.off, 0, 0x80, n.pitch, 0));
    }
    events.sort();

    let mut track = Vec::new();
    push_vlq(&mut track, 0);
    track.extend_from_slice(&[0xff, 0x51, 0x03]);
    track.extend_from_slice(&us_per_quarter.min(0xff_ffff).to_be_bytes()[1..]);
    let mut last = 0u64;
    for (tick, _, status, key, vel) in events {
        push_vlq(&mut track, (tick - last) as u32);
        track.extend_from_slice(&[status, key, vel]);
        last = tick;
    }
    push_vlq(&mut track, end_tick.saturating_sub(last) as u32);
    track.extend_from_slice(&[0xff, 0x2f, 0x00]);

    let mut out = Vec::with_capacity(track.len() + 22);
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&ticks_per_quarter.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(track.len() as u32).to_be_bytes());
    out.extend_from_slice(&track);
    out
}
