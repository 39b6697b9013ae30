//! Length-prefixed text records for motion-planning objectives.
//!
//! A record is `MPO <body length in bytes>\n` followed by the body. Fields
//! come in the order vehicle, issue time, path, speed profile, anchors:
//!
//! ```text
//! vehicle 3
//! issued 1.2000000000000000e1
//! path 2
//! -1.1000000000000000e2 -1.7500000000000000e0
//! -1.0000000000000000e1 -1.7500000000000000e0
//! vmax 1
//! 1.0000000000000000e1
//! anchors 1
//! -1.0000000000000000e1 -1.7500000000000000e0 4.0000000000000000e0 1.0000000000000000e1
//! ```
//!
//! Floats carry 17 significant digits, which parses back to the same bits.

use std::fmt::Write as _;

use rollplan_core::geometry::{Polyline, Vec2};
use rollplan_core::{AnchorPoint, MotionPlanningObjective, VehicleId};

const MAGIC: &str = "MPO";

/// Parse failure with the field being read and the byte offset into the input.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field} at byte {offset}: {message}")]
pub struct WireError {
    pub field: &'static str,
    pub offset: usize,
    pub message: String,
}

fn float(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").unwrap();
}

pub fn encode_objective(obj: &MotionPlanningObjective) -> String {
    let mut b = String::new();
    writeln!(b, "vehicle {}", obj.vehicle().0).unwrap();
    b.push_str("issued ");
    float(&mut b, obj.issued_at());
    b.push('\n');
    let pts = obj.path().points();
    writeln!(b, "path {}", pts.len()).unwrap();
    for p in pts {
        float(&mut b, p.x);
        b.push(' ');
        float(&mut b, p.y);
        b.push('\n');
    }
    writeln!(b, "vmax {}", obj.speed_bounds().len()).unwrap();
    for v in obj.speed_bounds() {
        float(&mut b, *v);
        b.push('\n');
    }
    writeln!(b, "anchors {}", obj.anchors().len()).unwrap();
    for a in obj.anchors() {
        for (i, x) in [a.position.x, a.position.y, a.dt, a.speed].into_iter().enumerate() {
            if i > 0 {
                b.push(' ');
            }
            float(&mut b, x);
        }
        b.push('\n');
    }
    format!("{MAGIC} {}\n{b}", b.len())
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    base: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, field: &'static str, at: usize, message: impl Into<String>) -> WireError {
        WireError { field, offset: self.base + at, message: message.into() }
    }

    fn line(&mut self, field: &'static str) -> Result<(usize, &'a str), WireError> {
        let rest = &self.text[self.pos..];
        let Some(n) = rest.find('\n') else {
            return Err(self.err(field, self.pos, "unexpected end of record"));
        };
        let at = self.pos;
        self.pos += n + 1;
        Ok((at, &rest[..n]))
    }

    fn keyed(&mut self, key: &'static str) -> Result<(usize, &'a str), WireError> {
        let (at, line) = self.line(key)?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok((at + k.len() + 1, v)),
            _ => Err(self.err(key, at, format!("expected `{key} <value>`"))),
        }
    }

    fn count(&mut self, key: &'static str) -> Result<usize, WireError> {
        let (at, v) = self.keyed(key)?;
        v.parse().map_err(|_| self.err(key, at, format!("`{v}` is not a count")))
    }

    fn floats<const N: usize>(&mut self, field: &'static str) -> Result<[f64; N], WireError> {
        let (at, line) = self.line(field)?;
        let mut out = [0.0; N];
        let mut parts = line.split(' ');
        let mut col = at;
        for slot in out.iter_mut() {
            let Some(p) = parts.next() else {
                return Err(self.err(field, at, format!("expected {N} numbers")));
            };
            *slot = p.parse().map_err(|_| self.err(field, col, format!("`{p}` is not a number")))?;
            col += p.len() + 1;
        }
        if parts.next().is_some() {
            return Err(self.err(field, col, format!("expected {N} numbers")));
        }
        Ok(out)
    }
}

/// Decodes one record from the start of `input`; returns it with the number
/// of bytes consumed.
pub fn decode_objective(input: &str) -> Result<(MotionPlanningObjective, usize), WireError> {
    decode_at(input, 0)
}

fn decode_at(input: &str, base: usize) -> Result<(MotionPlanningObjective, usize), WireError> {
    let header_err = |message: &str| WireError { field: "header", offset: base, message: message.into() };
    let nl = input.find('\n').ok_or_else(|| header_err("missing record header"))?;
    let len: usize = match input[..nl].split_once(' ') {
        Some((MAGIC, n)) => n.parse().map_err(|_| header_err("bad body length"))?,
        _ => return Err(header_err("expected `MPO <length>`")),
    };
    let start = nl + 1;
    let body = input
        .get(start..start + len)
        .ok_or_else(|| WireError { field: "body", offset: base + input.len(), message: format!("record truncated, body needs {len} bytes") })?;
    let mut c = Cursor { text: body, pos: 0, base: base + start };

    let (at, v) = c.keyed("vehicle")?;
    let vehicle = VehicleId(v.parse().map_err(|_| c.err("vehicle", at, format!("`{v}` is not an id")))?);
    let (at, v) = c.keyed("issued")?;
    let issued: f64 = v.parse().map_err(|_| c.err("issued", at, format!("`{v}` is not a number")))?;

    let path_at = c.pos;
    let n = c.count("path")?;
    let mut points = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        let [x, y] = c.floats::<2>("path")?;
        points.push(Vec2::new(x, y));
    }
    let path = Polyline::new(points).map_err(|e| c.err("path", path_at, e.to_string()))?;

    let m = c.count("vmax")?;
    let mut bounds = Vec::with_capacity(m.min(1 << 16));
    for _ in 0..m {
        bounds.push(c.floats::<1>("vmax")?[0]);
    }

    let k = c.count("anchors")?;
    let mut anchors = Vec::with_capacity(k.min(16));
    for _ in 0..k {
        let [x, y, dt, speed] = c.floats::<4>("anchors")?;
        anchors.push(AnchorPoint { position: Vec2::new(x, y), dt, speed });
    }
    if c.pos != body.len() {
        return Err(c.err("body", c.pos, "trailing data after anchors"));
    }
    let obj = MotionPlanningObjective::new(vehicle, issued, path, bounds, anchors)
        .map_err(|e| WireError { field: "objective", offset: base + start, message: e.to_string() })?;
    Ok((obj, start + len))
}

/// Decodes back-to-back records until the input is exhausted.
pub fn decode_stream(input: &str) -> Result<Vec<MotionPlanningObjective>, WireError> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < input.len() {
        let (obj, used) = decode_at(&input[pos..], pos)?;
        out.push(obj);
        pos += used;
    }
    Ok(out)
}
