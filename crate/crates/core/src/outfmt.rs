//! Deterministic numeric formatting shared by the CSV and JSON emitters.
//!
//! Every float printed by the command-line tools goes through
//! [`fmt_f64`], so repeated runs with equal inputs produce byte-identical
//! output and sweep files can be resumed by comparing bytes.

use std::io;

use serde::Serialize;

/// Formats a float in scientific notation with twelve significant
/// digits. The sign of zero is normalized away and non-finite values are
/// spelled out as words.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

struct FixedFloatFormatter;

impl serde_json::ser::Formatter for FixedFloatFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        writer.write_all(fmt_f64(value as f64).as_bytes())
    }
}

/// Serializes a value to compact single-line JSON with all floats
/// rendered through [`fmt_f64`]. Non-finite floats become JSON `null`
/// before the formatter sees them.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloatFormatter);
    value
        .serialize(&mut ser)
        .expect("output types serialize without error");
    String::from_utf8(out).expect("the JSON serializer emits UTF-8")
}
