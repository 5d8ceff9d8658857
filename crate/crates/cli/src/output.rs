//! Deterministic report and record serialization.

use std::io;

use gaussgeo_core::Mvn;
use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{json, Value};

/// Writes `v` with exactly 17 significant digits, positional when the
/// exponent is in `-5..=16`, scientific otherwise. Always re-parses to `v`.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0" } else { "0.0" }.to_owned();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-5..=16).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, v)
    } else {
        sci
    }
}

struct SigDigits;

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_f64(v).as_bytes())
    }
}

/// Compact JSON with sorted object keys and 17-digit floats, newline-terminated.
pub fn to_json<T: Serialize>(value: &T) -> String {
    // Going through `Value` sorts every object's keys.
    let value = serde_json::to_value(value).expect("serializable report");
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits);
    value.serialize(&mut ser).expect("in-memory write");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// `{"mean": [...], "cov": [[...], ...]}`, the dataset schema for one normal.
pub fn mvn_record(n: &Mvn) -> Value {
    let d = n.dim();
    let cov = n.cov().matrix();
    json!({
        "mean": n.mean().iter().copied().collect::<Vec<f64>>(),
        "cov": (0..d).map(|i| (0..d).map(|j| cov[(i, j)]).collect::<Vec<f64>>()).collect::<Vec<_>>(),
    })
}

/// Top-level report object shared by every subcommand.
pub fn report(command: &str, parameters: Value, outputs: Value, warnings: Vec<String>, seconds: Option<f64>) -> Value {
    let mut r = json!({
        "command": command,
        "parameters": parameters,
        "outputs": outputs,
        "warnings": warnings,
    });
    if let Some(s) = seconds {
        r["wall_clock_seconds"] = json!(s);
    }
    r
}
