//! Deterministic report emission: an ordered JSON writer with fixed float
//! formatting (17 significant digits, lowercase scientific), plus CSV and
//! text-table rendering. Same inputs always produce byte-identical files.

use std::fmt::Write as _;

/// JSON value with insertion-ordered object fields.
#[derive(Clone, Debug)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    /// Pre-rendered JSON (used to echo config fragments verbatim).
    Raw(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    pub fn object() -> Json {
        Json::Object(Vec::new())
    }

    pub fn push(&mut self, key: &str, value: Json) {
        if let Json::Object(fields) = self {
            fields.push((key.to_string(), value));
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Json::Float(v) => out.push_str(&fmt_float(*v)),
            Json::Str(s) => write_escaped(out, s),
            Json::Raw(s) => out.push_str(s),
            Json::Array(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    newline_indent(out, indent + 1);
                    item.write(out, indent + 1);
                }
                newline_indent(out, indent);
                out.push(']');
            }
            Json::Object(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (key, value)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    newline_indent(out, indent + 1);
                    write_escaped(out, key);
                    out.push_str(": ");
                    value.write(out, indent + 1);
                }
                newline_indent(out, indent);
                out.push('}');
            }
        }
    }
}

fn newline_indent(out: &mut String, indent: usize) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn write_escaped(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// 17 significant digits, lowercase scientific notation. Non-finite values
/// are emitted as JSON strings since JSON has no literal for them.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "\"nan\"".to_string()
    } else if v > 0.0 {
        "\"inf\"".to_string()
    } else {
        "\"-inf\"".to_string()
    }
}

/// Bare float for CSV cells (no JSON quoting of non-finite values).
pub fn fmt_csv(v: f64) -> String {
    format!("{v:.16e}")
}

/// Two-column fixed-format text table.
pub fn render_table(title: &str, rows: &[(String, String)]) -> String {
    let key_width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max(12);
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{}", "-".repeat(title.len().max(key_width + 2)));
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<key_width$}  {v}");
    }
    out
}

/// Render grid axes as report JSON.
pub fn axes_json(axes: &[multitime_core::Axis]) -> Json {
    Json::Array(
        axes.iter()
            .map(|a| {
                let mut o = Json::object();
                o.push("lo", Json::Float(a.lo));
                o.push("hi", Json::Float(a.hi));
                o.push("count", Json::Int(a.count as i64));
                o
            })
            .collect(),
    )
}

/// Render a verifier report as JSON.
pub fn report_json(report: &multitime_core::Report) -> Json {
    let mut o = Json::object();
    o.push("pass", Json::Bool(report.pass));
    o.push("max_abs_residual", Json::Float(report.max_abs_residual));
    o.push("rms_residual", Json::Float(report.rms_residual));
    o.push(
        "points_evaluated",
        Json::Int(report.points_evaluated as i64),
    );
    o.push("points_masked", Json::Int(report.points_masked as i64));
    o.push("tolerance", Json::Float(report.tolerance));
    o.push("grid", axes_json(&report.axes));
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(-1.0), "-1.0000000000000000e0");
        assert_eq!(fmt_float(f64::INFINITY), "\"inf\"");
    }

    #[test]
    fn object_order_preserved() {
        let mut o = Json::object();
        o.push("zebra", Json::Int(1));
        o.push("alpha", Json::Int(2));
        let s = o.render();
        assert!(s.find("zebra").unwrap() < s.find("alpha").unwrap());
    }

    #[test]
    fn escaping() {
        let s = Json::Str("a\"b\\c\nd".into()).render();
        assert_eq!(s, "\"a\\\"b\\\\c\\nd\"\n");
    }
}
