use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Writes `value` as indented JSON with every floating-point number in
/// 17-significant-digit scientific form. Object keys keep serde_json's
/// sorted order, so equal values give equal bytes.
pub fn to_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize to JSON")
}

/// `{:.16e}` is exactly 17 significant digits and round-trips every `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// SHA-256 of the canonical JSON form, in hex.
pub fn hash(value: &Value) -> String {
    Sha256::digest(to_string(value).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => out.push_str(&u.to_string()),
            (None, Some(i), _) => out.push_str(&i.to_string()),
            (None, None, Some(f)) => out.push_str(&format_f64(f)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                write_value(out, item, depth + 1);
            }
            newline(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, v, depth + 1);
            }
            newline(out, depth);
            out.push('}');
        }
    }
}

fn newline(out: &mut String, depth: usize) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(-0.5), "-5.0000000000000000e-1");
        let text = to_string(&json!({"e": -0.125, "n": 3}));
        assert!(text.contains("\"e\": -1.2500000000000000e-1"));
        assert!(text.contains("\"n\": 3"));
    }

    #[test]
    fn output_is_valid_json() {
        let v = json!({"a": [1.5, null, "x\"y"], "b": {}, "c": []});
        let back: Value = serde_json::from_str(&to_string(&v)).unwrap();
        assert_eq!(back, v);
    }

    proptest! {
        #[test]
        fn formatted_floats_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = format_f64(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            prop_assert_eq!(digits, 17);
        }
    }
}
