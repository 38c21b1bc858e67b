//! Artifact rendering. Floats carry 12 significant digits so reruns are
//! byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// `x` with 12 significant digits, shortest form.
pub fn fmt_float(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{}", sig12(x))
}

/// Rounds every non-integral number in a JSON tree.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            *v = serde_json::Number::from_f64(sig12(x)).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// One command result in both renderings.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    pub json: Value,
    pub csv: String,
}

impl Artifact {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut v = self.json.clone();
                round_floats(&mut v);
                serde_json::to_string_pretty(&v).expect("JSON value serializes") + "\n"
            }
            Format::Csv => self.csv.clone(),
        }
    }

    /// Writes `<dir>/<name>.json` and `<dir>/<name>.csv`, or prints the
    /// requested rendering to stdout.
    pub fn emit(&self, out: Option<&Path>, format: Format) -> std::io::Result<()> {
        match out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(format!("{}.json", self.name)), self.render(Format::Json))?;
                fs::write(dir.join(format!("{}.csv", self.name)), self.render(Format::Csv))?;
                Ok(())
            }
            None => std::io::stdout().write_all(self.render(format).as_bytes()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding() {
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_float(2.0), "2");
        let mut v = json!({"a": [0.1 + 0.2, 3], "b": 1e-20 / 3.0});
        round_floats(&mut v);
        assert_eq!(v.to_string(), r#"{"a":[0.3,3],"b":3.33333333333e-21}"#);
    }
}
