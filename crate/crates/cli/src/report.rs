//! The structured run report and its text and JSON renderings.

use fractvec_core::{Vector, C64};
use serde::Serialize;
use serde_json::{json, Value as Json};

/// How a reported number relates to the true quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Accuracy {
    /// Computed in closed form up to rounding.
    Exact,
    /// Within `bound` of the true value, in the norm the entry names.
    Bound(f64),
    /// No guarantee beyond what the entry states (e.g. a lower bound).
    Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Vector(Vec<C64>),
    Real(Vec<f64>),
    Count(usize),
    Flag(bool),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub accuracy: Accuracy,
}

/// Entries in the order the commands produced them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<Entry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

impl Report {
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn push(&mut self, key: impl Into<String>, value: Value, accuracy: Accuracy) {
        self.entries.push(Entry {
            key: key.into(),
            value,
            accuracy,
        });
    }

    pub fn number(&mut self, key: impl Into<String>, x: f64, accuracy: Accuracy) {
        self.push(key, Value::Number(x), accuracy);
    }

    pub fn vector(&mut self, key: impl Into<String>, v: &Vector, accuracy: Accuracy) {
        self.push(key, Value::Vector(v.iter().copied().collect()), accuracy);
    }

    pub fn count(&mut self, key: impl Into<String>, n: usize) {
        self.push(key, Value::Count(n), Accuracy::Exact);
    }

    pub fn flag(&mut self, key: impl Into<String>, b: bool) {
        self.push(key, Value::Flag(b), Accuracy::Exact);
    }

    pub fn text(&mut self, key: impl Into<String>, s: impl Into<String>) {
        self.push(key, Value::Text(s.into()), Accuracy::Exact);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Json => self.to_json(),
        }
    }

    /// One `key = value` line per entry, with `± bound` or `[estimate]`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.key);
            out.push_str(" = ");
            out.push_str(&text_value(&e.value));
            match e.accuracy {
                Accuracy::Exact => {}
                Accuracy::Bound(b) => {
                    out.push_str(" ± ");
                    out.push_str(&sig15(b));
                }
                Accuracy::Estimate => out.push_str(" [estimate]"),
            }
            out.push('\n');
        }
        out
    }

    /// A JSON array of `{key, value, error_bound?, estimate?}` objects.
    pub fn to_json(&self) -> String {
        let items: Vec<Json> = self
            .entries
            .iter()
            .map(|e| {
                let mut obj = serde_json::Map::new();
                obj.insert("key".into(), json!(e.key));
                obj.insert("value".into(), json_value(&e.value));
                match e.accuracy {
                    Accuracy::Exact => {}
                    Accuracy::Bound(b) => {
                        obj.insert("error_bound".into(), json_number(b));
                    }
                    Accuracy::Estimate => {
                        obj.insert("estimate".into(), json!(true));
                    }
                }
                Json::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&Json::Array(items)).expect("report serialization cannot fail");
        s.push('\n');
        s
    }
}

/// `x` rounded to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

/// `x` rounded to 15 significant digits, in positional notation for
/// moderate magnitudes and scientific notation otherwise.
pub fn sig15(x: f64) -> String {
    let r = round15(x);
    if r == 0.0 {
        return "0".into();
    }
    if !r.is_finite() {
        return format!("{r}");
    }
    let a = r.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn complex_text(z: C64) -> String {
    if z.im == 0.0 {
        sig15(z.re)
    } else {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        format!("{}{}{}i", sig15(z.re), sign, sig15(z.im.abs()))
    }
}

fn text_value(v: &Value) -> String {
    match v {
        Value::Number(x) => sig15(*x),
        Value::Vector(zs) => format!("({})", zs.iter().map(|z| complex_text(*z)).collect::<Vec<_>>().join(", ")),
        Value::Real(xs) => format!("[{}]", xs.iter().map(|x| sig15(*x)).collect::<Vec<_>>().join(", ")),
        Value::Count(n) => n.to_string(),
        Value::Flag(b) => b.to_string(),
        Value::Text(s) => s.clone(),
    }
}

fn json_number(x: f64) -> Json {
    serde_json::Number::from_f64(round15(x))
        .map(Json::Number)
        .unwrap_or_else(|| Json::String(format!("{x}")))
}

fn json_value(v: &Value) -> Json {
    match v {
        Value::Number(x) => json_number(*x),
        Value::Vector(zs) => Json::Array(
            zs.iter()
                .map(|z| {
                    if z.im == 0.0 {
                        json_number(z.re)
                    } else {
                        Json::Array(vec![json_number(z.re), json_number(z.im)])
                    }
                })
                .collect(),
        ),
        Value::Real(xs) => Json::Array(xs.iter().map(|x| json_number(*x)).collect()),
        Value::Count(n) => json!(n),
        Value::Flag(b) => json!(b),
        Value::Text(s) => json!(s),
    }
}
