use optkit::Rational;
use serde_json::{json, Map, Value};

/// What a solver run prints, in text or JSON.
#[derive(Debug, Default)]
pub struct Report {
    pub method: String,
    pub status: String,
    pub objective: Option<Rational>,
    pub vars: Vec<(String, Rational)>,
    pub fields: Vec<(String, Value)>,
    pub verified: Option<bool>,
    pub trace: Vec<String>,
    pub exit: i32,
}

impl Report {
    pub fn new(method: &str) -> Self {
        Report { method: method.to_string(), ..Report::default() }
    }

    pub fn field(&mut self, key: &str, value: impl Into<Value>) {
        self.fields.push((key.to_string(), value.into()));
    }

    pub fn text(&self) -> String {
        let mut out = format!("method: {}\nstatus: {}\n", self.method, self.status);
        if let Some(v) = &self.objective {
            out.push_str(&format!("objective: {v}\n"));
        }
        for (name, v) in &self.vars {
            out.push_str(&format!("{name} = {v}\n"));
        }
        for (k, v) in &self.fields {
            match v {
                Value::String(s) => out.push_str(&format!("{k}: {s}\n")),
                Value::Array(items) => {
                    let items: Vec<String> =
                        items.iter().map(|i| i.as_str().map_or_else(|| i.to_string(), str::to_string)).collect();
                    out.push_str(&format!("{k}: {}\n", items.join(", ")));
                }
                v => out.push_str(&format!("{k}: {v}\n")),
            }
        }
        if let Some(ok) = self.verified {
            out.push_str(&format!("verified: {ok}\n"));
        }
        if !self.trace.is_empty() {
            out.push_str("trace:\n");
            for line in &self.trace {
                out.push_str(&format!("  {line}\n"));
            }
        }
        out
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(&self.value()).expect("plain JSON") + "\n"
    }

    pub fn value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("method".into(), json!(self.method));
        obj.insert("status".into(), json!(self.status));
        if let Some(v) = &self.objective {
            obj.insert("objective".into(), json!(v.to_string()));
        }
        if !self.vars.is_empty() {
            let vars: Map<String, Value> = self.vars.iter().map(|(k, v)| (k.clone(), json!(v.to_string()))).collect();
            obj.insert("variables".into(), Value::Object(vars));
        }
        for (k, v) in &self.fields {
            obj.insert(k.clone(), v.clone());
        }
        if let Some(ok) = self.verified {
            obj.insert("verified".into(), json!(ok));
        }
        if !self.trace.is_empty() {
            obj.insert("trace".into(), json!(self.trace));
        }
        Value::Object(obj)
    }
}
