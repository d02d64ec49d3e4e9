//! Report emission: plain `key = value` text with an echoed-config header,
//! and simple CSV tables. No binary formats; floats use Rust's shortest
//! round-trip formatting so reports are byte-stable.

use std::fmt::Write as _;

pub fn version_string() -> String {
    format!("satgen {}", env!("CARGO_PKG_VERSION"))
}

/// A text report: `# key = value` header lines (tool version, then the
/// configuration needed to re-run), followed by result lines.
pub struct TextReport {
    header: Vec<(String, String)>,
    body: Vec<(String, String)>,
}

impl TextReport {
    pub fn new(command: &str) -> TextReport {
        let mut r = TextReport {
            header: Vec::new(),
            body: Vec::new(),
        };
        r.header.push(("version".into(), version_string()));
        r.header.push(("command".into(), command.to_string()));
        r
    }

    pub fn config(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.header.push((key.to_string(), value.to_string()));
        self
    }

    pub fn result(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.body.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(out, "# {k} = {v}");
        }
        for (k, v) in &self.body {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Minimal CSV writer; fields must not contain commas or newlines (ours
/// never do: identifiers match a restricted charset and numbers are plain).
pub struct Csv {
    out: String,
    columns: usize,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Csv {
        let mut csv = Csv {
            out: String::new(),
            columns: columns.len(),
        };
        csv.out.push_str(&columns.join(","));
        csv.out.push('\n');
        csv
    }

    /// Prepend-style comment rows for config echo (`# key = value`).
    pub fn comment(&mut self, text: &str) -> &mut Self {
        let mut prefixed = String::new();
        let _ = writeln!(prefixed, "# {text}");
        self.out.insert_str(0, &prefixed);
        self
    }

    pub fn row(&mut self, fields: &[String]) -> &mut Self {
        debug_assert_eq!(fields.len(), self.columns);
        self.out.push_str(&fields.join(","));
        self.out.push('\n');
        self
    }

    pub fn render(&self) -> &str {
        &self.out
    }
}
