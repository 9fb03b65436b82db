use std::fmt::{self, Write as _};

/// Append-only event log: one `key=value` record per line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    text: String,
    records: usize,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `round=<round> kind=<kind>` followed by `fields`.
    pub fn record(&mut self, round: u64, kind: &str, fields: &[(&str, &dyn fmt::Display)]) {
        write!(self.text, "round={round} kind={kind}").unwrap();
        for (k, v) in fields {
            write!(self.text, " {k}={v}").unwrap();
        }
        self.text.push('\n');
        self.records += 1;
    }

    pub fn len(&self) -> usize {
        self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records == 0
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn lines_of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        let needle = format!(" kind={kind}");
        self.text.lines().filter(move |l| {
            l.find(&needle)
                .map(|i| l[i + needle.len()..].is_empty() || l[i + needle.len()..].starts_with(' '))
                .unwrap_or(false)
        })
    }
}

/// A flat report: ordered `key=value` pairs plus an optional CSV table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub title: String,
    pub fields: Vec<(String, String)>,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Report {
            title: title.to_string(),
            ..Default::default()
        }
    }

    pub fn field(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.csv_header = names.iter().map(|s| s.to_string()).collect();
    }

    pub fn row(&mut self, values: Vec<String>) {
        debug_assert_eq!(values.len(), self.csv_header.len());
        self.csv_rows.push(values);
    }

    /// `experiment=<title>` then each field on its own line.
    pub fn to_kv(&self) -> String {
        let mut s = format!("experiment={}\n", self.title);
        for (k, v) in &self.fields {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.csv_header.join(",");
        s.push('\n');
        for r in &self.csv_rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}
