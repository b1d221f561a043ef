//! Scenario files (`key = value` lines) and their merge with flags.

use std::collections::BTreeMap;
use std::fmt::{self, Display};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use tangle_sim::SelectorKind;

/// Parsed scenario file. Blank lines and `#` comments are ignored; keys are
/// case-insensitive and may appear once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioFile {
    entries: BTreeMap<String, String>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value, got {line:?}", n + 1))?;
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            if key.is_empty() {
                bail!("line {}: empty key", n + 1);
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                bail!("line {}: duplicate key '{key}'", n + 1);
            }
        }
        Ok(ScenarioFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Resolves each setting as flag, else file, else default, and remembers
/// the outcome for `config_used.txt`.
#[derive(Debug)]
pub struct Resolver {
    file: ScenarioFile,
    used: Vec<(String, String)>,
}

impl Resolver {
    /// Fails on any file key the current subcommand does not take.
    pub fn new(file: ScenarioFile, command: &str, allowed: &[&str]) -> Result<Self> {
        if let Some(bad) = file.keys().find(|k| !allowed.contains(k)) {
            bail!("unknown key '{bad}' for {command} (accepted: {})", allowed.join(", "));
        }
        Ok(Resolver { file, used: vec![("command".into(), command.into())] })
    }

    fn file_value<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.file.entries.get(key).map(|v| v.parse::<T>().map_err(|e| anyhow!("config key '{key}': {e}"))).transpose()
    }

    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => v,
            None => self.file_value(key)?.unwrap_or(default),
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &v {
            self.record(key, v);
        }
        Ok(v)
    }

    /// Selector name and alpha together; see [`selector_from`].
    pub fn selector(&mut self, name: Option<String>, alpha: Option<f64>, default: &str) -> Result<SelectorKind> {
        let name = match name {
            Some(n) => n,
            None => self.file_value("selector")?.unwrap_or_else(|| default.to_string()),
        };
        let alpha = match alpha {
            Some(a) => Some(a),
            None => self.file_value("alpha")?,
        };
        let kind = selector_from(&name, alpha)?;
        self.record("selector", &kind.label());
        self.record("alpha", &kind.alpha());
        Ok(kind)
    }

    pub fn record(&mut self, key: &str, value: &dyn Display) {
        self.used.push((key.to_string(), value.to_string()));
    }

    pub fn used(&self) -> &[(String, String)] {
        &self.used
    }
}

/// Combines a selector name with an optional alpha. `urts` and `urw` take
/// no (or zero) alpha, `brw` needs a positive one, `walk` takes any, and
/// the inline forms `brw:<alpha>` / `walk:<alpha>` must agree with `alpha`.
pub fn selector_from(name: &str, alpha: Option<f64>) -> Result<SelectorKind> {
    let lower = name.trim().to_ascii_lowercase();
    let kind = match lower.as_str() {
        "urts" | "urw" => {
            if alpha.is_some_and(|a| a != 0.0) {
                bail!("alpha does not apply to selector '{lower}'");
            }
            lower.parse::<SelectorKind>()?
        }
        "walk" => SelectorKind::walk(alpha.unwrap_or(0.0))?,
        "brw" => match alpha {
            Some(a) if a > 0.0 => SelectorKind::walk(a)?,
            _ => bail!("selector 'brw' needs alpha > 0"),
        },
        _ => {
            let kind: SelectorKind = lower.parse()?;
            if alpha.is_some_and(|a| a != kind.alpha()) {
                bail!("alpha {} conflicts with selector '{lower}'", alpha.unwrap_or_default());
            }
            kind
        }
    };
    Ok(kind)
}

/// Comma-separated list, e.g. `10,100,1000`.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let items = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<T>().map_err(|e| format!("bad list item '{p}': {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if items.is_empty() {
            return Err("empty list".into());
        }
        Ok(List(items))
    }
}

impl<T: Display> Display for List<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}
