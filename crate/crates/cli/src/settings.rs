//! Effective run configuration. Each key is resolved from its command-line
//! flag, then the config file, then a built-in default.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use noncolliding::io::{parse_config, ConfigMap};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SEED_ENV: &str = "NCBM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Flag,
    File,
    Env,
    Random,
    Default,
}

impl Source {
    fn label(self) -> &'static str {
        match self {
            Source::Flag => "flag",
            Source::File => "file",
            Source::Env => "env",
            Source::Random => "random",
            Source::Default => "default",
        }
    }
}

#[derive(Debug, Default)]
pub struct Settings {
    file: ConfigMap,
    used: BTreeSet<String>,
    entries: Vec<(String, String, Source)>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", p.display())))?;
                parse_config(&text).map_err(|e| CliError::Usage(format!("config file {}: {e}", p.display())))?
            }
            None => ConfigMap::new(),
        };
        Ok(Self { file, ..Self::default() })
    }

    fn file_value<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        let Some(raw) = self.file.get(key) else { return Ok(None) };
        self.used.insert(key.to_string());
        raw.parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {raw:?}")))
    }

    fn record<T: Display>(&mut self, key: &str, value: &T, source: Source) {
        self.entries.push((key.to_string(), value.to_string(), source));
    }

    /// Resolves `key`, falling back to `default`.
    pub fn value<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        let (v, source) = match (flag, self.file_value(key)?) {
            (Some(v), _) => (v, Source::Flag),
            (None, Some(v)) => (v, Source::File),
            (None, None) => (default, Source::Default),
        };
        self.record(key, &v, source);
        Ok(v)
    }

    /// Resolves `key` without a default; unset keys are not echoed.
    pub fn optional<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        let resolved = match (flag, self.file_value(key)?) {
            (Some(v), _) => Some((v, Source::Flag)),
            (None, Some(v)) => Some((v, Source::File)),
            (None, None) => None,
        };
        Ok(resolved.map(|(v, source)| {
            self.record(key, &v, source);
            v
        }))
    }

    pub fn required<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError> {
        self.optional(key, flag)?.ok_or_else(|| CliError::Usage(format!("missing required setting --{key}")))
    }

    /// Flag, then file, then the environment, then a fresh random seed.
    pub fn seed(&mut self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = flag {
            self.record("seed", &s, Source::Flag);
            return Ok(s);
        }
        if let Some(s) = self.file_value::<u64>("seed")? {
            self.record("seed", &s, Source::File);
            return Ok(s);
        }
        if let Ok(raw) = std::env::var(SEED_ENV) {
            let s = raw.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}: cannot parse {raw:?} as a seed")))?;
            self.record("seed", &s, Source::Env);
            return Ok(s);
        }
        let s: u64 = rand::random();
        self.record("seed", &s, Source::Random);
        Ok(s)
    }

    /// Rejects config-file keys that the command never asked for.
    pub fn finish(&self) -> Result<(), CliError> {
        let unused: Vec<&str> = self.file.keys().filter(|k| !self.used.contains(*k)).map(String::as_str).collect();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!("config file keys not used by this command: {}", unused.join(", "))))
        }
    }

    /// `key = value` lines, readable back as a config file.
    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v, _)| format!("{k} = {v}\n")).collect()
    }

    pub fn render_annotated(&self) -> String {
        self.entries.iter().map(|(k, v, s)| format!("  {k} = {v}  # {}\n", s.label())).collect()
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.render().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v, _) in &self.entries {
            m.insert(k.clone(), Value::String(v.clone()));
        }
        Value::Object(m)
    }

    /// Prints the effective configuration and digest to stderr.
    pub fn echo(&self, command: &str) {
        eprintln!("ncbm {command}: effective configuration (digest {})", self.digest());
        eprint!("{}", self.render_annotated());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_file(text: &str) -> Settings {
        Settings { file: parse_config(text).unwrap(), ..Settings::default() }
    }

    #[test]
    fn precedence() {
        let mut s = with_file("n = 3\nhorizon = 2\n");
        assert_eq!(s.value("n", Some(5usize), 2).unwrap(), 5);
        assert_eq!(s.value("horizon", None, 1.0).unwrap(), 2.0);
        assert_eq!(s.value("steps", None, 64usize).unwrap(), 64);
        assert_eq!(s.entries.iter().map(|e| e.2).collect::<Vec<_>>(), [Source::Flag, Source::File, Source::Default]);
        assert!(s.finish().is_ok());
        assert_eq!(s.render(), "n = 5\nhorizon = 2\nsteps = 64\n");
    }

    #[test]
    fn unused_and_bad_keys() {
        let mut s = with_file("n = x\nextra = 1\n");
        assert!(s.value("n", None, 2usize).is_err());
        assert!(s.finish().unwrap_err().to_string().contains("extra"));
        let mut s = with_file("");
        assert!(s.required::<f64>("t", None).is_err());
    }

    #[test]
    fn digest_tracks_values() {
        let mut a = with_file("");
        a.value("n", Some(2usize), 2).unwrap();
        let mut b = with_file("");
        b.value("n", Some(3usize), 2).unwrap();
        assert_eq!(a.digest().len(), 16);
        assert_ne!(a.digest(), b.digest());
    }
}
