//! Line-oriented run configuration: `key = value` pairs under optional
//! `[section]` headers, `#` comments.
//!
//! Values are numbers, booleans, bare words, quoted strings, or bracketed
//! lists of numbers. Parsing checks every key against the schema of the chosen
//! experiment kind and reports all problems at once.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::registry::{builtin, Registry};

pub const SECTIONS: [&str; 3] = ["params", "ensemble", "output"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Float,
    Int,
    Bool,
    Str,
    FloatList,
    IntList,
}

impl Ty {
    fn describe(self) -> &'static str {
        match self {
            Ty::Float => "a number",
            Ty::Int => "a non-negative integer",
            Ty::Bool => "true or false",
            Ty::Str => "a word or quoted string",
            Ty::FloatList => "a number or list of numbers",
            Ty::IntList => "an integer or list of integers",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Default {
    Required,
    Optional,
    /// Written in config syntax.
    Value(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeySpec {
    pub section: &'static str,
    pub key: &'static str,
    pub ty: Ty,
    pub default: Default,
}

pub const fn key(section: &'static str, key: &'static str, ty: Ty, default: Default) -> KeySpec {
    KeySpec {
        section,
        key,
        ty,
        default,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    Bool(bool),
    Str(String),
    FloatList(Vec<f64>),
    IntList(Vec<u64>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<T: fmt::Debug>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
            let parts: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
            write!(f, "[{}]", parts.join(", "))
        }
        match self {
            // Debug formatting of f64 is the shortest round-tripping form
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) if is_bare_word(s) => f.write_str(s),
            Value::Str(s) => write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
            Value::FloatList(xs) => list(f, xs),
            Value::IntList(xs) => list(f, xs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Syntax,
    UnknownKey,
    TypeMismatch,
    MissingKey,
    Duplicate,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub kind: ConfigErrorKind,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// A validated run configuration with every defaulted key filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: String,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Section name -> key -> value.
    pub sections: BTreeMap<String, BTreeMap<String, Value>>,
}

impl RunConfig {
    pub fn section(&self, name: &str) -> Section<'_> {
        Section {
            name: SECTIONS.iter().find(|s| **s == name).copied().unwrap_or("params"),
            values: self.sections.get(name),
        }
    }

    pub fn params(&self) -> Section<'_> {
        self.section("params")
    }

    pub fn ensemble(&self) -> Section<'_> {
        self.section("ensemble")
    }

    pub fn output(&self) -> Section<'_> {
        self.section("output")
    }

    /// Canonical text: root keys, then sections in fixed order with sorted
    /// keys. Parses back to an equal config.
    pub fn normalized(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kind = {}", self.kind);
        let _ = writeln!(out, "seed = {}", self.seed);
        if let Some(t) = self.threads {
            let _ = writeln!(out, "threads = {t}");
        }
        for name in SECTIONS {
            if let Some(values) = self.sections.get(name).filter(|v| !v.is_empty()) {
                let _ = writeln!(out, "\n[{name}]");
                for (k, v) in values {
                    let _ = writeln!(out, "{k} = {v}");
                }
            }
        }
        out
    }
}

/// Typed read access to one section. Lookups of keys outside the schema are
/// programming errors and panic.
#[derive(Debug, Clone, Copy)]
pub struct Section<'a> {
    name: &'static str,
    values: Option<&'a BTreeMap<String, Value>>,
}

impl<'a> Section<'a> {
    pub fn get(&self, key: &str) -> Option<&'a Value> {
        self.values.and_then(|v| v.get(key))
    }

    fn expect(&self, key: &str) -> &'a Value {
        self.get(key)
            .unwrap_or_else(|| panic!("`{key}` missing from [{}] after validation", self.name))
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.opt_f64(key).unwrap_or_else(|| panic!("`{key}` is not a number"))
    }

    pub fn opt_f64(&self, key: &str) -> Option<f64> {
        match self.get(key)? {
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn usize(&self, key: &str) -> usize {
        match self.expect(key) {
            Value::Int(n) => *n as usize,
            v => panic!("`{key}` = {v} is not an integer"),
        }
    }

    pub fn bool(&self, key: &str) -> bool {
        match self.expect(key) {
            Value::Bool(b) => *b,
            v => panic!("`{key}` = {v} is not a boolean"),
        }
    }

    pub fn str(&self, key: &str) -> &'a str {
        self.opt_str(key).unwrap_or_else(|| panic!("`{key}` is not a string"))
    }

    pub fn opt_str(&self, key: &str) -> Option<&'a str> {
        match self.get(key)? {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn f64s(&self, key: &str) -> &'a [f64] {
        match self.expect(key) {
            Value::FloatList(xs) => xs,
            v => panic!("`{key}` = {v} is not a list"),
        }
    }

    pub fn usizes(&self, key: &str) -> Vec<usize> {
        match self.expect(key) {
            Value::IntList(xs) => xs.iter().map(|&n| n as usize).collect(),
            v => panic!("`{key}` = {v} is not a list"),
        }
    }
}

// ---------------------------------------------------------------------------
// lexing

#[derive(Debug, Clone, PartialEq)]
enum Raw {
    Number(String),
    Word(String),
    Quoted(String),
    Bool(bool),
    List(Vec<Raw>),
}

impl Raw {
    fn describe(&self) -> String {
        match self {
            Raw::Number(s) => format!("number {s}"),
            Raw::Word(s) => format!("word `{s}`"),
            Raw::Quoted(s) => format!("string \"{s}\""),
            Raw::Bool(b) => format!("boolean {b}"),
            Raw::List(_) => "list".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    section: &'static str,
    key: String,
    raw: Raw,
}

fn is_bare_word(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || "_-./".contains(c))
        && !matches!(lex_scalar(s), Ok(Raw::Number(_)) | Ok(Raw::Bool(_)))
}

fn lex_scalar(s: &str) -> Result<Raw, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("missing value".into());
    }
    if let Some(rest) = s.strip_prefix('"') {
        let mut out = String::new();
        let mut chars = rest.chars();
        while let Some(c) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some(e @ ('\\' | '"')) => out.push(e),
                    Some(e) => return Err(format!("unknown escape `\\{e}`")),
                    None => return Err("unterminated string".into()),
                },
                '"' => {
                    return if chars.as_str().trim().is_empty() {
                        Ok(Raw::Quoted(out))
                    } else {
                        Err("text after closing quote".into())
                    };
                }
                c => out.push(c),
            }
        }
        return Err("unterminated string".into());
    }
    match s {
        "true" => return Ok(Raw::Bool(true)),
        "false" => return Ok(Raw::Bool(false)),
        _ => {}
    }
    let numeric = s.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+' || c == '.');
    if numeric && s.parse::<f64>().is_ok_and(f64::is_finite) {
        return Ok(Raw::Number(s.to_string()));
    }
    if s.contains(char::is_whitespace) {
        return Err(format!("`{s}` contains spaces; quote it"));
    }
    Ok(Raw::Word(s.to_string()))
}

fn lex_value(s: &str) -> Result<Raw, String> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('[') {
        let inner = inner
            .strip_suffix(']')
            .ok_or_else(|| "unterminated list".to_string())?;
        if inner.trim().is_empty() {
            return Ok(Raw::List(Vec::new()));
        }
        return inner.split(',').map(lex_scalar).collect::<Result<_, _>>().map(Raw::List);
    }
    lex_scalar(s)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if quoted => escaped = true,
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

// ---------------------------------------------------------------------------
// typing

fn coerce(raw: &Raw, ty: Ty) -> Option<Value> {
    let float = |r: &Raw| match r {
        Raw::Number(s) => s.parse::<f64>().ok(),
        _ => None,
    };
    let int = |r: &Raw| match r {
        Raw::Number(s) => s.parse::<u64>().ok(),
        _ => None,
    };
    let items = |r: &Raw| match r {
        Raw::List(xs) => xs.clone(),
        r => vec![r.clone()],
    };
    match ty {
        Ty::Float => float(raw).map(Value::Float),
        Ty::Int => int(raw).map(Value::Int),
        Ty::Bool => match raw {
            Raw::Bool(b) => Some(Value::Bool(*b)),
            _ => None,
        },
        Ty::Str => match raw {
            Raw::Word(s) | Raw::Quoted(s) => Some(Value::Str(s.clone())),
            _ => None,
        },
        Ty::FloatList => items(raw).iter().map(float).collect::<Option<_>>().map(Value::FloatList),
        Ty::IntList => items(raw).iter().map(int).collect::<Option<_>>().map(Value::IntList),
    }
}

fn default_value(spec: &KeySpec) -> Option<Value> {
    match spec.default {
        Default::Value(text) => {
            let raw = lex_value(text).expect("schema defaults are valid syntax");
            Some(coerce(&raw, spec.ty).expect("schema defaults match their type"))
        }
        _ => None,
    }
}

/// Parses a configuration whose root section names its `kind`.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    parse_config_as(text, None)
}

/// Parses a configuration for `kind`. A `kind` key in the text must agree.
pub fn parse_config_as(text: &str, kind: Option<&str>) -> Result<RunConfig, ConfigErrors> {
    parse_with(&builtin(), text, kind)
}

pub fn parse_with(registry: &Registry, text: &str, kind: Option<&str>) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut err = |line: usize, kind: ConfigErrorKind, message: String| {
        errors.push(ConfigError { line, kind, message })
    };

    // pass 1: syntax
    let mut section: &'static str = "";
    let mut section_lines: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut entries: Vec<Entry> = Vec::new();
    let n_lines = text.lines().count();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = strip_comment(line).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            match name.strip_suffix(']').map(str::trim) {
                Some(name) => match SECTIONS.iter().find(|s| **s == name) {
                    Some(s) => {
                        section = s;
                        section_lines.entry(s).or_insert(ln);
                    }
                    None => {
                        err(
                            ln,
                            ConfigErrorKind::UnknownKey,
                            format!("unknown section [{name}]; expected one of {}", SECTIONS.join(", ")),
                        );
                        // skip its keys rather than misfiling them
                        section = "?";
                    }
                },
                None => err(ln, ConfigErrorKind::Syntax, format!("malformed section header `{line}`")),
            }
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            err(ln, ConfigErrorKind::Syntax, format!("expected `key = value`, got `{line}`"));
            continue;
        };
        let k = k.trim();
        if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            err(ln, ConfigErrorKind::Syntax, format!("invalid key `{k}`"));
            continue;
        }
        match lex_value(v) {
            Ok(raw) if section != "?" => entries.push(Entry {
                line: ln,
                section,
                key: k.to_string(),
                raw,
            }),
            Ok(_) => {}
            Err(m) => err(ln, ConfigErrorKind::Syntax, format!("`{k}`: {m}")),
        }
    }

    // root keys
    let mut root_kind: Option<(usize, String)> = None;
    let mut seed = 1u64;
    let mut threads = None;
    let mut rest = Vec::with_capacity(entries.len());
    for e in entries {
        if !e.section.is_empty() {
            rest.push(e);
            continue;
        }
        match e.key.as_str() {
            "kind" => match &e.raw {
                Raw::Word(s) | Raw::Quoted(s) => root_kind = Some((e.line, s.clone())),
                r => err(
                    e.line,
                    ConfigErrorKind::TypeMismatch,
                    format!("`kind` expects an experiment name, got {}", r.describe()),
                ),
            },
            "seed" => match coerce(&e.raw, Ty::Int) {
                Some(Value::Int(n)) => seed = n,
                _ => err(
                    e.line,
                    ConfigErrorKind::TypeMismatch,
                    format!("`seed` expects {}, got {}", Ty::Int.describe(), e.raw.describe()),
                ),
            },
            "threads" => match coerce(&e.raw, Ty::Int) {
                Some(Value::Int(n)) if n > 0 => threads = Some(n as usize),
                _ => err(
                    e.line,
                    ConfigErrorKind::TypeMismatch,
                    format!("`threads` expects a positive integer, got {}", e.raw.describe()),
                ),
            },
            // parameters may sit in the root section
            _ => rest.push(Entry {
                section: "params",
                ..e
            }),
        }
    }

    let kind = match (kind, &root_kind) {
        (Some(k), Some((ln, rk))) if k != rk => {
            err(
                *ln,
                ConfigErrorKind::Invalid,
                format!("config is for kind `{rk}` but `{k}` was requested"),
            );
            k.to_string()
        }
        (Some(k), _) => k.to_string(),
        (None, Some((_, rk))) => rk.clone(),
        (None, None) => {
            err(1, ConfigErrorKind::MissingKey, "missing required key `kind`".into());
            return Err(ConfigErrors(errors));
        }
    };
    let Some(experiment) = registry.experiment(&kind) else {
        let ln = root_kind.map(|(l, _)| l).unwrap_or(1);
        err(
            ln,
            ConfigErrorKind::Invalid,
            format!("unknown kind `{kind}`; expected one of {}", registry.kinds().join(", ")),
        );
        return Err(ConfigErrors(errors));
    };

    // the family selector decides the remaining keys
    let selector = experiment.selector().and_then(|(sec, k)| {
        rest.iter()
            .find(|e| e.section == sec && e.key == k)
            .map(|e| match &e.raw {
                Raw::Word(s) | Raw::Quoted(s) => (e.line, Some(s.clone())),
                _ => (e.line, None),
            })
            .or_else(|| {
                experiment
                    .schema(None)
                    .ok()?
                    .iter()
                    .find(|s| s.section == sec && s.key == k)
                    .and_then(default_value)
                    .map(|v| match v {
                        Value::Str(s) => (0, Some(s)),
                        _ => (0, None),
                    })
            })
    });
    let schema = match experiment.schema(selector.as_ref().and_then(|(_, s)| s.as_deref())) {
        Ok(s) => s,
        Err(m) => {
            err(selector.map(|(l, _)| l).unwrap_or(1), ConfigErrorKind::Invalid, m);
            experiment.schema(None).unwrap_or_default()
        }
    };

    let mut sections: BTreeMap<String, BTreeMap<String, Value>> = BTreeMap::new();
    let mut seen: BTreeMap<(&str, String), usize> = BTreeMap::new();
    for e in &rest {
        if let Some(first) = seen.insert((e.section, e.key.clone()), e.line) {
            err(
                e.line,
                ConfigErrorKind::Duplicate,
                format!("duplicate key `{}` in [{}] (first set at line {first})", e.key, e.section),
            );
            continue;
        }
        let Some(spec) = schema.iter().find(|s| s.section == e.section && s.key == e.key) else {
            let elsewhere: Vec<&str> = schema.iter().filter(|s| s.key == e.key).map(|s| s.section).collect();
            let hint = if elsewhere.is_empty() {
                String::new()
            } else {
                format!(" (it belongs in [{}])", elsewhere.join("], ["))
            };
            err(
                e.line,
                ConfigErrorKind::UnknownKey,
                format!("unknown key `{}` in [{}] for kind `{kind}`{hint}", e.key, e.section),
            );
            continue;
        };
        match coerce(&e.raw, spec.ty) {
            Some(v) => {
                sections.entry(e.section.to_string()).or_default().insert(e.key.clone(), v);
            }
            None => err(
                e.line,
                ConfigErrorKind::TypeMismatch,
                format!("`{}` expects {}, got {}", e.key, spec.ty.describe(), e.raw.describe()),
            ),
        }
    }
    for spec in &schema {
        // a key that was set but failed to type-check is already reported
        let present = sections.get(spec.section).is_some_and(|s| s.contains_key(spec.key))
            || seen.contains_key(&(spec.section, spec.key.to_string()));
        if present {
            continue;
        }
        match spec.default {
            Default::Required => {
                let ln = section_lines.get(spec.section).copied().unwrap_or(n_lines.max(1));
                err(
                    ln,
                    ConfigErrorKind::MissingKey,
                    format!("missing required key `{}` in [{}]", spec.key, spec.section),
                );
            }
            Default::Optional => {}
            Default::Value(_) => {
                let v = default_value(spec).expect("default present");
                sections.entry(spec.section.to_string()).or_default().insert(spec.key.to_string(), v);
            }
        }
    }

    if errors.is_empty() {
        Ok(RunConfig {
            kind,
            seed,
            threads,
            sections,
        })
    } else {
        errors.sort_by_key(|e| e.line);
        Err(ConfigErrors(errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars() {
        assert_eq!(lex_value("2").unwrap(), Raw::Number("2".into()));
        assert_eq!(lex_value("-1.5e-3").unwrap(), Raw::Number("-1.5e-3".into()));
        assert_eq!(lex_value("hat").unwrap(), Raw::Word("hat".into()));
        assert_eq!(lex_value("nan").unwrap(), Raw::Word("nan".into()));
        assert_eq!(lex_value("\"a \\\"b\\\"\"").unwrap(), Raw::Quoted("a \"b\"".into()));
        assert_eq!(
            lex_value("[1, 2.5]").unwrap(),
            Raw::List(vec![Raw::Number("1".into()), Raw::Number("2.5".into())])
        );
        assert!(lex_value("\"open").is_err());
    }

    #[test]
    fn comments_respect_quotes() {
        assert_eq!(strip_comment("a = \"x#y\" # c"), "a = \"x#y\" ");
    }

    #[test]
    fn ints_do_not_take_fractions() {
        assert_eq!(coerce(&Raw::Number("3".into()), Ty::Int), Some(Value::Int(3)));
        assert_eq!(coerce(&Raw::Number("3.5".into()), Ty::Int), None);
        assert_eq!(coerce(&Raw::Number("3".into()), Ty::Float), Some(Value::Float(3.0)));
    }

    #[test]
    fn values_print_back_to_themselves() {
        for v in [
            Value::Float(0.1),
            Value::Float(1e-300),
            Value::Str("two words".into()),
            Value::Str("12".into()),
            Value::FloatList(vec![0.2, 0.1, 0.05]),
        ] {
            let raw = lex_value(&v.to_string()).unwrap();
            let ty = match v {
                Value::Float(_) => Ty::Float,
                Value::Str(_) => Ty::Str,
                _ => Ty::FloatList,
            };
            assert_eq!(coerce(&raw, ty), Some(v));
        }
    }
}
