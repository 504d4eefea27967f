//! Text file formats: `.tmem` memory images, technology libraries and
//! structural netlists.

use std::fmt::Write as _;

use art9_core::techmodel::{GateProps, StructuralNetlist, TechLibrary};
use art9_core::ternary::WORD_STATES;
use art9_core::{ProgramImage, Word9};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError { line, message: message.into() }
}

/// Strips a `#` comment and surrounding blanks.
fn content(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

/// Parses a `.tmem` image: an optional `base <index>` header, then one
/// nine-character trit word per line, most significant trit first.
pub fn parse_tmem(text: &str) -> Result<ProgramImage, FormatError> {
    let mut base = None;
    let mut words = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = content(raw);
        let n = n + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("base") {
            if base.is_some() || !words.is_empty() {
                return Err(err(n, "`base` must come once, before any word"));
            }
            let index: u16 = rest
                .trim()
                .parse()
                .map_err(|_| err(n, format!("bad base `{}`", rest.trim())))?;
            if i32::from(index) >= WORD_STATES {
                return Err(err(n, format!("base {index} outside the memory")));
            }
            base = Some(index);
            continue;
        }
        if line.len() != 9 {
            return Err(err(n, format!("expected a 9-trit word, found `{line}`")));
        }
        let w: Word9 = line.parse().map_err(|e| err(n, format!("{e}")))?;
        words.push(w);
    }
    let image = ProgramImage::new(base.unwrap_or(0), words);
    if !image.fits() {
        return Err(err(0, format!("{} words at base {} overflow the memory", image.len(), image.base)));
    }
    Ok(image)
}

/// Writes an image in `.tmem` form. The base header appears only when it is
/// not zero.
pub fn write_tmem(image: &ProgramImage) -> String {
    let mut out = String::new();
    if image.base != 0 {
        writeln!(out, "base {}", image.base).unwrap();
    }
    for w in &image.words {
        writeln!(out, "{w}").unwrap();
    }
    out
}

fn number(n: usize, key: &str, s: Option<&str>) -> Result<f64, FormatError> {
    let s = s.ok_or_else(|| err(n, format!("missing value for `{key}`")))?;
    let v: f64 = s.parse().map_err(|_| err(n, format!("bad number `{s}` for `{key}`")))?;
    if !v.is_finite() {
        return Err(err(n, format!("`{key}` must be finite")));
    }
    Ok(v)
}

fn keyword(n: usize, want: &str, got: Option<&str>) -> Result<(), FormatError> {
    match got {
        Some(k) if k == want => Ok(()),
        Some(k) => Err(err(n, format!("expected `{want}`, found `{k}`"))),
        None => Err(err(n, format!("expected `{want}`"))),
    }
}

/// Parses a technology library:
///
/// ```text
/// library <name> voltage <V>
/// gate <name> delay_ps <f> dyn_nw_per_mhz <f> static_nw <f>
/// ```
pub fn parse_tech_library(text: &str) -> Result<TechLibrary, FormatError> {
    let mut lib: Option<TechLibrary> = None;
    for (n, raw) in text.lines().enumerate() {
        let n = n + 1;
        let line = content(raw);
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("library") => {
                if lib.is_some() {
                    return Err(err(n, "second `library` line"));
                }
                let name = tok.next().ok_or_else(|| err(n, "missing library name"))?;
                keyword(n, "voltage", tok.next())?;
                let v = number(n, "voltage", tok.next())?;
                lib = Some(TechLibrary::new(name, v));
            }
            Some("gate") => {
                let lib = lib.as_mut().ok_or_else(|| err(n, "`gate` before `library`"))?;
                let name = tok.next().ok_or_else(|| err(n, "missing gate name"))?;
                keyword(n, "delay_ps", tok.next())?;
                let delay_ps = number(n, "delay_ps", tok.next())?;
                keyword(n, "dyn_nw_per_mhz", tok.next())?;
                let dyn_nw_per_mhz = number(n, "dyn_nw_per_mhz", tok.next())?;
                keyword(n, "static_nw", tok.next())?;
                let static_nw = number(n, "static_nw", tok.next())?;
                let props = GateProps { delay_ps, dyn_nw_per_mhz, static_nw };
                lib.add_gate(name, props).map_err(|e| err(n, e.to_string()))?;
            }
            Some(other) => return Err(err(n, format!("unknown directive `{other}`"))),
            None => unreachable!("blank lines are skipped"),
        }
        if let Some(extra) = tok.next() {
            return Err(err(n, format!("unexpected `{extra}`")));
        }
    }
    lib.ok_or_else(|| err(0, "no `library` line"))
}

/// Parses a structural netlist: `module <name>` headers, each followed by
/// indented `<gate> <count>` lines, and one `path <gate> <gate> ...` line.
pub fn parse_netlist(text: &str) -> Result<StructuralNetlist, FormatError> {
    let mut nl = StructuralNetlist::default();
    let mut current: Option<usize> = None;
    let mut seen_path = false;
    for (n, raw) in text.lines().enumerate() {
        let n = n + 1;
        let line = content(raw);
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok[0] {
            "module" => {
                let [_, name] = tok[..] else {
                    return Err(err(n, "expected `module <name>`"));
                };
                nl.add_module(name).map_err(|e| err(n, e.to_string()))?;
                current = Some(nl.modules.len() - 1);
            }
            "path" => {
                if seen_path {
                    return Err(err(n, "second `path` line"));
                }
                if tok.len() < 2 {
                    return Err(err(n, "empty critical path"));
                }
                seen_path = true;
                nl.critical_path = tok[1..].iter().map(|s| s.to_string()).collect();
            }
            gate => {
                let m = current.ok_or_else(|| err(n, format!("`{gate}` outside a module")))?;
                let [_, count] = tok[..] else {
                    return Err(err(n, "expected `<gate> <count>`"));
                };
                let count: u64 = count.parse().map_err(|_| err(n, format!("bad count `{count}`")))?;
                let counts = &mut nl.modules[m].1;
                if counts.insert(gate.to_string(), count).is_some() {
                    return Err(err(n, format!("gate `{gate}` listed twice in module")));
                }
            }
        }
    }
    if !seen_path {
        return Err(err(0, "no `path` line"));
    }
    Ok(nl)
}
