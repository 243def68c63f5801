//! Plain-text formats.
//!
//! Signature files list one `name/arity` per line plus an optional
//! `constants: a, b, c` line. World files list one ground atom per line,
//! `pred(c1,c2)`, optionally followed by a `1`/`0` label; a line `---`
//! separates worlds. `#` starts a comment everywhere.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::relational::{Atom, Predicate, Signature, World};

/// A parsed signature file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SignatureFile {
    pub predicates: Vec<Predicate>,
    pub constants: Option<Vec<String>>,
}

/// An atom as written in a file, before interning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawAtom {
    pub line: usize,
    pub pred: String,
    pub args: Vec<String>,
    pub label: Option<bool>,
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| !c.is_whitespace() && !"(),#/:".contains(c))
}

pub fn parse_signature(text: &str) -> Result<SignatureFile> {
    let mut out = SignatureFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        let ln = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("constants:") {
            if out.constants.is_some() {
                return Err(Error::parse(ln, "constants listed twice"));
            }
            let names: Vec<String> = rest
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            if let Some(bad) = names.iter().find(|n| !valid_name(n)) {
                return Err(Error::parse(ln, format!("invalid constant name `{bad}`")));
            }
            out.constants = Some(names);
            continue;
        }
        let (name, arity) = line
            .split_once('/')
            .ok_or_else(|| Error::parse(ln, "expected `name/arity`"))?;
        let name = name.trim();
        if !valid_name(name) {
            return Err(Error::parse(ln, format!("invalid predicate name `{name}`")));
        }
        let arity: usize = arity
            .trim()
            .parse()
            .map_err(|_| Error::parse(ln, format!("invalid arity `{}`", arity.trim())))?;
        out.predicates.push(Predicate {
            name: name.to_string(),
            arity,
        });
    }
    Ok(out)
}

pub fn parse_atom(text: &str, line: usize) -> Result<RawAtom> {
    let open = text.find('(').ok_or_else(|| Error::parse(line, "expected `pred(args)`"))?;
    let close = text.rfind(')').ok_or_else(|| Error::parse(line, "missing `)`"))?;
    if close < open {
        return Err(Error::parse(line, "mismatched parentheses"));
    }
    let pred = text[..open].trim();
    if !valid_name(pred) {
        return Err(Error::parse(line, format!("invalid predicate name `{pred}`")));
    }
    let args: Vec<String> = text[open + 1..close].split(',').map(|s| s.trim().to_string()).collect();
    if let Some(bad) = args.iter().find(|a| !valid_name(a)) {
        return Err(Error::parse(line, format!("invalid constant `{bad}`")));
    }
    let label = match text[close + 1..].trim() {
        "" => None,
        "1" => Some(true),
        "0" => Some(false),
        other => return Err(Error::parse(line, format!("unexpected `{other}` after atom"))),
    };
    Ok(RawAtom {
        line,
        pred: pred.to_string(),
        args,
        label,
    })
}

/// Worlds of a file, split on `---` lines.
pub fn parse_worlds(text: &str) -> Result<Vec<Vec<RawAtom>>> {
    let mut worlds = vec![Vec::new()];
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if line == "---" {
            worlds.push(Vec::new());
            continue;
        }
        worlds.last_mut().unwrap().push(parse_atom(line, i + 1)?);
    }
    if worlds.len() > 1 && worlds.last().is_some_and(Vec::is_empty) {
        worlds.pop();
    }
    Ok(worlds)
}

/// Builds a signature from a signature file and the atoms that will be
/// read against it. Without a constants line, constants are taken from
/// the atoms in order of first appearance. With `auto_extend`, unknown
/// predicates (arity from first use) and constants are appended instead of
/// rejected.
pub fn resolve_signature<'a>(
    file: Option<&SignatureFile>,
    atoms: impl IntoIterator<Item = &'a RawAtom>,
    auto_extend: bool,
) -> Result<Signature> {
    let mut preds: Vec<Predicate> = file.map(|f| f.predicates.clone()).unwrap_or_default();
    let fixed_constants = file.and_then(|f| f.constants.clone());
    let mut constants = fixed_constants.clone().unwrap_or_default();
    let mut seen: HashSet<String> = constants.iter().cloned().collect();
    let may_add_preds = file.is_none() || auto_extend;
    let may_add_consts = fixed_constants.is_none() || auto_extend;
    for a in atoms {
        match preds.iter().find(|p| p.name == a.pred) {
            Some(p) if p.arity != a.args.len() => {
                return Err(Error::Arity {
                    pred: a.pred.clone(),
                    expected: p.arity,
                    found: a.args.len(),
                })
            }
            Some(_) => {}
            None if may_add_preds => preds.push(Predicate {
                name: a.pred.clone(),
                arity: a.args.len(),
            }),
            None => return Err(Error::parse(a.line, format!("unknown predicate `{}`", a.pred))),
        }
        for c in &a.args {
            if !seen.contains(c) {
                if !may_add_consts {
                    return Err(Error::parse(a.line, format!("unknown constant `{c}`")));
                }
                seen.insert(c.clone());
                constants.push(c.clone());
            }
        }
    }
    Signature::new(constants, preds.into_iter().map(|p| (p.name, p.arity)))
}

pub fn intern(signature: &Signature, a: &RawAtom) -> Result<Atom> {
    let names: Vec<&str> = a.args.iter().map(String::as_str).collect();
    signature.atom(&a.pred, &names).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::parse(a.line, msg),
        other => other,
    })
}

/// World with exactly the listed atoms true; labels must be absent or `1`.
pub fn to_world(signature: &std::sync::Arc<Signature>, atoms: &[RawAtom]) -> Result<World> {
    let mut w = World::empty(signature.clone());
    for a in atoms {
        if a.label == Some(false) {
            return Err(Error::parse(a.line, "negative label in a world file"));
        }
        let atom = intern(signature, a)?;
        w.set(signature.atom_index(&atom), true);
    }
    Ok(w)
}

/// Atoms with labels; unlabeled lines count as positive.
pub fn to_labeled(signature: &Signature, atoms: &[RawAtom]) -> Result<Vec<(Atom, bool)>> {
    atoms
        .iter()
        .map(|a| Ok((intern(signature, a)?, a.label.unwrap_or(true))))
        .collect()
}

/// True atoms, one per line, in canonical order.
pub fn format_world(world: &World) -> String {
    let sig = world.signature();
    let mut s = String::new();
    for a in world.true_atoms() {
        let _ = writeln!(s, "{}", sig.display_atom(&a));
    }
    s
}

/// Worlds separated by `---` lines.
pub fn format_worlds<'a>(worlds: impl IntoIterator<Item = &'a World>) -> String {
    worlds.into_iter().map(format_world).collect::<Vec<_>>().join("---\n")
}

pub fn format_signature(signature: &Signature) -> String {
    signature.to_string()
}
