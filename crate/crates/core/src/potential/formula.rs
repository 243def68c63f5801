//! Quantifier-free, constant-free formulas over variables `x1..xk`, used as
//! weighted indicator potentials.
//!
//! Syntax: atoms `p(x1,x2)`, negation `!`/`~`, conjunction `&`, disjunction
//! `|`, implication `->` and equivalence `<->` (both right-associative and
//! binding loosest). Parentheses group.

use std::fmt;

use crate::error::{Error, Result};
use crate::relational::{Anonymizer, Fragment, Signature};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    /// `pred(vars..)`, variables as 0-based slots.
    Atom { pred: usize, vars: Vec<usize> },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn parse(text: &str, signature: &Signature) -> Result<Formula> {
        let tokens = tokenize(text)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            signature,
        };
        let f = p.implication()?;
        if p.pos != p.tokens.len() {
            return Err(Error::InvalidArgument(format!(
                "trailing input in formula `{text}`"
            )));
        }
        Ok(f)
    }

    /// Number of variable slots the formula needs (highest index + 1).
    pub fn arity(&self) -> usize {
        match self {
            Formula::Atom { vars, .. } => vars.iter().map(|v| v + 1).max().unwrap_or(0),
            Formula::Not(a) => a.arity(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    /// Evaluates with `atom(pred, slots)` giving the truth of each atom.
    pub fn eval(&self, atom: &impl Fn(usize, &[usize]) -> bool) -> bool {
        match self {
            Formula::Atom { pred, vars } => atom(*pred, vars),
            Formula::Not(a) => !a.eval(atom),
            Formula::And(a, b) => a.eval(atom) && b.eval(atom),
            Formula::Or(a, b) => a.eval(atom) || b.eval(atom),
            Formula::Implies(a, b) => !a.eval(atom) || b.eval(atom),
            Formula::Iff(a, b) => a.eval(atom) == b.eval(atom),
        }
    }

    pub fn display<'a>(&'a self, signature: &'a Signature) -> impl fmt::Display + 'a {
        FormulaDisplay(self, signature)
    }
}

struct FormulaDisplay<'a>(&'a Formula, &'a Signature);

impl<'a> fmt::Display for FormulaDisplay<'a> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = self.1;
        let sub = |x: &'a Formula| FormulaDisplay(x, sig);
        match self.0 {
            Formula::Atom { pred, vars } => {
                let v: Vec<String> = vars.iter().map(|v| format!("x{}", v + 1)).collect();
                write!(f, "{}({})", sig.predicates()[*pred].name, v.join(","))
            }
            Formula::Not(a) => write!(f, "!{}", sub(a)),
            Formula::And(a, b) => write!(f, "({} & {})", sub(a), sub(b)),
            Formula::Or(a, b) => write!(f, "({} | {})", sub(a), sub(b)),
            Formula::Implies(a, b) => write!(f, "({} -> {})", sub(a), sub(b)),
            Formula::Iff(a, b) => write!(f, "({} <-> {})", sub(a), sub(b)),
        }
    }
}

/// A formula with weight `w`: contributes `w / k!` per satisfying anonymization.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorPotential {
    pub formula: Formula,
    pub weight: f64,
    source: String,
}

impl IndicatorPotential {
    pub fn new(text: &str, weight: f64, signature: &Signature) -> Result<Self> {
        if !weight.is_finite() {
            return Err(Error::Numeric("indicator weight must be finite".into()));
        }
        let formula = Formula::parse(text, signature)?;
        Ok(IndicatorPotential {
            formula,
            weight,
            source: text.trim().to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn arity(&self) -> usize {
        self.formula.arity()
    }

    /// Truth of the formula on an anonymized code, variable `x{i+1}` read
    /// as slot `i`.
    pub fn holds_on_code(&self, layout: &crate::relational::CodeLayout, bit: impl Fn(usize) -> bool) -> bool {
        self.formula
            .eval(&|pred, slots| bit(layout.index(pred, slots)))
    }
}

/// `w` times the fraction of the fragment's anonymizations that satisfy the
/// formula, i.e. the fraction of injective variable assignments into the
/// fragment's constants under which it holds.
pub fn indicator_potential(fragment: &Fragment, ind: &IndicatorPotential) -> Result<f64> {
    let k = fragment.k();
    if ind.arity() > k {
        return Err(Error::InvalidArgument(format!(
            "formula uses {} variables but fragments have {k} constants",
            ind.arity()
        )));
    }
    let anon = Anonymizer::new(fragment.signature(), k);
    let codes = anon.anonymize(fragment);
    let sat = codes
        .iter()
        .filter(|c| ind.holds_on_code(anon.layout(), |j| c.bits.contains(j)))
        .count();
    Ok(ind.weight * sat as f64 / codes.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Not,
    And,
    Or,
    Implies,
    Iff,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let rest: String = chars[i..].iter().take(3).collect();
        if c.is_whitespace() {
            i += 1;
        } else if rest.starts_with("<->") {
            out.push(Tok::Iff);
            i += 3;
        } else if rest.starts_with("->") {
            out.push(Tok::Implies);
            i += 2;
        } else if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else {
            out.push(match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '!' | '~' => Tok::Not,
                '&' => Tok::And,
                '|' => Tok::Or,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "unexpected character `{c}` in formula"
                    )))
                }
            });
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    signature: &'a Signature,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "expected {t:?} at token {} of formula",
                self.pos
            )))
        }
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            Ok(Formula::Implies(Box::new(lhs), Box::new(self.implication()?)))
        } else if self.eat(&Tok::Iff) {
            Ok(Formula::Iff(Box::new(lhs), Box::new(self.implication()?)))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut f = self.conjunction()?;
        while self.eat(&Tok::Or) {
            f = Formula::Or(Box::new(f), Box::new(self.conjunction()?));
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while self.eat(&Tok::And) {
            f = Formula::And(Box::new(f), Box::new(self.unary()?));
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.eat(&Tok::Not) {
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let f = self.implication()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula> {
        let Some(Tok::Ident(name)) = self.peek().cloned() else {
            return Err(Error::InvalidArgument(format!(
                "expected a predicate at token {} of formula",
                self.pos
            )));
        };
        self.pos += 1;
        let pred = self
            .signature
            .predicate_id(&name)
            .ok_or_else(|| Error::SignatureMismatch(format!("unknown predicate `{name}`")))?;
        self.expect(Tok::LParen)?;
        let mut vars = Vec::new();
        loop {
            let Some(Tok::Ident(v)) = self.peek().cloned() else {
                return Err(Error::InvalidArgument("expected a variable".into()));
            };
            self.pos += 1;
            vars.push(parse_var(&v)?);
            if self.eat(&Tok::RParen) {
                break;
            }
            self.expect(Tok::Comma)?;
        }
        let arity = self.signature.arity(pred);
        if vars.len() != arity {
            return Err(Error::Arity {
                pred: name,
                expected: arity,
                found: vars.len(),
            });
        }
        Ok(Formula::Atom { pred, vars })
    }
}

fn parse_var(v: &str) -> Result<usize> {
    match v.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
        Some(i) if i >= 1 => Ok(i - 1),
        _ => Err(Error::Unsupported(format!(
            "`{v}` is not a variable x1, x2, ..; formulas may not contain constants"
        ))),
    }
}
