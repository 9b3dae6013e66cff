//! Reader for flat gate-level structural Verilog.
//!
//! Covers the netlist style of the public ISCAS-85 and EPFL distributions:
//! one module, scalar `input`/`output`/`wire` declarations, primitive gate
//! instances (`and nand or nor xor xnor not buf`) and simple continuous
//! assignments (`assign a = b;`, `assign a = ~b;`, `assign a = 1'b0;`).

use std::fs;
use std::path::Path;

use rustc_hash::FxHashMap;

use super::{Aig, AigBuilder, AigError, Literal, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Const(bool),
    Punct(char),
}

fn err(line: usize, message: impl Into<String>) -> AigError {
    AigError::Netlist { line, message: message.into() }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                i += 2;
                while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                    line += (bytes[i] == b'\n') as usize;
                    i += 1;
                }
                i += 2;
            }
            b'\\' => {
                let start = i + 1;
                i = start;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), line));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), line));
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'\'') {
                    i += 1;
                }
                let text = &src[start..i];
                let value = match text.split_once('\'') {
                    Some((_, v)) if v.len() > 1 => u64::from_str_radix(&v[1..], 2).ok(),
                    None => text.parse::<u64>().ok(),
                    _ => None,
                };
                match value {
                    Some(0) => toks.push((Tok::Const(false), line)),
                    Some(1) => toks.push((Tok::Const(true), line)),
                    _ => return Err(err(line, format!("unsupported constant '{text}'"))),
                }
            }
            b'(' | b')' | b',' | b';' | b'=' | b'~' | b'[' | b']' | b':' | b'.' => {
                toks.push((Tok::Punct(c as char), line));
                i += 1;
            }
            _ => return Err(err(line, format!("unexpected character '{}'", c as char))),
        }
    }
    Ok(toks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
}

impl GateKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "and" => GateKind::And,
            "nand" => GateKind::Nand,
            "or" => GateKind::Or,
            "nor" => GateKind::Nor,
            "xor" => GateKind::Xor,
            "xnor" => GateKind::Xnor,
            "not" => GateKind::Not,
            "buf" => GateKind::Buf,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
enum Driver {
    Input(usize),
    Gate { kind: GateKind, fanins: Vec<String> },
    Alias { source: String, negated: bool },
    Const(bool),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map_or(0, |t| t.1)
    }

    fn next(&mut self) -> Result<Tok> {
        let t = self.toks.get(self.pos).cloned().ok_or_else(|| err(self.line(), "unexpected end of file"))?;
        self.pos += 1;
        Ok(t.0)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn expect(&mut self, c: char) -> Result<()> {
        let line = self.line();
        match self.next()? {
            Tok::Punct(p) if p == c => Ok(()),
            other => Err(err(line, format!("expected '{c}', found {other:?}"))),
        }
    }

    fn ident(&mut self) -> Result<String> {
        let line = self.line();
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            other => Err(err(line, format!("expected identifier, found {other:?}"))),
        }
    }

    /// `a, b, c ;`
    fn ident_list(&mut self) -> Result<Vec<String>> {
        let mut names = Vec::new();
        if let Some(Tok::Punct('[')) = self.peek() {
            return Err(err(self.line(), "vector declarations are not supported"));
        }
        loop {
            names.push(self.ident()?);
            let line = self.line();
            match self.next()? {
                Tok::Punct(',') => continue,
                Tok::Punct(';') => return Ok(names),
                other => return Err(err(line, format!("expected ',' or ';', found {other:?}"))),
            }
        }
    }
}

/// Parses a single-module gate-level Verilog netlist into an AIG. Inputs and
/// outputs keep their declaration order.
pub fn parse_verilog(src: &str) -> Result<Aig> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    match p.next()? {
        Tok::Ident(k) if k == "module" => {}
        other => return Err(err(1, format!("expected 'module', found {other:?}"))),
    }
    p.ident()?;
    if let Some(Tok::Punct('(')) = p.peek() {
        while p.next()? != Tok::Punct(')') {}
    }
    p.expect(';')?;

    let mut inputs: Vec<String> = Vec::new();
    let mut outputs: Vec<(String, usize)> = Vec::new();
    let mut drivers: FxHashMap<String, (Driver, usize)> = FxHashMap::default();
    let mut define = |name: String, d: Driver, line: usize| -> Result<()> {
        if drivers.insert(name.clone(), (d, line)).is_some() {
            return Err(err(line, format!("signal '{name}' has multiple drivers")));
        }
        Ok(())
    };

    loop {
        let line = p.line();
        let kw = match p.next()? {
            Tok::Ident(k) => k,
            other => return Err(err(line, format!("unexpected {other:?}"))),
        };
        match kw.as_str() {
            "endmodule" => break,
            "input" => {
                for name in p.ident_list()? {
                    define(name.clone(), Driver::Input(inputs.len()), line)?;
                    inputs.push(name);
                }
            }
            "output" => outputs.extend(p.ident_list()?.into_iter().map(|n| (n, line))),
            "wire" => {
                p.ident_list()?;
            }
            "assign" => {
                let lhs = p.ident()?;
                p.expect('=')?;
                let l = p.line();
                let d = match p.next()? {
                    Tok::Const(v) => Driver::Const(v),
                    Tok::Ident(s) => Driver::Alias { source: s, negated: false },
                    Tok::Punct('~') => Driver::Alias { source: p.ident()?, negated: true },
                    other => return Err(err(l, format!("unsupported assignment right-hand side {other:?}"))),
                };
                p.expect(';')?;
                define(lhs, d, line)?;
            }
            other => {
                let kind = GateKind::parse(other).ok_or_else(|| err(line, format!("unsupported construct '{other}'")))?;
                if let Some(Tok::Ident(_)) = p.peek() {
                    p.ident()?;
                }
                p.expect('(')?;
                let mut pins = Vec::new();
                loop {
                    let l = p.line();
                    match p.next()? {
                        Tok::Ident(s) => pins.push(Some(s)),
                        Tok::Const(v) => {
                            let name = format!("$const{}", v as u8);
                            pins.push(Some(name));
                        }
                        other => return Err(err(l, format!("unexpected {other:?} in gate pin list"))),
                    }
                    let l = p.line();
                    match p.next()? {
                        Tok::Punct(',') => continue,
                        Tok::Punct(')') => break,
                        other => return Err(err(l, format!("expected ',' or ')', found {other:?}"))),
                    }
                }
                p.expect(';')?;
                let pins: Vec<String> = pins.into_iter().flatten().collect();
                let min_fanins = if matches!(kind, GateKind::Not | GateKind::Buf) { 1 } else { 2 };
                if pins.len() < 1 + min_fanins || (min_fanins == 1 && pins.len() != 2) {
                    return Err(err(line, format!("gate '{other}' has {} pins", pins.len())));
                }
                let mut pins = pins.into_iter();
                let out = pins.next().unwrap_or_default();
                define(out, Driver::Gate { kind, fanins: pins.collect() }, line)?;
            }
        }
    }
    drivers.entry("$const0".into()).or_insert((Driver::Const(false), 0));
    drivers.entry("$const1".into()).or_insert((Driver::Const(true), 0));

    let mut b = AigBuilder::new(inputs.len());
    let mut mapped: FxHashMap<String, Literal> = FxHashMap::default();
    let mut active: FxHashMap<String, ()> = FxHashMap::default();
    let mut out_lits = Vec::with_capacity(outputs.len());
    for (name, out_line) in &outputs {
        let mut stack: Vec<(String, bool)> = vec![(name.clone(), false)];
        while let Some((sig, expanded)) = stack.pop() {
            if mapped.contains_key(&sig) {
                continue;
            }
            let (driver, line) = drivers
                .get(&sig)
                .ok_or_else(|| err(*out_line, format!("signal '{sig}' has no driver")))?
                .clone();
            let deps: Vec<&String> = match &driver {
                Driver::Gate { fanins, .. } => fanins.iter().collect(),
                Driver::Alias { source, .. } => vec![source],
                _ => vec![],
            };
            if !expanded {
                if active.contains_key(&sig) {
                    return Err(err(line, format!("combinational cycle through '{sig}'")));
                }
                active.insert(sig.clone(), ());
                stack.push((sig.clone(), true));
                for d in deps {
                    if !mapped.contains_key(d) {
                        if active.contains_key(d) {
                            return Err(err(line, format!("combinational cycle through '{d}'")));
                        }
                        stack.push((d.clone(), false));
                    }
                }
                continue;
            }
            let lit_of = |s: &String| {
                mapped.get(s).copied().ok_or_else(|| err(line, format!("signal '{s}' has no driver")))
            };
            let lit = match &driver {
                Driver::Input(i) => b.input(*i),
                Driver::Const(v) => Literal::FALSE.negate_if(*v),
                Driver::Alias { source, negated } => lit_of(source)?.negate_if(*negated),
                Driver::Gate { kind, fanins } => {
                    let ins: Vec<Literal> = fanins.iter().map(lit_of).collect::<Result<_>>()?;
                    let fold = |b: &mut AigBuilder, f: fn(&mut AigBuilder, Literal, Literal) -> Literal| {
                        ins[1..].iter().fold(ins[0], |acc, &x| f(b, acc, x))
                    };
                    match kind {
                        GateKind::And => fold(&mut b, AigBuilder::and),
                        GateKind::Nand => !fold(&mut b, AigBuilder::and),
                        GateKind::Or => fold(&mut b, AigBuilder::or),
                        GateKind::Nor => !fold(&mut b, AigBuilder::or),
                        GateKind::Xor => fold(&mut b, AigBuilder::xor),
                        GateKind::Xnor => !fold(&mut b, AigBuilder::xor),
                        GateKind::Not => !ins[0],
                        GateKind::Buf => ins[0],
                    }
                }
            };
            active.remove(&sig);
            mapped.insert(sig, lit);
        }
        out_lits.push(mapped[name]);
    }
    for l in out_lits {
        b.add_output(l);
    }
    Ok(b.build())
}

pub fn read_verilog(path: impl AsRef<Path>) -> Result<Aig> {
    parse_verilog(&fs::read_to_string(path)?)
}
