//! AIGER 1.9 reader and writer, ASCII (`aag`) and binary (`aig`), combinational subset.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{Aig, AigBuilder, AigError, Literal, Location, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AigerFormat {
    Ascii,
    Binary,
}

impl AigerFormat {
    fn magic(self) -> &'static str {
        match self {
            AigerFormat::Ascii => "aag",
            AigerFormat::Binary => "aig",
        }
    }

    /// Picks the format from a file name (`.aag`, `.aig`, optionally `.gz`).
    pub fn from_path(path: &Path) -> Option<Self> {
        let name = path.file_name()?.to_str()?;
        let name = name.strip_suffix(".gz").unwrap_or(name);
        if name.ends_with(".aag") {
            Some(AigerFormat::Ascii)
        } else if name.ends_with(".aig") {
            Some(AigerFormat::Binary)
        } else {
            None
        }
    }
}

struct Header {
    max_var: u64,
    inputs: u64,
    outputs: u64,
    ands: u64,
}

fn parse_header(line: &str, format: AigerFormat) -> Result<Header> {
    let bad = |message: String| AigError::MalformedHeader { location: Location::Line(1), message };
    let mut fields = line.split_ascii_whitespace();
    match fields.next() {
        Some(m) if m == format.magic() => {}
        other => return Err(bad(format!("expected '{}', found {:?}", format.magic(), other.unwrap_or("")))),
    }
    let nums: Vec<u64> = fields
        .map(|f| f.parse::<u64>().map_err(|_| bad(format!("invalid count '{f}'"))))
        .collect::<Result<_>>()?;
    if nums.len() < 5 || nums.len() > 9 {
        return Err(bad(format!("expected 5 to 9 counts, found {}", nums.len())));
    }
    if nums[2] > 0 {
        return Err(AigError::LatchesUnsupported { count: nums[2], location: Location::Line(1) });
    }
    if nums[5..].iter().any(|&n| n > 0) {
        return Err(bad("bad-state, constraint, justice and fairness sections are not supported".into()));
    }
    let h = Header { max_var: nums[0], inputs: nums[1], outputs: nums[3], ands: nums[4] };
    if h.inputs + h.ands > h.max_var {
        return Err(bad(format!("M = {} is smaller than I + L + A = {}", h.max_var, h.inputs + h.ands)));
    }
    if h.max_var > (u32::MAX >> 2) as u64 {
        return Err(bad(format!("M = {} is too large", h.max_var)));
    }
    Ok(h)
}

/// Parses an AIGER byte stream in the given format.
pub fn parse_aiger(input: &[u8], format: AigerFormat) -> Result<Aig> {
    match format {
        AigerFormat::Ascii => parse_ascii(input),
        AigerFormat::Binary => parse_binary(input),
    }
}

/// Parses an AIGER byte stream, detecting the format from the magic word.
/// Gzip-compressed streams are decompressed first.
pub fn parse_aiger_auto(input: &[u8]) -> Result<Aig> {
    if input.starts_with(&[0x1f, 0x8b]) {
        let mut raw = Vec::new();
        GzDecoder::new(input).read_to_end(&mut raw)?;
        return parse_aiger_auto(&raw);
    }
    if input.starts_with(b"aag") {
        parse_ascii(input)
    } else if input.starts_with(b"aig") {
        parse_binary(input)
    } else {
        Err(AigError::MalformedHeader {
            location: Location::Line(1),
            message: "missing 'aag' or 'aig' magic".into(),
        })
    }
}

/// Reads an AIGER file, decompressing `.gz` files.
pub fn read_aiger(path: impl AsRef<Path>) -> Result<Aig> {
    let bytes = fs::read(path.as_ref())?;
    parse_aiger_auto(&bytes)
}

/// Writes `aig` to `path`; the format follows the extension (binary unless
/// `.aag`), and a trailing `.gz` compresses the output.
pub fn write_aiger_file(path: impl AsRef<Path>, aig: &Aig) -> Result<()> {
    let path = path.as_ref();
    let format = AigerFormat::from_path(path).unwrap_or(AigerFormat::Binary);
    let bytes = write_aiger(aig, format);
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(fs::File::create(path)?, Compression::default());
        enc.write_all(&bytes)?;
        enc.finish()?;
    } else {
        fs::write(path, bytes)?;
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum VarDef {
    Undefined,
    Const,
    Input(usize),
    And { rhs0: u64, rhs1: u64, line: usize },
}

fn parse_ascii(input: &[u8]) -> Result<Aig> {
    let text = std::str::from_utf8(input).map_err(|e| AigError::MalformedBody {
        location: Location::Byte(e.valid_up_to()),
        message: "invalid UTF-8".into(),
    })?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or_else(|| AigError::MalformedHeader {
        location: Location::Line(1),
        message: "empty input".into(),
    })?;
    let h = parse_header(first, AigerFormat::Ascii)?;

    let mut next_numbers = |expect: usize, what: &str| -> Result<(usize, Vec<u64>)> {
        let (no, line) = lines.next().ok_or_else(|| AigError::MalformedBody {
            location: Location::Line(usize::MAX),
            message: format!("unexpected end of file while reading {what}"),
        })?;
        let nums: Vec<u64> = line
            .split_ascii_whitespace()
            .map(|f| f.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| AigError::MalformedBody { location: Location::Line(no), message: format!("invalid {what}") })?;
        if nums.len() != expect {
            return Err(AigError::MalformedBody {
                location: Location::Line(no),
                message: format!("expected {expect} numbers for {what}, found {}", nums.len()),
            });
        }
        Ok((no, nums))
    };

    let max_lit = 2 * h.max_var + 1;
    let mut defs = vec![VarDef::Undefined; h.max_var as usize + 1];
    defs[0] = VarDef::Const;
    for i in 0..h.inputs as usize {
        let (no, n) = next_numbers(1, "input")?;
        let lit = n[0];
        if lit & 1 == 1 || lit < 2 || lit > max_lit {
            return Err(AigError::MalformedBody { location: Location::Line(no), message: format!("invalid input literal {lit}") });
        }
        let var = (lit >> 1) as usize;
        if !matches!(defs[var], VarDef::Undefined) {
            return Err(AigError::MalformedBody { location: Location::Line(no), message: format!("variable {var} defined twice") });
        }
        defs[var] = VarDef::Input(i);
    }
    let mut outputs = Vec::with_capacity(h.outputs as usize);
    for _ in 0..h.outputs {
        let (no, n) = next_numbers(1, "output")?;
        if n[0] > max_lit {
            return Err(AigError::DanglingLiteral { literal: n[0], location: Location::Line(no) });
        }
        outputs.push((n[0], no));
    }
    for _ in 0..h.ands {
        let (no, n) = next_numbers(3, "AND gate")?;
        let (lhs, rhs0, rhs1) = (n[0], n[1], n[2]);
        if lhs & 1 == 1 || lhs < 2 || lhs > max_lit {
            return Err(AigError::MalformedBody { location: Location::Line(no), message: format!("invalid AND literal {lhs}") });
        }
        for r in [rhs0, rhs1] {
            if r > max_lit {
                return Err(AigError::DanglingLiteral { literal: r, location: Location::Line(no) });
            }
        }
        let var = (lhs >> 1) as usize;
        if !matches!(defs[var], VarDef::Undefined) {
            return Err(AigError::MalformedBody { location: Location::Line(no), message: format!("variable {var} defined twice") });
        }
        defs[var] = VarDef::And { rhs0, rhs1, line: no };
    }
    build_from_defs(h.inputs as usize, &defs, &outputs)
}

/// Resolves variable definitions in dependency order, detecting cycles and
/// references to undefined variables.
fn build_from_defs(num_inputs: usize, defs: &[VarDef], outputs: &[(u64, usize)]) -> Result<Aig> {
    const UNSEEN: u32 = u32::MAX;
    const ACTIVE: u32 = u32::MAX - 1;
    let mut b = AigBuilder::new(num_inputs);
    // Mapped literal code per variable, or a DFS marker.
    let mut mapped = vec![UNSEEN; defs.len()];
    let lit_of = |mapped: &[u32], lit: u64| Literal::from_code(mapped[(lit >> 1) as usize]).negate_if(lit & 1 == 1);

    let mut roots: Vec<(u64, usize)> = outputs.to_vec();
    roots.extend(defs.iter().enumerate().filter_map(|(v, d)| match d {
        VarDef::And { line, .. } => Some(((v as u64) << 1, *line)),
        _ => None,
    }));
    let mut stack: Vec<(usize, bool)> = Vec::new();
    for (root, root_line) in roots {
        let root_var = (root >> 1) as usize;
        if mapped[root_var] != UNSEEN && mapped[root_var] != ACTIVE {
            continue;
        }
        stack.push((root_var, false));
        while let Some((var, expanded)) = stack.pop() {
            match defs[var] {
                VarDef::Const => mapped[var] = Literal::FALSE.code(),
                VarDef::Input(i) => mapped[var] = b.input(i).code(),
                VarDef::Undefined => {
                    return Err(AigError::DanglingLiteral {
                        literal: (var as u64) << 1,
                        location: Location::Line(root_line),
                    })
                }
                VarDef::And { rhs0, rhs1, line } => {
                    if expanded {
                        let l = b.and(lit_of(&mapped, rhs0), lit_of(&mapped, rhs1));
                        mapped[var] = l.code();
                        continue;
                    }
                    if mapped[var] != UNSEEN {
                        if mapped[var] == ACTIVE {
                            return Err(AigError::CycleDetected { variable: var as u64, location: Location::Line(line) });
                        }
                        continue;
                    }
                    mapped[var] = ACTIVE;
                    stack.push((var, true));
                    for r in [rhs0, rhs1] {
                        let rv = (r >> 1) as usize;
                        match mapped[rv] {
                            UNSEEN => {
                                if let VarDef::Undefined = defs[rv] {
                                    return Err(AigError::DanglingLiteral { literal: r, location: Location::Line(line) });
                                }
                                stack.push((rv, false));
                            }
                            ACTIVE => {
                                return Err(AigError::CycleDetected { variable: rv as u64, location: Location::Line(line) })
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
    }
    for &(lit, _) in outputs {
        b.add_output(lit_of(&mapped, lit));
    }
    Ok(b.build())
}

fn parse_binary(input: &[u8]) -> Result<Aig> {
    let mut pos = 0usize;
    let mut line_no = 0usize;
    let mut read_line = |pos: &mut usize| -> Result<(usize, &str)> {
        let start = *pos;
        let end = input[start..].iter().position(|&c| c == b'\n').map(|i| start + i).ok_or_else(|| {
            AigError::MalformedBody { location: Location::Byte(start), message: "unexpected end of file".into() }
        })?;
        *pos = end + 1;
        line_no += 1;
        let s = std::str::from_utf8(&input[start..end])
            .map_err(|_| AigError::MalformedBody { location: Location::Byte(start), message: "invalid UTF-8".into() })?;
        Ok((start, s))
    };
    let (_, first) = read_line(&mut pos)?;
    let h = parse_header(first, AigerFormat::Binary)?;
    if h.inputs + h.ands != h.max_var {
        return Err(AigError::MalformedHeader {
            location: Location::Line(1),
            message: format!("binary format requires M = I + L + A, found M = {}", h.max_var),
        });
    }
    let max_lit = 2 * h.max_var + 1;
    let mut outputs = Vec::with_capacity(h.outputs as usize);
    for _ in 0..h.outputs {
        let (at, line) = read_line(&mut pos)?;
        let lit: u64 = line.trim().parse().map_err(|_| AigError::MalformedBody {
            location: Location::Byte(at),
            message: format!("invalid output literal '{line}'"),
        })?;
        if lit > max_lit {
            return Err(AigError::DanglingLiteral { literal: lit, location: Location::Byte(at) });
        }
        outputs.push(lit);
    }
    let mut b = AigBuilder::new(h.inputs as usize);
    let mut mapped: Vec<Literal> = Vec::with_capacity(h.max_var as usize + 1);
    mapped.push(Literal::FALSE);
    for i in 0..h.inputs as usize {
        mapped.push(b.input(i));
    }
    let lit_of = |mapped: &[Literal], lit: u64| mapped[(lit >> 1) as usize].negate_if(lit & 1 == 1);
    for i in 0..h.ands {
        let lhs = 2 * (h.inputs + i + 1);
        let at = pos;
        let delta0 = decode_varint(input, &mut pos)?;
        let delta1 = decode_varint(input, &mut pos)?;
        if delta0 == 0 || delta0 > lhs {
            return Err(AigError::MalformedBody { location: Location::Byte(at), message: format!("invalid delta {delta0}") });
        }
        let rhs0 = lhs - delta0;
        if delta1 > rhs0 {
            return Err(AigError::MalformedBody { location: Location::Byte(at), message: format!("invalid delta {delta1}") });
        }
        let rhs1 = rhs0 - delta1;
        let l = b.and(lit_of(&mapped, rhs0), lit_of(&mapped, rhs1));
        mapped.push(l);
    }
    for o in outputs {
        b.add_output(lit_of(&mapped, o));
    }
    Ok(b.build())
}

fn decode_varint(input: &[u8], pos: &mut usize) -> Result<u64> {
    let mut value = 0u64;
    let mut shift = 0;
    loop {
        let byte = *input.get(*pos).ok_or_else(|| AigError::MalformedBody {
            location: Location::Byte(*pos),
            message: "truncated AND section".into(),
        })?;
        *pos += 1;
        if shift > 63 {
            return Err(AigError::MalformedBody { location: Location::Byte(*pos - 1), message: "varint overflow".into() });
        }
        value |= ((byte & 0x7f) as u64) << shift;
        if byte & 0x80 == 0 {
            return Ok(value);
        }
        shift += 7;
    }
}

fn encode_varint(out: &mut Vec<u8>, mut x: u64) {
    while x & !0x7f != 0 {
        out.push((x & 0x7f) as u8 | 0x80);
        x >>= 7;
    }
    out.push(x as u8);
}

/// Serializes `aig`. Variable numbering equals node numbering, so inputs are
/// `1..=I` and AND gates follow in topological order.
pub fn write_aiger(aig: &Aig, format: AigerFormat) -> Vec<u8> {
    let i = aig.num_inputs();
    let a = aig.num_ands();
    let mut out = Vec::new();
    let header = format!("{} {} {} 0 {} {}\n", format.magic(), i + a, i, aig.num_outputs(), a);
    out.extend_from_slice(header.as_bytes());
    if format == AigerFormat::Ascii {
        for k in 0..i {
            out.extend_from_slice(format!("{}\n", 2 * (k + 1)).as_bytes());
        }
    }
    for o in aig.outputs() {
        out.extend_from_slice(format!("{}\n", o.code()).as_bytes());
    }
    for (n, [f0, f1]) in aig.and_nodes() {
        // rhs0 >= rhs1 as the binary encoding requires.
        let (rhs0, rhs1) = (f1.code() as u64, f0.code() as u64);
        let lhs = 2 * n as u64;
        match format {
            AigerFormat::Ascii => out.extend_from_slice(format!("{lhs} {rhs0} {rhs1}\n").as_bytes()),
            AigerFormat::Binary => {
                encode_varint(&mut out, lhs - rhs0);
                encode_varint(&mut out, rhs0 - rhs1);
            }
        }
    }
    out
}
