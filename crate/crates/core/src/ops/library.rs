//! Library of small structures for every NPN class of 4-input functions.
//!
//! Built by exhaustive enumeration of AND graphs with up to
//! [`MAX_ENUM_GATES`] gates. Classes without a structure in that range use a
//! factored ISOP instead.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use super::npn::{npn_canonize, npn_classes, var_table, NpnTransform, NUM_CLASSES};
use super::sop::synthesize;
use super::structure::{StructBuilder, Structure};
use super::truth::Tt8;
use super::OpError;
use crate::aig::Literal;

pub const MAX_ENUM_GATES: usize = 7;
const MAGIC: &[u8; 6] = b"AWNPN4";
const VERSION: u16 = 1;
pub const CACHE_ENV: &str = "AIGWAVE_NPN_CACHE";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NpnEntry {
    pub class_id: u16,
    pub structure: Structure,
    /// Found by exhaustive search, hence minimal in gate count.
    pub exhaustive: bool,
}

impl NpnEntry {
    pub fn node_count(&self) -> usize {
        self.structure.node_count()
    }

    pub fn depth(&self) -> u32 {
        self.structure.depth()
    }
}

#[derive(Clone, Debug)]
pub struct NpnLibrary {
    entries: Vec<NpnEntry>,
    slot: Vec<u16>,
}

impl NpnLibrary {
    fn from_entries(entries: Vec<NpnEntry>) -> Self {
        let mut slot = vec![u16::MAX; 1 << 16];
        for (i, e) in entries.iter().enumerate() {
            slot[e.class_id as usize] = i as u16;
        }
        NpnLibrary { entries, slot }
    }

    pub fn entries(&self) -> &[NpnEntry] {
        &self.entries
    }

    pub fn entry(&self, class_id: u16) -> Option<&NpnEntry> {
        self.slot.get(class_id as usize).filter(|&&s| s != u16::MAX).map(|&s| &self.entries[s as usize])
    }

    /// Entry for the class of `truth` and the transform taking the class
    /// representative to `truth`.
    pub fn lookup(&self, truth: u16) -> (&NpnEntry, NpnTransform) {
        let (c, t) = npn_canonize(truth);
        (self.entry(c).expect("library covers every class"), t)
    }

    pub fn build() -> Self {
        build_with_limit(MAX_ENUM_GATES)
    }

    /// Every entry evaluates to its class representative.
    pub fn verify(&self) -> Result<(), String> {
        let classes = npn_classes();
        if self.entries.len() != NUM_CLASSES {
            return Err(format!("{} entries, expected {NUM_CLASSES}", self.entries.len()));
        }
        for (e, &c) in self.entries.iter().zip(&classes) {
            if e.class_id != c {
                return Err(format!("entry for {:#06x} where {c:#06x} expected", e.class_id));
            }
            if e.structure.num_inputs != 4 {
                return Err(format!("class {c:#06x}: {} inputs", e.structure.num_inputs));
            }
            let got = e.structure.eval().low16();
            if got != c {
                return Err(format!("class {c:#06x} replays to {got:#06x}"));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u16).to_le_bytes());
        for e in &self.entries {
            out.extend_from_slice(&e.class_id.to_le_bytes());
            out.push(e.exhaustive as u8);
            out.push(e.structure.gates.len() as u8);
            out.push(e.structure.output.code() as u8);
            for [a, b] in &e.structure.gates {
                out.push(a.code() as u8);
                out.push(b.code() as u8);
            }
        }
        let sum = checksum(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, String> {
        if bytes.len() < MAGIC.len() + 12 || &bytes[..MAGIC.len()] != MAGIC {
            return Err("bad magic".into());
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        if checksum(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
            return Err("checksum mismatch".into());
        }
        let mut pos = MAGIC.len();
        let mut take = |n: usize| -> Result<&[u8], String> {
            let s = body.get(pos..pos + n).ok_or("truncated")?;
            pos += n;
            Ok(s)
        };
        let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(format!("version {version}, expected {VERSION}"));
        }
        let count = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let class_id = u16::from_le_bytes(take(2)?.try_into().unwrap());
            let head = take(3)?;
            let (exhaustive, ngates, output) = (head[0] != 0, head[1] as usize, head[2] as u32);
            let mut gates = Vec::with_capacity(ngates);
            for g in 0..ngates {
                let p = take(2)?;
                let (a, b) = (Literal::from_code(p[0] as u32), Literal::from_code(p[1] as u32));
                if a.index() as usize >= 5 + g || b.index() as usize >= 5 + g {
                    return Err("forward reference".into());
                }
                gates.push([a, b]);
            }
            let output = Literal::from_code(output);
            if output.index() as usize >= 5 + ngates {
                return Err("bad output literal".into());
            }
            entries.push(NpnEntry { class_id, structure: Structure { num_inputs: 4, gates, output }, exhaustive });
        }
        if pos != body.len() {
            return Err("trailing bytes".into());
        }
        let lib = NpnLibrary::from_entries(entries);
        lib.verify()?;
        Ok(lib)
    }

    /// Loads a cached library; a missing or invalid file is `LibraryMissing`.
    pub fn load(path: &Path) -> Result<Self, OpError> {
        let bytes = fs::read(path).map_err(|e| OpError::LibraryMissing(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes).map_err(|e| OpError::LibraryMissing(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)
    }

    /// Loads from `path`, rebuilding and rewriting the cache when the file is
    /// missing or stale. A failed cache write is not an error.
    pub fn load_or_build(path: &Path) -> Self {
        match Self::load(path) {
            Ok(lib) => lib,
            Err(_) => {
                let lib = Self::build();
                let _ = lib.save(path);
                lib
            }
        }
    }

    /// Process-wide library from the default cache location.
    pub fn global() -> &'static NpnLibrary {
        static LIB: OnceLock<NpnLibrary> = OnceLock::new();
        LIB.get_or_init(|| Self::load_or_build(&default_cache_path()))
    }
}

fn checksum(bytes: &[u8]) -> u64 {
    // FNV-1a
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// `$AIGWAVE_NPN_CACHE`, else the user cache directory, else the temp dir.
pub fn default_cache_path() -> PathBuf {
    if let Some(p) = std::env::var_os(CACHE_ENV).filter(|p| !p.is_empty()) {
        return PathBuf::from(p);
    }
    let name = format!("npn4-v{VERSION}.bin");
    if let Some(dir) = std::env::var_os("XDG_CACHE_HOME").filter(|p| !p.is_empty()) {
        return PathBuf::from(dir).join("aigwave").join(name);
    }
    if let Some(home) = std::env::var_os("HOME").filter(|p| !p.is_empty()) {
        return PathBuf::from(home).join(".cache").join("aigwave").join(name);
    }
    std::env::temp_dir().join("aigwave").join(name)
}

#[derive(Clone, Copy)]
struct Best {
    size: u8,
    depth: u8,
}

struct Enumerator {
    limit: usize,
    tts: [u16; 4 + MAX_ENUM_GATES],
    fanins: [(u8, u8, bool, bool); MAX_ENUM_GATES],
    cone: [u16; 4 + MAX_ENUM_GATES],
    level: [u8; 4 + MAX_ENUM_GATES],
    used: [u8; 4 + MAX_ENUM_GATES],
    best: Vec<Option<Best>>,
    found: Vec<Option<Structure>>,
}

impl Enumerator {
    fn record(&mut self, sig: usize, ngates: usize) {
        let size = (self.cone[sig] >> 4).count_ones() as u8;
        let depth = self.level[sig];
        let tt = self.tts[sig];
        let (class, t) = npn_canonize(tt);
        let better = match self.best[class as usize] {
            None => true,
            Some(b) => (size, depth) < (b.size, b.depth),
        };
        if !better {
            return;
        }
        self.best[class as usize] = Some(Best { size, depth });
        self.found[class as usize] = Some(self.extract(sig, ngates, t.inverse()));
    }

    /// Structure computing `u.apply(tts[sig])`, the class representative.
    fn extract(&self, sig: usize, ngates: usize, u: NpnTransform) -> Structure {
        // Original variable u.perm[i] is fed by input i, complemented by neg bit i.
        let mut map = [Literal::FALSE; 4 + MAX_ENUM_GATES];
        for i in 0..4 {
            map[u.perm[i] as usize] = Structure::input(i).negate_if(u.neg >> i & 1 == 1);
        }
        let mut gates = Vec::new();
        for g in 0..ngates {
            let s = 4 + g;
            if self.cone[sig] >> s & 1 == 0 {
                continue;
            }
            let (j, k, pj, pk) = self.fanins[g];
            let a = map[j as usize].negate_if(pj);
            let b = map[k as usize].negate_if(pk);
            map[s] = Literal::new(5 + gates.len() as u32, false);
            gates.push([a, b]);
        }
        Structure { num_inputs: 4, gates, output: map[sig].negate_if(u.out) }
    }

    fn dfs(&mut self, ngates: usize, last_key: i32) {
        if ngates == self.limit {
            return;
        }
        let nsig = 4 + ngates;
        let sinks = (0..ngates).filter(|&g| self.used[4 + g] == 0).count();
        let remaining = self.limit - ngates;
        // Input permutation and negation are free under NPN equivalence, so
        // any graph can be relabelled to start with AND(x0, x1).
        let nsig_first = if ngates == 0 { 2 } else { nsig };
        for j in 0..nsig_first {
            for k in 0..j {
                for pol in 0..if ngates == 0 { 1 } else { 4u8 } {
                    let key = ((j * 16 + k) * 4 + pol as usize) as i32;
                    if key <= last_key {
                        continue;
                    }
                    let (pj, pk) = (pol & 2 != 0, pol & 1 != 0);
                    let a = if pj { !self.tts[j] } else { self.tts[j] };
                    let b = if pk { !self.tts[k] } else { self.tts[k] };
                    let tt = a & b;
                    if tt == 0 || tt == !0 {
                        continue;
                    }
                    if self.tts[..nsig].iter().any(|&t| t == tt || t == !tt) {
                        continue;
                    }
                    // Every dangling gate must still be consumed by a later one.
                    let consumed = (j >= 4 && self.used[j] == 0) as usize + (k >= 4 && self.used[k] == 0) as usize;
                    let new_sinks = sinks + 1 - consumed;
                    if new_sinks - 1 > remaining - 1 {
                        continue;
                    }
                    let s = nsig;
                    self.tts[s] = tt;
                    self.fanins[ngates] = (j as u8, k as u8, pj, pk);
                    self.cone[s] = 1 << s | self.cone[j] | self.cone[k];
                    self.level[s] = 1 + self.level[j].max(self.level[k]);
                    self.used[j] += 1;
                    self.used[k] += 1;
                    self.used[s] = 0;
                    self.record(s, ngates + 1);
                    self.dfs(ngates + 1, key);
                    self.used[j] -= 1;
                    self.used[k] -= 1;
                }
            }
        }
    }
}

/// Builds the library, enumerating graphs of up to `limit` gates.
pub fn build_with_limit(limit: usize) -> NpnLibrary {
    assert!(limit <= MAX_ENUM_GATES);
    let mut e = Enumerator {
        limit,
        tts: [0; 4 + MAX_ENUM_GATES],
        fanins: [(0, 0, false, false); MAX_ENUM_GATES],
        cone: [0; 4 + MAX_ENUM_GATES],
        level: [0; 4 + MAX_ENUM_GATES],
        used: [0; 4 + MAX_ENUM_GATES],
        best: vec![None; 1 << 16],
        found: vec![None; 1 << 16],
    };
    for i in 0..4 {
        e.tts[i] = var_table(i);
        e.cone[i] = 0;
    }
    // Constants and projections need no gates.
    let (c0, _) = npn_canonize(0);
    e.best[c0 as usize] = Some(Best { size: 0, depth: 0 });
    e.found[c0 as usize] = Some(Structure { num_inputs: 4, gates: vec![], output: Literal::FALSE });
    e.record(0, 0);
    e.dfs(0, -1);

    let entries = npn_classes()
        .into_iter()
        .map(|c| match e.found[c as usize].take() {
            Some(structure) => NpnEntry { class_id: c, structure, exhaustive: true },
            None => NpnEntry { class_id: c, structure: synthesize(Tt8::from_u16(c), 4), exhaustive: false },
        })
        .collect();
    let mut lib = NpnLibrary::from_entries(entries);
    for i in 0..lib.entries.len() {
        if lib.entries[i].exhaustive {
            continue;
        }
        let c = lib.entries[i].class_id;
        for v in 0..4 {
            let s = shannon(&lib, c, v);
            let cur = &lib.entries[i].structure;
            if (s.node_count(), s.depth()) < (cur.node_count(), cur.depth()) {
                lib.entries[i].structure = s;
            }
        }
    }
    lib
}

/// `f = v ? f1 : f0` with both cofactors taken from the library.
fn shannon(lib: &NpnLibrary, f: u16, v: usize) -> Structure {
    let t = Tt8::from_u16(f);
    let mut b = StructBuilder::new(4);
    let leaves = [0, 1, 2, 3].map(Structure::input);
    let half = |g: Tt8, b: &mut StructBuilder| {
        let (entry, tr) = lib.lookup(g.low16());
        instantiate(&entry.structure, tr, &leaves, |x, y| Some(b.and(x, y))).unwrap()
    };
    let f0 = half(t.cofactor0(v), &mut b);
    let f1 = half(t.cofactor1(v), &mut b);
    let x = leaves[v];
    let hi = b.and(x, f1);
    let lo = b.and(!x, f0);
    let out = b.or(hi, lo);
    b.finish(out)
}

/// Instantiates `s`, a structure for a class representative, transformed by
/// `t` over `leaves`. `and` creates or finds a gate and may abort with
/// `None`.
pub(crate) fn instantiate(
    s: &Structure,
    t: NpnTransform,
    leaves: &[Literal; 4],
    mut and: impl FnMut(Literal, Literal) -> Option<Literal>,
) -> Option<Literal> {
    let mut map = Vec::with_capacity(5 + s.gates.len());
    map.push(Literal::FALSE);
    let mut ins = [Literal::FALSE; 4];
    for i in 0..4 {
        ins[t.perm[i] as usize] = leaves[i].negate_if(t.neg >> i & 1 == 1);
    }
    map.extend_from_slice(&ins);
    let get = |map: &[Literal], l: Literal| map[l.index() as usize].negate_if(l.is_negated());
    for &[a, b] in &s.gates {
        let r = and(get(&map, a), get(&map, b))?;
        map.push(r);
    }
    Some(get(&map, s.output).negate_if(t.out))
}
