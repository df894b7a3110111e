//! Reduced ordered binary decision diagrams with hash-consed unique nodes.
//!
//! A [`Manager`] owns a single arena of nodes under one fixed variable order.
//! Diagrams are plain two-terminal ROBDDs: no complement edges, no garbage
//! collection, no dynamic reordering. Node counts are therefore stable
//! measures of representation size under a chosen order.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

/// Marks which copy of the vocabulary an atom belongs to.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Provenance {
    /// A proposition of the base vocabulary.
    Original,
    /// A fresh event atom introduced by a transformer.
    Event,
    /// A frozen copy recording a pre-update value; the counter distinguishes
    /// successive updates that freeze the same proposition.
    Frozen(u32),
}

/// A tagged propositional atom: base name index, prime level, provenance.
///
/// Prime level 0 is the plain atom `p`, level 1 is `p'`, level 2 is `p''`.
/// Level 2 only appears transiently inside relation composition.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub base: u32,
    pub prime: u8,
    pub prov: Provenance,
}

impl Atom {
    pub fn original(base: u32) -> Atom {
        Atom { base, prime: 0, prov: Provenance::Original }
    }

    pub fn event(base: u32) -> Atom {
        Atom { base, prime: 0, prov: Provenance::Event }
    }

    /// The copy of this atom one prime level up. Panics beyond level 2.
    pub fn primed(self) -> Atom {
        assert!(self.prime < 2, "no prime level above 2");
        Atom { prime: self.prime + 1, ..self }
    }

    pub fn unprimed(self) -> Atom {
        Atom { prime: 0, ..self }
    }

    pub fn with_prime(self, prime: u8) -> Atom {
        assert!(prime <= 2);
        Atom { prime, ..self }
    }

    /// The frozen copy of this atom for update generation `gen`.
    pub fn frozen(self, gen: u32) -> Atom {
        Atom { prov: Provenance::Frozen(gen), ..self }
    }

    pub fn is_primed(self) -> bool {
        self.prime > 0
    }
}

/// A state is the set of atoms that are true.
pub type State = BTreeSet<Atom>;

/// Binary Boolean connectives supported by [`Manager::apply`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BinOp {
    And,
    Or,
    Implies,
    Iff,
    Xor,
}

/// Quantifier kinds for [`Manager::quantify`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Quant {
    Exists,
    Forall,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("atom {0:?} has no rank in this manager")]
    UnrankedAtom(Atom),
    #[error("atom {0:?} is already ranked in this manager")]
    DuplicateAtom(Atom),
    #[error("operands belong to different managers")]
    CrossManager,
    #[error("relabeling map is not injective on the atoms of the diagram")]
    NonInjectiveRelabel,
    #[error("atom list must be sorted by rank and cover the diagram's atoms")]
    BadSupport,
}

/// Handle to a node inside one manager. Only meaningful together with the
/// manager (or a clone of it) that produced it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BddRef {
    mgr: u64,
    idx: u32,
}

const FALSE_IDX: u32 = 0;
const TRUE_IDX: u32 = 1;
const TERMINAL_RANK: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct Node {
    rank: u32,
    lo: u32,
    hi: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum OpTag {
    Bin(BinOp),
    Not,
}

static NEXT_MGR_ID: AtomicU64 = AtomicU64::new(1);

/// Arena of hash-consed BDD nodes under one total atom order.
///
/// All mutating operations take `&mut self`; a manager is a single-writer
/// arena and read-only queries (`evaluate`, `node_count`, `all_sat`) are
/// freely shareable. Cloning yields an independent arena with the same
/// contents; refs created before the clone are valid in both.
#[derive(Clone)]
pub struct Manager {
    id: u64,
    order: Vec<Atom>,
    ranks: HashMap<Atom, u32>,
    nodes: Vec<Node>,
    unique: HashMap<(u32, u32, u32), u32>,
    cache: HashMap<(OpTag, u32, u32), u32>,
}

impl Manager {
    /// Creates a manager whose variable order is exactly `order`.
    pub fn new(order: Vec<Atom>) -> Result<Manager, BddError> {
        let mut mgr = Manager {
            id: NEXT_MGR_ID.fetch_add(1, Ordering::Relaxed),
            order: Vec::new(),
            ranks: HashMap::new(),
            nodes: vec![
                Node { rank: TERMINAL_RANK, lo: FALSE_IDX, hi: FALSE_IDX },
                Node { rank: TERMINAL_RANK, lo: TRUE_IDX, hi: TRUE_IDX },
            ],
            unique: HashMap::new(),
            cache: HashMap::new(),
        };
        mgr.extend_order(&order)?;
        Ok(mgr)
    }

    /// Appends further atoms at the bottom of the order.
    ///
    /// Existing diagrams stay ordered because new ranks come after all
    /// ranks already in use.
    pub fn extend_order(&mut self, more: &[Atom]) -> Result<(), BddError> {
        for &a in more {
            if self.ranks.contains_key(&a) {
                return Err(BddError::DuplicateAtom(a));
            }
            self.ranks.insert(a, self.order.len() as u32);
            self.order.push(a);
        }
        Ok(())
    }

    pub fn rank_of(&self, a: Atom) -> Option<u32> {
        self.ranks.get(&a).copied()
    }

    pub fn atom_at_rank(&self, rank: u32) -> Atom {
        self.order[rank as usize]
    }

    pub fn order(&self) -> &[Atom] {
        &self.order
    }

    /// Total number of nodes ever allocated in this arena, terminals included.
    /// Monotone: nodes are never reclaimed.
    pub fn total_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn mk_true(&self) -> BddRef {
        BddRef { mgr: self.id, idx: TRUE_IDX }
    }

    pub fn mk_false(&self) -> BddRef {
        BddRef { mgr: self.id, idx: FALSE_IDX }
    }

    pub fn is_true(&self, a: BddRef) -> bool {
        a.idx == TRUE_IDX
    }

    pub fn is_false(&self, a: BddRef) -> bool {
        a.idx == FALSE_IDX
    }

    fn check(&self, a: BddRef) -> Result<u32, BddError> {
        if a.mgr != self.id {
            return Err(BddError::CrossManager);
        }
        Ok(a.idx)
    }

    fn wrap(&self, idx: u32) -> BddRef {
        BddRef { mgr: self.id, idx }
    }

    fn mk_node(&mut self, rank: u32, lo: u32, hi: u32) -> u32 {
        if lo == hi {
            return lo;
        }
        if let Some(&idx) = self.unique.get(&(rank, lo, hi)) {
            return idx;
        }
        let idx = self.nodes.len() as u32;
        self.nodes.push(Node { rank, lo, hi });
        self.unique.insert((rank, lo, hi), idx);
        idx
    }

    /// The diagram of a single atom.
    pub fn mk_var(&mut self, a: Atom) -> Result<BddRef, BddError> {
        let rank = self.rank_of(a).ok_or(BddError::UnrankedAtom(a))?;
        let idx = self.mk_node(rank, FALSE_IDX, TRUE_IDX);
        Ok(self.wrap(idx))
    }

    /// A positive or negated atom.
    pub fn mk_lit(&mut self, a: Atom, positive: bool) -> Result<BddRef, BddError> {
        let rank = self.rank_of(a).ok_or(BddError::UnrankedAtom(a))?;
        let idx = if positive {
            self.mk_node(rank, FALSE_IDX, TRUE_IDX)
        } else {
            self.mk_node(rank, TRUE_IDX, FALSE_IDX)
        };
        Ok(self.wrap(idx))
    }

    /// The conjunction of a set of atoms read as a full assignment over
    /// `over`: atoms in `s` positive, the rest negated.
    pub fn mk_cube(&mut self, over: &[Atom], s: &State) -> Result<BddRef, BddError> {
        let mut acc = self.mk_true();
        for &a in over {
            let lit = self.mk_lit(a, s.contains(&a))?;
            acc = self.apply(BinOp::And, acc, lit)?;
        }
        Ok(acc)
    }

    pub fn negate(&mut self, a: BddRef) -> Result<BddRef, BddError> {
        let a = self.check(a)?;
        let r = self.negate_rec(a);
        Ok(self.wrap(r))
    }

    fn negate_rec(&mut self, a: u32) -> u32 {
        match a {
            FALSE_IDX => return TRUE_IDX,
            TRUE_IDX => return FALSE_IDX,
            _ => {}
        }
        if let Some(&r) = self.cache.get(&(OpTag::Not, a, 0)) {
            return r;
        }
        let n = self.nodes[a as usize];
        let lo = self.negate_rec(n.lo);
        let hi = self.negate_rec(n.hi);
        let r = self.mk_node(n.rank, lo, hi);
        self.cache.insert((OpTag::Not, a, 0), r);
        r
    }

    /// Bryant-style apply, memoized per `(op, a, b)` for the life of the
    /// manager.
    pub fn apply(&mut self, op: BinOp, a: BddRef, b: BddRef) -> Result<BddRef, BddError> {
        let a = self.check(a)?;
        let b = self.check(b)?;
        let r = self.apply_rec(op, a, b);
        Ok(self.wrap(r))
    }

    fn apply_rec(&mut self, op: BinOp, a: u32, b: u32) -> u32 {
        if let Some(r) = self.apply_shortcut(op, a, b) {
            return r;
        }
        if let Some(&r) = self.cache.get(&(OpTag::Bin(op), a, b)) {
            return r;
        }
        let na = self.nodes[a as usize];
        let nb = self.nodes[b as usize];
        let rank = na.rank.min(nb.rank);
        let (alo, ahi) = if na.rank == rank { (na.lo, na.hi) } else { (a, a) };
        let (blo, bhi) = if nb.rank == rank { (nb.lo, nb.hi) } else { (b, b) };
        let lo = self.apply_rec(op, alo, blo);
        let hi = self.apply_rec(op, ahi, bhi);
        let r = self.mk_node(rank, lo, hi);
        self.cache.insert((OpTag::Bin(op), a, b), r);
        r
    }

    fn apply_shortcut(&mut self, op: BinOp, a: u32, b: u32) -> Option<u32> {
        use BinOp::*;
        match op {
            And => match (a, b) {
                (FALSE_IDX, _) | (_, FALSE_IDX) => Some(FALSE_IDX),
                (TRUE_IDX, _) => Some(b),
                (_, TRUE_IDX) => Some(a),
                _ if a == b => Some(a),
                _ => None,
            },
            Or => match (a, b) {
                (TRUE_IDX, _) | (_, TRUE_IDX) => Some(TRUE_IDX),
                (FALSE_IDX, _) => Some(b),
                (_, FALSE_IDX) => Some(a),
                _ if a == b => Some(a),
                _ => None,
            },
            Implies => match (a, b) {
                (FALSE_IDX, _) | (_, TRUE_IDX) => Some(TRUE_IDX),
                (TRUE_IDX, _) => Some(b),
                (_, FALSE_IDX) => Some(self.negate_rec(a)),
                _ if a == b => Some(TRUE_IDX),
                _ => None,
            },
            Iff => match (a, b) {
                (TRUE_IDX, _) => Some(b),
                (_, TRUE_IDX) => Some(a),
                (FALSE_IDX, _) => Some(self.negate_rec(b)),
                (_, FALSE_IDX) => Some(self.negate_rec(a)),
                _ if a == b => Some(TRUE_IDX),
                _ => None,
            },
            Xor => match (a, b) {
                (FALSE_IDX, _) => Some(b),
                (_, FALSE_IDX) => Some(a),
                (TRUE_IDX, _) => Some(self.negate_rec(b)),
                (_, TRUE_IDX) => Some(self.negate_rec(a)),
                _ if a == b => Some(FALSE_IDX),
                _ => None,
            },
        }
    }

    /// `(c ∧ t) ∨ (¬c ∧ e)`.
    pub fn ite(&mut self, c: BddRef, t: BddRef, e: BddRef) -> Result<BddRef, BddError> {
        let ct = self.apply(BinOp::And, c, t)?;
        let nc = self.negate(c)?;
        let ce = self.apply(BinOp::And, nc, e)?;
        self.apply(BinOp::Or, ct, ce)
    }

    /// Boolean quantification over a set of atoms. `Exists` disjoins the
    /// cofactors of each quantified atom, `Forall` conjoins them.
    pub fn quantify(&mut self, q: Quant, xs: &BTreeSet<Atom>, a: BddRef) -> Result<BddRef, BddError> {
        let a = self.check(a)?;
        let mut targets = HashSet::new();
        for &x in xs {
            targets.insert(self.rank_of(x).ok_or(BddError::UnrankedAtom(x))?);
        }
        let mut memo = HashMap::new();
        let r = self.quant_rec(q, &targets, a, &mut memo);
        Ok(self.wrap(r))
    }

    fn quant_rec(
        &mut self,
        q: Quant,
        targets: &HashSet<u32>,
        a: u32,
        memo: &mut HashMap<u32, u32>,
    ) -> u32 {
        if a == FALSE_IDX || a == TRUE_IDX {
            return a;
        }
        if let Some(&r) = memo.get(&a) {
            return r;
        }
        let n = self.nodes[a as usize];
        let lo = self.quant_rec(q, targets, n.lo, memo);
        let hi = self.quant_rec(q, targets, n.hi, memo);
        let r = if targets.contains(&n.rank) {
            let op = match q {
                Quant::Exists => BinOp::Or,
                Quant::Forall => BinOp::And,
            };
            self.apply_rec(op, lo, hi)
        } else {
            self.mk_node(n.rank, lo, hi)
        };
        memo.insert(a, r);
        r
    }

    /// Simultaneous substitution of atoms for atoms. The map must be
    /// injective on the atoms occurring in `a` (unmapped atoms stay put);
    /// the diagram is rebuilt, so the images may sit anywhere in the order.
    pub fn relabel(&mut self, a: BddRef, map: &BTreeMap<Atom, Atom>) -> Result<BddRef, BddError> {
        let a = self.check(a)?;
        let sup = self.support_idx(a);
        let mut images = HashSet::new();
        for &atom in &sup {
            let img = map.get(&atom).copied().unwrap_or(atom);
            if self.rank_of(img).is_none() {
                return Err(BddError::UnrankedAtom(img));
            }
            if !images.insert(img) {
                return Err(BddError::NonInjectiveRelabel);
            }
        }
        let mut memo = HashMap::new();
        let r = self.relabel_rec(a, map, &mut memo)?;
        Ok(self.wrap(r))
    }

    fn relabel_rec(
        &mut self,
        a: u32,
        map: &BTreeMap<Atom, Atom>,
        memo: &mut HashMap<u32, u32>,
    ) -> Result<u32, BddError> {
        if a == FALSE_IDX || a == TRUE_IDX {
            return Ok(a);
        }
        if let Some(&r) = memo.get(&a) {
            return Ok(r);
        }
        let n = self.nodes[a as usize];
        let lo = self.relabel_rec(n.lo, map, memo)?;
        let hi = self.relabel_rec(n.hi, map, memo)?;
        let atom = self.order[n.rank as usize];
        let img = map.get(&atom).copied().unwrap_or(atom);
        let rank = self.rank_of(img).ok_or(BddError::UnrankedAtom(img))?;
        let var = self.mk_node(rank, FALSE_IDX, TRUE_IDX);
        let vt = self.apply_rec(BinOp::And, var, hi);
        let nv = self.negate_rec(var);
        let ve = self.apply_rec(BinOp::And, nv, lo);
        let r = self.apply_rec(BinOp::Or, vt, ve);
        memo.insert(a, r);
        Ok(r)
    }

    /// Functional substitution: `a` with atom `p` replaced by the function
    /// `g`, i.e. `(g ∧ a|p=⊤) ∨ (¬g ∧ a|p=⊥)`.
    pub fn compose(&mut self, a: BddRef, p: Atom, g: BddRef) -> Result<BddRef, BddError> {
        self.check(a)?;
        self.check(g)?;
        let hi = self.restrict(a, p, true)?;
        let lo = self.restrict(a, p, false)?;
        self.ite(g, hi, lo)
    }

    /// The cofactor of `a` with `p` pinned to `v`.
    pub fn restrict(&mut self, a: BddRef, p: Atom, v: bool) -> Result<BddRef, BddError> {
        let a = self.check(a)?;
        let rank = self.rank_of(p).ok_or(BddError::UnrankedAtom(p))?;
        let mut memo = HashMap::new();
        let r = self.restrict_rec(a, rank, v, &mut memo);
        Ok(self.wrap(r))
    }

    fn restrict_rec(&mut self, a: u32, rank: u32, v: bool, memo: &mut HashMap<u32, u32>) -> u32 {
        if a == FALSE_IDX || a == TRUE_IDX {
            return a;
        }
        let n = self.nodes[a as usize];
        if n.rank > rank {
            return a;
        }
        if let Some(&r) = memo.get(&a) {
            return r;
        }
        let r = if n.rank == rank {
            if v {
                n.hi
            } else {
                n.lo
            }
        } else {
            let lo = self.restrict_rec(n.lo, rank, v, memo);
            let hi = self.restrict_rec(n.hi, rank, v, memo);
            self.mk_node(n.rank, lo, hi)
        };
        memo.insert(a, r);
        r
    }

    /// Truth of `a` under the assignment that makes exactly the atoms in `s`
    /// true.
    pub fn evaluate(&self, a: BddRef, s: &State) -> bool {
        self.evaluate_with(a, |atom| s.contains(&atom))
    }

    /// Truth of `a` under an assignment given as a predicate on atoms.
    pub fn evaluate_with(&self, a: BddRef, assign: impl Fn(Atom) -> bool) -> bool {
        debug_assert_eq!(a.mgr, self.id);
        let mut cur = a.idx;
        loop {
            match cur {
                FALSE_IDX => return false,
                TRUE_IDX => return true,
                _ => {
                    let n = self.nodes[cur as usize];
                    let atom = self.order[n.rank as usize];
                    cur = if assign(atom) { n.hi } else { n.lo };
                }
            }
        }
    }

    /// Number of distinct nodes reachable from `a`, terminals included.
    pub fn node_count(&self, a: BddRef) -> usize {
        debug_assert_eq!(a.mgr, self.id);
        let mut seen = HashSet::new();
        let mut stack = vec![a.idx];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if n != FALSE_IDX && n != TRUE_IDX {
                let node = self.nodes[n as usize];
                stack.push(node.lo);
                stack.push(node.hi);
            }
        }
        seen.len()
    }

    /// The atoms occurring in `a`.
    pub fn support(&self, a: BddRef) -> BTreeSet<Atom> {
        debug_assert_eq!(a.mgr, self.id);
        self.support_idx(a.idx)
    }

    fn support_idx(&self, a: u32) -> BTreeSet<Atom> {
        let mut seen = HashSet::new();
        let mut stack = vec![a];
        let mut sup = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == FALSE_IDX || n == TRUE_IDX || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n as usize];
            sup.insert(self.order[node.rank as usize]);
            stack.push(node.lo);
            stack.push(node.hi);
        }
        sup
    }

    /// Lazily enumerates the subsets of `over` satisfying `a`, in ascending
    /// subset order (all-false first, last atom toggling fastest).
    ///
    /// `over` must be sorted by rank and cover the support of `a`.
    pub fn all_sat<'m>(&'m self, a: BddRef, over: &[Atom]) -> Result<SatIter<'m>, BddError> {
        let a = self.check(a)?;
        let mut ranks = Vec::with_capacity(over.len());
        for &atom in over {
            ranks.push(self.rank_of(atom).ok_or(BddError::UnrankedAtom(atom))?);
        }
        if ranks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BddError::BadSupport);
        }
        let over_set: BTreeSet<Atom> = over.iter().copied().collect();
        if !self.support_idx(a).is_subset(&over_set) {
            return Err(BddError::BadSupport);
        }
        Ok(SatIter {
            mgr: self,
            over: over.to_vec(),
            ranks,
            bits: vec![false; over.len()],
            stack: vec![SatFrame { pos: 0, node: a, next: 0 }],
        })
    }

    /// One node per line, `id atom else_id then_id`, terminals as `F`/`T`;
    /// children precede parents and the root is the last line.
    pub fn dump_with(&self, a: BddRef, name: impl Fn(Atom) -> String) -> String {
        debug_assert_eq!(a.mgr, self.id);
        let mut reachable: Vec<u32> = {
            let mut seen = HashSet::new();
            let mut stack = vec![a.idx];
            while let Some(n) = stack.pop() {
                if !seen.insert(n) {
                    continue;
                }
                if n != FALSE_IDX && n != TRUE_IDX {
                    let node = self.nodes[n as usize];
                    stack.push(node.lo);
                    stack.push(node.hi);
                }
            }
            seen.into_iter().collect()
        };
        reachable.sort_unstable();
        let mut remap = HashMap::new();
        let mut lines = Vec::new();
        let mut next_id = 0u32;
        for &n in &reachable {
            let id = next_id;
            next_id += 1;
            remap.insert(n, id);
            match n {
                FALSE_IDX => lines.push(format!("{id} F")),
                TRUE_IDX => lines.push(format!("{id} T")),
                _ => {
                    let node = self.nodes[n as usize];
                    let atom = self.order[node.rank as usize];
                    lines.push(format!(
                        "{id} {} {} {}",
                        name(atom),
                        remap[&node.lo],
                        remap[&node.hi]
                    ));
                }
            }
        }
        lines.join("\n") + "\n"
    }
}

struct SatFrame {
    pos: usize,
    node: u32,
    next: u8,
}

/// Iterator over satisfying subsets; see [`Manager::all_sat`].
pub struct SatIter<'m> {
    mgr: &'m Manager,
    over: Vec<Atom>,
    ranks: Vec<u32>,
    bits: Vec<bool>,
    stack: Vec<SatFrame>,
}

impl Iterator for SatIter<'_> {
    type Item = State;

    fn next(&mut self) -> Option<State> {
        while let Some(top) = self.stack.last_mut() {
            if top.node == FALSE_IDX {
                self.stack.pop();
                continue;
            }
            if top.pos == self.over.len() {
                debug_assert_eq!(top.node, TRUE_IDX);
                let out: State = self
                    .over
                    .iter()
                    .zip(&self.bits)
                    .filter(|(_, &b)| b)
                    .map(|(&a, _)| a)
                    .collect();
                self.stack.pop();
                return Some(out);
            }
            if top.next > 1 {
                self.stack.pop();
                continue;
            }
            let v = top.next == 1;
            top.next += 1;
            let pos = top.pos;
            self.bits[pos] = v;
            let n = top.node;
            let child = if n != FALSE_IDX && n != TRUE_IDX {
                let node = self.mgr.nodes[n as usize];
                if node.rank == self.ranks[pos] {
                    if v {
                        node.hi
                    } else {
                        node.lo
                    }
                } else {
                    n
                }
            } else {
                n
            };
            self.stack.push(SatFrame { pos: pos + 1, node: child, next: 0 });
        }
        None
    }
}
