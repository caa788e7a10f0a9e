//! Tree-based direct encoding of modular robot bodies.
//!
//! A body is a tree of [`MorphNode`]s rooted at a fixed rectangular module.
//! Children hang off numbered connection slots; servos carry a
//! [`WaveParams`] controller. Variation operators here never produce a tree
//! with more than [`MAX_MODULES`] modules or deeper than [`MAX_DEPTH`].

mod lattice;

pub use lattice::{descriptor_of, realize_on_lattice, Cell, LatticeRealization, Placement};

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::controller::WaveParams;
use crate::error::GenomeError;

/// Maximum number of modules in a body (root included).
pub const MAX_MODULES: usize = 20;
/// Maximum depth of any module below the root (root is depth 0).
pub const MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModuleKind {
    Rect,
    Servo,
}

impl ModuleKind {
    pub const fn slot_count(self) -> u8 {
        match self {
            ModuleKind::Rect => 5,
            ModuleKind::Servo => 3,
        }
    }

    pub const fn is_movable(self) -> bool {
        matches!(self, ModuleKind::Servo)
    }
}

/// Orientation about the parent-connection axis, in quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rotation(u8);

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation(0), Rotation(1), Rotation(2), Rotation(3)];

    pub fn from_degrees(deg: u32) -> Option<Self> {
        (deg.is_multiple_of(90) && deg < 360).then_some(Rotation((deg / 90) as u8))
    }

    pub fn degrees(self) -> u32 {
        self.0 as u32 * 90
    }

    pub fn quarter_turns(self) -> u8 {
        self.0
    }
}

impl Serialize for Rotation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let deg = u32::deserialize(d)?;
        Rotation::from_degrees(deg)
            .ok_or_else(|| serde::de::Error::custom(format!("rotation {deg} is not 0, 90, 180 or 270")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphNode {
    pub kind: ModuleKind,
    pub rotation: Rotation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<WaveParams>,
    #[serde(default)]
    pub children: BTreeMap<u8, MorphNode>,
}

impl MorphNode {
    pub fn rect(rotation: Rotation) -> Self {
        Self {
            kind: ModuleKind::Rect,
            rotation,
            controller: None,
            children: BTreeMap::new(),
        }
    }

    pub fn servo(rotation: Rotation, controller: WaveParams) -> Self {
        Self {
            kind: ModuleKind::Servo,
            rotation,
            controller: Some(controller),
            children: BTreeMap::new(),
        }
    }

    /// A childless module with uniformly random kind, rotation and (for
    /// servos) controller.
    pub fn random_leaf<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let rotation = Rotation::ALL[rng.random_range(0..4)];
        if rng.random_bool(0.5) {
            Self::rect(rotation)
        } else {
            Self::servo(rotation, WaveParams::random(rng))
        }
    }

    pub fn with_child(mut self, slot: u8, child: MorphNode) -> Self {
        self.children.insert(slot, child);
        self
    }

    pub fn size(&self) -> usize {
        1 + self.children.values().map(MorphNode::size).sum::<usize>()
    }

    /// Height of the subtree (a leaf has height 0).
    pub fn height(&self) -> usize {
        self.children
            .values()
            .map(|c| 1 + c.height())
            .max()
            .unwrap_or(0)
    }

    fn count_kind(&self, kind: ModuleKind) -> usize {
        (self.kind == kind) as usize
            + self.children.values().map(|c| c.count_kind(kind)).sum::<usize>()
    }

    fn validate(&self, depth: usize) -> Result<(), GenomeError> {
        match (self.kind, &self.controller) {
            (ModuleKind::Servo, None) => return Err(GenomeError::MissingController),
            (ModuleKind::Rect, Some(_)) => return Err(GenomeError::UnexpectedController),
            (ModuleKind::Servo, Some(p)) if !p.is_valid() => {
                return Err(GenomeError::ControllerOutOfRange(*p))
            }
            _ => {}
        }
        if depth > MAX_DEPTH && !self.children.is_empty() {
            return Err(GenomeError::TooDeep);
        }
        for (&slot, child) in &self.children {
            if slot >= self.kind.slot_count() {
                return Err(GenomeError::BadSlot { kind: self.kind, slot });
            }
            child.validate(depth + 1)?;
        }
        Ok(())
    }

    /// Drop descendants deeper than `max_height` below this node.
    fn prune_below(&mut self, max_height: usize) {
        if max_height == 0 {
            self.children.clear();
        } else {
            for child in self.children.values_mut() {
                child.prune_below(max_height - 1);
            }
        }
    }

    /// Remove the last node in pre-order (always a leaf). Returns false on a
    /// bare node.
    fn pop_last_preorder(&mut self) -> bool {
        let Some((&slot, last)) = self.children.iter_mut().next_back() else {
            return false;
        };
        if !last.pop_last_preorder() {
            self.children.remove(&slot);
        }
        true
    }
}

/// Path from the root to a node: the slot taken at every level.
pub type NodePath = Vec<u8>;

/// A valid robot body. The root is always a [`ModuleKind::Rect`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MorphNode", into = "MorphNode")]
pub struct MorphologyTree {
    root: MorphNode,
}

impl TryFrom<MorphNode> for MorphologyTree {
    type Error = GenomeError;

    fn try_from(root: MorphNode) -> Result<Self, Self::Error> {
        if root.kind != ModuleKind::Rect {
            return Err(GenomeError::RootNotRect);
        }
        root.validate(0)?;
        let tree = Self { root };
        if tree.size() > MAX_MODULES {
            return Err(GenomeError::TooLarge(tree.size()));
        }
        if tree.depth() > MAX_DEPTH {
            return Err(GenomeError::TooDeep);
        }
        Ok(tree)
    }
}

impl From<MorphologyTree> for MorphNode {
    fn from(tree: MorphologyTree) -> Self {
        tree.root
    }
}

impl Default for MorphologyTree {
    fn default() -> Self {
        Self::root_only()
    }
}

/// Morphological descriptor: `m` non-movable modules (root included) and
/// `j` movable joints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Descriptor {
    pub m: usize,
    pub j: usize,
}

impl Descriptor {
    pub const fn new(m: usize, j: usize) -> Self {
        Self { m, j }
    }

    pub const fn total(&self) -> usize {
        self.m + self.j
    }
}

impl From<[usize; 2]> for Descriptor {
    fn from([m, j]: [usize; 2]) -> Self {
        Self { m, j }
    }
}

impl From<Descriptor> for [usize; 2] {
    fn from(d: Descriptor) -> Self {
        [d.m, d.j]
    }
}

/// One of the three structural mutations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphMutation {
    Add,
    Remove,
    Rotate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverOutcome {
    pub offspring: (MorphologyTree, MorphologyTree),
    /// Set when a parent had no non-root module to exchange.
    pub noop: bool,
}

impl MorphologyTree {
    pub fn root_only() -> Self {
        Self {
            root: MorphNode::rect(Rotation::default()),
        }
    }

    pub fn new(root: MorphNode) -> Result<Self, GenomeError> {
        root.try_into()
    }

    pub fn root(&self) -> &MorphNode {
        &self.root
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn depth(&self) -> usize {
        self.root.height()
    }

    /// Genotype counts `(rect, servo)`, including unrealized modules.
    pub fn kind_counts(&self) -> (usize, usize) {
        (
            self.root.count_kind(ModuleKind::Rect),
            self.root.count_kind(ModuleKind::Servo),
        )
    }

    pub fn is_valid(&self) -> bool {
        self.root.kind == ModuleKind::Rect
            && self.root.validate(0).is_ok()
            && self.size() <= MAX_MODULES
            && self.depth() <= MAX_DEPTH
    }

    /// All nodes in pre-order (ascending slot order), with their paths.
    pub fn nodes(&self) -> Vec<(NodePath, &MorphNode)> {
        fn walk<'a>(n: &'a MorphNode, path: &mut NodePath, out: &mut Vec<(NodePath, &'a MorphNode)>) {
            out.push((path.clone(), n));
            for (&slot, c) in &n.children {
                path.push(slot);
                walk(c, path, out);
                path.pop();
            }
        }
        let mut out = Vec::with_capacity(MAX_MODULES);
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    pub fn node(&self, path: &[u8]) -> Option<&MorphNode> {
        path.iter()
            .try_fold(&self.root, |n, slot| n.children.get(slot))
    }

    fn node_mut(&mut self, path: &[u8]) -> Option<&mut MorphNode> {
        path.iter()
            .try_fold(&mut self.root, |n, slot| n.children.get_mut(slot))
    }

    /// Free connection points `(parent path, slot)` on modules shallower than
    /// the depth limit.
    pub fn open_slots(&self) -> Vec<(NodePath, u8)> {
        self.nodes()
            .into_iter()
            .filter(|(path, _)| path.len() < MAX_DEPTH)
            .flat_map(|(path, n)| {
                (0..n.kind.slot_count())
                    .filter(|s| !n.children.contains_key(s))
                    .map(move |s| (path.clone(), s))
            })
            .collect()
    }

    fn can_add(&self) -> bool {
        self.size() < MAX_MODULES && !self.open_slots().is_empty()
    }

    fn add_random_module<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        if self.size() >= MAX_MODULES {
            return false;
        }
        let slots = self.open_slots();
        if slots.is_empty() {
            return false;
        }
        let (path, slot) = &slots[rng.random_range(0..slots.len())];
        let leaf = MorphNode::random_leaf(rng);
        self.node_mut(path)
            .expect("open slot path exists")
            .children
            .insert(*slot, leaf);
        true
    }

    /// Controllers of every servo in pre-order.
    pub fn controllers_mut(&mut self) -> Vec<&mut WaveParams> {
        fn walk<'a>(n: &'a mut MorphNode, out: &mut Vec<&'a mut WaveParams>) {
            if let Some(p) = n.controller.as_mut() {
                out.push(p);
            }
            for c in n.children.values_mut() {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(&mut self.root, &mut out);
        out
    }

    pub fn rotated_root(&self, rotation: Rotation) -> Self {
        let mut t = self.clone();
        t.root.rotation = rotation;
        t
    }

    /// Apply one specific structural mutation. Returns `None` (and leaves the
    /// tree untouched) when the operator has no legal candidate.
    pub fn apply_mutation<R: Rng + ?Sized>(
        &self,
        op: MorphMutation,
        rng: &mut R,
    ) -> Option<MorphologyTree> {
        let mut out = self.clone();
        match op {
            MorphMutation::Add => {
                if !out.add_random_module(rng) {
                    return None;
                }
            }
            MorphMutation::Remove => {
                let candidates: Vec<NodePath> = self
                    .nodes()
                    .into_iter()
                    .map(|(p, _)| p)
                    .filter(|p| !p.is_empty())
                    .collect();
                if candidates.is_empty() {
                    return None;
                }
                let path = &candidates[rng.random_range(0..candidates.len())];
                let (slot, parent) = path.split_last().expect("non-root path");
                out.node_mut(parent)
                    .expect("parent exists")
                    .children
                    .remove(slot);
            }
            MorphMutation::Rotate => {
                let paths: Vec<NodePath> = self.nodes().into_iter().map(|(p, _)| p).collect();
                let path = &paths[rng.random_range(0..paths.len())];
                let node = out.node_mut(path).expect("path exists");
                let current = node.rotation.quarter_turns();
                let step = rng.random_range(1..4u8);
                node.rotation = Rotation((current + step) % 4);
            }
        }
        debug_assert!(out.is_valid());
        Some(out)
    }

    fn legal_mutations(&self) -> Vec<MorphMutation> {
        let mut ops = Vec::with_capacity(3);
        if self.can_add() {
            ops.push(MorphMutation::Add);
        }
        if self.size() > 1 {
            ops.push(MorphMutation::Remove);
        }
        ops.push(MorphMutation::Rotate);
        ops
    }

    /// Draw one of add / remove / rotate uniformly. An operator without a
    /// legal candidate is replaced by a uniform draw over the legal ones.
    pub fn mutate<R: Rng + ?Sized>(&self, rng: &mut R) -> (MorphologyTree, Option<MorphMutation>) {
        const OPS: [MorphMutation; 3] = [MorphMutation::Add, MorphMutation::Remove, MorphMutation::Rotate];
        let drawn = OPS[rng.random_range(0..3)];
        let legal = self.legal_mutations();
        let op = if legal.contains(&drawn) {
            drawn
        } else if legal.is_empty() {
            return (self.clone(), None);
        } else {
            legal[rng.random_range(0..legal.len())]
        };
        match self.apply_mutation(op, rng) {
            Some(t) => (t, Some(op)),
            None => (self.clone(), None),
        }
    }

    /// Exchange the subtree at `path_a` in `a` with the subtree at `path_b`
    /// in `b`. Both paths must name non-root nodes. Inserted subtrees are
    /// truncated (deepest first, then reverse pre-order) to respect limits.
    pub fn crossover_at(
        a: &MorphologyTree,
        path_a: &[u8],
        b: &MorphologyTree,
        path_b: &[u8],
    ) -> (MorphologyTree, MorphologyTree) {
        assert!(!path_a.is_empty() && !path_b.is_empty(), "root cannot be exchanged");
        let sub_a = a.node(path_a).expect("path_a exists").clone();
        let sub_b = b.node(path_b).expect("path_b exists").clone();
        (
            Self::graft(a, path_a, sub_b.clone(), sub_a.size()),
            Self::graft(b, path_b, sub_a, sub_b.size()),
        )
    }

    fn graft(host: &MorphologyTree, path: &[u8], mut sub: MorphNode, replaced_size: usize) -> MorphologyTree {
        sub.prune_below(MAX_DEPTH - path.len());
        let budget = MAX_MODULES - (host.size() - replaced_size);
        while sub.size() > budget {
            if !sub.pop_last_preorder() {
                break;
            }
        }
        let mut out = host.clone();
        *out.node_mut(path).expect("graft path exists") = sub;
        debug_assert!(out.is_valid());
        out
    }

    /// Branch exchange with uniformly chosen non-root candidates.
    pub fn crossover<R: Rng + ?Sized>(a: &MorphologyTree, b: &MorphologyTree, rng: &mut R) -> CrossoverOutcome {
        let cand = |t: &MorphologyTree| -> Vec<NodePath> {
            t.nodes().into_iter().map(|(p, _)| p).filter(|p| !p.is_empty()).collect()
        };
        let (ca, cb) = (cand(a), cand(b));
        if ca.is_empty() || cb.is_empty() {
            return CrossoverOutcome {
                offspring: (a.clone(), b.clone()),
                noop: true,
            };
        }
        let pa = &ca[rng.random_range(0..ca.len())];
        let pb = &cb[rng.random_range(0..cb.len())];
        CrossoverOutcome {
            offspring: Self::crossover_at(a, pa, b, pb),
            noop: false,
        }
    }
}

/// Random body: size uniform in `[1, max_size]`, modules added at uniformly
/// random open connection points.
pub fn random_morphology<R: Rng + ?Sized>(rng: &mut R, max_size: usize) -> MorphologyTree {
    assert!((1..=MAX_MODULES).contains(&max_size), "max_size {max_size} out of range");
    let target = rng.random_range(1..=max_size);
    let mut tree = MorphologyTree::root_only();
    while tree.size() < target {
        if !tree.add_random_module(rng) {
            break;
        }
    }
    tree
}

pub fn mutate_morphology<R: Rng + ?Sized>(tree: &MorphologyTree, rng: &mut R) -> MorphologyTree {
    tree.mutate(rng).0
}

pub fn crossover_branch_exchange<R: Rng + ?Sized>(
    a: &MorphologyTree,
    b: &MorphologyTree,
    rng: &mut R,
) -> CrossoverOutcome {
    MorphologyTree::crossover(a, b, rng)
}

#[cfg(test)]
mod tests;
