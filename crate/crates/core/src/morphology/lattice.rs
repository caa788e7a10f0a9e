//! Placement of a body on the unit-cube lattice.
//!
//! Slot offsets in a module's local frame: Rect `{+x, -x, +y, -y, +z}`,
//! Servo `{+x, +y, -y}`. A Rect attaches to its parent through its local
//! `-z` face, a Servo through its local `-x` face, and a module's rotation
//! turns it about that connection axis. The root sits on its `-z` face and
//! turns about the vertical.

use std::collections::HashSet;

use super::{ModuleKind, MorphNode, MorphologyTree, NodePath};
use crate::controller::WaveParams;
use super::Descriptor;

pub type Cell = [i32; 3];
type Mat3 = [[i32; 3]; 3];

const IDENTITY: Mat3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat_vec(a: &Mat3, v: Cell) -> Cell {
    [0, 1, 2].map(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

/// Rotation by `q` quarter turns about the x axis.
fn rot_x(q: u8) -> Mat3 {
    let (c, s) = quarter(q);
    [[1, 0, 0], [0, c, -s], [0, s, c]]
}

fn rot_z(q: u8) -> Mat3 {
    let (c, s) = quarter(q);
    [[c, -s, 0], [s, c, 0], [0, 0, 1]]
}

fn quarter(q: u8) -> (i32, i32) {
    match q % 4 {
        0 => (1, 0),
        1 => (0, 1),
        2 => (-1, 0),
        _ => (0, -1),
    }
}

fn slot_offset(kind: ModuleKind, slot: u8) -> Cell {
    match (kind, slot) {
        (ModuleKind::Rect, 0) | (ModuleKind::Servo, 0) => [1, 0, 0],
        (ModuleKind::Rect, 1) => [-1, 0, 0],
        (ModuleKind::Rect, 2) | (ModuleKind::Servo, 1) => [0, 1, 0],
        (ModuleKind::Rect, 3) | (ModuleKind::Servo, 2) => [0, -1, 0],
        (ModuleKind::Rect, 4) => [0, 0, 1],
        _ => unreachable!("slot {slot} invalid for {kind:?}"),
    }
}

/// Local rotation taking `+x` onto the given slot's offset.
fn slot_frame(offset: Cell) -> Mat3 {
    match offset {
        [1, 0, 0] => IDENTITY,
        [-1, 0, 0] => rot_z(2),
        [0, 1, 0] => rot_z(1),
        [0, -1, 0] => rot_z(3),
        [0, 0, 1] => [[0, 0, -1], [0, 1, 0], [1, 0, 0]],
        _ => unreachable!(),
    }
}

/// Frame of a child module, given its parent's frame and the slot used.
fn child_frame(parent: &Mat3, parent_kind: ModuleKind, slot: u8, child: &MorphNode) -> Mat3 {
    let attach = mat_mul(parent, &slot_frame(slot_offset(parent_kind, slot)));
    match child.kind {
        // local +x faces away from the parent; spin about x
        ModuleKind::Servo => mat_mul(&attach, &rot_x(child.rotation.quarter_turns())),
        // local +z faces away from the parent; spin about z
        ModuleKind::Rect => {
            const Z_TO_X: Mat3 = [[0, 0, 1], [0, 1, 0], [-1, 0, 0]];
            mat_mul(&mat_mul(&attach, &Z_TO_X), &rot_z(child.rotation.quarter_turns()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// Pre-order index of the module in the genotype tree.
    pub node: usize,
    pub path: NodePath,
    pub kind: ModuleKind,
    pub cell: Cell,
    /// Outward direction from the parent (vertical for the root).
    pub heading: Cell,
    /// Index of the parent placement.
    pub parent: Option<usize>,
    pub controller: Option<WaveParams>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LatticeRealization {
    pub placements: Vec<Placement>,
    /// Pre-order indices of modules that were not realized.
    pub pruned: Vec<usize>,
}

impl LatticeRealization {
    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn children_of(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        self.placements
            .iter()
            .enumerate()
            .filter(move |(_, p)| p.parent == Some(idx))
            .map(|(i, _)| i)
    }

    /// Realized subtree sizes, indexed like `placements`.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![1usize; self.placements.len()];
        // placements are in pre-order, so children come after parents
        for i in (0..self.placements.len()).rev() {
            if let Some(p) = self.placements[i].parent {
                sizes[p] += sizes[i];
            }
        }
        sizes
    }

    /// Whether each realized subtree touches the ground plane (`z == 0`).
    pub fn grounded(&self) -> Vec<bool> {
        let mut g: Vec<bool> = self.placements.iter().map(|p| p.cell[2] == 0).collect();
        for i in (0..self.placements.len()).rev() {
            if let Some(p) = self.placements[i].parent {
                g[p] |= g[i];
            }
        }
        g
    }

    pub fn descriptor(&self) -> Descriptor {
        let servos = self
            .placements
            .iter()
            .filter(|p| p.kind == ModuleKind::Servo)
            .count();
        Descriptor::new(self.placements.len() - servos, servos)
    }
}

/// Depth-first placement in ascending slot order. A module whose cell is
/// already taken or lies below the ground plane is dropped with its subtree.
pub fn realize_on_lattice(tree: &MorphologyTree) -> LatticeRealization {
    struct Walker {
        occupied: HashSet<Cell>,
        out: LatticeRealization,
        counter: usize,
    }

    impl Walker {
        fn skip(&mut self, node: &MorphNode) {
            self.out.pruned.push(self.counter);
            self.counter += 1;
            for c in node.children.values() {
                self.skip(c);
            }
        }

        fn visit(
            &mut self,
            node: &MorphNode,
            path: &mut NodePath,
            cell: Cell,
            heading: Cell,
            frame: Mat3,
            parent: Option<usize>,
        ) {
            if cell[2] < 0 || self.occupied.contains(&cell) {
                self.skip(node);
                return;
            }
            self.occupied.insert(cell);
            let idx = self.out.placements.len();
            self.out.placements.push(Placement {
                node: self.counter,
                path: path.clone(),
                kind: node.kind,
                cell,
                heading,
                parent,
                controller: node.controller,
            });
            self.counter += 1;
            for (&slot, child) in &node.children {
                let dir = mat_vec(&frame, slot_offset(node.kind, slot));
                let child_cell = [cell[0] + dir[0], cell[1] + dir[1], cell[2] + dir[2]];
                let frame_c = child_frame(&frame, node.kind, slot, child);
                path.push(slot);
                self.visit(child, path, child_cell, dir, frame_c, Some(idx));
                path.pop();
            }
        }
    }

    let root = tree.root();
    let mut w = Walker {
        occupied: HashSet::new(),
        out: LatticeRealization::default(),
        counter: 0,
    };
    let frame = rot_z(root.rotation.quarter_turns());
    w.visit(root, &mut Vec::new(), [0, 0, 0], [0, 0, 1], frame, None);
    w.out
}

/// `(non-movable, movable)` counts over realized modules only.
pub fn descriptor_of(tree: &MorphologyTree) -> Descriptor {
    realize_on_lattice(tree).descriptor()
}
