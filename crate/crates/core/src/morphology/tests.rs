use super::*;
use crate::controller::WaveParams;
use crate::rng::{stream, Stream};
use proptest::prelude::*;
use rand::SeedableRng;

fn wp() -> WaveParams {
    WaveParams { amp: 0.8, freq: 1.0, phase: 0.0, offset: 0.0 }
}

fn servo() -> MorphNode {
    MorphNode::servo(Rotation::default(), wp())
}

fn rect() -> MorphNode {
    MorphNode::rect(Rotation::default())
}

fn tree(root: MorphNode) -> MorphologyTree {
    MorphologyTree::new(root).unwrap()
}

fn rng(seed: u64) -> crate::rng::Rng {
    stream(seed, Stream::Variation)
}

/// root -> S1 (+x) -> S2 (+y); root -> S3 (+y) -> S4 (local -y), which
/// lands on S2's cell (1, 1, 0).
fn colliding_tree() -> MorphologyTree {
    let s1 = servo().with_child(1, servo());
    let s3 = servo().with_child(2, servo().with_child(0, servo()));
    tree(rect().with_child(0, s1).with_child(2, s3))
}

#[test]
fn random_size_one_is_root_only() {
    let mut r = rng(1);
    for _ in 0..100 {
        let t = random_morphology(&mut r, 1);
        assert_eq!(t, MorphologyTree::root_only());
        assert_eq!(descriptor_of(&t), Descriptor::new(1, 0));
    }
}

#[test]
fn random_trees_respect_limits() {
    let mut r = rng(2);
    let mut seen = [false; MAX_MODULES + 1];
    for _ in 0..10_000 {
        let t = random_morphology(&mut r, MAX_MODULES);
        assert!(t.is_valid());
        assert!((1..=MAX_MODULES).contains(&t.size()));
        assert!(t.depth() <= MAX_DEPTH);
        seen[t.size()] = true;
    }
    assert!(seen[1..].iter().all(|&s| s), "every size should be drawn");
}

#[test]
fn random_trees_are_seed_deterministic() {
    let a = random_morphology(&mut rand_chacha::ChaCha8Rng::seed_from_u64(42), 20);
    let b = random_morphology(&mut rand_chacha::ChaCha8Rng::seed_from_u64(42), 20);
    assert_eq!(a, b);
}

#[test]
fn remove_on_root_only_has_no_candidate() {
    let t = MorphologyTree::root_only();
    assert!(t.apply_mutation(MorphMutation::Remove, &mut rng(3)).is_none());
    let mut r = rng(3);
    for _ in 0..200 {
        let (m, op) = t.mutate(&mut r);
        assert!(matches!(op, Some(MorphMutation::Add) | Some(MorphMutation::Rotate)));
        assert!(m.is_valid());
    }
}

#[test]
fn add_on_root_only_gives_two_modules() {
    let t = MorphologyTree::root_only();
    let mut r = rng(4);
    for _ in 0..100 {
        let m = t.apply_mutation(MorphMutation::Add, &mut r).unwrap();
        assert_eq!(m.size(), 2);
        let d = descriptor_of(&m);
        assert!(d == Descriptor::new(2, 0) || d == Descriptor::new(1, 1), "{d:?}");
    }
}

#[test]
fn saturated_tree_never_grows() {
    let mut r = rng(5);
    let mut t = MorphologyTree::root_only();
    while t.size() < MAX_MODULES {
        t = t.apply_mutation(MorphMutation::Add, &mut r).unwrap();
    }
    assert!(t.apply_mutation(MorphMutation::Add, &mut r).is_none());
    for _ in 0..500 {
        let (m, op) = t.mutate(&mut r);
        assert_ne!(op, Some(MorphMutation::Add));
        assert!(m.size() <= MAX_MODULES);
    }
}

#[test]
fn rotate_always_picks_a_new_orientation() {
    let t = tree(rect().with_child(0, servo()));
    let mut r = rng(6);
    for _ in 0..200 {
        let m = t.apply_mutation(MorphMutation::Rotate, &mut r).unwrap();
        assert_ne!(m, t);
        assert_eq!(m.size(), t.size());
    }
}

#[test]
fn crossover_with_root_only_is_noop() {
    let a = MorphologyTree::root_only();
    let b = tree(rect().with_child(0, servo()));
    let out = crossover_branch_exchange(&a, &b, &mut rng(7));
    assert!(out.noop);
    assert_eq!(out.offspring, (a.clone(), b.clone()));
    let out = crossover_branch_exchange(&b, &a, &mut rng(7));
    assert!(out.noop);
}

#[test]
fn crossover_hand_trace() {
    // a: root with a 3-node servo chain at slot 0 plus a rect at slot 2
    let a = tree(
        rect()
            .with_child(0, servo().with_child(0, servo().with_child(0, servo())))
            .with_child(2, rect()),
    );
    // b: root with single rect at slot 1 and a servo at slot 4
    let b = tree(rect().with_child(1, rect()).with_child(4, servo()));
    let (ca, cb) = MorphologyTree::crossover_at(&a, &[0], &b, &[1]);
    assert_eq!(a.size(), 5);
    assert_eq!(b.size(), 3);
    assert_eq!(ca.size(), 3);
    assert_eq!(cb.size(), 5);
    assert_eq!(ca.node(&[0]).unwrap(), &rect());
    assert_eq!(cb.node(&[1]).unwrap(), a.node(&[0]).unwrap());
    // parents untouched
    assert_eq!(a.size(), 5);
}

#[test]
fn crossover_truncates_to_depth_limit() {
    let deep = servo().with_child(0, servo().with_child(0, servo().with_child(0, servo())));
    let a = tree(rect().with_child(0, deep.clone()));
    let b = tree(rect().with_child(0, servo().with_child(0, servo().with_child(0, servo()))));
    // put a's depth-4 chain (rooted at depth 1) under b's depth-3 node
    let (_, cb) = MorphologyTree::crossover_at(&a, &[0], &b, &[0, 0, 0]);
    assert!(cb.is_valid());
    assert_eq!(cb.depth(), MAX_DEPTH);
    assert_eq!(cb.size(), 5);
}

#[test]
fn crossover_truncates_to_size_limit() {
    let mut r = rng(8);
    let mut big = MorphologyTree::root_only();
    while big.size() < MAX_MODULES {
        big = big.apply_mutation(MorphMutation::Add, &mut r).unwrap();
    }
    for _ in 0..2000 {
        let out = crossover_branch_exchange(&big, &big.rotated_root(Rotation::ALL[1]), &mut r);
        assert!(out.offspring.0.is_valid() && out.offspring.1.is_valid());
    }
}

#[test]
fn random_crossovers_respect_limits() {
    let mut r = rng(9);
    for _ in 0..10_000 {
        let a = random_morphology(&mut r, MAX_MODULES);
        let b = random_morphology(&mut r, MAX_MODULES);
        let out = crossover_branch_exchange(&a, &b, &mut r);
        for c in [&out.offspring.0, &out.offspring.1] {
            assert!(c.is_valid());
            assert!(c.size() <= MAX_MODULES && c.depth() <= MAX_DEPTH);
            assert_eq!(c.root().kind, ModuleKind::Rect);
        }
    }
}

#[test]
fn variation_sequences_respect_limits() {
    let mut r = rng(10);
    let mut pool: Vec<MorphologyTree> = (0..20).map(|_| random_morphology(&mut r, 20)).collect();
    for i in 0..100_000 {
        let k = i % pool.len();
        let next = if i % 3 == 0 {
            let other = pool[(k + 7) % pool.len()].clone();
            crossover_branch_exchange(&pool[k], &other, &mut r).offspring.0
        } else {
            mutate_morphology(&pool[k], &mut r)
        };
        assert!(next.size() <= MAX_MODULES && next.depth() <= MAX_DEPTH);
        assert_eq!(next.root().kind, ModuleKind::Rect);
        pool[k] = next;
    }
}

#[test]
fn descriptor_examples() {
    assert_eq!(descriptor_of(&MorphologyTree::root_only()), Descriptor::new(1, 0));
    let t = tree(rect().with_child(0, servo()).with_child(1, servo()).with_child(2, rect()));
    assert_eq!(descriptor_of(&t), Descriptor::new(2, 2));
    let c = colliding_tree();
    assert_eq!(c.kind_counts(), (1, 5));
    assert_eq!(descriptor_of(&c), Descriptor::new(1, 3));
}

#[test]
fn lattice_root_only() {
    let real = realize_on_lattice(&MorphologyTree::root_only());
    assert_eq!(real.placements.len(), 1);
    assert_eq!(real.placements[0].cell, [0, 0, 0]);
    assert!(real.pruned.is_empty());
}

#[test]
fn lattice_straight_chain_along_x() {
    let mut chain = servo();
    for q in [1u8, 2, 3] {
        chain = MorphNode::servo(Rotation::ALL[q as usize], wp()).with_child(0, chain);
    }
    let t = tree(rect().with_child(0, chain));
    let real = realize_on_lattice(&t);
    let cells: Vec<Cell> = real.placements.iter().map(|p| p.cell).collect();
    assert_eq!(cells, (0..5).map(|x| [x, 0, 0]).collect::<Vec<_>>());
    assert!(real.pruned.is_empty());
}

#[test]
fn lattice_collision_prunes_later_branch() {
    let real = realize_on_lattice(&colliding_tree());
    // pre-order: root 0, S1 1, S2 2, S3 3, S4 4, S4's child 5
    assert_eq!(real.pruned, vec![4, 5]);
    let cells: Vec<Cell> = real.placements.iter().map(|p| p.cell).collect();
    assert_eq!(cells, vec![[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]);
}

#[test]
fn lattice_below_ground_is_pruned() {
    // a child rect's local +x points down at rotation 0
    let t = tree(rect().with_child(0, rect().with_child(0, servo())));
    let real = realize_on_lattice(&t);
    assert_eq!(real.pruned, vec![2]);
}

#[test]
fn genome_json_roundtrip_and_format() {
    let t = colliding_tree();
    let json = serde_json::to_string(&t).unwrap();
    let back: MorphologyTree = serde_json::from_str(&json).unwrap();
    assert_eq!(back, t);
    let v: serde_json::Value = serde_json::to_value(&t).unwrap();
    assert_eq!(v["kind"], "rect");
    assert_eq!(v["rotation"], 0);
    assert!(v.get("controller").is_none());
    assert_eq!(v["children"]["0"]["kind"], "servo");
    assert_eq!(v["children"]["0"]["controller"]["amp"], 0.8);
}

#[test]
fn genome_json_rejects_invalid_trees() {
    let bad = [
        r#"{"kind":"servo","rotation":0,"controller":{"amp":0,"freq":1,"phase":0,"offset":0},"children":{}}"#,
        r#"{"kind":"rect","rotation":45,"children":{}}"#,
        r#"{"kind":"rect","rotation":0,"children":{"5":{"kind":"rect","rotation":0,"children":{}}}}"#,
        r#"{"kind":"rect","rotation":0,"children":{"0":{"kind":"servo","rotation":0,"children":{}}}}"#,
        r#"{"kind":"rect","rotation":0,"children":{"0":{"kind":"servo","rotation":0,"controller":{"amp":3,"freq":1,"phase":0,"offset":0},"children":{}}}}"#,
    ];
    for b in bad {
        assert!(serde_json::from_str::<MorphologyTree>(b).is_err(), "{b}");
    }
}

fn remove_path(t: &MorphologyTree, path: &[u8]) -> MorphologyTree {
    let mut root = t.root().clone();
    let (slot, parent) = path.split_last().unwrap();
    let mut n = &mut root;
    for s in parent {
        n = n.children.get_mut(s).unwrap();
    }
    n.children.remove(slot);
    MorphologyTree::new(root).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn structural_mutation_deltas(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_morphology(&mut r, MAX_MODULES);
        if let Some(added) = t.apply_mutation(MorphMutation::Add, &mut r) {
            prop_assert_eq!(added.size(), t.size() + 1);
            let (r0, s0) = t.kind_counts();
            let (r1, s1) = added.kind_counts();
            prop_assert_eq!(r1.abs_diff(r0) + s1.abs_diff(s0), 1);
        }
        if let Some(removed) = t.apply_mutation(MorphMutation::Remove, &mut r) {
            let k = t.size() - removed.size();
            let matched = t.nodes().iter().filter(|(p, _)| !p.is_empty()).any(|(p, n)| {
                n.size() == k && remove_path(&t, p) == removed
            });
            prop_assert!(matched);
            let (r0, s0) = t.kind_counts();
            let (r1, s1) = removed.kind_counts();
            prop_assert_eq!((r0 + s0) - (r1 + s1), k);
        }
        let rotated = t.apply_mutation(MorphMutation::Rotate, &mut r).unwrap();
        prop_assert_eq!(rotated.size(), t.size());
    }

    #[test]
    fn crossover_is_symmetric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_morphology(&mut r, MAX_MODULES);
        let b = random_morphology(&mut r, MAX_MODULES);
        let pa: Vec<NodePath> = a.nodes().into_iter().map(|(p, _)| p).filter(|p| !p.is_empty()).collect();
        let pb: Vec<NodePath> = b.nodes().into_iter().map(|(p, _)| p).filter(|p| !p.is_empty()).collect();
        prop_assume!(!pa.is_empty() && !pb.is_empty());
        use rand::Rng as _;
        let x = &pa[r.random_range(0..pa.len())];
        let y = &pb[r.random_range(0..pb.len())];
        let (c1, c2) = MorphologyTree::crossover_at(&a, x, &b, y);
        let (d1, d2) = MorphologyTree::crossover_at(&b, y, &a, x);
        prop_assert_eq!(c1, d2);
        prop_assert_eq!(c2, d1);
    }

    #[test]
    fn realization_is_pure_and_counts_match(seed in any::<u64>()) {
        let t = random_morphology(&mut rng(seed), MAX_MODULES);
        let a = realize_on_lattice(&t);
        let b = realize_on_lattice(&t);
        prop_assert_eq!(&a, &b);
        let d = descriptor_of(&t);
        prop_assert_eq!(d.m + d.j, a.placements.len());
        prop_assert_eq!(a.placements.len() + a.pruned.len(), t.size());
        let mut cells: Vec<Cell> = a.placements.iter().map(|p| p.cell).collect();
        prop_assert!(cells.iter().all(|c| c[2] >= 0));
        cells.sort();
        cells.dedup();
        prop_assert_eq!(cells.len(), a.placements.len());
        // pruned sets are whole subtrees
        let nodes = t.nodes();
        for &i in &a.pruned {
            let path = &nodes[i].0;
            for (k, (p, _)) in nodes.iter().enumerate() {
                if p.len() > path.len() && p.starts_with(path) {
                    prop_assert!(a.pruned.contains(&k));
                }
            }
        }
    }
}
