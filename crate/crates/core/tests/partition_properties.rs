mod common;

use fragsim_core::rng::Stream;
use fragsim_core::{
    paintbox, partition_step, ranked_kernel, replica_rng, DislocationLaw, FinitePartition, MassState, SimConfig,
};
use proptest::prelude::*;

fn labels_strategy() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..5, 1..30)
}

fn largest_frequency(p: &FinitePartition) -> f64 {
    p.block_sizes()[0] as f64 / p.n() as f64
}

proptest! {
    #[test]
    fn identity_refinements_and_full_restriction_are_no_ops(labels in labels_strategy()) {
        let p = FinitePartition::from_labels(&labels);
        let identity: Vec<FinitePartition> = p
            .blocks()
            .iter()
            .map(|b| FinitePartition::from_blocks(vec![b.clone()]).unwrap())
            .collect();
        prop_assert_eq!(&p.compose(&identity).unwrap(), &p);
        let all: Vec<usize> = (1..=labels.len()).collect();
        prop_assert_eq!(&p.induced(&all).unwrap(), &p);
    }

    #[test]
    fn composition_refines(labels in labels_strategy(), seed in any::<u64>()) {
        let p = FinitePartition::from_labels(&labels);
        let s = MassState::from_masses(&[0.5, 0.3], 0.0, 1.0).unwrap();
        let mut rng = replica_rng(seed, 0);
        let refinements: Vec<FinitePartition> = p
            .blocks()
            .iter()
            .map(|b| {
                let sub = paintbox(&s, b.len(), &mut rng);
                // relabel 1..|b| onto the block's elements
                FinitePartition::from_blocks(
                    sub.blocks().iter().map(|blk| blk.iter().map(|&i| b[i - 1]).collect()).collect(),
                )
                .unwrap()
            })
            .collect();
        let q = p.compose(&refinements).unwrap();
        prop_assert!(q.refines(&p));
        prop_assert_eq!(q.n(), p.n());
    }

    #[test]
    fn induced_blocks_are_traces(labels in labels_strategy(), pick in prop::collection::vec(any::<bool>(), 30)) {
        let p = FinitePartition::from_labels(&labels);
        let subset: Vec<usize> = (1..=labels.len()).filter(|&i| pick[i - 1]).collect();
        prop_assume!(!subset.is_empty());
        let q = p.induced(&subset).unwrap();
        prop_assert_eq!(q.n(), subset.len());
        for b in q.blocks() {
            prop_assert!(b.iter().all(|&i| labels[i - 1] == labels[b[0] - 1]));
        }
    }
}

#[test]
fn two_steps_match_one_step() {
    let law = DislocationLaw::dirac(vec![0.6, 0.4]).unwrap();
    let cfg = SimConfig::new(law, 0.3);
    let n = 1000;
    let reps = 2000u64;
    let mut one: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng: Stream = replica_rng(31, r);
            let p = partition_step(&FinitePartition::trivial(n), 0.3, ranked_kernel(&cfg), &mut rng).unwrap();
            largest_frequency(&p)
        })
        .collect();
    let mut two: Vec<f64> = (reps..2 * reps)
        .map(|r| {
            let mut rng: Stream = replica_rng(31, r);
            let mid = partition_step(&FinitePartition::trivial(n), 0.15, ranked_kernel(&cfg), &mut rng).unwrap();
            let p = partition_step(&mid, 0.15, ranked_kernel(&cfg), &mut rng).unwrap();
            largest_frequency(&p)
        })
        .collect();
    let d = common::ks2(&mut one, &mut two);
    assert!(d < 0.05, "KS {}", d);
}
