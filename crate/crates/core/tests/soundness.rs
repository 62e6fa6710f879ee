mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    /// Whatever the solver accepts, the exact interpreter agrees with.
    #[test]
    fn synthesis_never_contradicts_oracle(seed in any::<u64>()) {
        let t = common::soundness_run(seed, 2);
        prop_assert!(t.discrepancies.is_empty(), "{}", t.discrepancies.join("\n---\n"));
    }
}

#[test]
fn generated_programs_parse_and_check() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let (src, prop) = common::gen::program(&mut rng, 3, 6);
        let p = couplesynth::lang::parse(&src).unwrap();
        assert!(p.body.len() <= 6);
        let prop = couplesynth::lang::PropSpec::parse(&prop).unwrap();
        couplesynth::synth::Task::new("g", p, prop, None, Vec::new()).unwrap();
    }
}
