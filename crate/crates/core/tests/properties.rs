//! Property tests over random circuits, states and channels.

use gaussim::channel::{compose_channels, GaussianChannel};
use gaussim::circuit::family::{random_circuit, random_operation, FamilyBounds};
use gaussim::circuit::ir::{Affine, CircuitIR, Component, InitialState, Measurement, Node, Operation, OutcomeRef};
use gaussim::circuit::{classify, execute, parse, print, ExecOptions, Verdict};
use gaussim::measurement::{self, OutcomeSource};
use gaussim::state::GaussianState;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn outcome(label: &str, component: Component) -> OutcomeRef {
    OutcomeRef { label: label.into(), component }
}

/// A circuit exercising every statement form: initial states, gates,
/// channels, measurements of each kind and affine feedforward.
fn rich_circuit(rng: &mut ChaCha8Rng) -> CircuitIR {
    let n = rng.random_range(3..=4);
    let bounds = FamilyBounds::default();
    let mut ir = CircuitIR::new(n);
    ir.initial[0] = InitialState::Coherent { dx: rng.random_range(-2.0..2.0), dp: rng.random_range(-2.0..2.0) };
    ir.initial[1] = InitialState::Squeezed { r: rng.random_range(-0.5..0.5), phi: rng.random_range(-3.0..3.0) };
    for _ in 0..rng.random_range(0..6) {
        ir.push(Node::Op(random_operation(rng, n, &bounds))).unwrap();
    }
    if rng.random_bool(0.3) {
        ir.push(Node::Kerr { mode: 0, chi: rng.random_range(-1.0..1.0) }).unwrap();
    }
    ir.push(Node::Measure {
        label: "m".into(),
        measurement: Measurement::Homodyne {
            mode: n - 1,
            angle: rng.random_range(-3.0..3.0),
            efficiency: rng.random_range(0.5..=1.0),
        },
    })
    .unwrap();
    ir.push(Node::Measure { label: "h".into(), measurement: Measurement::Heterodyne { mode: n - 2 } }).unwrap();
    let ff = Affine::constant(rng.random_range(-1.0..1.0))
        .add(Affine::outcome(outcome("m", Component::Whole)).scale(rng.random_range(-2.0..2.0)))
        .add(Affine::outcome(outcome("h", Component::P)).scale(rng.random_range(-2.0..2.0)));
    let fx = Affine::outcome(outcome("h", Component::X)).scale(rng.random_range(-2.0..2.0));
    ir.push(Node::Feedforward(Operation::Displace { mode: 0, dx: fx, dp: ff })).unwrap();
    if n == 4 {
        ir.push(Node::Measure { label: "v".into(), measurement: Measurement::VacuumProjection { modes: vec![1] } })
            .unwrap();
    }
    ir
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> GaussianState {
    let n_ops = rng.random_range(1..=10);
    let ir = random_circuit(rng, n, n_ops, &FamilyBounds::default());
    execute(&ir, 0, &ExecOptions::default()).unwrap().final_state
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_then_parse_is_the_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ir = rich_circuit(&mut rng);
        let text = print(&ir);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &ir, "{}", text);
        prop_assert_eq!(print(&back), text);
    }

    #[test]
    fn simulatable_circuits_always_execute(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ir = rich_circuit(&mut rng);
        let report = classify(&ir);
        let result = execute(&ir, seed, &ExecOptions::default());
        if report.verdict == Verdict::Simulatable {
            let r = result.unwrap();
            prop_assert!(r.final_state.validate().valid);
            prop_assert!(r.postselection_probability > 0.0 && r.postselection_probability <= 1.0);
        } else {
            prop_assert!(result.is_err());
        }
    }

    #[test]
    fn operations_preserve_physicality(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ir = random_circuit(&mut rng, 3, 40, &FamilyBounds::default());
        let state = execute(&ir, 0, &ExecOptions::default()).unwrap().final_state;
        prop_assert!(state.validate().valid, "{:?}", state.validate());
    }

    #[test]
    fn conditional_covariance_is_outcome_independent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_state(&mut rng, 2);
        let angle = rng.random_range(-3.0..3.0);
        let eff = rng.random_range(0.5..=1.0);
        let (_, first) = measurement::homodyne(&state, 1, angle, eff, OutcomeSource::Forced(&[0.0]), "x").unwrap();
        for _ in 0..10 {
            let x = rng.random_range(-4.0..4.0);
            let (_, post) = measurement::homodyne(&state, 1, angle, eff, OutcomeSource::Forced(&[x]), "x").unwrap();
            prop_assert!((post.cov() - first.cov()).amax() < 1e-12);
            prop_assert!(post.validate().valid);
        }
    }

    #[test]
    fn measuring_a_product_partner_does_not_signal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(&mut rng, 1);
        let b = random_state(&mut rng, 1);
        let joint = a.tensor(&b);
        let x = rng.random_range(-3.0..3.0);
        let (_, post) = measurement::homodyne(&joint, 1, rng.random_range(-3.0..3.0), 1.0, OutcomeSource::Forced(&[x]), "x").unwrap();
        prop_assert!(post.moment_distance(&a) < 1e-12);
        let (_, post) = measurement::condition_on_no_absorption(&joint, &[1], "v").unwrap();
        prop_assert!(post.moment_distance(&a) < 1e-12);
    }

    #[test]
    fn vacuum_projection_is_a_probability(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_state(&mut rng, 2);
        let p = measurement::vacuum_projection_probability(&state, &[0, 1]).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0);
    }

    #[test]
    fn composed_channels_stay_completely_positive(eta in 0.0..=1.0f64, gain in 1.0..3.0f64, y in 0.0..2.0f64) {
        let loss = GaussianChannel::loss(0, eta).unwrap();
        let amp = GaussianChannel::amplifier(0, gain).unwrap();
        let noise = GaussianChannel::additive_noise(0, DMatrix::from_diagonal_element(2, 2, y)).unwrap();
        for ch in [compose_channels(&loss, &amp).unwrap(), compose_channels(&amp, &noise).unwrap()] {
            let cp = ch.is_cp();
            prop_assert!(cp.min_eigenvalue >= -1e-9, "{:?}", cp);
        }
    }
}
