use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};

use locnot::dsl::{parse_circuit_dsl, to_dsl};
use locnot::elements::OpticalElement;
use locnot::gate::{Circuit, QubitMap, RailPair};

fn random_circuit(seed: u64, modes: usize) -> Circuit {
    let mut rng = StdRng::seed_from_u64(seed);
    let labels = (0..modes)
        .map(|i| {
            if rng.random_bool(0.5) {
                format!("m{i}")
            } else {
                format!("port_{i}_{}", rng.random::<u16>())
            }
        })
        .collect();
    let elements = (0..rng.random_range(0..12))
        .map(|_| {
            let m = sample(&mut rng, modes, 4).into_vec();
            match rng.random_range(0..5) {
                0 => OpticalElement::bs(m[0], m[1], rng.random::<f64>()),
                1 => OpticalElement::hwp(m[0], m[1], rng.random_range(-180.0..180.0)),
                2 => OpticalElement::qwp(m[0], m[1], rng.random_range(-180.0..180.0)),
                3 => OpticalElement::pbs(m[0], m[1], m[2], m[3]),
                _ => OpticalElement::phase(m[0], rng.random_range(-10.0..10.0)),
            }
        })
        .collect();
    let mut map = || {
        let m = sample(&mut rng, modes, 4).into_vec();
        QubitMap {
            control: RailPair::new(m[0], m[1]),
            target: RailPair::new(m[2], m[3]),
        }
    };
    let (inputs, outputs) = (map(), map());
    Circuit::new(modes, labels, elements, inputs, outputs).unwrap()
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(seed in any::<u64>(), modes in 4usize..10) {
        let circuit = random_circuit(seed, modes);
        let text = to_dsl(&circuit);
        let parsed = parse_circuit_dsl(&text).unwrap();
        prop_assert_eq!(&parsed, &circuit);
        prop_assert_eq!(to_dsl(&parsed), text);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored(seed in any::<u64>()) {
        let circuit = random_circuit(seed, 6);
        let noisy: String = to_dsl(&circuit)
            .lines()
            .map(|l| format!("  {l}   # note\n\n"))
            .collect();
        prop_assert_eq!(parse_circuit_dsl(&noisy).unwrap(), circuit);
    }
}

#[test]
fn shipped_conceptual_file_parses() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/circuits/conceptual_cnot.circ")).unwrap();
    assert_eq!(parse_circuit_dsl(&text).unwrap(), locnot::gate::build_conceptual_cnot());
}
