use std::collections::BTreeMap;

use proptest::prelude::*;

use ecdlp_lab::circuit::build_shor_circuit;
use ecdlp_lab::cli::ResultsDocument;
use ecdlp_lab::ecgroup::default_encoding;
use ecdlp_lab::postprocess::{extract_candidates, mod_inverse, parse_counts, AbPair};
use ecdlp_lab::simulator::{
    apply_noise, calibrate_conventions, run_exact, sample, ConventionConfig, Counts, OutcomeDistribution,
};

fn any_convention() -> impl Strategy<Value = ConventionConfig> {
    prop::sample::select(ConventionConfig::search_space())
}

fn normalized(weights: Vec<u32>, n: u32) -> OutcomeDistribution {
    let total: f64 = weights.iter().map(|&w| f64::from(w)).sum::<f64>().max(1.0);
    let mut probs: Vec<f64> = weights.iter().map(|&w| f64::from(w) / total).collect();
    if probs.iter().all(|&p| p == 0.0) {
        probs[0] = 1.0;
    }
    OutcomeDistribution::from_probs(n, probs)
}

fn distribution(n: u32) -> impl Strategy<Value = OutcomeDistribution> {
    prop::collection::vec(0u32..100, 1usize << (2 * n)).prop_map(move |w| normalized(w, n))
}

proptest! {
    #[test]
    fn render_parse_roundtrip(conv in any_convention(), n in 1u32..=6, seed in any::<u64>()) {
        let classical = seed % (1u64 << (2 * n));
        let key = conv.render(classical, n);
        prop_assert_eq!(key.len(), 2 * n as usize);
        let (a, b) = conv.parse_classical(classical, n);
        prop_assert_eq!(conv.classical_for(a, b, n), classical);
        let counts = Counts::from_map(BTreeMap::from([(key, 1)])).unwrap();
        let pairs = parse_counts(&counts, n, &conv).unwrap();
        prop_assert_eq!(pairs, vec![AbPair { a, b, count: 1 }]);
    }

    #[test]
    fn inverse_exists_exactly_for_odd(n in 1u32..=16, b in any::<u64>()) {
        let modulus = 1u64 << n;
        let b = b % modulus;
        match mod_inverse(b, modulus) {
            Ok(inv) => {
                prop_assert!(!b.is_multiple_of(2));
                prop_assert_eq!(b * inv % modulus, 1 % modulus);
            }
            Err(_) => prop_assert!(b.is_multiple_of(2)),
        }
    }

    #[test]
    fn noise_keeps_a_distribution(dist in distribution(2), eps in 0.0f64..=1.0, flip in 0.0f64..=0.5) {
        let noisy = apply_noise(&dist, eps, flip);
        prop_assert!((noisy.total() - 1.0).abs() < 1e-12);
        prop_assert!(noisy.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn sampling_is_seeded(dist in distribution(2), shots in 1u64..5000, seed in any::<u64>()) {
        let conv = ConventionConfig::consistent();
        let first = sample(&dist, shots, seed, &conv);
        prop_assert_eq!(first.map().values().sum::<u64>(), shots);
        prop_assert_eq!(first.shots(), shots);
        prop_assert_eq!(&first, &sample(&dist, shots, seed, &conv));
        for key in first.map().keys() {
            let classical = u64::from_str_radix(key, 2).unwrap();
            prop_assert!(dist.probs()[classical as usize] > 0.0);
        }
    }

    #[test]
    fn encoding_is_a_homomorphism(i in 0u64..32, j in 0u64..32) {
        let enc = default_encoding(5).unwrap();
        let sum = enc.curve().add(&enc.point(i).unwrap(), &enc.point(j).unwrap());
        prop_assert_eq!(enc.index_of(&sum).unwrap(), (i + j) % 32);
    }

    #[test]
    fn candidate_table_ignores_input_order(
        pairs in prop::collection::btree_map((0u64..16, 0u64..16), 1u64..50, 0..40),
        top_n in 1usize..20,
    ) {
        let forward: Vec<AbPair> = pairs.iter().map(|(&(a, b), &count)| AbPair { a, b, count }).collect();
        let mut backward = forward.clone();
        backward.reverse();
        let t1 = extract_candidates(&forward, 16, top_n);
        let t2 = extract_candidates(&backward, 16, top_n);
        prop_assert_eq!(t1.candidates(), t2.candidates());
        prop_assert!(t1.len() <= top_n);
        for w in t1.candidates().windows(2) {
            prop_assert!(w[0].pair.count >= w[1].pair.count);
        }
    }

    #[test]
    fn results_document_roundtrip(
        raw in prop::collection::btree_map(0u64..64, 1u64..1000, 1..30),
        qubits in prop::collection::vec(0u64..133, 0..15),
    ) {
        let counts: BTreeMap<String, u64> = raw.iter().map(|(&v, &c)| (format!("{v:06b}"), c)).collect();
        let doc = ResultsDocument {
            experiment: "ECDLP_32pts_Shors".into(),
            backend: "test".into(),
            physical_qubits: qubits,
            shots: counts.values().sum(),
            counts,
            extensions: None,
        };
        let text = doc.to_json();
        let back = ResultsDocument::from_json(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_json(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_support_lies_on_the_ridge(n in 1u32..=4, k_seed in any::<u64>(), which in 0usize..4) {
        let modulus = 1u64 << n;
        let convs = calibrate_conventions(3).unwrap();
        let conv = convs[which % convs.len()];
        let k = k_seed % modulus;
        let dist = run_exact(&build_shor_circuit(n, 1, k, &conv));
        let k_eff = conv.ridge_multiplier(1, k, n).unwrap();
        let orientation = conv.ridge_orientation();
        for (classical, _) in dist.support(1e-9) {
            let (a, b) = conv.parse_classical(classical, n);
            prop_assert!(orientation.holds(a, b, k_eff, modulus), "({}, {}) off ridge k_eff={}", a, b, k_eff);
        }
        prop_assert_eq!(dist.support(1e-9).len() as u64, modulus);
    }
}
