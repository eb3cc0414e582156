use augspec::embedding::{build_representation, eigendecompose, normalize};
use augspec::graph::synthesize_structured;
use augspec::io;
use augspec::labels::{clean_labels, gaussian_noise};
use augspec::structure::SubclassStructure;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn structure() -> impl Strategy<Value = SubclassStructure> {
    (2usize..4, 0usize..3, prop::collection::vec(2usize..7, 5)).prop_map(|(k, extra, sizes)| {
        let k_bar = k + extra;
        SubclassStructure::new(k, sizes[..k_bar].to_vec(), (0..k_bar).map(|s| s % k).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_and_labels_round_trip(s in structure(), delta in 0.0f64..0.5, xi in 0.0f64..0.5, seed in 0u64..1000) {
        let adj = synthesize_structured(&s, delta, xi, 0.73, seed).unwrap();
        let back = io::parse_adjacency(&io::format_adjacency(&adj)).unwrap();
        prop_assert_eq!(back.weights(), adj.weights());
        let y = gaussian_noise(&clean_labels(&s), 0.9, seed).unwrap();
        let (yb, _) = io::parse_labels(&io::format_labels(&y, &s)).unwrap();
        prop_assert_eq!(yb, y);
    }

    #[test]
    fn arbitrary_values_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 12)) {
        let m = DMatrix::from_vec(3, 4, values);
        let back = io::parse_matrix(&io::format_matrix(&m, None, None)).unwrap();
        prop_assert_eq!(back.values, m);
    }
}

#[test]
fn representation_and_spectrum_files() {
    let s = SubclassStructure::balanced(2, 3, 4).unwrap();
    let adj = synthesize_structured(&s, 0.1, 0.0, 1.0, 1).unwrap();
    let spec = eigendecompose(&normalize(&adj).unwrap()).unwrap();
    let f = build_representation(&spec, 4, Some(2)).unwrap();
    let parsed = io::parse_matrix(&io::format_representation(&f, &s)).unwrap();
    assert_eq!(&parsed.values, f.values());
    assert_eq!(parsed.structure.unwrap(), s);
    let back = io::parse_spectrum(&io::format_spectrum(&spec), s).unwrap();
    assert_eq!(back.eigenvalues(), spec.eigenvalues());
}
