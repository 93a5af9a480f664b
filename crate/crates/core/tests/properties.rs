use curio_core::codec::{decode, decode_framed, encode, encode_framed};
use curio_core::prediction::{sequence_log_loss, train};
use curio_core::{History, Predictor, RewardPair, Symbol};
use proptest::prelude::*;

fn seq(alphabet: u16, max_len: usize) -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec((0..alphabet).prop_map(Symbol), 0..max_len)
}

proptest! {
    #[test]
    fn arithmetic_code_round_trips(s in seq(5, 300), order in 0usize..3) {
        let p = Predictor::laplace(5, order).unwrap();
        let code = encode(&p, &s).unwrap();
        prop_assert_eq!(decode(&p, &code, s.len()).unwrap(), s.clone());
        prop_assert_eq!(decode_framed(&p, &encode_framed(&p, &s).unwrap()).unwrap(), s.clone());
        prop_assert!(code.len() as f64 <= sequence_log_loss(&p, &s).unwrap() + 8.0);
    }

    #[test]
    fn trained_predictors_serialize_losslessly(s in seq(7, 200), order in 0usize..3) {
        let p = train(&Predictor::laplace(7, order).unwrap(), &s).unwrap();
        let back = Predictor::from_bytes(&p.to_bytes()).unwrap();
        prop_assert_eq!(back.model_bits(), p.model_bits());
        prop_assert_eq!(back, p);
    }

    #[test]
    fn histories_serialize_losslessly(
        steps in prop::collection::vec((0u16..16, 0u16..4, -1e3f64..1e3, -1e3f64..1e3), 0..100)
    ) {
        let mut h = History::new(16, 4).unwrap();
        for (x, y, e, i) in steps {
            h.append(Symbol(x), Symbol(y), RewardPair::new(e, i)).unwrap();
        }
        prop_assert_eq!(History::from_bytes(&h.to_bytes()).unwrap(), h);
    }
}
