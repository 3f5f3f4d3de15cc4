//! Cross-module invariants: the unfolding equivalence over the whole
//! family of constructed networks, and serialization of the composite
//! artifacts.

use polyrnn::calculus::{concat, multiconcat, BoundsLedger, ConcatArtifacts, MulticoncatArtifacts};
use polyrnn::poly::{build_poly_rnn, PolynomialSpec};
use polyrnn::powers::{powers_rnn, PowersNet};
use polyrnn::primitives::{
    identity_rnn, mult_rnn, polymap_rnn, square_and_identity_rnn, square_rnn,
};
use polyrnn::rnn::RnnWeights;

fn constructed_family() -> Vec<(String, RnnWeights, usize)> {
    let sq = square_rnn(1.0).unwrap();
    let cubic = PolynomialSpec::new(vec![1.0, -2.0, 0.0, 1.0], 1.0).unwrap();
    vec![
        ("square".into(), sq.clone(), 1),
        ("square D=2".into(), square_rnn(2.0).unwrap(), 1),
        ("mult".into(), mult_rnn(1.0).unwrap(), 2),
        ("identity".into(), identity_rnn(), 1),
        ("clock".into(), polyrnn::clock_rnn(), 0),
        (
            "square+identity".into(),
            square_and_identity_rnn(1.0).unwrap(),
            1,
        ),
        ("power map 2".into(), polymap_rnn(2, 1.0).unwrap(), 2),
        (
            "concat".into(),
            concat(&sq, &sq, 1.0, 1.0).unwrap().weights,
            1,
        ),
        (
            "powers L=2".into(),
            powers_rnn(1.0, 2).unwrap().weights().unwrap(),
            1,
        ),
        (
            "poly N=3".into(),
            build_poly_rnn(&cubic).unwrap().0.weights,
            1,
        ),
    ]
}

#[test]
fn unfolding_matches_recurrence_for_every_construction() {
    for (name, net, d_in) in constructed_family() {
        for &t in &[1usize, 5, 20] {
            let ffn = net.unfold(t).unwrap();
            assert_eq!(ffn.layer_count(), t + 2);
            for i in 0..=100 {
                let x = -1.0 + 2.0 * i as f64 / 100.0;
                let input = vec![x; d_in];
                let a = ffn.eval(&input).unwrap();
                let b = net.run_delta(&input, t).unwrap().outputs[t].clone();
                assert_eq!(a, b, "{name} at T={t}, x={x}");
            }
        }
    }
}

#[test]
fn outputs_are_recomputable_from_states_for_every_construction() {
    for (name, net, d_in) in constructed_family() {
        let input = vec![0.4; d_in];
        let trace = net.run_delta(&input, 40).unwrap();
        for (h, out) in trace.states.iter().zip(&trace.outputs) {
            assert_eq!(&net.output_of(h).unwrap(), out, "{name}");
        }
    }
}

#[test]
fn concat_artifacts_serialize() {
    let sq = square_rnn(1.0).unwrap();
    let art = concat(&sq, &sq, 1.0, 1.0).unwrap();
    let text = serde_json::to_string(&art).unwrap();
    let back: ConcatArtifacts = serde_json::from_str(&text).unwrap();
    assert_eq!(back.weights, art.weights);
    assert_eq!(back.m_ring, art.m_ring);
    assert_eq!(back.w_ring, art.w_ring);
    assert_eq!(back.b_f, art.b_f);
}

#[test]
fn multiconcat_artifacts_serialize() {
    let sq = square_rnn(1.0).unwrap();
    let ledger = BoundsLedger::new(1.0, vec![1.0; 3], 2.0).unwrap();
    let art = multiconcat(&vec![sq; 3], &ledger).unwrap();
    let text = serde_json::to_string(&art).unwrap();
    let back: MulticoncatArtifacts = serde_json::from_str(&text).unwrap();
    assert_eq!(back.hidden_weights, art.hidden_weights);
    assert_eq!(back.levels, art.levels);
    assert_eq!(back.level_readouts.len(), art.level_readouts.len());
    for (a, b) in back.level_readouts.iter().zip(&art.level_readouts) {
        assert_eq!(a.a, b.a);
        assert_eq!(a.b, b.b);
        assert_eq!(a.offsets, b.offsets);
        assert_eq!(a.min_k, b.min_k);
    }
}

#[test]
fn powers_net_serializes_with_metadata() {
    let pw = powers_rnn(1.25, 2).unwrap();
    let text = serde_json::to_string(&pw).unwrap();
    let back: PowersNet = serde_json::from_str(&text).unwrap();
    assert_eq!(back.levels, 2);
    assert_eq!(back.domain, 1.25);
    assert_eq!(back.min_k, pw.min_k);
    assert_eq!(back.q_pi.0, pw.q_pi.0);
    let a = back.weights().unwrap().output_at(&[0.75], 14).unwrap();
    let b = pw.weights().unwrap().output_at(&[0.75], 14).unwrap();
    assert_eq!(a, b);
}
