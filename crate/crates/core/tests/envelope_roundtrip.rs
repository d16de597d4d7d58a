use proptest::prelude::*;

use fibrecross::report::{family_payload, inputs, round_sig15, FamilyPayload, ReportEnvelope, SweepPayload, SweepRow};

fn sweep_row() -> impl Strategy<Value = SweepRow> {
    (
        1u64..10_000,
        3u64..u64::MAX / 2,
        proptest::option::of((2u64..500, 1u64..250, 2u64..1_000_000, 1e-6f64..1e6)),
        1e-3f64..1e3,
    )
        .prop_map(|(a, g, cell, sym)| SweepRow {
            alpha: format!("{a}/1000"),
            g,
            feasible: cell.is_some(),
            q: cell.map(|c| c.0),
            k: cell.map(|c| c.1),
            p: cell.map(|c| c.2),
            leading_constant: cell.map(|c| c.3),
            symmetric_constant: sym,
            bjp_upper: 2.25,
            bjp_lower: 1.0 / 257.0,
        })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-14 * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sweep_envelope_round_trip(rows in proptest::collection::vec(sweep_row(), 0..8)) {
        let payload = SweepPayload { rows: rows.clone() };
        let env = ReportEnvelope::new("sweep", inputs([("n", rows.len() as u64)]), &payload, 40).unwrap();
        let text = env.to_json();
        let back = ReportEnvelope::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json(), text);
        let decoded: SweepPayload = serde_json::from_value(back.outputs).unwrap();
        prop_assert_eq!(decoded.rows.len(), rows.len());
        for (d, r) in decoded.rows.iter().zip(&rows) {
            prop_assert_eq!(&d.alpha, &r.alpha);
            prop_assert_eq!((d.g, d.q, d.k, d.p, d.feasible), (r.g, r.q, r.k, r.p, r.feasible));
            prop_assert!(close(d.symmetric_constant, r.symmetric_constant));
            prop_assert_eq!(d.leading_constant.is_some(), r.leading_constant.is_some());
            if let (Some(x), Some(y)) = (d.leading_constant, r.leading_constant) {
                prop_assert!(close(x, y));
                prop_assert_eq!(x, round_sig15(y));
            }
        }
    }

    #[test]
    fn family_envelope_round_trip(p in 2u32..6, q in 2u32..9, k_half in 0u32..5) {
        let k = 2 * k_half + 1;
        prop_assume!(k <= q);
        let payload = family_payload(p, q, k, 1 << 16).unwrap();
        let env = ReportEnvelope::new("family", inputs([("p", p), ("q", q), ("k", k)]), &payload, 0).unwrap();
        let back = ReportEnvelope::from_json(&env.to_json()).unwrap();
        let decoded: FamilyPayload = serde_json::from_value(back.outputs).unwrap();
        prop_assert_eq!(&decoded.exact_pair_bound_sum, &payload.exact_pair_bound_sum);
        prop_assert_eq!(&decoded.lemma3_bound, &payload.lemma3_bound);
        prop_assert_eq!(&decoded.family_size, &payload.family_size);
        prop_assert!(close(decoded.ratio, payload.ratio) || decoded.ratio == payload.ratio);
    }
}
