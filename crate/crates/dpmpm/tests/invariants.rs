//! Property tests over the data layer, the stick-breaking map, and the
//! pooling rules: things that must hold for every input, not just the
//! worked examples.

use std::sync::Arc;

use dpmpm::catdata::{
    load_csv_with_schema, write_csv, CategoricalDataset, DisallowedPatternSet, Schema, Variable,
};
use dpmpm::model::stick_breaking;
use dpmpm::pooling::{combine, CombiningRule, PerDatasetEstimate, DF_CAP, DF_FLOOR};
use proptest::prelude::*;

fn arb_schema() -> impl Strategy<Value = Arc<Schema>> {
    prop::collection::vec(2usize..=5, 2..=4).prop_map(|dims| {
        let vars = dims
            .iter()
            .enumerate()
            .map(|(j, &d)| Variable {
                name: format!("v{j}"),
                levels: (0..d).map(|l| format!("lv {l},\"q\"")).collect(),
            })
            .collect();
        Arc::new(Schema::new(vars).unwrap())
    })
}

fn arb_dataset() -> impl Strategy<Value = CategoricalDataset> {
    (arb_schema(), 1usize..30, any::<u64>()).prop_map(|(schema, n, seed)| {
        let p = schema.p();
        let mut cells = Vec::with_capacity(n * p);
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 33) as usize
        };
        for _ in 0..n * p {
            let j = cells.len() % p;
            let roll = next() % (schema.dim(j) + 1);
            cells.push(if roll == schema.dim(j) { None } else { Some(roll as u16) });
        }
        CategoricalDataset::new(schema, cells).unwrap()
    })
}

proptest! {
    #[test]
    fn csv_round_trip_preserves_cells(data in arb_dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        write_csv(&data, &path, "NA").unwrap();
        let back = load_csv_with_schema(&path, "NA", data.schema_arc()).unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn pattern_built_from_a_record_matches_it(
        data in arb_dataset(),
        picks in prop::collection::vec(any::<bool>(), 4),
        flip in 0usize..4,
    ) {
        let schema = data.schema_arc();
        let p = schema.p();
        // Take the first fully observed record, if any.
        let mut row = vec![0u16; p];
        let Some(i) = (0..data.n_records()).find(|&i| data.complete_row_into(i, &mut row))
        else { return Ok(()); };
        data.complete_row_into(i, &mut row);

        let mut fixed: Vec<Option<u16>> = (0..p)
            .map(|j| picks[j % picks.len()].then_some(row[j]))
            .collect();
        if fixed.iter().all(Option::is_none) {
            fixed[0] = Some(row[0]);
        }
        let set = DisallowedPatternSet::new(Arc::clone(&schema), vec![fixed.clone()]).unwrap();
        prop_assert!(set.matches(&row));

        // Change one fixed cell to a different level: no longer a match.
        let j = (0..p).cycle().skip(flip).find(|&j| fixed[j].is_some()).unwrap();
        let old = fixed[j].unwrap();
        fixed[j] = Some(if old as usize + 1 < schema.dim(j) { old + 1 } else { old - 1 });
        let set = DisallowedPatternSet::new(schema, vec![fixed]).unwrap();
        prop_assert!(!set.matches(&row));
    }

    #[test]
    fn stick_breaking_lands_on_the_simplex(
        mut sticks in prop::collection::vec(0.0f64..=1.0, 1..12),
    ) {
        sticks.push(1.0);
        let weights = stick_breaking(&sticks);
        prop_assert_eq!(weights.len(), sticks.len());
        let total: f64 = weights.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "sum {}", total);
        let mut remaining = 1.0;
        for (w, v) in weights.iter().zip(&sticks) {
            prop_assert!(*w >= 0.0);
            prop_assert!((w - v * remaining).abs() <= 1e-12);
            remaining *= 1.0 - v;
        }
    }

    #[test]
    fn pooled_estimates_keep_their_promises(
        qs in prop::collection::vec(-10.0f64..10.0, 2..=6),
        us in prop::collection::vec(1e-6f64..10.0, 6),
        rule_pick in 0usize..3,
    ) {
        let rule = [
            CombiningRule::Imputation,
            CombiningRule::SynthesisFull,
            CombiningRule::SynthesisPartial,
        ][rule_pick];
        let estimates: Vec<PerDatasetEstimate> = qs
            .iter()
            .zip(&us)
            .map(|(&q, &u)| PerDatasetEstimate {
                label: "beta".into(),
                estimate: q,
                variance: u,
            })
            .collect();
        let pooled = combine(&estimates, rule, 0.95).unwrap();
        let wide = combine(&estimates, rule, 0.99).unwrap();

        let lo = qs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(pooled.estimate >= lo - 1e-12 && pooled.estimate <= hi + 1e-12);
        prop_assert!(pooled.variance > 0.0, "variance {}", pooled.variance);
        prop_assert!(pooled.std_error > 0.0);
        prop_assert!((DF_FLOOR..=DF_CAP).contains(&pooled.df), "df {}", pooled.df);
        prop_assert!(pooled.ci_lower <= pooled.estimate && pooled.estimate <= pooled.ci_upper);
        prop_assert!(wide.ci_lower <= pooled.ci_lower);
        prop_assert!(wide.ci_upper >= pooled.ci_upper);
        prop_assert!(pooled.ubar > 0.0);
        prop_assert!(pooled.b >= 0.0);
    }
}
