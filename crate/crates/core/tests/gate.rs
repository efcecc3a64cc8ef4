use collage_core::gate::passes;
use collage_core::{CritiqueReport, GateConfig, GateRule, NarrativeScores, PhotoScores};
use proptest::prelude::*;

#[test]
fn narrative_example_flips_with_threshold() {
    let s = NarrativeScores::new(5, 3, 4, 5);
    assert!(!GateConfig::new(4, 4, GateRule::Min).unwrap().narrative_passes(&s));
    assert!(GateConfig::new(3, 4, GateRule::Min).unwrap().narrative_passes(&s));
    // the mean of 4.25 clears 4 under the mean rule
    assert!(GateConfig::new(4, 4, GateRule::Mean).unwrap().narrative_passes(&s));
}

#[test]
fn thresholds_above_scale_are_rejected() {
    assert!(GateConfig::new(6, 4, GateRule::Min).is_err());
}

fn rule() -> impl Strategy<Value = GateRule> {
    prop_oneof![Just(GateRule::Min), Just(GateRule::Mean)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn monotone_in_scores_and_threshold(
        scores in prop::array::uniform4(0u8..=5),
        bump in 0usize..4,
        tau in 0u8..=5,
        rule in rule(),
    ) {
        if passes(&scores, tau, rule) {
            let mut higher = scores;
            higher[bump] = (higher[bump] + 1).min(5);
            prop_assert!(passes(&higher, tau, rule));
            prop_assert!(passes(&scores, tau.saturating_sub(1), rule));
        }
        if passes(&scores, tau, GateRule::Min) {
            prop_assert!(passes(&scores, tau, GateRule::Mean));
        }
    }

    #[test]
    fn min_rule_is_min_of_scores(scores in prop::array::uniform3(0u8..=5), tau in 0u8..=5) {
        prop_assert_eq!(passes(&scores, tau, GateRule::Min), *scores.iter().min().unwrap() >= tau);
    }

    #[test]
    fn report_is_lazy_and_consistent(n in prop::array::uniform4(0u8..=5), p in prop::array::uniform3(0u8..=5), tn in 0u8..=5, tp in 0u8..=5) {
        let cfg = GateConfig::new(tn, tp, GateRule::Min).unwrap();
        let narrative = NarrativeScores::new(n[0], n[1], n[2], n[3]);
        let photo = cfg.narrative_passes(&narrative).then(|| PhotoScores::new(p[0], p[1], p[2]));
        let r = CritiqueReport::from_scores(0, narrative, photo, cfg);
        prop_assert_eq!(r.gate2_pass.is_some(), r.gate1_pass);
        prop_assert_eq!(r.recompute_gates(), (r.gate1_pass, r.gate2_pass));
    }
}
