//! Exact verification sweep over every terminating registry entry.

use qrs::dsl::ast::DimSpec;
use qrs::identities::{verify_terminating, BetaSource, VerifyConfig, REGISTRY};
use qrs::multiindex::MultiIndex;

fn mi(v: &[i64]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

#[test]
fn every_terminating_entry_passes_smoke_trials() {
    let mut checked = 0;
    for (id, entry) in REGISTRY.iter() {
        let has_term = entry
            .regimes()
            .contains(&qrs::dsl::ast::Regime::Terminating);
        if !has_term {
            continue;
        }
        let configs: Vec<(usize, MultiIndex)> = match entry.dim() {
            DimSpec::Fixed(1) => vec![(1, mi(&[4]))],
            _ => vec![(1, mi(&[3])), (2, mi(&[2, 1])), (3, mi(&[1, 1, 1]))],
        };
        for (n, bounds) in configs {
            for beta in [BetaSource::Delta, BetaSource::Random(3)] {
                let mut cfg = VerifyConfig::new(n, bounds.clone(), 2, 0xA11CE);
                cfg.beta = beta;
                let rep = verify_terminating(id, &cfg)
                    .unwrap_or_else(|e| panic!("{id} n={n}: {e}"));
                assert!(
                    rep.passed(),
                    "{id} n={n} bounds={bounds} failed: {:?}",
                    rep.failures
                );
            }
        }
        checked += 1;
    }
    assert_eq!(checked, 19, "expected 19 terminating entries");
}
