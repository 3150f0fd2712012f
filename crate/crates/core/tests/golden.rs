//! Per-term stress norms of the first step in the golden configuration,
//! frozen from a run whose level-1 residual was checked against the transport
//! defect and time-difference budget.

use wildns::config::RunConfig;
use wildns::construction::step::TERMS;
use wildns::driver::run_build;

const GOLDEN: [f64; 7] = [
    3.50304281815708282e3,
    8.12294813583194809e3,
    1.72152753944736300e6,
    9.65816752208495359e2,
    3.73217201705658156e6,
    5.37208797092420323e-2,
    3.37258953190954344e2,
];

#[test]
fn golden_term_norms() {
    let cfg = RunConfig { gamma_list: Vec::new(), ..RunConfig::default() };
    let b = run_build(&cfg, None).unwrap();
    let got = &b.summaries[0].term_max;
    for i in 0..TERMS.len() {
        let rel = (got[i] - GOLDEN[i]).abs() / GOLDEN[i].abs();
        assert!(rel <= 1e-8, "{}: {} vs {}", TERMS[i], got[i], GOLDEN[i]);
    }
}
