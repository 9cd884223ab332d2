use qrs::bailey::SeqSpec;
use qrs::exact::Rational;
use qrs::numeric::{verify_truncated_with_q, TruncationPlan};
use std::time::Instant;

fn main() {
    let plan = TruncationPlan::default();
    for (id, n) in [("wang_ma2", 1usize), ("cn_app1", 1), ("cn_nt6p5", 2)] {
        for qv in [Rational::new(1, 3), Rational::new(1, 2)] {
            let t0 = Instant::now();
            let beta = SeqSpec::delta(n);
            let h = if id == "cn_app1" { Some("h_single") } else { None };
            let rep = verify_truncated_with_q(id, n, &plan, &beta, h, 42, 1, Some(&qv)).unwrap();
            println!(
                "{id} n={n} q={qv}: passed={} last_res={} elapsed={:?}",
                rep.passed(),
                rep.residuals.last().cloned().unwrap_or_default(),
                t0.elapsed()
            );
        }
    }
}
