use qrs::bailey::SeqSpec;
use qrs::exact::Rational;
use qrs::numeric::{verify_truncated_with_q, TruncationPlan};
use std::time::Instant;

fn main() {
    let plan = TruncationPlan::default();
    let beta = SeqSpec::delta(1);
    for qv in [Rational::new(1, 3), Rational::new(1, 2)] {
        for h in ["h_single", "h_global", "h_power"] {
            let t0 = Instant::now();
            match verify_truncated_with_q("cn_app1", 1, &plan, &beta, Some(h), 42, 1, Some(&qv)) {
                Ok(rep) => println!(
                    "cn_app1 q={qv} H={h}: passed={} resampled={} elapsed={:?}",
                    rep.passed(),
                    rep.trials.resampled,
                    t0.elapsed()
                ),
                Err(e) => println!("cn_app1 q={qv} H={h}: error {e} elapsed={:?}", t0.elapsed()),
            }
        }
    }
}
