use qrs::bailey::SeqSpec;
use qrs::exact::Rational;
use qrs::identities::sampling::Sampler;
use qrs::numeric::{escalate_at_point, numeric_sample_with_q, TruncationPlan};
use std::time::Instant;

fn main() {
    let plan = TruncationPlan::default();
    let q = Rational::new(1, 3);
    let beta = SeqSpec::delta(1);
    let mut sampler = Sampler::for_trial(0xC8, "cn_app1:numeric", 0);
    let mut screens = 0u32;
    let mut escalations = 0u32;
    let t0 = Instant::now();
    for _ in 0..200 {
        let point = match numeric_sample_with_q("cn_app1", 1, Some(&q), &mut sampler) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let ts = Instant::now();
        eprintln!("candidate at {:?}", t0.elapsed());
        match escalate_at_point("cn_app1", 1, &point, &plan, &beta, Some("h_single"), &mut sampler, false) {
            Ok(trace) => {
                escalations += 1;
                println!(
                    "ESCALATED in {:?}: passed={} shrink={} res={:?}",
                    ts.elapsed(),
                    trace.passed,
                    trace.shrink_ok,
                    trace.residuals.iter().map(|r| r.to_scientific(2)).collect::<Vec<_>>()
                );
                if trace.passed {
                    break;
                }
            }
            Err(e) => {
                screens += 1;
                if screens <= 4 {
                    println!("screened out in {:?}: {e}", ts.elapsed());
                }
            }
        }
    }
    println!("total: {screens} screened, {escalations} escalated, {:?}", t0.elapsed());
}
