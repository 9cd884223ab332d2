use qrs::bailey::SeqSpec;
use qrs::exact::Rational;
use qrs::identities::sampling::Sampler;
use qrs::numeric::{escalate_at_point, numeric_sample_with_q, TruncationPlan};

fn main() {
    let plan = TruncationPlan::default();
    let q = Rational::new(1, 3);
    let beta = SeqSpec::delta(1);
    let mut sampler = Sampler::for_trial(42, "cn_app1:numeric", 0);
    for attempt in 0..2 {
        let point = match numeric_sample_with_q("cn_app1", 1, Some(&q), &mut sampler) {
            Ok(p) => p,
            Err(_) => continue,
        };
        match escalate_at_point("cn_app1", 1, &point, &plan, &beta, Some("h_single"), &mut sampler, false) {
            Ok(trace) => {
                let rs: Vec<String> = trace.residuals.iter().map(|r| r.to_scientific(3)).collect();
                println!("attempt {attempt}: passed={} shrink={} residuals={rs:?}", trace.passed, trace.shrink_ok);
            }
            Err(e) => println!("attempt {attempt}: rejected ({e})"),
        }
    }
}
