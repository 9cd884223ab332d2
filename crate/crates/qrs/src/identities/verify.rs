//! Terminating-regime verification: sample admissible points, evaluate both
//! sides exactly, compare as canonical rationals.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::bailey::SeqSpec;
use crate::dsl::ast::{DimSpec, IdentityDoc, Regime};
use crate::dsl::compile::{AbstractFun, FunTable, SideEnv};
use crate::error::{EvalError, EvalResult};
use crate::exact::{rat_pow, Rational};
use crate::identities::registry::{builtin_identity, FunKind, IdentityEntry};
use crate::identities::sampling::Sampler;
use crate::kernels::ParamPoint;
use crate::multiindex::{iter_box, MultiIndex};
use crate::qpoch::EvalCtx;
use crate::report::{Failure, TrialStats, VerificationReport};

/// Where beta / Acoef coefficients come from.
#[derive(Debug, Clone)]
pub enum BetaSource {
    Delta,
    Random(usize),
    Fixed(SeqSpec),
}

impl BetaSource {
    pub fn realize(&self, sampler: &mut Sampler, bounds: &MultiIndex) -> SeqSpec {
        match self {
            BetaSource::Delta => SeqSpec::delta(bounds.dim()),
            BetaSource::Random(size) => {
                let pts: Vec<MultiIndex> = iter_box(bounds).collect();
                let mut pairs = Vec::new();
                // always include the origin so the series has a leading term
                pairs.push((MultiIndex::zeros(bounds.dim()), sampler.nonzero_scalar()));
                for _ in 1..*size {
                    let p = sampler.pick(&pts);
                    pairs.push((p, sampler.nonzero_scalar()));
                }
                SeqSpec::from_pairs(pairs)
            }
            BetaSource::Fixed(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub n: usize,
    pub bounds: MultiIndex,
    pub trials: u32,
    pub seed: u64,
    pub beta: BetaSource,
    /// H-menu choice for identities with a menu prefactor (cn_app1).
    pub h_choice: Option<String>,
    /// Pinned parameter values (scalars, or vector components as x1, x2, ...).
    pub overrides: Vec<(String, Rational)>,
}

impl VerifyConfig {
    pub fn new(n: usize, bounds: MultiIndex, trials: u32, seed: u64) -> Self {
        VerifyConfig {
            n,
            bounds,
            trials,
            seed,
            beta: BetaSource::Random(3),
            h_choice: None,
            overrides: Vec::new(),
        }
    }
}

/// Apply pinned values on top of a sampled point. Names like x1/y2 address
/// vector components; q cannot be pinned to zero.
pub fn apply_overrides(point: &mut ParamPoint, overrides: &[(String, Rational)]) {
    for (name, val) in overrides {
        let mut split = None;
        for (i, ch) in name.char_indices() {
            if ch.is_ascii_digit() {
                split = Some(i);
                break;
            }
        }
        match split {
            Some(i) if i > 0 => {
                let (base, idx) = name.split_at(i);
                if let Ok(pos) = idx.parse::<usize>() {
                    if pos >= 1 {
                        if let Ok(vec) = point.vector(base) {
                            if pos <= vec.len() {
                                let mut v = vec.to_vec();
                                v[pos - 1] = val.clone();
                                point.set_vector(base, v);
                                continue;
                            }
                        }
                    }
                }
                point.set_scalar(name, val.clone());
            }
            _ => point.set_scalar(name, val.clone()),
        }
    }
}

/// Sample a parameter point for the document's schema.
pub fn sample_point(doc: &IdentityDoc, n: usize, sampler: &mut Sampler) -> ParamPoint {
    let mut point = ParamPoint::new(n);
    for s in &doc.scalars {
        point.set_scalar(s, sampler.nonzero_scalar());
    }
    for v in &doc.vectors {
        if v == "x" {
            point.set_vector("x", sampler.x_vector(n));
        } else {
            let vals: Vec<Rational> = (0..n).map(|_| sampler.nonzero_scalar()).collect();
            point.set_vector(v, vals);
        }
    }
    let mut point = point;
    for i in &doc.ints {
        point = point.with_int(i, sampler.small_int(3));
    }
    point
}

/// Build the abstract-function tables a document needs in the terminating
/// regime: random samples on the box, or Liu's polynomial samples.
pub fn build_fun_tables(
    entry: &IdentityEntry,
    doc: &IdentityDoc,
    point: &ParamPoint,
    ctx: &EvalCtx,
    bounds: &MultiIndex,
    sampler: &mut Sampler,
) -> EvalResult<HashMap<String, FunTable>> {
    let mut out = HashMap::new();
    for name in &doc.uses {
        if name == "beta" || name == "Acoef" {
            continue;
        }
        let table = match entry.fun_kind {
            Some(FunKind::LiuPolynomial) => {
                // K[j] = f(alpha q^{j+1}) for a random polynomial f
                let coeffs: Vec<Rational> = (0..3).map(|_| sampler.nonzero_scalar()).collect();
                let alpha = point.scalar("alpha")?.clone();
                let mut values = HashMap::new();
                for t in iter_box(bounds) {
                    let z = &alpha * &ctx.qpow(t.comp(0) + 1)?;
                    let mut acc = Rational::zero();
                    for (i, c) in coeffs.iter().enumerate() {
                        acc = &acc + &(c * &rat_pow(&z, i as i64)?);
                    }
                    values.insert(t, acc);
                }
                FunTable { values }
            }
            _ => FunTable {
                values: iter_box(bounds)
                    .map(|t| (t, sampler.nonzero_scalar()))
                    .collect(),
            },
        };
        out.insert(name.clone(), table);
    }
    Ok(out)
}

/// Outcome of one exact comparison.
pub struct TrialOutcome {
    pub resamples: u32,
    pub lhs: Rational,
    pub rhs: Rational,
    pub point: ParamPoint,
}

pub const MAX_RESAMPLES: u32 = 1000;

/// Evaluate both sides at a fresh admissible point, resampling on poles.
pub fn run_trial(
    entry: &IdentityEntry,
    config: &VerifyConfig,
    trial: u32,
) -> EvalResult<TrialOutcome> {
    let pair = entry.pair(Regime::Terminating)?;
    let doc = &pair.doc;
    let mut sampler = Sampler::for_trial(config.seed, entry.id, trial as u64);
    let beta = config.beta.realize(&mut sampler, &config.bounds);
    let mut resamples = 0;
    loop {
        if resamples > MAX_RESAMPLES {
            return Err(EvalError::AdmissiblePointNotFound(MAX_RESAMPLES as usize));
        }
        let q = sampler.q();
        let mut point = sample_point(doc, config.n, &mut sampler);
        point.set_scalar("q", q);
        apply_overrides(&mut point, &config.overrides);
        let ctx = EvalCtx::new(point.scalar("q").expect("q present").clone());
        let funs = match build_fun_tables(entry, doc, &point, &ctx, &config.bounds, &mut sampler) {
            Ok(f) => f,
            Err(EvalError::DivisionByZero) => {
                resamples += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut env = SideEnv::new(config.n, &ctx, &point);
        env.box_n = Some(&config.bounds);
        env.seqs.insert("beta", &beta);
        env.seqs.insert("Acoef", &beta);
        for (name, table) in &funs {
            env.funs.insert(name.as_str(), table as &dyn AbstractFun);
        }
        let lhs = match pair.lhs.eval(&env) {
            Ok(v) => v,
            Err(EvalError::DivisionByZero) => {
                resamples += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let rhs = match pair.rhs.eval(&env) {
            Ok(v) => v,
            Err(EvalError::DivisionByZero) => {
                resamples += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        return Ok(TrialOutcome {
            resamples,
            lhs,
            rhs,
            point,
        });
    }
}

fn point_to_pairs(point: &ParamPoint) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = Vec::new();
    for (name, val) in point.scalar_names() {
        v.push((name.clone(), val.to_string()));
    }
    for (name, vals) in point.vector_names() {
        let joined: Vec<String> = vals.iter().map(|r| r.to_string()).collect();
        v.push((name.clone(), format!("[{}]", joined.join(","))));
    }
    for (name, val) in point.int_names() {
        v.push((name.clone(), val.to_string()));
    }
    v
}

/// Run the terminating verification for one identity and configuration.
pub fn verify_terminating(id: &str, config: &VerifyConfig) -> EvalResult<VerificationReport> {
    let entry = builtin_identity(id)?;
    if matches!(entry.dim(), DimSpec::Fixed(d) if d != config.n) {
        return Err(EvalError::Config(format!(
            "{id} is a one-variable identity; dimension must be 1"
        )));
    }
    if config.bounds.dim() != config.n {
        return Err(EvalError::Config(format!(
            "box {} does not match dimension {}",
            config.bounds, config.n
        )));
    }
    let mut stats = TrialStats::default();
    let mut failures = Vec::new();
    // trials are independent; merge deterministically by trial index
    let outcomes: Vec<EvalResult<TrialOutcome>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(entry, config, trial))
        .collect();
    for outcome in outcomes {
        let outcome = outcome?;
        stats.attempted += 1;
        stats.resampled += outcome.resamples;
        if outcome.lhs == outcome.rhs {
            stats.passed += 1;
        } else {
            failures.push(Failure {
                point: point_to_pairs(&outcome.point),
                lhs: outcome.lhs.to_string(),
                rhs: outcome.rhs.to_string(),
            });
        }
    }
    Ok(VerificationReport {
        id: id.to_string(),
        anchor: entry.anchor.to_string(),
        regime: "terminating".to_string(),
        n: config.n,
        bounds: config.bounds.to_string(),
        trials: stats,
        failures,
        residuals: vec![],
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn pfaff_saalschutz_verifies() {
        let cfg = VerifyConfig::new(1, mi(&[5]), 5, 7);
        let rep = verify_terminating("pfaff_saalschutz", &cfg).unwrap();
        assert!(rep.passed(), "failures: {:?}", rep.failures);
    }

    #[test]
    fn wang_ma2_with_delta_and_random_beta() {
        for beta in [BetaSource::Delta, BetaSource::Random(3)] {
            let mut cfg = VerifyConfig::new(1, mi(&[4]), 4, 11);
            cfg.beta = beta;
            let rep = verify_terminating("wang_ma2", &cfg).unwrap();
            assert!(rep.passed(), "failures: {:?}", rep.failures);
        }
    }

    #[test]
    fn wang_ma2_zero_box_collapses_to_single_term() {
        let mut cfg = VerifyConfig::new(1, mi(&[0]), 3, 3);
        cfg.beta = BetaSource::Delta;
        let rep = verify_terminating("wang_ma2", &cfg).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn an_result5a_n2_verifies() {
        let mut cfg = VerifyConfig::new(2, mi(&[1, 1]), 3, 5);
        cfg.beta = BetaSource::Delta;
        let rep = verify_terminating("an_result5a", &cfg).unwrap();
        assert!(rep.passed(), "failures: {:?}", rep.failures);
    }

    #[test]
    fn an_liu3_n2_with_random_coefficients() {
        let cfg = VerifyConfig::new(2, mi(&[2, 1]), 3, 13);
        let rep = verify_terminating("an_liu3", &cfg).unwrap();
        assert!(rep.passed(), "failures: {:?}", rep.failures);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let cfg = VerifyConfig::new(2, mi(&[1, 1]), 1, 1);
        assert!(matches!(
            verify_terminating("liu3", &cfg),
            Err(EvalError::Config(_))
        ));
    }
}
