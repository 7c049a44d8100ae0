//! Numerical audit of the matrix inequalities behind the upper bound, run on
//! random small expanders.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use super::{
    absorbing_probabilities, build_chain, delocalization_interval, q_bar_q_underline, resolvent,
    resolvent_envelope, series_resolvent_oracle, spectral_summary, top_eigenpair, DieOutChain,
    SERIES_TOLERANCE,
};
use crate::graph::{generate_random_regular, spectral_expansion, CuriousSet, Graph};
use crate::rng::{derive_seed, stream_rng, SimRng};

/// Tolerance granted to every inequality for eigensolver round-off.
pub const AUDIT_SLACK: f64 = 1e-8;

const MAX_AUDIT_N: usize = 32;
const MAX_POWER: i32 = 20;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditCheck {
    /// Instances on which the inequality was evaluated.
    pub evaluated: usize,
    /// Largest amount by which the inequality failed; passing means within
    /// the slack, or 1e-9 for the absorption and series checks.
    pub max_violation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub seed: u64,
    pub trials: usize,
    pub slack: f64,
    /// Trials that met `alpha_F < 1 - lambda`, where the gated checks apply.
    pub gated_trials: usize,
    /// Gated trials whose delocalization horizon came out below 1.
    pub horizon_below_one: usize,
    pub checks: BTreeMap<String, AuditCheck>,
    pub passed: bool,
}

impl AuditReport {
    pub fn max_violation(&self) -> f64 {
        self.checks.values().map(|c| c.max_violation).fold(f64::NEG_INFINITY, f64::max)
    }
}

struct Recorder {
    checks: BTreeMap<String, AuditCheck>,
}

impl Recorder {
    fn record(&mut self, name: &str, violation: f64) {
        self.record_within(name, violation, AUDIT_SLACK);
    }

    /// Like `record` with a check-specific allowance in place of the slack.
    fn record_within(&mut self, name: &str, violation: f64, allowance: f64) {
        let c = self.checks.entry(name.to_string()).or_insert(AuditCheck {
            evaluated: 0,
            max_violation: f64::NEG_INFINITY,
            passed: true,
        });
        c.evaluated += 1;
        // NaN counts as a failure.
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        c.max_violation = c.max_violation.max(v);
        c.passed = c.passed && v <= allowance;
    }
}

/// Largest `b_ij - a_ij`; nonpositive iff `a >= b` entrywise.
pub(crate) fn dominance_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    b.iter().zip(a.iter()).map(|(b, a)| b - a).fold(f64::NEG_INFINITY, f64::max)
}

/// Largest excess of `|M^t - l1^t phi phi^T|_ij` over `l^t`, for `t <= max_t`.
pub(crate) fn rank_one_power_gap(m: &DMatrix<f64>, max_t: i32) -> f64 {
    let s = top_eigenpair(m);
    let phi = nalgebra::DVector::from_vec(s.phi1.clone());
    let outer = &phi * phi.transpose();
    let mut power = DMatrix::identity(m.nrows(), m.ncols());
    let mut worst = f64::NEG_INFINITY;
    for t in 0..=max_t {
        if t > 0 {
            power = &power * m;
        }
        let residual = &power - &outer * s.lambda1.powi(t);
        let envelope = s.lambda_sub.powi(t);
        worst = worst.max(residual.amax() - envelope);
    }
    worst
}

struct Instance {
    g: Graph,
    curious: CuriousSet,
    rho: f64,
}

fn random_instance(rng: &mut SimRng, seed: u64) -> Instance {
    loop {
        let n = rng.random_range(8..=MAX_AUDIT_N);
        let mut d = rng.random_range(3..n);
        if n * d % 2 == 1 {
            d = if d + 1 < n { d + 1 } else { d - 1 };
        }
        let Ok(g) = generate_random_regular(n, d, derive_seed(seed, rng.random())) else {
            continue;
        };
        // Half the trials keep f small enough that the gated checks apply.
        let f_max = if rng.random_bool(0.5) { (d / 4).max(1) } else { n / 2 };
        let f = rng.random_range(0..=f_max.min(n - 2));
        for _ in 0..20 {
            let members = sample(rng, n, f).into_vec();
            let curious = CuriousSet::new(n, members).expect("f < n - 1");
            if crate::graph::induced_subgraph_connected(&g, &curious) {
                let lo = if f == 0 { 0.05 } else { 0.0 };
                let rho = rng.random_range(lo..0.95);
                return Instance { g, curious, rho };
            }
        }
    }
}

/// Evaluates every matrix inequality on `trials` random instances with at
/// most 32 nodes. Violations are reported, never raised.
pub fn lemma_audit(seed: u64, trials: usize) -> AuditReport {
    let mut rec = Recorder { checks: BTreeMap::new() };
    let mut gated_trials = 0;
    let mut horizon_below_one = 0;
    for trial in 0..trials {
        let mut rng = stream_rng(seed, trial as u64);
        let inst = random_instance(&mut rng, seed);
        let lambda = spectral_expansion(&inst.g).expect("generated graphs are connected");
        let chain = build_chain(&inst.g, &inst.curious, inst.rho).expect("honest subgraph is connected");
        let gated = audit_instance(&mut rec, &chain, lambda, &mut rng);
        if let Some(below) = gated {
            gated_trials += 1;
            horizon_below_one += usize::from(below);
        }
    }
    let passed = rec.checks.values().all(|c| c.passed);
    AuditReport {
        seed,
        trials,
        slack: AUDIT_SLACK,
        gated_trials,
        horizon_below_one,
        checks: rec.checks,
        passed,
    }
}

/// Returns `Some(horizon_below_one)` when the instance passed the gate.
fn audit_instance(rec: &mut Recorder, chain: &DieOutChain, lambda: f64, rng: &mut SimRng) -> Option<bool> {
    let k = chain.size();
    let (n, f) = (chain.n() as f64, chain.f() as f64);
    let alpha = chain.density().value();
    let q = chain.q();

    let completion = (0..k)
        .map(|i| (q.row(i).sum() + chain.r()[i] - 1.0).abs())
        .fold(0.0, f64::max);
    rec.record("row_stochastic_completion", completion);

    let s = spectral_summary(chain);
    let lower = (1.0 - alpha).max(1.0 - (1.0 + lambda) * f / n);
    let upper = 1.0 - (1.0 - lambda) * f / n;
    rec.record("q_top_eigenvalue_bounds", (lower - s.lambda1).max(s.lambda1 - upper));
    rec.record("q_interlacing", s.lambda_sub - lambda);
    let norm = s.phi1.iter().map(|x| x * x).sum::<f64>().sqrt();
    let min_coord = s.phi1.iter().copied().fold(f64::INFINITY, f64::min);
    rec.record("perron_vector_nonnegative", ((norm - 1.0).abs() - 1e-9).max(-min_coord - 1e-12));

    if alpha < 1.0 {
        let (bar, under) = q_bar_q_underline(chain, alpha).expect("alpha below one");
        let sb = top_eigenpair(&bar);
        let su = top_eigenpair(&under);
        let honest_deg: Vec<f64> = (0..k).map(|i| q.row(i).iter().filter(|&&x| x > 0.0).count() as f64).collect();
        let total: f64 = honest_deg.iter().sum();
        let phi_gap = sb
            .phi1
            .iter()
            .zip(&honest_deg)
            .map(|(x, d)| (x * x - d / total).abs())
            .fold(0.0, f64::max);
        rec.record("q_bar_top_eigenpair", (sb.lambda1 - 1.0).abs().max(phi_gap));
        let under_phi_gap = su.phi1.iter().zip(&sb.phi1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rec.record("q_under_top_eigenpair", (su.lambda1 - (1.0 - alpha)).abs().max(under_phi_gap));
        rec.record("q_bar_subdominant", sb.lambda_sub - lambda / (1.0 - alpha));
        rec.record("q_under_subdominant", su.lambda_sub - lambda);
        let nonneg = -under.min();
        let sandwich = dominance_gap(q, &under).max(dominance_gap(&bar, q)).max(nonneg);
        rec.record("entrywise_sandwich", sandwich);

        let mut power_gap = f64::NEG_INFINITY;
        let (mut pb, mut pq, mut pu) = (bar.clone(), q.clone(), under.clone());
        for _ in 1..10 {
            power_gap = power_gap.max(dominance_gap(&pb, &pq)).max(dominance_gap(&pq, &pu));
            pb = &pb * &bar;
            pq = &pq * q;
            pu = &pu * &under;
        }
        rec.record("power_monotonicity", power_gap);
    }

    // Products with random nonnegative matrices keep the order.
    let c = DMatrix::from_fn(k, k, |_, _| rng.random::<f64>());
    let b = DMatrix::from_fn(k, k, |_, _| rng.random::<f64>());
    let a = &b + DMatrix::from_fn(k, k, |_, _| rng.random::<f64>());
    rec.record("product_monotonicity", dominance_gap(&(&a * &c), &(&b * &c)).max(dominance_gap(&(&c * &a), &(&c * &b))));
    rec.record("rank_one_power_envelope", rank_one_power_gap(q, MAX_POWER));

    let n_mat = resolvent(chain).expect("absorption is certain");
    let m = absorbing_probabilities(chain).expect("absorption is certain");
    let col_gap = (0..k).map(|v| (m.column(v).sum() - 1.0).abs()).fold(0.0, f64::max);
    rec.record_within("absorption_total", col_gap, 1e-9);
    if let Ok(series) = series_resolvent_oracle(chain, SERIES_TOLERANCE) {
        rec.record_within("resolvent_series_agreement", (&n_mat - series).amax(), 1e-9);
    }

    if !chain.density().passes_gate(lambda) {
        return None;
    }
    let iv = delocalization_interval(chain, alpha, lambda).expect("gate passed");
    let deloc = s.phi1.iter().map(|x| (iv.lo - x * x).max(x * x - iv.hi)).fold(f64::NEG_INFINITY, f64::max);
    rec.record("perron_delocalization", deloc);
    let env = resolvent_envelope(chain, alpha, lambda).expect("gate passed");
    let mut gap = f64::NEG_INFINITY;
    for i in 0..k {
        for j in 0..k {
            let off = n_mat[(i, j)] - if i == j { 1.0 } else { 0.0 };
            gap = gap.max(off - env.hi).max(env.lo - off);
        }
    }
    rec.record("resolvent_envelope", gap);
    Some(iv.degenerate())
}
