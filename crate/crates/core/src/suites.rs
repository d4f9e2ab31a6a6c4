//! Property suites: each runs estimators from [`analysis`](crate::analysis)
//! on a case and turns the measurements into pass/fail checks.
//!
//! Limits are not finitely checkable. A limit that must vanish is accepted
//! when its residual series decays under the configured rule; this is
//! recorded in every report.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::analysis::{
    check_claim_bounds, claim_params, cone_directions, derivative_continuity_at, frechet_residual,
    hoelder_residual, lipschitz_on_ball, measure_claim_constants, strict_residual, uniqueness_bound_check,
    ClaimReport, ConeReport, ResidualSeries, UniquenessReport,
};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::extend::Extension;
use crate::geomset::{sq_dist, Point};
use crate::jetfield::{check_contracts, AField, ContractReport, JetField};
use crate::linalg::{spectral_norm, sub, vec_norm};
use crate::partition::{build_partition, verify_partition, PartitionConfig, PartitionOfUnity, PartitionReport};
use crate::sampling::{label_tag, off_set_samples, point_tag, rng_for, set_points_in_ball};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Partition,
    Derivative,
    Hoelder,
    Strict,
    Lipschitz,
    Contracts,
    Cones,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Partition,
        Suite::Derivative,
        Suite::Hoelder,
        Suite::Strict,
        Suite::Lipschitz,
        Suite::Contracts,
        Suite::Cones,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Partition => "partition",
            Suite::Derivative => "derivative",
            Suite::Hoelder => "hoelder",
            Suite::Strict => "strict",
            Suite::Lipschitz => "lipschitz",
            Suite::Contracts => "contracts",
            Suite::Cones => "cones",
        }
    }

    /// Parses a suite name; `all` expands to every suite.
    pub fn parse(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL
            .iter()
            .find(|s| s.name() == name)
            .map(|s| vec![*s])
            .ok_or_else(|| Error::InvalidInput(format!("unknown suite {name}")))
    }

    pub fn checks(self) -> &'static [Check] {
        use Check::*;
        match self {
            Suite::Partition => &[PartitionCertified],
            Suite::Derivative => &[FrechetDecays],
            Suite::Hoelder => &[HoelderBounded],
            Suite::Strict => &[StrictDecays, ContinuityDecays],
            Suite::Lipschitz => &[ClaimBounds, LipschitzConstant],
            Suite::Contracts => &[NtDecays, CDecays, BBounded],
            Suite::Cones => &[Uniqueness, ConeAxes],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    PartitionCertified,
    FrechetDecays,
    HoelderBounded,
    StrictDecays,
    ContinuityDecays,
    ClaimBounds,
    LipschitzConstant,
    NtDecays,
    CDecays,
    BBounded,
    Uniqueness,
    ConeAxes,
}

impl Check {
    pub fn suite(self) -> Suite {
        *Suite::ALL.iter().find(|s| s.checks().contains(&self)).expect("every check has a suite")
    }

    pub fn name(self) -> &'static str {
        use Check::*;
        match self {
            PartitionCertified => "partition_certified",
            FrechetDecays => "frechet_decays",
            HoelderBounded => "hoelder_bounded",
            StrictDecays => "strict_decays",
            ContinuityDecays => "continuity_decays",
            ClaimBounds => "claim_bounds",
            LipschitzConstant => "lipschitz_constant",
            NtDecays => "nt_decays",
            CDecays => "c_decays",
            BBounded => "b_bounded",
            Uniqueness => "uniqueness",
            ConeAxes => "cone_axes",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Pass,
    Fail,
}

/// Finite sample of the set used by the cone diagnostics.
#[derive(Clone, Debug)]
pub struct ConeSetup {
    pub sample: Vec<Point>,
    /// `(inner, outer)` distance window of the secants.
    pub window: (f64, f64),
    /// Known tangent directions at the base point, when available.
    pub expected_tangent: Option<Vec<Point>>,
}

/// A set with jets, a base point and the expected outcome of each check.
/// Checks missing from `expectations` do not apply and are not run.
#[derive(Clone)]
pub struct Case {
    pub name: String,
    pub description: String,
    pub jets: Arc<JetField>,
    pub base_point: Point,
    /// Decreasing scales of the residual series and contract shells.
    pub scales: Vec<f64>,
    pub alpha: f64,
    /// `(r1, r2)` of the quantitative Lipschitz estimate.
    pub claim_radii: (f64, f64),
    pub cones: Option<ConeSetup>,
    pub expectations: BTreeMap<Check, Expect>,
}

impl std::fmt::Debug for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Case").field("name", &self.name).field("base_point", &self.base_point).finish()
    }
}

impl Case {
    /// Suites with at least one applicable check.
    pub fn exercised_suites(&self) -> Vec<Suite> {
        Suite::ALL.iter().copied().filter(|s| s.checks().iter().any(|c| self.expectations.contains_key(c))).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    pub tol: Tolerances,
    pub partition: PartitionConfig,
    pub partition_samples: usize,
    pub samples_per_scale: usize,
    pub pairs_per_scale: usize,
    pub claim_samples: usize,
    pub claim_pairs: usize,
    pub lipschitz_pairs: usize,
    pub contract_samples: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            tol: Tolerances::default(),
            partition: PartitionConfig::default(),
            partition_samples: 2000,
            samples_per_scale: 256,
            pairs_per_scale: 512,
            claim_samples: 2000,
            claim_pairs: 20_000,
            lipschitz_pairs: 5000,
            contract_samples: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub suite: Suite,
    pub expected: Expect,
    /// Whether the property itself was observed.
    pub holds: bool,
    /// Whether the observation matches the declaration.
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Measured {
    pub c1: Option<usize>,
    pub c2: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
    pub r3: Option<f64>,
    pub hoelder_onset: Option<f64>,
    pub hoelder_bound: Option<f64>,
    pub lipschitz_sup: Option<f64>,
    pub lipschitz_bound: Option<f64>,
}

/// Everything a suite run measured.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteRun {
    pub case: String,
    pub base_point: Point,
    pub seed: u64,
    pub suites: Vec<Suite>,
    pub checks: Vec<CheckOutcome>,
    pub measured: Measured,
    pub series: Vec<ResidualSeries>,
    pub partition: Option<PartitionReport>,
    pub claim: Option<ClaimReport>,
    pub contracts: Option<ContractReport>,
    pub cones: Option<ConeReport>,
    pub uniqueness: Option<UniquenessReport>,
    pub notes: Vec<String>,
}

impl SuiteRun {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// The extension used by the suites: the configured partition and the
/// nearest-jet operator field.
pub fn default_extension(jets: &Arc<JetField>, config: PartitionConfig) -> Result<Extension> {
    let partition: Arc<dyn PartitionOfUnity> = Arc::new(build_partition(jets.set().clone(), config)?);
    Extension::new(jets.clone(), partition, Arc::new(AField::nearest(jets.clone())))
}

struct Runner<'a> {
    case: &'a Case,
    ext: &'a Extension,
    opts: &'a SuiteOptions,
    run: SuiteRun,
}

impl Runner<'_> {
    fn record(&mut self, check: Check, holds: bool, failure_observed: bool, detail: String) {
        let Some(&expected) = self.case.expectations.get(&check) else { return };
        let passed = match expected {
            Expect::Pass => holds,
            Expect::Fail => failure_observed,
        };
        self.run.checks.push(CheckOutcome { check, suite: check.suite(), expected, holds, passed, detail });
    }

    fn wants(&self, check: Check) -> bool {
        self.case.expectations.contains_key(&check)
    }

    fn partition_report(&mut self) -> Result<PartitionReport> {
        if let Some(r) = &self.run.partition {
            return Ok(r.clone());
        }
        let set = self.case.jets.set();
        let samples = off_set_samples(set, self.opts.partition_samples, 0.5, self.opts.seed);
        let report = verify_partition(self.ext.partition().as_ref(), &samples, &self.opts.tol)?;
        self.run.measured.c1 = Some(report.c1_measured);
        self.run.measured.c2 = Some(report.c2_measured);
        self.run.partition = Some(report.clone());
        Ok(report)
    }

    fn partition(&mut self) -> Result<()> {
        if !self.wants(Check::PartitionCertified) {
            return Ok(());
        }
        let report = self.partition_report()?;
        let detail = if report.certified() {
            format!("C1 = {}, C2 = {:.4}, {} samples", report.c1_measured, report.c2_measured, report.samples)
        } else {
            report.violations.join("; ")
        };
        let holds = report.certified();
        self.record(Check::PartitionCertified, holds, !holds, detail);
        Ok(())
    }

    fn decay_detail(&self, s: &ResidualSeries) -> String {
        format!("first {:e}, last {:e}, decays: {}", s.first(), s.last(), s.decays(&self.opts.tol))
    }

    fn derivative(&mut self) -> Result<()> {
        if !self.wants(Check::FrechetDecays) {
            return Ok(());
        }
        let (c, o) = (self.case, self.opts);
        let s = frechet_residual(self.ext, &c.base_point, &c.scales, o.samples_per_scale, o.seed)?;
        let holds = s.decays(&o.tol);
        let detail = self.decay_detail(&s) + &format!(", slope {:?}", s.loglog_slope());
        self.record(Check::FrechetDecays, holds, !holds, detail);
        self.run.series.push(s);
        Ok(())
    }

    /// `sup |f(z) - f(a)| / |z - a|^alpha` over sampled set points near `a`.
    fn onset_hoelder(&self) -> Result<f64> {
        let c = self.case;
        let a = &c.base_point;
        let mut rng = rng_for(self.opts.seed, &[label_tag("hoelder-onset"), point_tag(a)]);
        let pts = set_points_in_ball(c.jets.set(), a, c.scales[0], self.opts.samples_per_scale * 4, &mut rng);
        let fa = c.jets.value(a)?;
        let mut k: f64 = 0.0;
        for z in pts {
            let gap = sq_dist(&z, a).sqrt();
            if gap > 0.0 {
                k = k.max(vec_norm(&sub(&c.jets.value(&z)?, &fa)) / gap.powf(c.alpha));
            }
        }
        Ok(k)
    }

    fn hoelder(&mut self) -> Result<()> {
        if !self.wants(Check::HoelderBounded) {
            return Ok(());
        }
        let (c, o) = (self.case, self.opts);
        let s = hoelder_residual(self.ext, &c.base_point, c.alpha, &c.scales, o.samples_per_scale, o.seed)?;
        let k = self.onset_hoelder()?;
        let la = spectral_norm(&c.jets.operator(&c.base_point)?);
        let bound = 11f64.powf(c.alpha) * k + 10.0 * la + 12.0;
        let holds = s.max() <= bound;
        self.run.measured.hoelder_onset = Some(k);
        self.run.measured.hoelder_bound = Some(bound);
        let detail = format!("sup quotient {:e}, on-set constant {:e}, bound {:e}", s.max(), k, bound);
        self.record(Check::HoelderBounded, holds, !holds, detail);
        self.run.series.push(s);
        Ok(())
    }

    fn strict(&mut self) -> Result<()> {
        let (c, o) = (self.case, self.opts);
        if self.wants(Check::StrictDecays) {
            let s = strict_residual(self.ext, &c.base_point, &c.scales, o.pairs_per_scale, o.seed)?;
            let holds = s.decays(&o.tol) && s.last() <= o.tol.decay_final;
            let observed = s.last() >= o.tol.strict_floor;
            let detail = self.decay_detail(&s);
            self.record(Check::StrictDecays, holds, observed, detail);
            self.run.series.push(s);
        }
        if self.wants(Check::ContinuityDecays) {
            let s = derivative_continuity_at(self.ext, &c.base_point, &c.scales, o.samples_per_scale, o.seed)?;
            let holds = s.decays(&o.tol) && s.last() <= o.tol.decay_final;
            let observed = s.last() >= o.tol.continuity_floor;
            let detail = self.decay_detail(&s);
            self.record(Check::ContinuityDecays, holds, observed, detail);
            self.run.series.push(s);
        }
        Ok(())
    }

    fn lipschitz(&mut self) -> Result<()> {
        if !self.wants(Check::ClaimBounds) && !self.wants(Check::LipschitzConstant) {
            return Ok(());
        }
        let (c, o) = (self.case, self.opts);
        let report = self.partition_report()?;
        let (r1, r2) = c.claim_radii;
        let a = &c.base_point;
        let (k1, k2) = measure_claim_constants(self.ext, a, r1, r2, o.claim_samples, o.seed)?;
        let params = claim_params(&c.jets, Some(&report), a, r1, r2, k1, k2)?;
        let claim = check_claim_bounds(self.ext, &params, o.claim_samples, o.claim_pairs, o.seed)?;
        let m = &mut self.run.measured;
        m.k1 = Some(k1);
        m.k2 = Some(k2);
        m.k3 = Some(params.k3);
        m.r3 = Some(params.r3);
        let holds = claim.holds();
        let detail = format!(
            "K3 = {:e}; {} derivative and {} pair violations; sup gap {:e}, sup ratio {:e}",
            params.k3, claim.derivative_violations, claim.pair_violations, claim.max_derivative_gap, claim.max_pair_ratio
        );
        self.record(Check::ClaimBounds, holds, !holds, detail);
        if self.wants(Check::LipschitzConstant) {
            let sup = lipschitz_on_ball(self.ext, a, params.r3 / 2.0, o.lipschitz_pairs, o.seed)?;
            let bound = 33.0 * params.k3 + spectral_norm(&c.jets.operator(a)?);
            let holds = sup <= bound + claim.slack;
            self.run.measured.lipschitz_sup = Some(sup);
            self.run.measured.lipschitz_bound = Some(bound);
            let detail = format!("sup {sup:e} <= 33 K3 + |L(a)| = {bound:e}: {holds}");
            self.record(Check::LipschitzConstant, holds, !holds, detail);
        }
        self.run.claim = Some(claim);
        Ok(())
    }

    fn contracts(&mut self) -> Result<()> {
        if ![Check::NtDecays, Check::CDecays, Check::BBounded].iter().any(|&k| self.wants(k)) {
            return Ok(());
        }
        let (c, o) = (self.case, self.opts);
        let report =
            check_contracts(self.ext.afield(), &c.jets, &c.base_point, &c.scales, o.contract_samples, o.seed)?;
        let decays = |series: &[(f64, f64)]| {
            let first = series.first().map_or(0.0, |p| p.1);
            let last = series.last().map_or(0.0, |p| p.1);
            (o.tol.decays(first, last), format!("first {first:e}, last {last:e}"))
        };
        let (nt, nt_detail) = decays(&report.nt_residuals);
        self.record(Check::NtDecays, nt, !nt, nt_detail);
        let (cc, c_detail) = decays(&report.c_residuals);
        self.record(Check::CDecays, cc, !cc, c_detail);
        let b = report.b_bound <= report.l_bound_12r + o.tol.affine;
        let detail = format!("sup |A| {:e}, sup |L| on B(a, 12r) {:e}", report.b_bound, report.l_bound_12r);
        self.record(Check::BBounded, b, !b, detail);
        self.run.contracts = Some(report);
        Ok(())
    }

    fn cones(&mut self) -> Result<()> {
        let Some(setup) = &self.case.cones else { return Ok(()) };
        if !self.wants(Check::Uniqueness) && !self.wants(Check::ConeAxes) {
            return Ok(());
        }
        let (c, o) = (self.case, self.opts);
        let report = cone_directions(&setup.sample, &c.base_point, setup.window, o.tol.cone_angle)?;
        if self.wants(Check::Uniqueness) {
            match uniqueness_bound_check(
                &c.jets,
                &setup.sample,
                &c.base_point,
                &report,
                setup.window,
                o.tol.uniqueness_slack,
            ) {
                Ok(u) => {
                    let detail = format!("|L(a)| {:e} vs bound {:e}", u.bound_lhs, u.bound_rhs);
                    self.record(Check::Uniqueness, u.passed, !u.passed, detail);
                    self.run.uniqueness = Some(u);
                }
                Err(Error::DegenerateCone(n)) => {
                    self.record(Check::Uniqueness, false, true, format!("paratingent directions do not span R^{n}"));
                }
                Err(e) => return Err(e),
            }
        }
        if self.wants(Check::ConeAxes) {
            let (holds, detail) = match &setup.expected_tangent {
                Some(expected) => axes_match(&report, expected, o.tol.cone_angle),
                None => (false, "no known tangent directions".to_string()),
            };
            self.record(Check::ConeAxes, holds, !holds, detail);
        }
        self.run.cones = Some(report);
        Ok(())
    }
}

fn angle(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(p, q)| p * q).sum();
    (dot / (vec_norm(u) * vec_norm(v))).clamp(-1.0, 1.0).acos()
}

/// The tangent directions equal `expected` up to `tol` radians, and every
/// expected direction and its negative is paratingent.
fn axes_match(report: &ConeReport, expected: &[Point], tol: f64) -> (bool, String) {
    let near = |set: &[Point], v: &[f64]| set.iter().any(|d| angle(d, v) <= tol);
    let tangent_ok = report.tangent_dirs.iter().all(|d| near(expected, d))
        && expected.iter().all(|e| near(&report.tangent_dirs, e));
    let para_ok = expected.iter().all(|e| {
        let neg: Point = e.iter().map(|c| -c).collect();
        near(&report.paratingent_dirs, e) && near(&report.paratingent_dirs, &neg)
    });
    let detail = format!(
        "{} tangent directions (match: {tangent_ok}), {} paratingent directions (contain the axes: {para_ok})",
        report.tangent_dirs.len(),
        report.paratingent_dirs.len()
    );
    (tangent_ok && para_ok, detail)
}

/// Runs `suites` on `case` with the nearest-jet extension built from
/// `opts.partition`.
pub fn run_suites(case: &Case, suites: &[Suite], opts: &SuiteOptions) -> Result<SuiteRun> {
    let ext = default_extension(&case.jets, opts.partition)?;
    run_suites_with(case, &ext, suites, opts)
}

pub fn run_suites_with(case: &Case, ext: &Extension, suites: &[Suite], opts: &SuiteOptions) -> Result<SuiteRun> {
    if case.scales.is_empty() {
        return Err(Error::InvalidInput("a case needs at least one scale".into()));
    }
    let mut suites = suites.to_vec();
    suites.sort();
    suites.dedup();
    let mut r = Runner {
        case,
        ext,
        opts,
        run: SuiteRun {
            case: case.name.clone(),
            base_point: case.base_point.clone(),
            seed: opts.seed,
            suites: suites.clone(),
            checks: Vec::new(),
            measured: Measured::default(),
            series: Vec::new(),
            partition: None,
            claim: None,
            contracts: None,
            cones: None,
            uniqueness: None,
            notes: vec![format!(
                "limits are certified by finite samples: a series decays when last <= max(first * {}, {:e})",
                opts.tol.decay_ratio, opts.tol.decay_abs
            )],
        },
    };
    for s in &suites {
        match s {
            Suite::Partition => r.partition()?,
            Suite::Derivative => r.derivative()?,
            Suite::Hoelder => r.hoelder()?,
            Suite::Strict => r.strict()?,
            Suite::Lipschitz => r.lipschitz()?,
            Suite::Contracts => r.contracts()?,
            Suite::Cones => r.cones()?,
        }
        if !s.checks().iter().any(|c| case.expectations.contains_key(c)) {
            r.run.notes.push(format!("suite {} does not apply to case {}", s.name(), case.name));
        }
    }
    Ok(r.run)
}
