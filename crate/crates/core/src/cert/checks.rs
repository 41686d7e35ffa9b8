use crate::hybrid::{HybridSystem, StateSet};

use super::report::{CertificateReport, ConditionReport, ConditionStatus};
use super::{u_c_scaled, u_d, CertError, FtaMode, Role, Sampler, ScalarCertificate, ABS_TOL, REL_TOL};

/// Step of the Euler membership probes that stand in for tangent cones.
const PROBE_STEP: f64 = 1e-6;
/// Step of the "no flow is possible" probe.
const NO_FLOW_STEP: f64 = 1e-9;

pub(crate) fn positive(name: &str, v: f64) -> Result<(), CertError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CertError::BadParameters(format!("{name} must be positive, got {v}")))
    }
}

pub(crate) fn flow_params(c1: f64, c2: f64) -> Result<(), CertError> {
    positive("c1", c1)?;
    if !(0.0..1.0).contains(&c2) {
        return Err(CertError::BadParameters(format!("c2 must lie in [0, 1), got {c2}")));
    }
    Ok(())
}

fn check_mode(mode: FtaMode) -> Result<(), CertError> {
    match mode {
        FtaMode::Flow { c1, c2 } => flow_params(c1, c2),
        FtaMode::Jump { c } => positive("c", c),
    }
}

fn require_role(cert: &ScalarCertificate, role: Role) -> Result<(), CertError> {
    if cert.role == role {
        Ok(())
    } else {
        Err(CertError::BadParameters(format!(
            "certificate `{}` has role {:?}, expected {role:?}",
            cert.name, cert.role
        )))
    }
}

fn samples(system: &HybridSystem, sampler: &Sampler) -> Result<Vec<Vec<f64>>, CertError> {
    sampler.validate(system.dim)?;
    Ok(sampler
        .points()
        .into_iter()
        .filter(|x| system.state_space.contains(x))
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn in_c_or_d(system: &HybridSystem, x: &[f64]) -> bool {
    system.in_flow_set(x) || system.in_jump_set(x)
}

fn max_or_nan(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, |m, v| {
        if m.is_nan() || v.is_nan() {
            f64::NAN
        } else {
            m.max(v)
        }
    })
}

/// `B <= 0` on K and `B > 0` on the sampled part of `(C u D u G(D)) \ K`.
fn candidate_conditions(
    system: &HybridSystem,
    k: &StateSet,
    b: &ScalarCertificate,
    pts: &[Vec<f64>],
) -> Vec<ConditionReport> {
    let mut on_k = ConditionReport::checked("candidate.k", "B <= 0 on K");
    let mut off_k = ConditionReport::checked("candidate.off_k", "B > 0 on (C u D u G(D)) \\ K");
    for x in pts {
        if k.contains(x) {
            on_k.le(x, b.value(x), 0.0);
        } else if in_c_or_d(system, x) {
            off_k.positive(x, b.value(x));
        }
        if system.in_jump_set(x) {
            for z in system.jump_successors(x) {
                if !k.contains(&z) {
                    off_k.positive(&z, b.value(&z));
                }
            }
        }
    }
    vec![on_k, off_k]
}

pub fn check_barrier_candidate(
    system: &HybridSystem,
    p: &StateSet,
    b: &ScalarCertificate,
    sampler: &Sampler,
) -> Result<CertificateReport, CertError> {
    require_role(b, Role::Barrier)?;
    let pts = samples(system, sampler)?;
    let mut report = CertificateReport::new("barrier function candidate", pts.len());
    for c in candidate_conditions(system, p, b, &pts) {
        report.push(c);
    }
    Ok(report.finish(&["candidate.k", "candidate.off_k"]))
}

fn near_set(k: &StateSet, x: &[f64], radius: f64) -> bool {
    let mut y = x.to_vec();
    for i in 0..x.len() {
        for frac in [0.25, 0.5, 1.0] {
            for sign in [-1.0, 1.0] {
                y[i] = x[i] + sign * frac * radius;
                if k.contains(&y) {
                    return true;
                }
            }
        }
        y[i] = x[i];
    }
    false
}

/// Barrier conditions for `always p`: a candidate `B` that cannot increase
/// along tangent flow directions just outside K, and jumps from K that land
/// in `{B <= 0}` and in `C u D`.
pub fn certify_always(
    system: &HybridSystem,
    p: &StateSet,
    b: &ScalarCertificate,
    sampler: &Sampler,
) -> Result<CertificateReport, CertError> {
    require_role(b, Role::Barrier)?;
    let pts = samples(system, sampler)?;
    let mut report = CertificateReport::new("always: barrier conditions", pts.len());
    for c in candidate_conditions(system, p, b, &pts) {
        report.push(c);
    }
    let mut c1 = ConditionReport::checked(
        "always.1",
        "<grad B, eta> <= 0 for tangent flow directions on C near K, outside K",
    );
    let mut c2 = ConditionReport::checked("always.2", "B(g) <= 0 for x in D n K");
    let mut c3 = ConditionReport::checked("always.3", "G(D n K) lies in C u D");
    for x in &pts {
        let in_k = p.contains(x);
        if system.in_flow_set(x) && !in_k && near_set(p, x, sampler.boundary_radius) {
            let grad = b.gradient_at(x);
            let mut worst: Option<f64> = None;
            let mut size = 0.0f64;
            for eta in system.flow_directions(x) {
                let probe: Vec<f64> = x.iter().zip(&eta).map(|(a, e)| a + PROBE_STEP * e).collect();
                if !system.in_flow_set(&probe) {
                    continue;
                }
                let d = grad.as_ref().map_or(f64::NAN, |g| dot(g, &eta));
                if let Some(g) = &grad {
                    size = size.max(g.iter().zip(&eta).map(|(a, e)| (a * e).abs()).sum());
                }
                worst = Some(max_or_nan(worst.into_iter().chain([d])));
            }
            if let Some(w) = worst {
                c1.le_scaled(x, w, 0.0, size);
            }
        }
        if in_k && system.in_jump_set(x) {
            let succ = system.jump_successors(x);
            c2.le(x, max_or_nan(succ.iter().map(|z| b.value(z))), 0.0);
            c3.holds(x, succ.iter().all(|z| in_c_or_d(system, z)));
        }
    }
    report.push(c1);
    report.push(c2);
    report.push(c3);
    report.assume("K is closed");
    Ok(report.finish(&["candidate.k", "always.1", "always.2", "always.3"]))
}

/// Which samples the decrease conditions cover.
#[derive(Clone, Copy, PartialEq)]
enum Region {
    OffK,
    All,
}

struct Decrease<'a> {
    flow_id: &'a str,
    flow_desc: &'a str,
    /// Upper bound on `u_C` as a function of `V`.
    flow_bound: &'a dyn Fn(f64) -> f64,
    jump_id: &'a str,
    jump_desc: &'a str,
    /// Upper bound on `u_D` as a function of `V`.
    jump_bound: &'a dyn Fn(f64) -> f64,
    region: Region,
}

fn positive_definiteness(
    report: &mut CertificateReport,
    k: &StateSet,
    v: &ScalarCertificate,
    pts: &[&Vec<f64>],
) {
    let mut nonneg = ConditionReport::checked("pd.nonneg", "V >= 0 on N");
    let mut off_k = ConditionReport::checked("pd.off_k", "V > 0 on N \\ K");
    let mut nonzero_on_k = false;
    for x in pts {
        let val = v.value(x);
        nonneg.le(x, -val, 0.0);
        if k.contains(x) {
            nonzero_on_k |= !(val.abs() <= ABS_TOL);
        } else {
            off_k.positive(x, val);
        }
    }
    report.push(nonneg);
    report.push(off_k);
    if nonzero_on_k {
        report.flag("v_nonzero_on_k");
    }
}

#[allow(clippy::too_many_arguments)]
fn lyapunov_report(
    theorem: &str,
    system: &HybridSystem,
    k: &StateSet,
    v: &ScalarCertificate,
    neighborhood: Option<&StateSet>,
    sampler: &Sampler,
    dec: Decrease<'_>,
    assumed: &[(&str, &str)],
) -> Result<CertificateReport, CertError> {
    require_role(v, Role::Lyapunov)?;
    let pts = samples(system, sampler)?;
    let in_n = |x: &[f64]| neighborhood.is_none_or(|n| n.contains(x));
    let n_pts: Vec<&Vec<f64>> = pts.iter().filter(|x| in_n(x)).collect();
    let mut report = CertificateReport::new(theorem, pts.len());
    positive_definiteness(&mut report, k, v, &n_pts);
    for (id, desc) in assumed {
        report.push(ConditionReport::with_status(id, desc, ConditionStatus::Assumed));
    }
    let mut flow = ConditionReport::checked(dec.flow_id, dec.flow_desc);
    let mut jump = ConditionReport::checked(dec.jump_id, dec.jump_desc);
    let mut invariant = ConditionReport::checked("n.invariant", "G(D n N) lies in N");
    for x in &n_pts {
        let covered = dec.region == Region::All || !k.contains(x);
        let val = v.value(x);
        if covered && system.in_flow_set(x) {
            let (u, size) = u_c_scaled(system, v, x).unwrap_or((f64::NAN, 0.0));
            flow.le_scaled(x, u, (dec.flow_bound)(val), size);
        }
        if system.in_jump_set(x) {
            if covered {
                jump.le(x, u_d(system, v, x), (dec.jump_bound)(val));
            }
            if neighborhood.is_some() {
                invariant.holds(x, system.jump_successors(x).iter().all(|z| in_n(z)));
            }
        }
    }
    let (flow_id, jump_id) = (flow.id.clone(), jump.id.clone());
    report.push(flow);
    report.push(jump);
    if neighborhood.is_some() {
        report.push(invariant);
        report.assume("N is an open neighborhood of K with G(N) in N");
    }
    report.assume("K is closed");
    Ok(report.finish(&["pd.off_k", &flow_id, &jump_id]))
}

/// Finite-time attractivity of K through flows: `u_C + c1 V^c2 <= 0` on
/// `(C n N) \ K` and `u_D <= 0` on `(D n N) \ K`.
pub fn certify_eventually_flow(
    system: &HybridSystem,
    p: &StateSet,
    v: &ScalarCertificate,
    c1: f64,
    c2: f64,
    neighborhood: Option<&StateSet>,
    sampler: &Sampler,
) -> Result<CertificateReport, CertError> {
    flow_params(c1, c2)?;
    let flow_bound = |val: f64| -c1 * val.powf(c2);
    let jump_bound = |_: f64| 0.0;
    let report = lyapunov_report(
        "eventually: finite-time attractivity through flows",
        system,
        p,
        v,
        neighborhood,
        sampler,
        Decrease {
            flow_id: "fta.1.2a",
            flow_desc: "u_C + c1 V^c2 <= 0 on (C n N) \\ K",
            flow_bound: &flow_bound,
            jump_id: "fta.1.2b",
            jump_desc: "u_D <= 0 on (D n N) \\ K",
            jump_bound: &jump_bound,
            region: Region::OffK,
        },
        &[(
            "fta.1.1",
            "every maximal solution from N flows longer than the settling time",
        )],
    )?;
    Ok(report.param("c1", c1).param("c2", c2))
}

/// Finite-time attractivity of K through jumps: `u_C <= 0` on `(C n N) \ K`
/// and `u_D <= -min(c, V)` on `(D n N) \ K`.
pub fn certify_eventually_jump(
    system: &HybridSystem,
    p: &StateSet,
    v: &ScalarCertificate,
    c: f64,
    neighborhood: Option<&StateSet>,
    sampler: &Sampler,
) -> Result<CertificateReport, CertError> {
    positive("c", c)?;
    let flow_bound = |_: f64| 0.0;
    let jump_bound = |val: f64| -c.min(val);
    let mut report = lyapunov_report(
        "eventually: finite-time attractivity through jumps",
        system,
        p,
        v,
        neighborhood,
        sampler,
        Decrease {
            flow_id: "fta.2.2a",
            flow_desc: "u_C <= 0 on (C n N) \\ K",
            flow_bound: &flow_bound,
            jump_id: "fta.2.2b",
            jump_desc: "u_D <= -min(c, V) on (D n N) \\ K",
            jump_bound: &jump_bound,
            region: Region::OffK,
        },
        &[(
            "fta.2.1",
            "every maximal solution from N jumps more often than the settling bound",
        )],
    )?;
    // The non-strict variant only asks V not to grow across jumps.
    if report.condition("fta.2.2b").is_some_and(|c| c.violations > 0) {
        let pts = samples(system, sampler)?;
        let nonstrict = pts.iter().all(|x| {
            let in_n = neighborhood.is_none_or(|n| n.contains(x));
            if !in_n || p.contains(x) || !system.in_jump_set(x) {
                return true;
            }
            let u = u_d(system, v, x);
            !super::exceeds_tolerance(u, v.value(x))
        });
        if nonstrict {
            report.flag("nonstrict_jump");
        }
    }
    Ok(report.param("c", c))
}

/// Combined flow and jump decrease: `u_C <= -c1 V^c2` on `(C n N) \ K` and
/// `u_D <= -min(c3, V)` on `(D n N) \ K`.
#[allow(clippy::too_many_arguments)]
pub fn certify_eventually_combined(
    system: &HybridSystem,
    p: &StateSet,
    v: &ScalarCertificate,
    c1: f64,
    c2: f64,
    c3: f64,
    neighborhood: Option<&StateSet>,
    sampler: &Sampler,
) -> Result<CertificateReport, CertError> {
    flow_params(c1, c2)?;
    positive("c3", c3)?;
    let flow_bound = |val: f64| -c1 * val.powf(c2);
    let jump_bound = |val: f64| -c3.min(val);
    let report = lyapunov_report(
        "eventually: finite-time attractivity through flows and jumps",
        system,
        p,
        v,
        neighborhood,
        sampler,
        Decrease {
            flow_id: "combined.uc",
            flow_desc: "u_C <= -c1 V^c2 on (C n N) \\ K",
            flow_bound: &flow_bound,
            jump_id: "combined.ud",
            jump_desc: "u_D <= -min(c3, V) on (D n N) \\ K",
            jump_bound: &jump_bound,
            region: Region::OffK,
        },
        &[],
    )?;
    Ok(report.param("c1", c1).param("c2", c2).param("c3", c3))
}

fn certify_eventually_mode(
    system: &HybridSystem,
    p: &StateSet,
    v: &ScalarCertificate,
    mode: FtaMode,
    neighborhood: Option<&StateSet>,
    sampler: &Sampler,
) -> Result<CertificateReport, CertError> {
    match mode {
        FtaMode::Flow { c1, c2 } => certify_eventually_flow(system, p, v, c1, c2, neighborhood, sampler),
        FtaMode::Jump { c } => certify_eventually_jump(system, p, v, c, neighborhood, sampler),
    }
}

/// Conditions for `next p`: no flow is possible from C, C lies in D, and
/// every jump lands in `K n D`.
pub fn certify_next(
    system: &HybridSystem,
    p: &StateSet,
    sampler: &Sampler,
) -> Result<CertificateReport, CertError> {
    let pts = samples(system, sampler)?;
    let mut report = CertificateReport::new("next: jump-only successors", pts.len());
    report.push(ConditionReport::with_status(
        "next.a",
        "every maximal solution jumps at least once (implied by next.b and next.d)",
        ConditionStatus::Derived,
    ));
    let mut b = ConditionReport::checked("next.b", "no flow is possible from C");
    let mut c = ConditionReport::checked("next.c", "G(D) lies in K n D");
    let mut d = ConditionReport::checked("next.d", "C lies in D");
    for x in &pts {
        if system.in_flow_set(x) {
            let leaves = system.flow_directions(x).iter().all(|eta| {
                let y: Vec<f64> = x.iter().zip(eta).map(|(a, e)| a + NO_FLOW_STEP * e).collect();
                !system.in_flow_set(&y)
            });
            b.holds(x, leaves);
            d.holds(x, system.in_jump_set(x));
        }
        if system.in_jump_set(x) {
            let ok = system
                .jump_successors(x)
                .iter()
                .all(|z| p.contains(z) && system.in_jump_set(z));
            c.holds(x, ok);
        }
    }
    report.push(b);
    report.push(c);
    report.push(d);
    Ok(report.finish(&["next.b", "next.c", "next.d"]))
}

/// Every sampled state satisfies p or q.
pub fn check_weak_until_cover(
    p: &StateSet,
    q: &StateSet,
    sampler: &Sampler,
    state_space: &StateSet,
) -> Result<CertificateReport, CertError> {
    sampler.validate(sampler.bounds.len())?;
    let pts: Vec<Vec<f64>> = sampler
        .points()
        .into_iter()
        .filter(|x| state_space.contains(x))
        .collect();
    let mut report = CertificateReport::new("weak until: p or q everywhere", pts.len());
    let mut cover = ConditionReport::checked("weak_until.cover", "p or q holds on X");
    for x in &pts {
        cover.holds(x, p.contains(x) || q.contains(x));
    }
    report.push(cover);
    Ok(report.finish(&["weak_until.cover"]))
}

/// Conditions for the strong until `p U q`: Q is finite-time attractive
/// under the given decrease mode, and on the sublevel set `{V <= r}` every
/// state of `C u D` outside Q satisfies p. With `check_jumps_from_q`, jumps
/// from `Q n D` must also stay in `{V <= r} n (C u D)`.
#[allow(clippy::too_many_arguments)]
pub fn certify_until_strong(
    system: &HybridSystem,
    p: &StateSet,
    q: &StateSet,
    v: &ScalarCertificate,
    mode: FtaMode,
    r: f64,
    check_jumps_from_q: bool,
    neighborhood: Option<&StateSet>,
    sampler: &Sampler,
) -> Result<CertificateReport, CertError> {
    check_mode(mode)?;
    if r.is_nan() || r < 0.0 {
        return Err(CertError::BadParameters(format!("r must be >= 0, got {r}")));
    }
    let pts = samples(system, sampler)?;
    let fta = certify_eventually_mode(system, q, v, mode, neighborhood, sampler)?;
    let mut report = CertificateReport::new("until: p holds until q is reached", pts.len());

    let mut nonempty = ConditionReport::checked("until.1", "Q is nonempty on the samples");
    nonempty.checked = pts.len();
    if !pts.iter().any(|x| q.contains(x)) {
        nonempty.violations = 1;
        nonempty.worst_margin = Some(1.0);
    } else {
        nonempty.worst_margin = Some(0.0);
    }
    report.push(nonempty);

    for c in fta.conditions {
        report.push(c.prefixed("until.2:"));
    }
    for f in &fta.flags {
        report.flag(f);
    }
    for a in &fta.assumptions {
        report.assume(a);
    }
    report.parameters.extend(fta.parameters);

    report.push(ConditionReport::with_status(
        "until.3",
        "initial states lie in (P n {V <= r}) u Q",
        ConditionStatus::Assumed,
    ));

    let below_r = |val: f64| val <= r + ABS_TOL + REL_TOL * r.abs();
    let mut cover = ConditionReport::checked("until.4", "({V <= r} n (C u D)) \\ Q lies in P");
    let mut jumps = ConditionReport::checked("until.5", "G(Q n D) lies in {V <= r} n (C u D)");
    for x in &pts {
        let in_q = q.contains(x);
        if !in_q && in_c_or_d(system, x) && below_r(v.value(x)) {
            cover.holds(x, p.contains(x));
        }
        if check_jumps_from_q && in_q && system.in_jump_set(x) {
            let ok = system
                .jump_successors(x)
                .iter()
                .all(|z| below_r(v.value(z)) && in_c_or_d(system, z));
            jumps.holds(x, ok);
        }
    }
    report.push(cover);
    if check_jumps_from_q {
        report.push(jumps);
    }
    report.assume("Q is closed");
    if r.is_finite() {
        report = report.param("r", r);
    } else {
        report.assume("r = inf (sublevel set is the whole sampled box)");
    }
    Ok(report.finish(&["until.4"]))
}

/// The two ways of certifying `eventually always p`.
#[derive(Debug, Clone, Copy)]
pub enum EventuallyAlwaysMode<'a> {
    /// A barrier `b` for `always p` conjoined with a finite-time attractivity
    /// certificate `v` for p.
    Barrier {
        b: &'a ScalarCertificate,
        v: &'a ScalarCertificate,
        fta: FtaMode,
    },
    /// One strengthened `v` whose decrease conditions hold on all of `C n N`
    /// and `D n N`, including K.
    Strengthened {
        v: &'a ScalarCertificate,
        c1: f64,
        c2: f64,
        c: f64,
    },
}

pub fn certify_eventually_always(
    system: &HybridSystem,
    p: &StateSet,
    mode: EventuallyAlwaysMode<'_>,
    neighborhood: Option<&StateSet>,
    sampler: &Sampler,
) -> Result<CertificateReport, CertError> {
    match mode {
        EventuallyAlwaysMode::Barrier { b, v, fta } => {
            check_mode(fta)?;
            let always = certify_always(system, p, b, sampler)?;
            let eventually = certify_eventually_mode(system, p, v, fta, neighborhood, sampler)?;
            let mut report =
                CertificateReport::new("eventually always: barrier and attractivity", always.samples);
            for (prefix, part) in [("always:", always), ("eventually:", eventually)] {
                for c in part.conditions {
                    report.push(c.prefixed(prefix));
                }
                for f in part.flags {
                    report.flag(&format!("{prefix}{f}"));
                }
                for a in part.assumptions {
                    if !report.assumptions.contains(&a) {
                        report.assume(&a);
                    }
                }
                report.parameters.extend(part.parameters);
            }
            Ok(report.finish(&[]))
        }
        EventuallyAlwaysMode::Strengthened { v, c1, c2, c } => {
            flow_params(c1, c2)?;
            positive("c", c)?;
            let flow_bound = |val: f64| -c1 * val.powf(c2);
            let jump_bound = |val: f64| -c.min(val);
            let report = lyapunov_report(
                "eventually always: strengthened Lyapunov conditions",
                system,
                p,
                v,
                neighborhood,
                sampler,
                Decrease {
                    flow_id: "ea.1.2a",
                    flow_desc: "u_C + c1 V^c2 <= 0 on C n N",
                    flow_bound: &flow_bound,
                    jump_id: "ea.1.2b",
                    jump_desc: "u_D <= -min(c, V) on D n N",
                    jump_bound: &jump_bound,
                    region: Region::All,
                },
                &[],
            )?;
            Ok(report.param("c1", c1).param("c2", c2).param("c", c))
        }
    }
}
