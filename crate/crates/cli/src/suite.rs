//! The verification suite behind `dhlab verify`.
//!
//! Record ids start with `cNN.`, the number of the acceptance criterion the
//! record belongs to, so that callers can group them.

use std::time::Instant;

use num_complex::Complex64;

use dhlab_core::dhrep::{closed_form as dh_closed, first_order_conjugate, SpinFrame, FACTOR_MODES};
use dhlab_core::model::closed_form as model_closed;
use dhlab_core::qubit::{self, closed_form as qubit_closed, QubitOrder, QubitState};
use dhlab_core::{
    annihilator, build_entangled_transform, build_state, build_unentangled_transform, creator, evolve, field_section,
    locality_report, localized_spin_operator, noaux_locality_report, noaux_transform, normalized_distance,
    operator_distance, vacuum_action, vacuum_state, DhTransform, FockState, ModeRegistry, NoAuxSetup,
    OccupationDescriptor, Order, PacketLayout, Provenance, Region, Spin, SpinDirection, SpinVectors, SystemConfig,
};

use crate::config::RunConfig;
use crate::report::CheckRecord;

/// The four sign assignments with s1 s2 s3 = −1.
pub const SIGN_SETS: [[i32; 3]; 4] = [[1, 1, -1], [1, -1, 1], [-1, 1, 1], [-1, -1, -1]];

pub const PAIRS: [(Region, Region); 3] = [(Region::R1, Region::R2), (Region::R2, Region::R3), (Region::R3, Region::R1)];

pub const CAR_RUNTIME: f64 = 5.0;
pub const DH_RUNTIME: f64 = 120.0;
pub const SUITE_RUNTIME: f64 = 300.0;

/// Threshold c in distance ≥ κ·c for the cross-region term of the entangled field.
pub const CROSS_TERM_FACTOR: f64 = 0.5;

type R<T> = dhlab_core::Result<T>;

pub fn signs_tag(s: [i32; 3]) -> String {
    s.iter().map(|&x| if x > 0 { "+" } else { "-" }).collect()
}

pub fn kappa_tag(k: f64) -> String {
    format!("k{k}")
}

fn pair_tag(a: Region, b: Region) -> String {
    format!("r{}{}", a.number(), b.number())
}

/// Tracks the point of largest error in a sweep.
#[derive(Debug, Clone, Copy)]
struct Worst {
    expected: f64,
    actual: f64,
    err: f64,
}

impl Worst {
    fn new() -> Self {
        Worst { expected: 0.0, actual: 0.0, err: -1.0 }
    }

    fn push(&mut self, expected: f64, actual: f64) {
        let err = (actual - expected).abs();
        if err > self.err || err.is_nan() {
            *self = Worst { expected, actual, err };
        }
    }

    fn record(&self, id: String, what: &str, tol: f64) -> CheckRecord {
        CheckRecord::equal(id, what, self.expected, self.actual, tol)
    }
}

/// One κ value with its configuration and transforms for the configured signs.
pub struct KappaCase {
    pub kappa: f64,
    pub cfg: SystemConfig,
    pub base: DhTransform,
    pub entangled: DhTransform,
}

impl KappaCase {
    pub fn new(sys: &SystemConfig, kappa: f64, signs: [i32; 3]) -> R<Self> {
        let cfg = sys.with_kappa(kappa)?;
        let base = build_unentangled_transform(&cfg, signs)?;
        let entangled = build_entangled_transform(&cfg, &base)?;
        Ok(KappaCase { kappa, cfg, base, entangled })
    }
}

/// Everything the checks share.
pub struct Context {
    pub run: RunConfig,
    pub sys: SystemConfig,
    pub dirs: Vec<SpinDirection>,
    pub dh_dirs: Vec<SpinDirection>,
    pub points: Vec<f64>,
    pub psi_un: FockState,
}

impl Context {
    pub fn new(run: &RunConfig) -> R<Self> {
        let layout = PacketLayout::from_spec(&run.geometry.layout_spec())?;
        let t = &run.tolerances;
        let sys = SystemConfig::with_tolerances(layout, 0.0, &run.geometry.probe_points, t.wsw, t.aperture)?;
        let psi_un = build_state(&sys, &OccupationDescriptor::unentangled())?;
        Ok(Context {
            run: run.clone(),
            dirs: run.directions(),
            dh_dirs: run.dh_directions(),
            points: run.locality_points(),
            sys,
            psi_un,
        })
    }

    fn exact_tol(&self) -> f64 {
        self.run.tolerances.exact
    }

    fn signs(&self) -> [i32; 3] {
        self.run.physics.signs
    }

    fn kappas(&self) -> &[f64] {
        &self.run.physics.kappas
    }

    /// Builds one case per κ, in parallel.
    pub fn cases(&self) -> Vec<R<KappaCase>> {
        let signs = self.signs();
        std::thread::scope(|s| {
            let handles: Vec<_> =
                self.kappas().iter().map(|&k| s.spawn(move || KappaCase::new(&self.sys, k, signs))).collect();
            handles.into_iter().map(|h| h.join().expect("case thread panicked")).collect()
        })
    }
}

/// Runs a group of checks, stamps its wall time on every record and turns an
/// error into a single failed record.
fn group(out: &mut Vec<CheckRecord>, id: &str, what: &str, f: impl FnOnce() -> R<Vec<CheckRecord>>) {
    let t0 = Instant::now();
    let res = f();
    collect(out, id, what, t0.elapsed().as_secs_f64(), res);
}

/// Same as `group` for a result computed elsewhere in `dt` seconds.
fn collect(out: &mut Vec<CheckRecord>, id: &str, what: &str, dt: f64, res: R<Vec<CheckRecord>>) {
    match res {
        Ok(recs) => out.extend(recs.into_iter().map(|r| r.timed(dt))),
        Err(e) => {
            eprintln!("check {id} could not run: {e}");
            out.push(CheckRecord::failed(format!("{id}.error"), what, 0.0).timed(dt));
        }
    }
}

fn case_or_err(c: &R<KappaCase>) -> R<&KappaCase> {
    c.as_ref().map_err(Clone::clone)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Runs every check. Records come back sorted by id.
pub fn run_suite(run: &RunConfig) -> Vec<CheckRecord> {
    let t0 = Instant::now();
    let mut out = Vec::new();
    geometry(&mut out, run);
    match Context::new(run) {
        Ok(ctx) => {
            car(&mut out);
            let t = Instant::now();
            let cases = ctx.cases();
            let case_time = t.elapsed().as_secs_f64();
            standardization(&mut out, &ctx, &cases);
            eigenvalues(&mut out, &ctx);
            unentangled_correlations(&mut out, &ctx);
            entangled_correlations(&mut out, &ctx);
            dh_equivalence(&mut out, &ctx, &cases, case_time);
            closed_forms(&mut out, &ctx, &cases);
            locality(&mut out, &ctx, &cases);
            qubits(&mut out, &ctx);
        }
        Err(e) => {
            eprintln!("cannot set up the system: {e}");
            out.push(CheckRecord::failed("c00.setup.error", "system configuration from the run config", 0.0));
        }
    }
    let total = t0.elapsed().as_secs_f64();
    out.push(
        CheckRecord::at_most("c10.runtime.suite", "whole-suite wall time in seconds", total, SUITE_RUNTIME)
            .timed(total),
    );
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

fn car(out: &mut Vec<CheckRecord>) {
    let t0 = Instant::now();
    group(out, "c01.car", "canonical anticommutation relations on 10 modes", || {
        let reg = ModeRegistry::standard(1)?;
        let modes = reg.modes().to_vec();
        let a: Vec<_> = modes.iter().map(|&m| annihilator(&reg, m)).collect::<R<_>>()?;
        let ad: Vec<_> = modes.iter().map(|&m| creator(&reg, m)).collect::<R<_>>()?;
        let id = dhlab_core::FockOperator::identity(&reg);
        let mut worst = 0.0f64;
        for i in 0..modes.len() {
            for j in 0..modes.len() {
                let d = if i == j { 1.0 } else { 0.0 };
                worst = worst.max(a[i].anticommutator(&ad[j])?.combine(c(1.0), &id, c(-d))?.max_abs());
                worst = worst.max(a[i].anticommutator(&a[j])?.max_abs());
                worst = worst.max(ad[i].anticommutator(&ad[j])?.max_abs());
            }
        }
        Ok(vec![CheckRecord::equal(
            "c01.car.max_error",
            "{c_i, c_j^dag} = delta_ij, {c_i, c_j} = 0 over all mode pairs",
            0.0,
            worst,
            0.0,
        )])
    });
    let dt = t0.elapsed().as_secs_f64();
    out.push(CheckRecord::at_most("c01.car.runtime", "CAR suite wall time in seconds", dt, CAR_RUNTIME).timed(dt));
}

fn standardization(out: &mut Vec<CheckRecord>, ctx: &Context, cases: &[R<KappaCase>]) {
    let tol = ctx.exact_tol();
    let s = ctx.signs();
    out.push(CheckRecord::equal(
        "c02.sign_product",
        "admissible signs satisfy s1 s2 s3 = -1",
        -1.0,
        (s[0] * s[1] * s[2]) as f64,
        0.0,
    ));
    for signs in SIGN_SETS {
        let tag = signs_tag(signs);
        group(out, &format!("c02.unentangled.{tag}"), "unentangled standardization", || {
            let t = build_unentangled_transform(&ctx.sys, signs)?;
            let vac = vacuum_state(ctx.sys.registry());
            let amp = vac.inner(&t.v().apply(&ctx.psi_un)?)?;
            Ok(vec![
                CheckRecord::equal(
                    format!("c02.unentangled.{tag}.vacuum_overlap"),
                    "<0|V|psi> = -s1 s2 s3 = 1",
                    1.0,
                    amp.re,
                    tol,
                ),
                CheckRecord::equal(
                    format!("c02.unentangled.{tag}.overlap_imag"),
                    "<0|V|psi> is real",
                    0.0,
                    amp.im,
                    tol,
                ),
                CheckRecord::at_most(
                    format!("c02.unentangled.{tag}.unitarity"),
                    "||V V^dag - I||",
                    t.v().unitarity_defect(),
                    tol,
                ),
            ])
        });
    }
    for (k, case) in ctx.kappas().iter().zip(cases) {
        let tag = kappa_tag(*k);
        group(out, &format!("c02.entangled.{tag}"), "entangled standardization", || {
            let case = case_or_err(case)?;
            let exact = evolve(&case.cfg, &ctx.psi_un, Order::Exact)?.state;
            let vac = vacuum_state(case.cfg.registry());
            let d = case.entangled.v().apply(&exact)?.distance(&vac)?;
            Ok(vec![
                CheckRecord::at_most(format!("c02.entangled.{tag}.vacuum_distance"), "||V_en psi_en - |0>||", d, tol),
                CheckRecord::at_most(
                    format!("c02.entangled.{tag}.unitarity"),
                    "||V_en V_en^dag - I||",
                    case.entangled.v().unitarity_defect(),
                    tol,
                ),
            ])
        });
    }
}

fn eigenvalues(out: &mut Vec<CheckRecord>, ctx: &Context) {
    let tol = ctx.exact_tol();
    group(out, "c03.eigen", "z spin eigenvalues of the unentangled state", || {
        let psi = &ctx.psi_un;
        let mut recs = Vec::new();
        for r in Region::ALL {
            let lambda = model_closed::z_sign(r);
            let s = localized_spin_operator(&ctx.sys, r, &SpinDirection::x3())?;
            let sp = s.apply(psi)?;
            let rayleigh = psi.inner(&sp)?.re;
            let residual = sp.distance(&psi.scale(c(lambda)))?;
            let n = r.number();
            recs.push(CheckRecord::equal(
                format!("c03.eigen.r{n}.value"),
                "S_x3 eigenvalue on psi_un",
                lambda,
                rayleigh,
                tol,
            ));
            recs.push(CheckRecord::at_most(
                format!("c03.eigen.r{n}.residual"),
                "||S psi - lambda psi||",
                residual,
                tol,
            ));
        }
        Ok(recs)
    });
}

/// Ŝ_r(u⃗)|ψ⟩ for every region and direction.
fn spin_table(v: &SpinVectors, dirs: &[SpinDirection]) -> [Vec<FockState>; 3] {
    Region::ALL.map(|r| dirs.iter().map(|d| v.vector(r, d)).collect())
}

/// Worst expectation error per region and correlation error per pair over
/// all directions and direction pairs.
fn sweep(
    state: &FockState,
    table: &[Vec<FockState>; 3],
    dirs: &[SpinDirection],
    expect: impl Fn(Region, &SpinDirection) -> f64,
    corr: impl Fn(Region, &SpinDirection, Region, &SpinDirection) -> f64,
) -> R<([Worst; 3], [Worst; 3])> {
    let mut ew = [Worst::new(); 3];
    for r in Region::ALL {
        for (i, d) in dirs.iter().enumerate() {
            ew[r.index()].push(expect(r, d), state.inner(&table[r.index()][i])?.re);
        }
    }
    let mut cw = [Worst::new(); 3];
    for (p, &(ra, rb)) in PAIRS.iter().enumerate() {
        for (i, da) in dirs.iter().enumerate() {
            for (j, db) in dirs.iter().enumerate() {
                let got = table[ra.index()][i].inner(&table[rb.index()][j])?.re;
                cw[p].push(corr(ra, da, rb, db), got);
            }
        }
    }
    Ok((ew, cw))
}

fn sweep_records(prefix: &str, what: &str, (ew, cw): ([Worst; 3], [Worst; 3]), tol: f64) -> Vec<CheckRecord> {
    let mut recs = Vec::new();
    for r in Region::ALL {
        recs.push(ew[r.index()].record(format!("{prefix}.expect.r{}", r.number()), &format!("{what}: <S_r>"), tol));
    }
    for (p, &(ra, rb)) in PAIRS.iter().enumerate() {
        recs.push(cw[p].record(format!("{prefix}.corr.{}", pair_tag(ra, rb)), &format!("{what}: <S_a S_b>"), tol));
    }
    recs
}

fn unentangled_correlations(out: &mut Vec<CheckRecord>, ctx: &Context) {
    let tol = ctx.exact_tol();
    group(out, "c04.unentangled", "unentangled correlations over the direction grid", || {
        let v = SpinVectors::for_state(&ctx.sys, &ctx.psi_un)?;
        let table = spin_table(&v, &ctx.dirs);
        let w =
            sweep(&ctx.psi_un, &table, &ctx.dirs, model_closed::expectation, model_closed::unentangled_correlation)?;
        Ok(sweep_records("c04.unentangled", "(1,2) -u1u2, (2,3) +u2u3, (3,1) -u3u1 on psi_un", w, tol))
    });
}

fn entangled_correlations(out: &mut Vec<CheckRecord>, ctx: &Context) {
    let cpert = ctx.run.tolerances.perturbative;
    for &k in ctx.kappas() {
        let tag = kappa_tag(k);
        let tol = cpert * k * k + ctx.exact_tol();
        group(out, &format!("c05.{tag}"), "first-order entangled correlations", || {
            let cfg = ctx.sys.with_kappa(k)?;
            let mut recs = Vec::new();
            for (name, order) in [("exact", Order::Exact), ("first_order", Order::First)] {
                let state = evolve(&cfg, &ctx.psi_un, order)?.state.normalized();
                let v = SpinVectors::for_state(&cfg, &state)?;
                let table = spin_table(&v, &ctx.dirs);
                let w = sweep(&state, &table, &ctx.dirs, model_closed::expectation, |ra, da, rb, db| {
                    model_closed::entangled_correlation(k, ra, da, rb, db)
                })?;
                recs.extend(sweep_records(
                    &format!("c05.{tag}.{name}"),
                    "-(1-2k)u1u2 - 2k u1.u2 and unchanged (2,3), (3,1) against the evolved state",
                    w,
                    tol,
                ));
            }
            Ok(recs)
        });
    }
}

fn dh_equivalence(out: &mut Vec<CheckRecord>, ctx: &Context, cases: &[R<KappaCase>], case_time: f64) {
    let t0 = Instant::now();
    let results: Vec<(String, f64, R<Vec<CheckRecord>>)> = std::thread::scope(|s| {
        let handles: Vec<_> = ctx
            .kappas()
            .iter()
            .zip(cases)
            .map(|(&k, case)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let r = dh_equivalence_one(ctx, k, case);
                    (kappa_tag(k), t.elapsed().as_secs_f64(), r)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("check thread panicked")).collect()
    });
    for (tag, dt, r) in results {
        collect(out, &format!("c06.{tag}"), "DH vacuum values against the usual representation", dt, r);
    }
    let dt = t0.elapsed().as_secs_f64() + case_time;
    out.push(CheckRecord::at_most("c06.runtime", "DH equivalence wall time in seconds", dt, DH_RUNTIME).timed(dt));
}

fn dh_equivalence_one(ctx: &Context, k: f64, case: &R<KappaCase>) -> R<Vec<CheckRecord>> {
    let case = case_or_err(case)?;
    let tol = k * k + ctx.exact_tol();
    let exact = evolve(&case.cfg, &ctx.psi_un, Order::Exact)?.state.normalized();
    let usual = SpinVectors::for_state(&case.cfg, &exact)?;
    let frame = SpinFrame::conjugated(&case.cfg, &case.entangled)?;
    let dirs = &ctx.dh_dirs;
    let u_table = spin_table(&usual, dirs);
    let d_table: [Vec<FockState>; 3] = Region::ALL.map(|r| dirs.iter().map(|d| frame.vacuum_vector(r, d)).collect());
    let vac = vacuum_state(case.cfg.registry());
    let mut ew = [Worst::new(); 3];
    for r in Region::ALL {
        for i in 0..dirs.len() {
            let want = exact.inner(&u_table[r.index()][i])?.re;
            ew[r.index()].push(want, vac.inner(&d_table[r.index()][i])?.re);
        }
    }
    let mut cw = [Worst::new(); 3];
    for (p, &(ra, rb)) in PAIRS.iter().enumerate() {
        for i in 0..dirs.len() {
            for j in 0..dirs.len() {
                let want = u_table[ra.index()][i].inner(&u_table[rb.index()][j])?.re;
                let got = d_table[ra.index()][i].inner(&d_table[rb.index()][j])?.re;
                cw[p].push(want, got);
            }
        }
    }
    let tag = kappa_tag(k);
    Ok(sweep_records(&format!("c06.{tag}"), "<0|V S V^dag|0> against <psi_en|S|psi_en>", (ew, cw), tol))
}

fn closed_forms(out: &mut Vec<CheckRecord>, ctx: &Context, cases: &[R<KappaCase>]) {
    let tol = ctx.exact_tol();
    let pts = &ctx.points;
    for signs in SIGN_SETS {
        let tag = signs_tag(signs);
        group(out, &format!("c07.unentangled.{tag}"), "unentangled closed-form operators", || {
            let t = build_unentangled_transform(&ctx.sys, signs)?;
            let mut modes = 0.0f64;
            for (i, &(s, r, j)) in FACTOR_MODES.iter().enumerate() {
                let want = ctx.sys.a_dag(j)?.scale(c(signs[i] as f64));
                modes = modes.max(operator_distance(&t.conjugate(&ctx.sys.b(s, r))?, &want)?);
            }
            for (s, r) in [(Spin::Down, Region::R1), (Spin::Up, Region::R2), (Spin::Up, Region::R3)] {
                let b = ctx.sys.b(s, r);
                modes = modes.max(operator_distance(&t.conjugate(&b)?, &b)?);
            }
            for m in ctx.sys.registry().probes() {
                let b = annihilator(ctx.sys.registry(), m)?;
                modes = modes.max(operator_distance(&t.conjugate(&b)?, &b)?);
            }
            let closed = field_section(&ctx.sys, &t, Provenance::DhUnentangledClosedForm, pts)?;
            let conj = field_section(&ctx.sys, &t, Provenance::Conjugated, pts)?;
            let mut fields = 0.0f64;
            let mut vacuum = 0.0f64;
            for (i, &x) in pts.iter().enumerate() {
                for s in Spin::BOTH {
                    fields = fields.max(operator_distance(closed.get(i, s), conj.get(i, s))?);
                    let v = vacuum_action(conj.get(i, s)).distance(&dh_closed::field_vacuum(&ctx.sys, &t, s, x)?)?;
                    let vd = vacuum_action(&conj.get(i, s).adjoint())
                        .distance(&dh_closed::field_dagger_vacuum(&ctx.sys, s, x)?)?;
                    vacuum = vacuum.max(v).max(vd);
                }
            }
            Ok(vec![
                CheckRecord::at_most(
                    format!("c07.unentangled.{tag}.modes"),
                    "V b V^dag = s a^dag on removed modes, b elsewhere",
                    modes,
                    tol,
                ),
                CheckRecord::at_most(
                    format!("c07.unentangled.{tag}.fields"),
                    "closed-form DH field against conjugation",
                    fields,
                    tol,
                ),
                CheckRecord::at_most(
                    format!("c07.unentangled.{tag}.vacuum"),
                    "DH field and its adjoint on |0>",
                    vacuum,
                    tol,
                ),
            ])
        });
    }
    let results: Vec<(String, f64, R<Vec<CheckRecord>>)> = std::thread::scope(|s| {
        let handles: Vec<_> = ctx
            .kappas()
            .iter()
            .zip(cases)
            .map(|(&k, case)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let r = closed_forms_entangled(ctx, k, case);
                    (kappa_tag(k), t.elapsed().as_secs_f64(), r)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("check thread panicked")).collect()
    });
    for (tag, dt, r) in results {
        collect(out, &format!("c07.entangled.{tag}"), "entangled closed-form operators", dt, r);
    }
}

fn closed_forms_entangled(ctx: &Context, k: f64, case: &R<KappaCase>) -> R<Vec<CheckRecord>> {
    let case = case_or_err(case)?;
    let (cfg, t) = (&case.cfg, &case.entangled);
    let tol = ctx.exact_tol();
    let pts = &ctx.points;
    let closed = field_section(cfg, t, Provenance::DhEntangledClosedForm, pts)?;
    let first = field_section(cfg, t, Provenance::FirstOrderConjugated, pts)?;
    let exact = field_section(cfg, t, Provenance::Conjugated, pts)?;
    let mut fields = 0.0f64;
    let mut to_exact = 0.0f64;
    let mut vacuum = 0.0f64;
    for (i, &x) in pts.iter().enumerate() {
        for s in Spin::BOTH {
            fields = fields.max(operator_distance(closed.get(i, s), first.get(i, s))?);
            to_exact = to_exact.max(normalized_distance(closed.get(i, s), exact.get(i, s))?);
            vacuum = vacuum.max(vacuum_action(first.get(i, s)).distance(&dh_closed::field_vacuum(cfg, t, s, x)?)?);
        }
    }
    let frame = SpinFrame::first_order(cfg, t)?;
    let mut spin = 0.0f64;
    for d in &ctx.dh_dirs {
        for r in Region::ALL {
            spin = spin.max(frame.vacuum_vector(r, d).distance(&dh_closed::spin_vacuum(cfg, t, r, d)?)?);
        }
    }
    // spot check of the first-order map on a bare spin operator
    let d = SpinDirection::new(1.1, 0.4)?;
    let s1 = localized_spin_operator(cfg, Region::R1, &d)?;
    let op = operator_distance(&first_order_conjugate(cfg, t, &s1)?, &frame.operator(Region::R1, &d))?;
    let tag = kappa_tag(k);
    Ok(vec![
        CheckRecord::at_most(
            format!("c07.entangled.{tag}.fields"),
            "closed-form entangled DH field against first-order conjugation",
            fields,
            tol,
        ),
        CheckRecord::at_most(
            format!("c07.entangled.{tag}.fields_exact"),
            "closed-form entangled DH field against exact conjugation, per-dimension norm",
            to_exact,
            k * k + tol,
        ),
        CheckRecord::at_most(format!("c07.entangled.{tag}.vacuum"), "entangled DH field on |0>", vacuum, tol),
        CheckRecord::at_most(
            format!("c07.entangled.{tag}.spin_vacuum"),
            "entangled DH spin operators on |0>",
            spin.max(op),
            tol,
        ),
    ])
}

fn locality(out: &mut Vec<CheckRecord>, ctx: &Context, cases: &[R<KappaCase>]) {
    let tol = ctx.exact_tol();
    let probes = ctx.sys.probe_points().to_vec();
    let records_for = |prefix: String, cfg: &SystemConfig, t: &DhTransform| -> R<Vec<CheckRecord>> {
        let rep = locality_report(cfg, t, &ctx.points, tol)?;
        let outside = rep.entries.iter().filter(|e| e.outside_relevant_support).map(|e| e.distance).fold(0.0, f64::max);
        let mut recs = vec![CheckRecord::at_most(
            format!("{prefix}.outside_support"),
            "DH-vs-usual field distance where relevant packets vanish",
            outside,
            tol,
        )];
        for (i, &x) in probes.iter().enumerate() {
            let d = rep.entries.iter().filter(|e| e.point == x).map(|e| e.distance).fold(0.0, f64::max);
            recs.push(CheckRecord::at_most(
                format!("{prefix}.probe{}", i + 1),
                "field distance at a far probe point",
                d,
                tol,
            ));
        }
        Ok(recs)
    };
    group(out, "c08.aux.unentangled", "effective locality with auxiliary modes", || {
        let t = build_unentangled_transform(&ctx.sys, ctx.signs())?;
        records_for("c08.aux.unentangled".into(), &ctx.sys, &t)
    });
    for (&k, case) in ctx.kappas().iter().zip(cases) {
        let tag = kappa_tag(k);
        group(out, &format!("c08.aux.entangled.{tag}"), "effective locality, entangled", || {
            let case = case_or_err(case)?;
            let prefix = format!("c08.aux.entangled.{tag}");
            let mut recs = records_for(prefix.clone(), &case.cfg, &case.entangled)?;
            if k > 0.0 {
                let x = ctx.run.geometry.centers[1];
                let rep = locality_report(&case.cfg, &case.entangled, &[x], tol)?;
                let d = rep.entries.iter().find(|e| e.spin == Spin::Up).map(|e| e.distance).unwrap_or(0.0);
                recs.push(CheckRecord::at_least(
                    format!("{prefix}.cross_region"),
                    "spin-up DH field at the region-2 centre carries a k-sized term",
                    CROSS_TERM_FACTOR * k,
                    d,
                ));
            }
            Ok(recs)
        });
    }
    group(out, "c08.noaux", "nonlocality without auxiliary modes", || {
        let width = ctx.run.geometry.widths[0];
        let mut recs = Vec::new();
        let mut dists = Vec::new();
        for &sep in &ctx.run.geometry.noaux_separations {
            let setup = NoAuxSetup::new(sep * width, width)?;
            let t = noaux_transform(&setup, std::f64::consts::FRAC_PI_2)?;
            let vac = vacuum_state(&setup.registry);
            let psi = vacuum_action(&setup.b().adjoint());
            let std = t.v.apply(&psi)?.distance(&vac)?;
            let rep = noaux_locality_report(&setup, &t)?;
            recs.push(CheckRecord::at_most(
                format!("c08.noaux.sep{sep}.standardization"),
                "V_1 |psi_1> = |0>",
                std,
                tol,
            ));
            recs.push(CheckRecord::at_least(
                format!("c08.noaux.sep{sep}.probe_distance"),
                "||V b_p V^dag - b_p|| without auxiliary modes",
                0.1,
                rep.probe_mode_distance,
            ));
            dists.push(rep.probe_mode_distance);
        }
        let lo = dists.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = dists.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !dists.is_empty() {
            recs.push(CheckRecord::at_most(
                "c08.noaux.spread",
                "probe distance is independent of the separation",
                hi - lo,
                tol,
            ));
        }
        Ok(recs)
    });
}

fn qubits(out: &mut Vec<CheckRecord>, ctx: &Context) {
    for &k in ctx.kappas() {
        let tag = kappa_tag(k);
        let tol = if k == 0.0 { ctx.exact_tol() } else { k * k * k };
        group(out, &format!("c09.{tag}"), "three-qubit second-order values", || qubits_one(ctx, k, tol))
    }
}

fn qubits_one(ctx: &Context, k: f64, tol: f64) -> R<Vec<CheckRecord>> {
    let tag = kappa_tag(k);
    let un = qubit::unentangled();
    let exact = qubit::evolve_qubits(&un, k, QubitOrder::Exact)?;
    let second = qubit::evolve_qubits(&un, k, QubitOrder::Second)?;
    let mut recs = vec![CheckRecord::at_most(
        format!("c09.{tag}.state_distance"),
        "||exact - second-order state||",
        (exact - second).norm(),
        tol,
    )];
    let psi = exact.normalize();
    let dirs = &ctx.dirs;
    let applied: Vec<Vec<QubitState>> = (1..=3)
        .map(|q| dirs.iter().map(|d| Ok(qubit::pauli_along(q, d)? * psi)).collect::<R<_>>())
        .collect::<R<_>>()?;
    for q in 1..=3 {
        let mut w = Worst::new();
        for (i, d) in dirs.iter().enumerate() {
            w.push(qubit_closed::expectation(k, q, d), psi.dotc(&applied[q - 1][i]).re);
        }
        recs.push(w.record(format!("c09.{tag}.expect.q{q}"), "<u.sigma_q> against (1-2k^2)-type forms", tol));
    }
    for (qa, qb) in [(1, 2), (2, 3), (3, 1)] {
        let mut w = Worst::new();
        for (i, da) in dirs.iter().enumerate() {
            for (j, db) in dirs.iter().enumerate() {
                let got = applied[qa - 1][i].dotc(&applied[qb - 1][j]).re;
                w.push(qubit_closed::correlation(k, qa, da, qb, db), got);
            }
        }
        recs.push(w.record(
            format!("c09.{tag}.corr.q{qa}{qb}"),
            "qubit correlations against the second-order forms",
            tol,
        ));
    }
    let x3 = SpinDirection::x3();
    for (qa, qb) in [(2, 3), (3, 1)] {
        let before = qubit::pauli_correlation(&un, qa, &x3, qb, &x3)?.abs();
        let after = qubit::pauli_correlation(&exact, qa, &x3, qb, &x3)?.abs();
        recs.push(CheckRecord::equal(
            format!("c09.{tag}.decrease.q{qa}{qb}"),
            "drop of the z correlation magnitude equals 2k^2",
            2.0 * k * k,
            before - after,
            tol,
        ));
    }
    recs.push(CheckRecord::at_most(
        format!("c09.{tag}.qubit3_product"),
        "qubit 3 stays a product factor",
        qubit::qubit3_entanglement(&exact),
        ctx.exact_tol(),
    ));
    Ok(recs)
}

fn geometry(out: &mut Vec<CheckRecord>, run: &RunConfig) {
    let t = &run.tolerances;
    group(out, "c10.geometry", "packet layout gates", || {
        let layout = PacketLayout::from_spec(&run.geometry.layout_spec())?;
        let w = layout.wsw(t.wsw);
        let a = layout.aperture(t.aperture)?;
        Ok(vec![
            CheckRecord::at_most("c10.geometry.wsw", "max pairwise packet product", w.max_product, t.wsw),
            CheckRecord::at_most(
                "c10.geometry.aperture_integrals",
                "max |int A_i |psi_j|^2 - delta_ij|",
                a.integral_error,
                t.aperture,
            ),
            CheckRecord::at_most(
                "c10.geometry.aperture_pointwise",
                "max |A_i |psi_j|^2 - delta_ij |psi_j|^2|",
                a.pointwise_density,
                t.aperture,
            ),
            CheckRecord::equal(
                "c10.geometry.aperture_products",
                "A_i A_j = delta_ij A_j exactly",
                1.0,
                a.products_exact as u8 as f64,
                0.0,
            ),
        ])
    });
}

/// Criterion number of a record id, `cNN.…` → NN.
pub fn criterion_of(id: &str) -> Option<u32> {
    id.strip_prefix('c')?.split('.').next()?.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_carry_their_criterion() {
        assert_eq!(criterion_of("c09.k0.1.corr.q12"), Some(9));
        assert_eq!(criterion_of("c10.runtime.suite"), Some(10));
        assert_eq!(criterion_of("runtime"), None);
        assert_eq!(signs_tag([1, -1, 1]), "+-+");
        assert_eq!(kappa_tag(0.05), "k0.05");
    }

    #[test]
    fn worst_keeps_the_largest_error() {
        let mut w = Worst::new();
        w.push(1.0, 1.1);
        w.push(0.0, 0.5);
        w.push(2.0, 2.0);
        assert_eq!((w.expected, w.actual), (0.0, 0.5));
        assert!(!w.record("x".into(), "", 0.1).pass);
    }

    #[test]
    fn bad_geometry_is_a_failed_check_not_a_panic() {
        let mut run = RunConfig::default();
        run.geometry.centers = [-2.0, 0.0, 2.0];
        run.physics.kappas = vec![0.0];
        let recs = run_suite(&run);
        assert!(recs.iter().any(|r| r.id == "c00.setup.error" && !r.pass));
        assert!(recs.iter().any(|r| r.id == "c10.geometry.wsw" && !r.pass));
    }
}
