//! Tables behind the `correlations`, `locality` and `qubit` commands.

use serde::Serialize;

use dhlab_core::dhrep::{LocalityEntry, SpinFrame};
use dhlab_core::model::closed_form as model_closed;
use dhlab_core::qubit::{self, closed_form as qubit_closed, QubitOrder};
use dhlab_core::{
    build_unentangled_transform, evolve, locality_report, noaux_locality_report, noaux_transform, DhFlavor,
    LocalityReport, NoAuxReport, NoAuxSetup, Order, SpinDirection, SpinVectors,
};

use crate::suite::{Context, KappaCase, PAIRS};

type R<T> = dhlab_core::Result<T>;

/// The three coordinate axes followed by the configured DH direction set.
pub fn table_directions(ctx: &Context) -> Vec<SpinDirection> {
    let mut d = vec![SpinDirection::x1(), SpinDirection::x2(), SpinDirection::x3()];
    d.extend(ctx.dh_dirs.iter().copied());
    d
}

fn representation(k: f64) -> &'static str {
    if k == 0.0 {
        "unentangled"
    } else {
        "entangled"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub kappa: f64,
    pub representation: &'static str,
    pub regions: String,
    pub ua1: f64,
    pub ua2: f64,
    pub ua3: f64,
    pub ub1: f64,
    pub ub2: f64,
    pub ub3: f64,
    /// Usual representation, normalized first-order state.
    pub first_order: f64,
    /// Usual representation, exactly evolved state.
    pub exact: f64,
    /// ⟨0|(V S_a V†)(V S_b V†)|0⟩ with the exact entangled transform.
    pub dh_vacuum: f64,
    /// Same with the first-order map V(S + i[G, S])V†.
    pub dh_vacuum_first_order: f64,
    /// −(1−2κ)u_{a,3}u_{b,3} − 2κ u⃗_a·u⃗_b for (1,2), z-products otherwise.
    pub closed_form: f64,
    pub abs_diff_first_order: f64,
    pub abs_diff_exact: f64,
    pub abs_diff_dh_vacuum: f64,
    pub abs_diff_dh_vacuum_first_order: f64,
}

fn correlation_rows(ctx: &Context, case: &KappaCase, dirs: &[SpinDirection]) -> R<Vec<CorrelationRow>> {
    let k = case.kappa;
    let vectors = |order| -> R<SpinVectors> {
        let state = evolve(&case.cfg, &ctx.psi_un, order)?.state;
        SpinVectors::for_state(&case.cfg, &state)
    };
    let first = vectors(Order::First)?;
    let exact = vectors(Order::Exact)?;
    let frame = SpinFrame::conjugated(&case.cfg, &case.entangled)?;
    let frame1 = SpinFrame::first_order(&case.cfg, &case.entangled)?;
    let mut rows = Vec::new();
    for (ra, rb) in PAIRS {
        for da in dirs {
            for db in dirs {
                let first_order = first.correlation(ra, da, rb, db)?;
                let exact = exact.correlation(ra, da, rb, db)?;
                let dh_vacuum = frame.correlation(ra, da, rb, db)?;
                let dh_vacuum_first_order = frame1.correlation(ra, da, rb, db)?;
                let closed_form = model_closed::entangled_correlation(k, ra, da, rb, db);
                let [ua1, ua2, ua3] = da.unit_vector();
                let [ub1, ub2, ub3] = db.unit_vector();
                rows.push(CorrelationRow {
                    kappa: k,
                    representation: representation(k),
                    regions: format!("{},{}", ra.number(), rb.number()),
                    ua1,
                    ua2,
                    ua3,
                    ub1,
                    ub2,
                    ub3,
                    first_order,
                    exact,
                    dh_vacuum,
                    dh_vacuum_first_order,
                    closed_form,
                    abs_diff_first_order: (first_order - closed_form).abs(),
                    abs_diff_exact: (exact - closed_form).abs(),
                    abs_diff_dh_vacuum: (dh_vacuum - closed_form).abs(),
                    abs_diff_dh_vacuum_first_order: (dh_vacuum_first_order - closed_form).abs(),
                });
            }
        }
    }
    Ok(rows)
}

/// Correlations of every region pair over the table directions and κ list.
pub fn correlations(ctx: &Context) -> R<Vec<CorrelationRow>> {
    let dirs = table_directions(ctx);
    let cases = ctx.cases();
    let parts: Vec<R<Vec<CorrelationRow>>> = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .iter()
            .map(|case| {
                let dirs = &dirs;
                s.spawn(move || correlation_rows(ctx, case.as_ref().map_err(Clone::clone)?, dirs))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("table thread panicked")).collect()
    });
    let mut rows = Vec::new();
    for p in parts {
        rows.extend(p?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QubitRow {
    pub kappa: f64,
    /// "expectation" or "correlation".
    pub quantity: &'static str,
    pub qubits: String,
    pub ua1: f64,
    pub ua2: f64,
    pub ua3: f64,
    pub ub1: Option<f64>,
    pub ub2: Option<f64>,
    pub ub3: Option<f64>,
    pub exact: f64,
    pub second_order: f64,
    pub closed_form: f64,
    pub abs_diff_exact: f64,
    pub abs_diff_second_order: f64,
}

/// Exact and second-order qubit values over the κ list.
pub fn qubit_table(ctx: &Context) -> R<Vec<QubitRow>> {
    let dirs = table_directions(ctx);
    let un = qubit::unentangled();
    let mut rows = Vec::new();
    for &k in &ctx.run.physics.kappas {
        let exact = qubit::evolve_qubits(&un, k, QubitOrder::Exact)?;
        let second = qubit::evolve_qubits(&un, k, QubitOrder::Second)?;
        for q in 1..=3 {
            for d in &dirs {
                let e = qubit::pauli_expectation(&exact, q, d)?;
                let s = qubit::pauli_expectation(&second, q, d)?;
                let cf = qubit_closed::expectation(k, q, d);
                let [ua1, ua2, ua3] = d.unit_vector();
                rows.push(QubitRow {
                    kappa: k,
                    quantity: "expectation",
                    qubits: q.to_string(),
                    ua1,
                    ua2,
                    ua3,
                    ub1: None,
                    ub2: None,
                    ub3: None,
                    exact: e,
                    second_order: s,
                    closed_form: cf,
                    abs_diff_exact: (e - cf).abs(),
                    abs_diff_second_order: (s - cf).abs(),
                });
            }
        }
        for (qa, qb) in [(1, 2), (2, 3), (3, 1)] {
            for da in &dirs {
                for db in &dirs {
                    let e = qubit::pauli_correlation(&exact, qa, da, qb, db)?;
                    let s = qubit::pauli_correlation(&second, qa, da, qb, db)?;
                    let cf = qubit_closed::correlation(k, qa, da, qb, db);
                    let [ua1, ua2, ua3] = da.unit_vector();
                    let [ub1, ub2, ub3] = db.unit_vector();
                    rows.push(QubitRow {
                        kappa: k,
                        quantity: "correlation",
                        qubits: format!("{qa},{qb}"),
                        ua1,
                        ua2,
                        ua3,
                        ub1: Some(ub1),
                        ub2: Some(ub2),
                        ub3: Some(ub3),
                        exact: e,
                        second_order: s,
                        closed_form: cf,
                        abs_diff_exact: (e - cf).abs(),
                        abs_diff_second_order: (s - cf).abs(),
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Aux-construction reports (unentangled, then one per κ) next to the
/// no-aux reports, one per packet–probe separation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityOutput {
    pub aux: Vec<LocalityReport>,
    pub noaux: Vec<NoAuxReport>,
}

pub fn locality(ctx: &Context) -> R<LocalityOutput> {
    let tol = ctx.run.tolerances.exact;
    let base = build_unentangled_transform(&ctx.sys, ctx.run.physics.signs)?;
    let mut aux = vec![locality_report(&ctx.sys, &base, &ctx.points, tol)?];
    for case in ctx.cases() {
        let case = case?;
        aux.push(locality_report(&case.cfg, &case.entangled, &ctx.points, tol)?);
    }
    let width = ctx.run.geometry.widths[0];
    let noaux = ctx
        .run
        .geometry
        .noaux_separations
        .iter()
        .map(|&sep| {
            let setup = NoAuxSetup::new(sep * width, width)?;
            noaux_locality_report(&setup, &noaux_transform(&setup, std::f64::consts::FRAC_PI_2)?)
        })
        .collect::<R<_>>()?;
    Ok(LocalityOutput { aux, noaux })
}

/// Flat row for CSV output of a locality run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityRow {
    pub construction: &'static str,
    pub kappa: Option<f64>,
    pub separation: Option<f64>,
    pub point: f64,
    pub spin: String,
    pub representation: String,
    pub distance: f64,
    pub packet_magnitude1: f64,
    pub packet_magnitude2: Option<f64>,
    pub packet_magnitude3: Option<f64>,
    pub outside_relevant_support: Option<bool>,
}

impl LocalityOutput {
    pub fn rows(&self) -> Vec<LocalityRow> {
        let mut rows = Vec::new();
        for rep in &self.aux {
            let (construction, kappa) = match rep.flavor {
                DhFlavor::Unentangled => ("aux_unentangled", None),
                DhFlavor::Entangled { kappa } => ("aux_entangled", Some(kappa)),
            };
            rows.extend(rep.entries.iter().map(|e: &LocalityEntry| LocalityRow {
                construction,
                kappa,
                separation: None,
                point: e.point,
                spin: e.spin.to_string(),
                representation: e.representation.clone(),
                distance: e.distance,
                packet_magnitude1: e.packet_magnitudes[0],
                packet_magnitude2: Some(e.packet_magnitudes[1]),
                packet_magnitude3: Some(e.packet_magnitudes[2]),
                outside_relevant_support: Some(e.outside_relevant_support),
            }));
        }
        for rep in &self.noaux {
            rows.push(LocalityRow {
                construction: "noaux",
                kappa: None,
                separation: Some(rep.separation),
                point: rep.separation,
                spin: "up".into(),
                representation: "probe_mode".into(),
                distance: rep.probe_mode_distance,
                packet_magnitude1: rep.packet_magnitude,
                packet_magnitude2: None,
                packet_magnitude3: None,
                outside_relevant_support: None,
            });
            rows.push(LocalityRow {
                representation: "probe_point".into(),
                distance: rep.probe_point_distance,
                ..rows.last().expect("pushed above").clone()
            });
        }
        rows
    }
}
