//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (run with `--nocapture` to see them).

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pwcyl::cli::{self, parse_scenario};
use pwcyl::cycles::{self, audit_tables, CycleOutcome, Observed, ReturnMaps};
use pwcyl::flow::{PieceFlow, SearchConfig};
use pwcyl::model::{classify_tangency, CanonicalParams, FocusCanonicalParams, Side, TangencyKind};
use pwcyl::oracle::{self, OracleConfig};
use pwcyl::spectral::{analyze_pair, pair_invariants, SpectralType, StructureClass};
use pwcyl::tol;

fn example_1() -> CanonicalParams {
    CanonicalParams {
        a_plus: 0.05,
        b_plus: 0.0,
        c_plus: -0.4375,
        d_plus: 0.625,
        a_minus: 1.0,
        b_minus: 1.0,
        c_minus: 0.5,
        d_minus: 0.1875,
        m: 1.0,
    }
}

fn example_2() -> CanonicalParams {
    CanonicalParams {
        a_plus: -1.0,
        b_plus: 1.0,
        c_plus: 0.0,
        d_plus: -1.0,
        a_minus: -2.0,
        b_minus: -1.0,
        c_minus: 0.0,
        d_minus: -2.0,
        m: 0.0,
    }
}

#[test]
fn criterion_1_unique_cylinder_fixture() {
    let started = Instant::now();
    let cp = example_1();
    let inv = pair_invariants(&cp, tol::DISC_EPS).unwrap();
    assert_eq!(inv.pair, (SpectralType::Sa, SpectralType::Sa));
    assert_eq!(inv.beta, 1.0 / 3.0, "beta must be exactly 1/3");
    assert!((inv.alpha - 1.72732).abs() < 1e-4, "alpha = {}", inv.alpha);
    assert!((inv.kappa - -0.3333).abs() < 1e-3, "kappa = {}", inv.kappa);
    assert!((inv.lambda - 0.0876).abs() < 1e-3, "lambda = {}", inv.lambda);
    let g = 1.0 + inv.alpha * inv.alpha * inv.lambda / inv.kappa;
    assert!((g - 0.216).abs() < 1e-2, "criterion value = {g}");
    let summary = analyze_pair(&cp, tol::DISC_EPS);
    assert_eq!(summary.structure, StructureClass::UniqueCylinder);

    let search = cycles::find_cylinders(
        &cp,
        (1e-3, 50.0),
        Some(&summary.structure),
        tol::DEFAULT_GRID_NODES,
        SearchConfig::default(),
    );
    assert_eq!(search.cylinders.len(), 1, "exactly one cylinder");
    let cyl = search.cylinders[0];

    let CycleOutcome::Cycle(cycle) = cycles::find_limit_cycle(&cp, &cyl, SearchConfig::default())
    else {
        panic!("expected exactly one limit cycle");
    };
    let sys = cp.to_piecewise();
    let (xr, yr) = oracle::numeric_return_map(
        &sys.upper,
        &sys.lower,
        cycle.x0,
        cyl.y0,
        100.0,
        &OracleConfig::default(),
    )
    .unwrap()
    .expect("cycle orbit must return");
    let residual = ((xr - cycle.x0).powi(2) + (yr - cyl.y0).powi(2)).sqrt();
    assert!(residual < 1e-6, "closure residual {residual}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?}");
    println!(
        "[criterion 1] PASS — (Sa,Sa), alpha={:.5}, beta=1/3, kappa={:.5}, lambda={:.5}, \
         1+a^2*l/k={:.4}, one cylinder at y0={:.6}, one cycle at x0={:.6}, \
         closure={residual:.2e}, {elapsed:?}",
        inv.alpha, inv.kappa, inv.lambda, g, cyl.y0, cycle.x0
    );
}

#[test]
fn criterion_2_continuum_fixture() {
    let started = Instant::now();
    let cp = example_2();
    let inv = pair_invariants(&cp, tol::DISC_EPS).unwrap();
    assert_eq!(inv.pair, (SpectralType::Ce, SpectralType::Ce));
    assert_eq!((inv.kappa, inv.lambda), (0.0, 0.0));

    let search = cycles::find_cylinders(
        &cp,
        (tol::DEFAULT_Y_MIN, tol::DEFAULT_Y_MAX),
        Some(&StructureClass::InfinitelyManyCylinders),
        tol::DEFAULT_GRID_NODES,
        SearchConfig::default(),
    );
    let witness = search.continuum.expect("continuum witness over 512 nodes");
    assert!(witness.max_abs_q < 1e-8, "max |Q| = {}", witness.max_abs_q);
    assert!(witness.breaks_under_perturbation);

    // closed-form checks of the upper half map
    let up = PieceFlow::canonical_upper(&cp, tol::DISC_EPS);
    for i in 1..=20 {
        let y0 = 0.1 * i as f64;
        let hr = up.half_map(y0, &SearchConfig::default());
        assert!(hr.defined);
        assert!((hr.y_exit + y0).abs() < 1e-9, "P+({y0}) = {}", hr.y_exit);
        assert!(
            (hr.tau - 2.0 * y0.atan()).abs() < 1e-9,
            "tau+({y0}) = {}",
            hr.tau
        );
    }

    // 12-point surface of closed orbits, cone apex towards the fold
    let grid: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
    let surface = cycles::periodic_surface(&cp, &grid, SearchConfig::default()).unwrap();
    assert_eq!(surface.samples.len(), 12);
    let mut max_closure = 0.0_f64;
    for s in &surface.samples {
        assert!(s.closure_residual < 1e-6, "closure at y0 = {}", s.y0);
        max_closure = max_closure.max(s.closure_residual);
    }
    for pair in surface.samples.windows(2) {
        let (a0, a1) = (pair[0].y0 - pair[0].y1, pair[1].y0 - pair[1].y1);
        assert!(a0 < a1, "amplitudes must shrink towards the fold");
    }
    let smallest = surface.samples[0].y0 - surface.samples[0].y1;
    assert!(smallest < 0.75, "amplitude near the fold = {smallest}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 2.0, "runtime {elapsed:?}");
    println!(
        "[criterion 2] PASS — (Ce,Ce), kappa=lambda=0, max|Q|={:.2e} over 512 nodes, \
         P+(y0)=-y0 and tau=2*atan(y0) at 1e-9, 12 closed orbits (max closure {max_closure:.2e}), \
         amplitude -> 0, {elapsed:?}",
        witness.max_abs_q
    );
}

fn sample_piece_params<R: Rng>(rng: &mut R, kind: SpectralType) -> (f64, f64) {
    let sign = |rng: &mut R| if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    match kind {
        SpectralType::Sa => (rng.gen_range(-1.5..1.5), rng.gen_range(0.1..1.5)),
        SpectralType::No => {
            let c = sign(rng) * rng.gen_range(0.3..1.5);
            (c, -rng.gen_range(0.1..0.9) * c * c / 4.0)
        }
        SpectralType::Nd => {
            let c = sign(rng) * rng.gen_range(0.3..1.5);
            (c, -c * c / 4.0)
        }
        SpectralType::Fo => {
            let c = sign(rng) * rng.gen_range(0.3..1.5);
            (c, -c * c / 4.0 - rng.gen_range(0.1..1.5))
        }
        SpectralType::Ce => (0.0, -rng.gen_range(0.1..2.0)),
        SpectralType::D1 => (sign(rng) * rng.gen_range(0.3..1.5), 0.0),
        SpectralType::D2 => (0.0, 0.0),
    }
}

#[test]
fn criterion_3_oracle_equivalence_suite() {
    let started = Instant::now();
    let types = [
        SpectralType::Sa,
        SpectralType::No,
        SpectralType::Nd,
        SpectralType::Fo,
        SpectralType::Ce,
        SpectralType::D1,
        SpectralType::D2,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_tau = 0.0_f64;
    let mut worst_y = 0.0_f64;
    let mut total = 0usize;

    // 7 upper clauses and 6 lower clauses (saddle/node share the lower one);
    // amplitude-capped draws keep the 1e-8 absolute comparison meaningful.
    let mut run_side = |side: Side, kind: SpectralType, rng: &mut ChaCha8Rng| {
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < 50 {
            attempts += 1;
            assert!(
                attempts < 5000,
                "cannot find defined returns for {kind:?} {side:?}"
            );
            let (c, d) = sample_piece_params(rng, kind);
            let a = if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * rng.gen_range(0.05..0.5);
            let b = rng.gen_range(-1.0..1.0);
            let (cp, piece, entry) = match side {
                Side::Upper => {
                    let cp = CanonicalParams {
                        a_plus: a,
                        b_plus: b,
                        c_plus: c,
                        d_plus: d,
                        ..example_1()
                    };
                    let pf = PieceFlow::canonical_upper(&cp, tol::DISC_EPS);
                    (cp, pf, rng.gen_range(0.05..2.0))
                }
                Side::Lower => {
                    let cp = CanonicalParams {
                        a_minus: a,
                        b_minus: b,
                        c_minus: c,
                        d_minus: d,
                        m: rng.gen_range(-1.0..1.0),
                        ..example_1()
                    };
                    let pf = PieceFlow::canonical_lower(&cp, tol::DISC_EPS);
                    (cp, pf, -rng.gen_range(0.05..2.0))
                }
            };
            let analytic = piece.half_map(entry, &SearchConfig::default());
            if !analytic.defined || analytic.y_exit.abs() > 10.0 {
                continue;
            }
            let affine = match side {
                Side::Upper => cp.upper_piece(),
                Side::Lower => cp.lower_piece(),
            };
            let numeric = oracle::numeric_half_map_piece(
                &affine,
                0.3,
                entry,
                3.0 * analytic.tau + 10.0,
                &OracleConfig::default(),
            )
            .unwrap();
            assert!(numeric.defined, "oracle must confirm the return");
            let dt = (numeric.tau - analytic.tau).abs();
            let dy = (numeric.y_exit - analytic.y_exit).abs();
            assert!(
                dt < 1e-8 && dy < 1e-8,
                "{kind:?} {side:?}: dtau={dt:e} dy={dy:e} at entry {entry}"
            );
            worst_tau = worst_tau.max(dt);
            worst_y = worst_y.max(dy);
            accepted += 1;
            total += 1;
        }
    };

    for kind in types {
        run_side(Side::Upper, kind, &mut rng);
    }
    // lower clauses: saddle and node share one clause; still exercise both
    // type draws but count them as the six lower clause families
    for kind in [
        SpectralType::Sa,
        SpectralType::Nd,
        SpectralType::Fo,
        SpectralType::Ce,
        SpectralType::D1,
        SpectralType::D2,
    ] {
        run_side(Side::Lower, kind, &mut rng);
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:?}");
    println!(
        "[criterion 3] PASS — {total} draws across 13 clause families, \
         worst |dtau|={worst_tau:.2e}, worst |dy|={worst_y:.2e} (< 1e-8), {elapsed:?}"
    );
}

#[test]
fn criterion_4_table_audit() {
    let started = Instant::now();
    let report = audit_tables(
        20260809,
        5,
        (tol::DEFAULT_Y_MIN, tol::DEFAULT_Y_MAX),
        tol::DEFAULT_GRID_NODES,
        SearchConfig::default(),
    );

    assert_eq!(report.rows.len(), 27, "all printed rows are audited");
    let skipped: Vec<_> = report.rows.iter().filter(|r| r.skipped.is_some()).collect();
    assert_eq!(skipped.len(), 1, "only the unparseable entry is skipped");
    assert_eq!(skipped[0].pair, (SpectralType::No, SpectralType::Ce));

    let mut named_failures = 0usize;
    for row in &report.rows {
        if row.skipped.is_some() {
            continue;
        }
        assert_eq!(row.draws.len(), 5, "{:?}: five draws per row", row.pair);
        for draw in &row.draws {
            // impossible kinds indicate an implementation bug, not a table
            // finding: they must never occur
            if let Observed::Count(n) = draw.observed {
                assert!(
                    n <= 1,
                    "{:?}: {n} simultaneous cylinders found (uniqueness bound broken)",
                    row.pair
                );
            }
            match (draw.predicted.as_str(), &draw.observed) {
                ("scroll" | "unique-cylinder", Observed::Continuum) => {
                    panic!("{:?}: false continuum", row.pair)
                }
                ("infinitely-many-cylinders", Observed::Count(_)) => {
                    panic!("{:?}: missed continuum", row.pair)
                }
                _ => {}
            }
            if !draw.matched {
                named_failures += 1;
                // a scroll prediction contradicted by a real cylinder only
                // occurs when a table exponent is negative, i.e. where the
                // curve substitutions leave the unit square and the printed
                // derivations stop applying
                if draw.predicted == "scroll" {
                    let inv = pair_invariants(&draw.params, tol::DISC_EPS).unwrap();
                    assert!(
                        inv.alpha < 0.0 || inv.beta < 0.0,
                        "{:?}: scroll contradiction inside the positive-exponent regime: \
                         alpha={}, beta={}, {:?}",
                        row.pair,
                        inv.alpha,
                        inv.beta,
                        draw.params
                    );
                }
            }
        }
    }

    // rows with exact composed-map structure must verify on every draw
    for pair in [
        (SpectralType::Ce, SpectralType::Ce),
        (SpectralType::D2, SpectralType::Ce),
        (SpectralType::D2, SpectralType::D2),
        (SpectralType::No, SpectralType::D2),
        (SpectralType::Nd, SpectralType::D2),
        (SpectralType::D1, SpectralType::D2),
    ] {
        let row = report.rows.iter().find(|r| r.pair == pair).unwrap();
        assert_eq!(row.mismatches, 0, "exact row {pair:?} must verify");
    }

    // every mismatch surfaces as a named audit failure line
    let lines = report.summary_lines();
    let failure_lines = lines.iter().filter(|l| l.contains("AUDIT FAILURE")).count();
    let failing_rows = report.rows.iter().filter(|r| r.mismatches > 0).count();
    assert_eq!(failure_lines, failing_rows);
    for line in &lines {
        println!("  {line}");
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "runtime {elapsed:?}");
    println!(
        "[criterion 4] PASS — 26 parseable rows audited (5 draws each), exact rows verified, \
         {named_failures} mismatches surfaced as named audit failures \
         (all scroll contradictions confined to negative-exponent draws), {elapsed:?}"
    );
}

#[test]
fn criterion_5_fixed_point_law() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let mut worst = 0.0_f64;
    while accepted < 100 {
        attempts += 1;
        assert!(attempts < 20_000, "not enough unique-cylinder draws");
        // contracting drift rates guarantee |rho*xi| < 1 on any cylinder
        let cp = CanonicalParams {
            a_plus: -rng.gen_range(0.05..0.5),
            b_plus: rng.gen_range(-1.0..1.0),
            c_plus: rng.gen_range(-1.5..-0.1),
            d_plus: rng.gen_range(0.1..1.5),
            a_minus: -rng.gen_range(0.05..0.5),
            b_minus: rng.gen_range(-1.0..1.0),
            c_minus: rng.gen_range(-1.5..1.5),
            d_minus: rng.gen_range(0.1..1.5),
            m: rng.gen_range(-1.0..1.0),
        };
        let search = cycles::find_cylinders(
            &cp,
            (tol::DEFAULT_Y_MIN, tol::DEFAULT_Y_MAX),
            None,
            tol::DEFAULT_GRID_NODES,
            SearchConfig::default(),
        );
        if search.cylinders.len() != 1 {
            continue;
        }
        let cyl = search.cylinders[0];
        let CycleOutcome::Cycle(cycle) =
            cycles::find_limit_cycle(&cp, &cyl, SearchConfig::default())
        else {
            continue;
        };
        assert!(cycle.multiplier.abs() < 1.0);
        let maps = ReturnMaps::canonical(&cp, SearchConfig::default());
        let (up, lo) = maps.x_maps(&cyl);
        let composed = lo.compose_after(&up);
        let mut x = 0.0;
        for _ in 0..4000 {
            x = composed.apply(x);
        }
        let err = (x - cycle.x0).abs() / (1.0 + cycle.x0.abs());
        assert!(err < 1e-9, "iteration limit {x} vs closed form {}", cycle.x0);
        worst = worst.max(err);
        accepted += 1;
    }
    let elapsed = started.elapsed();
    println!(
        "[criterion 5] PASS — 100 contracting unique-cylinder instances, iterated return map \
         matches the closed-form fixed point to {worst:.2e} (< 1e-9), {elapsed:?}"
    );
}

#[test]
fn criterion_6_tangency_suite() {
    let base = example_1().to_quasinormal();

    // invisible fold line on both sides of the canonical form
    assert_eq!(
        classify_tangency(&base, Side::Upper).kind,
        TangencyKind::InvisibleFoldLine
    );
    assert_eq!(
        classify_tangency(&base, Side::Lower).kind,
        TangencyKind::InvisibleFoldLine
    );

    // visible: positive normal acceleration above, negative below
    let mut q = base;
    q.upper.b2 = 2.0;
    q.lower.b2 = -2.0;
    assert_eq!(
        classify_tangency(&q, Side::Upper).kind,
        TangencyKind::VisibleFoldLine
    );
    assert_eq!(
        classify_tangency(&q, Side::Lower).kind,
        TangencyKind::VisibleFoldLine,
        "the visibility sign flips on the lower piece"
    );

    // invariant line
    q = base;
    q.upper.b2 = 0.0;
    assert_eq!(
        classify_tangency(&q, Side::Upper).kind,
        TangencyKind::InvariantLine
    );

    // cusp and singular point at x = -b2/a21
    q = base;
    q.upper.a21 = 2.0;
    q.upper.b2 = 1.0;
    q.upper.a11 = 0.5;
    q.upper.b1 = 1.0;
    assert_eq!(
        classify_tangency(&q, Side::Upper).kind,
        TangencyKind::CuspAt { x: -0.5 }
    );
    // a21*b1 - a11*b2 = 0 turns the cusp into a singular point
    q.upper.b1 = 0.25;
    assert_eq!(
        classify_tangency(&q, Side::Upper).kind,
        TangencyKind::SingularAt { x: -0.5 }
    );

    println!(
        "[criterion 6] PASS — visible/invisible fold lines (with the lower sign flip), \
         invariant line, cusp and singular point all classified"
    );
}

#[test]
fn criterion_7_focus_focus_draws() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut with_cylinder = 0usize;
    for draw in 0..50 {
        let t2 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * rng.gen_range(0.05..1.5);
        let t1 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * rng.gen_range(0.05..1.5);
        let fp = FocusCanonicalParams {
            a_plus: rng.gen_range(-1.0..1.0),
            b_plus: rng.gen_range(-1.0..1.0),
            a_minus: rng.gen_range(-1.0..1.0),
            b_minus: rng.gen_range(-1.0..1.0),
            m: rng.gen_range(-1.0..1.0),
            d2: t2 * t2 / 4.0 + rng.gen_range(0.1..2.0),
            d1: t1 * t1 / 4.0 + rng.gen_range(0.1..2.0),
            t2,
            t1,
            a2: rng.gen_range(0.1..2.0),
            a1: -rng.gen_range(0.1..2.0),
        };
        let out = cycles::focus_focus_analyze(
            &fp,
            (tol::DEFAULT_Y_MIN, tol::DEFAULT_Y_MAX),
            tol::DEFAULT_GRID_NODES,
            SearchConfig::default(),
        )
        .unwrap();
        assert!(
            out.cylinders.len() <= 1,
            "draw {draw}: {} cylinders",
            out.cylinders.len()
        );
        assert!(
            out.violations.is_empty(),
            "draw {draw}: theory violation {:?}",
            out.violations
        );
        if out.cylinders.len() == 1 {
            with_cylinder += 1;
        }
    }
    let elapsed = started.elapsed();
    println!(
        "[criterion 7] PASS — 50 rotating-pair draws, every one with at most one invariant \
         cylinder ({with_cylinder} carried one), zero theory-violation diagnostics, {elapsed:?}"
    );
}

#[test]
fn criterion_8_deterministic_reports() {
    let fixture_1 = "\
mode = canonical
a_plus = 1/20
b_plus = 0
c_plus = -7/16
d_plus = 5/8
a_minus = 1
b_minus = 1
c_minus = 1/2
d_minus = 3/16
m = 1
";
    let fixture_2 = "\
mode = canonical
a_plus = -1
b_plus = 1
c_plus = 0
d_plus = -1
a_minus = -2
b_minus = -1
c_minus = 0
d_minus = -2
m = 0
y_min = 0.25
y_max = 3
";
    for (name, fixture) in [("unique-cylinder", fixture_1), ("continuum", fixture_2)] {
        let scenario = parse_scenario(fixture).unwrap();
        let render = || {
            let derived = cli::derive(&scenario).unwrap();
            let report = cli::cycles_report(&derived, &scenario).unwrap();
            cli::to_json(&report)
        };
        let first = render();
        let second = render();
        assert_eq!(first, second, "{name} report must be byte-identical");
        assert!(first.len() > 100);
    }
    println!("[criterion 8] PASS — repeated runs of the two fixture reports are byte-identical");
}
