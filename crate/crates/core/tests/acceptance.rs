//! End-to-end acceptance checks against the published reference results.
//!
//! Every check prints one `PASS`/`FAIL` line. The long runs take minutes
//! each; the Ex. 1 grid is computed once and shared.
//!
//! Run with `cargo test -p ecm-core --test acceptance -- --nocapture`.

mod common;

use std::sync::{Mutex, OnceLock};

use ecm_core::dissolution::{effective_current, update_level};
use ecm_core::geometry::{element_axis_areas, element_volume};
use ecm_core::postprocess::{analytic_gap_width, fit_line};
use ecm_core::scenario::config::Schedule;
use ecm_core::{preset, MaterialTable, ScenarioConfig, Simulation};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

/// Collects the outcome lines of one criterion and fails the test at the end.
struct Report {
    id: &'static str,
    failures: Vec<String>,
}

static PRINT: Mutex<()> = Mutex::new(());

impl Report {
    fn new(id: &'static str) -> Self {
        Self { id, failures: Vec::new() }
    }

    fn check(&mut self, what: &str, ok: bool, detail: String) {
        let _guard = PRINT.lock().unwrap_or_else(|e| e.into_inner());
        println!("{} criterion {}: {what}: {detail}", if ok { "PASS" } else { "FAIL" }, self.id);
        if !ok {
            self.failures.push(format!("{what}: {detail}"));
        }
    }

    /// `value` within `target ± tol`.
    fn within(&mut self, what: &str, value: f64, target: f64, tol: f64, unit: &str) {
        let ok = (value - target).abs() <= tol;
        self.check(what, ok, format!("{value:.4}{unit} (target {target}{unit} ± {tol}{unit})"));
    }

    fn finish(self) {
        assert!(self.failures.is_empty(), "criterion {} failed:\n  {}", self.id, self.failures.join("\n  "));
    }
}

fn config(name: &str, overrides: &[String]) -> ScenarioConfig {
    preset(name).unwrap().with_overrides(overrides).unwrap()
}

fn simulation(cfg: &ScenarioConfig) -> Simulation {
    Simulation::new(cfg.setup().unwrap()).unwrap()
}

/// Steps until `t` is reached, to within half a step.
fn advance_to(s: &mut Simulation, t: f64, dt: f64) {
    while !s.finished() && s.state().t < t - 0.5 * dt {
        s.step().unwrap();
    }
}

fn constant(s: &Schedule) -> f64 {
    match *s {
        Schedule::Constant { value } => value,
        ref other => panic!("expected a constant schedule, got {other:?}"),
    }
}

fn feed(s: &Schedule) -> f64 {
    match *s {
        Schedule::FeedRamp { feed_rate } => feed_rate,
        ref other => panic!("expected a feed ramp, got {other:?}"),
    }
}

fn range(points: &[[f64; 2]]) -> f64 {
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[1]), hi.max(p[1])));
    hi - lo
}

/// Surface inclination in degrees from a least-squares line.
fn inclination(points: &[[f64; 2]]) -> f64 {
    fit_line(points).unwrap().0.atan().to_degrees().abs()
}

#[test]
fn criterion_1_analytic_gap_width() {
    let mut r = Report::new("1");
    let ex1 = preset("ex1").unwrap();
    let t1 = ex1.material.table().unwrap();
    let s1 = analytic_gap_width(
        t1.electrolyte_at(323.15).k_e,
        constant(&ex1.electric.anode),
        ex1.electric.polarization,
        t1.metal_v_eff(),
        feed(&ex1.electric.cathode),
    )
    .unwrap();
    r.check("Ex. 1 gap width", (s1 - 0.32e-3).abs() <= 1e-12 * 0.32e-3, format!("{:.6} mm (0.32 mm)", s1 * 1e3));

    // Conductivity at the mean of inflow and outflow temperature.
    let ex2 = preset("ex2").unwrap();
    let t2 = ex2.material.table().unwrap();
    let k = t2.electrolyte_at(0.5 * (298.15 + 308.15)).k_e;
    let s2 = analytic_gap_width(k, constant(&ex2.electric.anode), ex2.electric.polarization, t2.metal_v_eff(), feed(&ex2.electric.cathode))
        .unwrap();
    // The reference is printed to two decimals in mm.
    r.check("Ex. 2 gap width", (s2 * 1e5).round() == 36.0, format!("{:.4} mm rounds to 0.36 mm", s2 * 1e3));
    r.check("preset gap", ex2.gap() == 0.36e-3 && ex1.gap() == 0.32e-3, format!("{} / {} mm", ex1.gap() * 1e3, ex2.gap() * 1e3));
    r.finish();
}

const MESHES: [usize; 4] = [10, 20, 40, 80];
const STEPS: [f64; 3] = [1.0, 0.1, 0.01];

#[derive(Clone, Copy, Debug)]
struct Ex1Result {
    v_dis: f64,
    v_co: f64,
}

impl Ex1Result {
    /// Percent deviation from the stationary analytical volume.
    fn deviation(&self) -> f64 {
        100.0 * (self.v_dis / ex1_analytic_volume() - 1.0)
    }

    fn cutoff_ratio(&self) -> f64 {
        self.v_co / self.v_dis
    }
}

/// At the stationary gap the front advances with the feed.
fn ex1_analytic_volume() -> f64 {
    let cfg = preset("ex1").unwrap();
    let ecm_core::geometry::GeometrySpec::GapStrip(g) = cfg.geometry else { panic!("ex1 is a gap strip") };
    feed(&cfg.electric.cathode) * cfg.time.t_end * g.l * g.g
}

fn run_ex1(overrides: Vec<String>) -> Ex1Result {
    let mut s = simulation(&config("ex1", &overrides));
    s.run().unwrap();
    Ex1Result { v_dis: s.dissolved_volume(), v_co: s.ledger().v_co }
}

/// `[mesh][step]`, ordered as `MESHES` and `STEPS`.
fn ex1_grid() -> &'static [[Ex1Result; 3]; 4] {
    static GRID: OnceLock<[[Ex1Result; 3]; 4]> = OnceLock::new();
    GRID.get_or_init(|| {
        MESHES.map(|n| STEPS.map(|dt| run_ex1(vec![format!("mesh.divisions={n}"), format!("time.dt={dt}")])))
    })
}

#[test]
fn criterion_2_ex1_convergence() {
    let mut r = Report::new("2");
    let grid = ex1_grid();
    for (i, n) in MESHES.iter().enumerate() {
        for (j, dt) in STEPS.iter().enumerate() {
            let _g = PRINT.lock().unwrap_or_else(|e| e.into_inner());
            println!("  Ex. 1 {n}×{n}, Δt = {dt} s: V_dis {:+.2}%, V_co/V_dis {:.2}%", grid[i][j].deviation(), 100.0 * grid[i][j].cutoff_ratio());
        }
    }
    r.within("80×80, Δt = 0.01 s deviation", grid[3][2].deviation(), 0.3, 1.0, "%");
    r.within("10×10, Δt = 0.01 s deviation", grid[0][2].deviation(), 5.4, 2.0, "%");
    r.within("80×80, Δt = 1 s deviation", grid[3][0].deviation(), -30.3, 5.0, "%");
    r.finish();
}

#[test]
fn criterion_3_cutoff_indicator() {
    let mut r = Report::new("3");
    let grid = ex1_grid();
    r.within("80×80, Δt = 1 s V_co/V_dis", 100.0 * grid[3][0].cutoff_ratio(), 73.3, 5.0, "%");
    for (i, n) in MESHES.iter().enumerate() {
        let ratios = grid[i].map(|x| x.cutoff_ratio());
        let ok = ratios.windows(2).all(|w| w[0] > w[1]);
        let shown: Vec<String> = ratios.iter().map(|x| format!("{:.3}%", 100.0 * x)).collect();
        r.check(&format!("{n}×{n} V_co/V_dis falls with Δt"), ok, format!("Δt = 1, 0.1, 0.01 s: {}", shown.join(", ")));
    }
    r.finish();
}

#[test]
fn criterion_4_distorted_meshes() {
    let mut r = Report::new("4");
    for (top, target) in [(10, 8.2), (20, 3.6), (40, 3.0)] {
        let res = run_ex1(vec!["mesh.divisions=80".into(), format!("mesh.top_divisions={top}"), "time.dt=0.01".into()]);
        r.within(&format!("{top}→80 deviation"), res.deviation(), target, 2.0, "%");
        r.check(
            &format!("{top}→80 V_co/V_dis"),
            res.cutoff_ratio() <= 0.01,
            format!("{:.3}% (at most 1%)", 100.0 * res.cutoff_ratio()),
        );
    }
    r.finish();
}

#[test]
fn criterion_5a_ex2_inclination() {
    let mut r = Report::new("5");
    let cfg = preset("ex2").unwrap();
    let dt = cfg.time.dt;
    let mut s = simulation(&cfg);
    advance_to(&mut s, 22.5, dt);
    let beta1 = inclination(&s.equivalent_surface());
    advance_to(&mut s, 100.0, dt);
    let beta2 = inclination(&s.equivalent_surface());
    r.within("Ex. 2 β₁ at 22.5 s", beta1, 0.38, 0.2, "°");
    r.within("Ex. 2 β₂ at 100 s", beta2, 1.04, 0.3, "°");
    r.check("Ex. 2 inclination grows with depth", beta2 > beta1, format!("{beta1:.3}° < {beta2:.3}°"));
    r.finish();
}

#[test]
fn criterion_5b_ex3_elevation() {
    let mut r = Report::new("5");
    let cfg = preset("ex3").unwrap();
    let ecm_core::geometry::GeometrySpec::Curved(geo) = cfg.geometry.clone() else { panic!("ex3 is curved") };
    let dt = cfg.time.dt;
    let mut s = simulation(&cfg);
    let initial = s.equivalent_surface();
    let imperfection = range(&initial);

    advance_to(&mut s, 10.0, dt);
    let early = s.equivalent_surface();
    let removed: Vec<[f64; 2]> = initial.iter().zip(&early).map(|(a, b)| [a[0], a[1] - b[1]]).collect();
    let mean = |f: &dyn Fn(f64) -> bool| {
        let sel: Vec<f64> = removed.iter().filter(|p| f(p[0])).map(|p| p[1]).collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    let on_bump = mean(&|x| x < geo.x2);
    let flat = mean(&|x| x > geo.x2);
    let peak = removed.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    r.check(
        "Ex. 3 elevation removed first",
        on_bump > flat && peak[0] < geo.x2,
        format!(
            "after 10 s: {:.1} µm removed on the elevation, {:.1} µm on the flat part, most at x = {:.2} mm",
            on_bump * 1e6,
            flat * 1e6,
            peak[0] * 1e3
        ),
    );

    s.run().unwrap();
    let last = s.equivalent_surface();
    let depth: f64 = {
        let d: Vec<f64> = initial.iter().zip(&last).filter(|(a, _)| a[0] > geo.x2).map(|(a, b)| a[1] - b[1]).collect();
        d.iter().sum::<f64>() / d.len() as f64
    };
    r.check(
        "Ex. 3 machining depth",
        depth > 2.5 * imperfection,
        format!("{:.3} mm against an imperfection of {:.3} mm", depth * 1e3, imperfection * 1e3),
    );
    // Flatness is the spread about the best-fit line; the inflow/outflow
    // temperature difference tilts even a planar specimen.
    let (a, b) = fit_line(&last).unwrap();
    let residual: Vec<[f64; 2]> = last.iter().map(|p| [p[0], p[1] - (a * p[0] + b)]).collect();
    let flatness = range(&residual);
    r.check(
        "Ex. 3 near-planar surface",
        flatness <= 0.2 * imperfection,
        format!(
            "flatness {:.1} µm (at most {:.1} µm) at {} s; tilt {:.3}°, height range {:.1} µm",
            flatness * 1e6,
            0.2 * imperfection * 1e6,
            s.state().t,
            a.atan().to_degrees(),
            range(&last) * 1e6
        ),
    );
    r.finish();
}

#[test]
fn criterion_6_ex4_process_signature() {
    let mut r = Report::new("6");
    let cfg = preset("ex4").unwrap();
    let mut s = simulation(&cfg);
    let (rz0, ra0) = s.roughness().unwrap();
    r.within("Ex. 4 initial Rz", rz0 * 1e6, 6.23, 0.05, " µm");
    r.within("Ex. 4 initial Ra", ra0 * 1e6, 1.70, 0.05, " µm");
    s.run().unwrap();

    let records = s.series().records();
    let rz: Vec<f64> = std::iter::once(rz0).chain(records.iter().map(|x| x.rz)).collect();
    let ra: Vec<f64> = std::iter::once(ra0).chain(records.iter().map(|x| x.ra)).collect();
    for (name, series) in [("Rz", &rz), ("Ra", &ra)] {
        let rises = series.windows(2).filter(|w| w[1] > w[0]).count();
        r.check(&format!("Ex. 4 {name} non-increasing"), rises == 0, format!("{rises} increases in {} samples", series.len()));
        let end = *series.last().unwrap();
        r.check(&format!("Ex. 4 final {name}"), end < 0.05e-6, format!("{:.4} µm (below 0.05 µm)", end * 1e6));
    }
    // Sampled at the end of every pulse instead of every step.
    let Schedule::Sawtooth { period, .. } = cfg.electric.anode else { panic!("ex4 is pulsed") };
    let per_pulse: Vec<(f64, f64)> = std::iter::once((rz0, ra0))
        .chain(records.iter().filter(|x| ((x.t / period).round() * period - x.t).abs() < 1e-3 * cfg.time.dt).map(|x| (x.rz, x.ra)))
        .collect();
    let monotone = per_pulse.windows(2).all(|w| w[1].0 <= w[0].0 && w[1].1 <= w[0].1);
    let shown: Vec<String> = per_pulse.iter().map(|(z, a)| format!("{:.2}/{:.2}", z * 1e6, a * 1e6)).collect();
    {
        let _g = PRINT.lock().unwrap_or_else(|e| e.into_inner());
        println!("  Ex. 4 Rz/Ra per pulse in µm (monotone: {monotone}): {}", shown.join(" "));
    }
    let q = records.last().map_or(0.0, |x| x.q_per_a);
    r.check("Ex. 4 charge accumulates", q > 0.0, format!("Q/A = {q:.4e} A s/m²"));
    let ratio = 100.0 * s.ledger().v_co / s.dissolved_volume();
    r.within("Ex. 4 V_co/V_dis", ratio, 1.5, 1.0, "%");
    r.finish();
}

#[test]
fn criterion_7_property_suites() {
    let mut r = Report::new("7");

    let mut runner = TestRunner::deterministic();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let state = common::element_state().new_tree(&mut runner).unwrap().current();
        worst = common::tangent_block_errors(&state).into_iter().fold(worst, f64::max);
    }
    r.check("tangent blocks vs central differences", worst <= 1e-6, format!("worst relative error {worst:.2e} on 20 states"));

    // Implicit level relation and charge bookkeeping on a deterministic sweep.
    let (mut implicit, mut booking) = (0.0f64, 0.0f64);
    for k in 0..200 {
        let x = k as f64 / 200.0;
        let (d_n, i, v_uc, dt) = (0.9 * x, [3.0 - x, 1.0 + x, 0.5 * x], 1e-11, 0.01);
        let v_eff = (1e-3 + 2e-3 * x) * v_uc / dt;
        let up = update_level(d_n, i, v_eff, v_uc, dt, true).unwrap();
        let lhs = (up.d - d_n) * v_uc;
        let rhs = v_eff * dt * (i[0] + (1.0 - up.d) * (i[1] + i[2]));
        // The level itself carries rounding of size ε d, so d_n V_uc joins the scale.
        implicit = implicit.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(d_n * v_uc));
        let big = update_level(d_n, i, 1e3 * v_eff, v_uc, dt, true).unwrap();
        let booked = (big.d - d_n) * v_uc + big.cutoff;
        let charge = 1e3 * v_eff * effective_current(big.raw, i) * dt;
        // Measured against the gross terms the charge is built from.
        let gross = 1e3 * v_eff * dt * (i[0] + (1.0 + big.raw) * (i[1] + i[2])) + big.raw * v_uc;
        booking = booking.max((booked - charge).abs() / gross);
    }
    r.check("uncapped level relation", implicit <= 1e-14, format!("worst relative residual {implicit:.2e}"));
    r.check("charge bookkeeping", booking <= 16.0 * f64::EPSILON, format!("worst mismatch {booking:.2e} of the gross volume"));

    // Affine hexahedron: a sheared box has exact section areas.
    let x = common::CUBE.map(|p| [2.0 * p[0] + 0.3 * p[1], 1.5 * p[1], 0.7 * p[2]]);
    let a = element_axis_areas(&x).unwrap();
    let err = [(a[0], 1.5 * 0.7), (a[1], 2.0 * 0.7), (a[2], 2.0 * 1.5)].iter().map(|(g, w)| (g - w).abs() / w).fold(0.0, f64::max);
    r.check("axis areas on an affine hexahedron", err <= 1e-12, format!("relative error {err:.2e}"));
    let mut y = common::CUBE;
    for (n, p) in y.iter_mut().enumerate() {
        p[0] += 0.1 * ((n * 7 % 5) as f64 - 2.0) / 2.0;
        p[1] += 0.1 * ((n * 3 % 4) as f64 - 1.5) / 1.5;
        p[2] += 0.1 * ((n * 5 % 3) as f64 - 1.0);
    }
    let v = element_volume(&y).unwrap();
    let oracle = subdivided_volume(&y, 20);
    let verr = (v - oracle).abs() / oracle;
    r.check("element volume vs refinement", verr <= 1e-9, format!("relative error {verr:.2e}"));

    // Homogeneous steady conduction between the electrodes.
    let cfg = config("ex1", &["mesh.divisions=20".into(), "material.metal.k_e=[16.0]".into()]);
    let s = simulation(&cfg);
    let (rv, _) = s.nodal_residuals();
    let sum = |set: &str| s.mesh().node_set(set).unwrap().iter().map(|&n| rv[n]).sum::<f64>();
    let (inflow, outflow) = (sum("anode"), sum("cathode"));
    let balance = (inflow + outflow).abs() / inflow.abs();
    r.check("current balance on a homogeneous problem", balance <= 1e-10, format!("relative imbalance {balance:.2e}"));

    // Mixing endpoints and monotonicity.
    let t = MaterialTable::steel_42crmo4_nano3();
    let mut mixing = true;
    for theta in [283.15, 298.15, 323.15, 353.15] {
        mixing &= t.effective_at(0.0, theta) == t.metal_at(theta) && t.effective_at(1.0, theta) == t.electrolyte_at(theta);
        let k: Vec<f64> = (0..=10).map(|i| t.effective_at(i as f64 / 10.0, theta).k_e).collect();
        mixing &= k.windows(2).all(|w| w[1] <= w[0]);
    }
    r.check("mixing endpoints and monotonicity", mixing, "pure phases at d = 0 and 1, k_E monotone in d".into());

    // Levels never decrease, and reruns are bit-identical.
    let small = config("ex1", &["mesh.divisions=10".into(), "time.dt=1.0".into(), "time.t_end=8.0".into()]);
    let run = || {
        let mut s = simulation(&small);
        let mut monotone = true;
        let mut prev: Vec<f64> = s.ip_states().iter().flatten().map(|p| p.d).collect();
        while !s.finished() {
            s.step().unwrap();
            let d: Vec<f64> = s.ip_states().iter().flatten().map(|p| p.d).collect();
            monotone &= d.iter().zip(&prev).all(|(a, b)| a >= b);
            prev = d;
        }
        (monotone, s.state().clone(), prev, s.series().records().to_vec())
    };
    let (a, b) = (run(), run());
    r.check("levels non-decreasing", a.0, "over 8 steps of 1 s".into());
    r.check("bit-identical reruns", a.1 == b.1 && a.2 == b.2 && a.3 == b.3, "fields, levels and series".into());
    r.finish();
}

/// Volume by splitting the reference cube into n³ cells with a 3-point
/// Gauss rule in each.
fn subdivided_volume(x: &[[f64; 3]; 8], n: usize) -> f64 {
    use ecm_core::fem::shape::{jacobian, shape_trilinear};
    let g = [(-(0.6f64).sqrt(), 5.0 / 9.0), (0.0, 8.0 / 9.0), ((0.6f64).sqrt(), 5.0 / 9.0)];
    let h = 2.0 / n as f64;
    let mut v = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = [-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h, -1.0 + (k as f64 + 0.5) * h];
                for (a, wa) in g {
                    for (b, wb) in g {
                        for (d, wd) in g {
                            let xi = [c[0] + 0.5 * h * a, c[1] + 0.5 * h * b, c[2] + 0.5 * h * d];
                            let (_, dn) = shape_trilinear(xi);
                            v += wa * wb * wd * (h / 2.0).powi(3) * jacobian(x, &dn).determinant();
                        }
                    }
                }
            }
        }
    }
    v
}
