//! The verification suites. Each returns its checks plus structured data and
//! writes its tables and plots through an [`Output`].

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use symcap::analysis::{box_dimension, calibration_circle, calibration_square, containment, BoxCountReport};
use symcap::cone::{assemble_x, SampledSet, XSampling};
use symcap::hamiltonian::{
    candidate_family, candidate_sweep, cylinder_energy_probe, displacement_check, l_tilde_samples, rectangle_ramp,
    time_one_map, unit_square_samples, CandidateKind, CandidateSpec, Hamiltonian,
};
use symcap::io::{load_point_cloud, save_point_cloud};
use symcap::lagrangian::{random_winding_loop, APLagrangian, ModelRecord};
use symcap::moser::{volume_embed_with, EmbedOptions, PlanarDomain};
use symcap::spectrum::{
    ap_quadrature_area, ap_spectrum, capacity_ledger, farey_interior, farey_order_for, optimal_split, product_spectrum,
    sphere_quadrature_area, sphere_spectrum, split_value, torus_quadrature_area, torus_spectrum, ActionSpectrum,
    Provenance,
};
use symcap::squeeze::{squeeze_pipeline, RouteTaken, SqueezeOptions};
use symcap::symplectic::{loop_area, symplecticity_defect, PhasePoint, PolydiscSpec, Region};
use symcap::Error;

use crate::config::{RunConfig, Suite};
use crate::plot::{histogram, xy_plot, Series};
use crate::report::{Check, SuiteReport};

/// Writes artifacts into the output directory and remembers their names.
pub struct Output {
    dir: PathBuf,
    svg: bool,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path, svg: bool) -> Self {
        Output { dir: dir.to_path_buf(), svg, files: Vec::new() }
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn plot(&mut self, name: &str, contents: impl FnOnce() -> String) -> Result<()> {
        if self.svg {
            self.text(name, &contents())?;
        }
        Ok(())
    }

    /// Path for a file written by other means.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.into());
        self.dir.join(name)
    }
}

type SuiteFn = fn(&RunConfig, &mut Output) -> Result<(Vec<Check>, Value)>;

fn suite_fn(s: Suite) -> SuiteFn {
    match s {
        Suite::Spectrum => spectrum,
        Suite::BuildX => build_x,
        Suite::Dimension => dimension,
        Suite::Ledger => ledger,
        Suite::GcdSweep => gcd_sweep,
        Suite::Embed2d => embed2d,
        Suite::Squeeze => squeeze,
        Suite::Energy => energy,
        Suite::All => unreachable!("`all` is expanded before dispatch"),
    }
}

/// Runs one concrete suite; a hard error becomes a single failed check.
pub fn run_suite(suite: Suite, cfg: &RunConfig, dir: &Path) -> SuiteReport {
    let mut out = Output::new(dir, cfg.svg);
    let name = suite.name();
    match suite_fn(suite)(cfg, &mut out) {
        Ok((checks, data)) => SuiteReport::new(name, checks, out.files, data),
        Err(e) => {
            let c = Check::build(name, "suite-completes", "the suite runs to completion").failed(format!("{e:#}"));
            SuiteReport::new(name, vec![c], out.files, Value::Null)
        }
    }
}

fn max_abs(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

// ---------------------------------------------------------------- spectrum

const SPECTRUM: &str = "spectrum";

fn record(rows: &mut Vec<(String, f64, f64)>, name: &str, v: f64, exact: f64) {
    rows.push((name.into(), v, exact));
}

/// Largest area error and number of wrong lifted windings over random loops
/// of every winding class `k ∈ −4..=4`, for areas `k·unit`.
fn winding_sweep(model: &APLagrangian, unit: f64, per_class: usize, m: usize, seed: u64) -> Result<(f64, usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut wrong, mut min_positive) = (0.0f64, 0usize, f64::INFINITY);
    for k in -4i64..=4 {
        for _ in 0..per_class {
            let l = random_winding_loop(model, k, m, &mut rng)?;
            let a = loop_area(&l)?;
            worst = worst.max((a - k as f64 * unit).abs());
            if model.lift(&l)?.winding != k {
                wrong += 1;
            }
            if a > 1e-9 {
                min_positive = min_positive.min(a);
            }
        }
    }
    Ok((worst, wrong, min_positive))
}

pub fn spectrum(cfg: &RunConfig, out: &mut Output) -> Result<(Vec<Check>, Value)> {
    let (n, m, tol) = (cfg.n, cfg.loop_samples, cfg.tolerances.area);
    let plain = APLagrangian::plain(n)?;
    let rotated = APLagrangian::rotated(n)?;
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    let mut checks = Vec::new();

    let loops = plain.generator_loops(m)?;
    for (id, claim, l, exact) in [
        ("half-turn-area", "the half-turn loop on L has area π/2", &loops.half, PI / 2.0),
        ("full-turn-area", "the full phase loop on L has area π", &loops.full, PI),
        ("fiber-area", "a great circle at fixed phase has area 0", &loops.fiber, 0.0),
    ] {
        checks.push(Check::build(SPECTRUM, id, claim).with(|c| {
            let a = loop_area(l)?;
            record(&mut rows, id, a, exact);
            Ok(c.near(a, exact, tol))
        }));
    }

    let (worst, wrong, _) = winding_sweep(&plain, PI / 2.0, cfg.random_loops, m, cfg.seed)?;
    let count = 9 * cfg.random_loops;
    checks.push(
        Check::build(SPECTRUM, "winding-class-areas", "a loop on L with winding k has area kπ/2")
            .at_most(worst, tol)
            .with_detail(format!("{count} random loops, k in -4..=4")),
    );
    checks.push(
        Check::build(SPECTRUM, "lifted-winding", "the phase lift recovers the winding number of every random loop")
            .holds(wrong == 0, Some(wrong as f64), "0 mismatches"),
    );

    let (worst_rot, _, min_rot) = winding_sweep(&rotated, PI, cfg.random_loops, m, cfg.seed ^ 0x51)?;
    checks.push(Check::build(SPECTRUM, "rotated-winding-areas", "on the rotated model √2·U·L areas double to kπ").at_most(worst_rot, tol));
    checks.push(Check::build(SPECTRUM, "rotated-minimal-area", "the smallest positive loop area on √2·U·L is π").with(|c| {
        let half = loop_area(&rotated.generator_loops(m)?.half)?;
        let analytic = ap_spectrum(SQRT_2, n)?.minimal_area().ok_or_else(|| anyhow!("dense spectrum"))?;
        record(&mut rows, "rotated-half-turn-area", half, PI);
        record(&mut rows, "rotated-min-random-area", min_rot, PI);
        let err = max_abs([half - PI, min_rot - PI, analytic - PI]);
        Ok(c.at_most(err, tol).with_detail(format!("quadrature {half}, sampled minimum {min_rot}, analytic {analytic}")))
    }));

    checks.push(Check::build(SPECTRUM, "scaling", "areas on r·L scale as r²·π/2").with(|c| {
        let mut err: f64 = 0.0;
        for r in [0.5, 0.99, 2.0] {
            let a = ap_quadrature_area(r, n, m)?;
            record(&mut rows, &format!("scaled-{r}"), a, r * r * PI / 2.0);
            err = err.max((a - r * r * PI / 2.0).abs() / (r * r));
        }
        Ok(c.at_most(err, tol).with_detail("relative to r²"))
    }));
    checks.push(Check::build(SPECTRUM, "sphere-generator", "a Hopf circle of radius r has area πr²").with(|c| {
        let r = 0.7;
        let a = sphere_quadrature_area(r, n, m)?;
        let exact = sphere_spectrum(r)?.generator;
        record(&mut rows, "sphere-0.7", a, exact);
        Ok(c.near(a, exact, tol))
    }));
    checks.push(Check::build(SPECTRUM, "torus-generator", "a circle factor of r·T^n has area πr²").with(|c| {
        let r = 0.7;
        let a = torus_quadrature_area(r, n, m)?;
        let exact = torus_spectrum(r)?.generator;
        record(&mut rows, "torus-0.7", a, exact);
        Ok(c.near(a, exact, tol))
    }));

    let mut csv = String::from("quantity,computed,exact\n");
    for (name, v, e) in &rows {
        let _ = writeln!(csv, "{name},{v:.15},{e:.15}");
    }
    out.text("spectrum.csv", &csv)?;
    let data = json!({
        "models": { "plain": ModelRecord::from(&plain), "rotated": ModelRecord::from(&rotated) },
        "spectra": { "plain": ap_spectrum(1.0, n)?, "rotated": ap_spectrum(SQRT_2, n)? },
    });
    Ok((checks, data))
}

// ---------------------------------------------------------------- build-x

const BUILD_X: &str = "build-x";

pub fn build_x(cfg: &RunConfig, out: &mut Output) -> Result<(Vec<Check>, Value)> {
    let n = cfg.n;
    let tol = cfg.tolerances.containment;
    let sampling = XSampling { seed: cfg.seed, ..XSampling::with_total(n, cfg.samples) };
    let set = assemble_x(n, &sampling)?;
    let mut checks = vec![Check::build(BUILD_X, "sample-count", "the exported sample of X has the requested size").at_least(
        set.len() as f64,
        cfg.samples as f64,
    )];

    let max_norm = set.points().iter().map(|x| x.norm()).fold(0.0, f64::max);
    checks.push(Check::build(BUILD_X, "ball", "X lies in the closed ball of radius √2").at_most(max_norm, SQRT_2 + tol));
    let claim = if n.is_multiple_of(2) {
        "every complex coordinate of X has modulus at most 1"
    } else {
        "after the coordinate permutation the first n−1 coordinates of X have modulus at most 1"
    };
    checks.push(Check::build(BUILD_X, "polydisc", claim).with(|c| {
        let r = containment(&set, &Region::Polydisc(PolydiscSpec::standard(n)), tol)?;
        Ok(c.at_most(r.max_violation.max(0.0), tol))
    }));
    checks.push(Check::build(BUILD_X, "membership", "manifold and cone samples satisfy their parametrizations").with(|c| {
        Ok(c.at_most(symcap::cone::x_membership_residual(&set)?, tol))
    }));

    let name = format!("x_n{n}.bin");
    let path = out.path(&name);
    save_point_cloud(&set, &path)?;
    checks.push(Check::build(BUILD_X, "export-roundtrip", "the binary point cloud reads back unchanged").with(|c| {
        let back = load_point_cloud(&path)?;
        let same = back.n() == set.n() && back.points() == set.points();
        Ok(c.holds(same, Some(back.len() as f64), "identical points"))
    }));

    let data = json!({
        "sampling": sampling,
        "count": set.len(),
        "strata": set.strata().iter().map(|r| json!({ "stratum": format!("{:?}", r.stratum), "start": r.start, "end": r.end })).collect::<Vec<_>>(),
        "fill_distance": set.fill_distance(),
        "permuted": set.psi_applied(),
        "max_norm": max_norm,
    });
    Ok((checks, data))
}

// ---------------------------------------------------------------- dimension

const DIMENSION: &str = "dimension";

/// Slope tolerance of the box-count estimate of `X`.
pub fn x_slope_tolerance(n: usize) -> f64 {
    if n == 2 {
        0.15
    } else {
        0.2
    }
}

fn boxcount_rows(csv: &mut String, set: &str, r: &BoxCountReport) {
    for (e, c) in r.scales.iter().zip(&r.counts) {
        let fitted = *e >= r.window.0 * (1.0 - 1e-12) && *e <= r.window.1 * (1.0 + 1e-12);
        let _ = writeln!(csv, "{set},{e:.12e},{c},{fitted}");
    }
}

pub fn dimension(cfg: &RunConfig, out: &mut Output) -> Result<(Vec<Check>, Value)> {
    let n = cfg.n;
    let mut checks = Vec::new();
    let circle = box_dimension(&calibration_circle(100_000), 14)?;
    checks.push(Check::build(DIMENSION, "calibration-curve", "a sampled circle has box dimension 1").near(circle.slope, 1.0, 0.1));
    let square = box_dimension(&calibration_square(1024), 10)?;
    checks.push(Check::build(DIMENSION, "calibration-square", "a sampled square has box dimension 2").near(square.slope, 2.0, 0.05));

    let x = assemble_x(n, &XSampling { seed: cfg.seed, ..XSampling::dimension_study(n) })?;
    let r = box_dimension(&x, cfg.levels)?;
    checks.push(
        Check::build(DIMENSION, "x-slope", "the box-count slope of X matches its topological dimension n")
            .near(r.slope, n as f64, x_slope_tolerance(n))
            .with_detail(format!("{} points, {} levels, window {:.3e}..{:.3e}", x.len(), cfg.levels, r.window.0, r.window.1)),
    );
    checks.push(Check::build(DIMENSION, "x-fit", "the log-log regression for X is straight").at_least(r.r_squared, 0.99));

    let mut csv = String::from("set,scale,count,fitted\n");
    boxcount_rows(&mut csv, "x", &r);
    boxcount_rows(&mut csv, "circle", &circle);
    boxcount_rows(&mut csv, "square", &square);
    out.text("boxcount.csv", &csv)?;
    out.plot("boxcount.svg", || {
        let pts: Vec<(f64, f64)> = r.scales.iter().zip(&r.counts).map(|(e, c)| (-e.ln(), c.ln())).collect();
        let inside: Vec<(f64, f64)> = r
            .scales
            .iter()
            .zip(&r.counts)
            .filter(|(e, _)| **e >= r.window.0 * (1.0 - 1e-12) && **e <= r.window.1 * (1.0 + 1e-12))
            .map(|(e, c)| (-e.ln(), c.ln()))
            .collect();
        let line = match (inside.first(), inside.last()) {
            (Some(a), Some(b)) => {
                let mid = inside.iter().map(|p| p.1 - r.slope * p.0).sum::<f64>() / inside.len() as f64;
                vec![(a.0, mid + r.slope * a.0), (b.0, mid + r.slope * b.0)]
            }
            _ => Vec::new(),
        };
        let label = format!("slope {:.3}", r.slope);
        xy_plot(
            &format!("Box counts of X (n = {n})"),
            "log(1/ε)",
            "log N(ε)",
            &[
                Series { label: "all scales", points: &pts, color: "#999999", line: false },
                Series { label: "fitted window", points: &inside, color: "#c0392b", line: false },
                Series { label: &label, points: &line, color: "#2c3e50", line: true },
            ],
        )
    })?;
    let data = json!({ "x": r, "circle": circle, "square": square, "points": x.len() });
    Ok((checks, data))
}

// ---------------------------------------------------------------- ledger

const LEDGER: &str = "ledger";

/// Every element of `aZ + bZ` in `[−window, window]`, sorted and deduplicated,
/// by enumerating coefficient pairs.
pub fn minkowski_window(a: f64, b: f64, p: u64, q: u64, window: f64) -> Vec<f64> {
    // Bézout coefficients of any multiple of gcd in the window are bounded by these
    let ia = (q + (window / a).ceil() as u64 + 1) as i64;
    let ib = (p + (window / b).ceil() as u64 + 1) as i64;
    let mut v = Vec::new();
    for i in -ia..=ia {
        for j in -ib..=ib {
            let s = i as f64 * a + j as f64 * b;
            if s.abs() <= window + 1e-9 {
                v.push(s);
            }
        }
    }
    v.sort_by(f64::total_cmp);
    v.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * window);
    v
}

/// Compares the product spectrum of `pairs` random commensurable generators
/// with brute-force enumeration; returns the number of mismatching pairs.
pub fn product_bruteforce(pairs: usize, seed: u64) -> Result<(usize, Vec<Value>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = 10.0;
    let mut bad = 0;
    let mut log = Vec::new();
    for _ in 0..pairs {
        let (p, q) = (rng.random_range(1u64..=12), rng.random_range(1u64..=12));
        let unit = rng.random_range(0.1..3.0);
        let (a, b) = (p as f64 * unit, q as f64 * unit);
        let s = product_spectrum(&ActionSpectrum::cyclic(a, Provenance::Product)?, &ActionSpectrum::cyclic(b, Provenance::Product)?);
        let brute = minkowski_window(a, b, p, q, window);
        let g = s.generator;
        let ok = !s.is_dense() && g > 0.0 && {
            let k = ((window + 1e-9) / g).floor() as i64;
            let mine: Vec<f64> = (-k..=k).map(|i| i as f64 * g).collect();
            mine.len() == brute.len() && mine.iter().zip(&brute).all(|(x, y)| (x - y).abs() <= 1e-9 * window)
        };
        if !ok {
            bad += 1;
        }
        log.push(json!({ "a": a, "b": b, "generator": g, "window_elements": brute.len(), "match": ok }));
    }
    Ok((bad, log))
}

pub fn ledger(cfg: &RunConfig, out: &mut Output) -> Result<(Vec<Check>, Value)> {
    let n = cfg.n;
    let r = cfg.witness_r;
    let tol = cfg.tolerances.constant;
    let ledger = capacity_ledger(n, r)?;
    out.text("ledger.csv", &ledger.to_csv())?;
    let mut checks = Vec::new();

    let lag = ledger.row(n).ok_or_else(|| anyhow!("ledger has no row d = n"))?;
    let w = lag.witness_value.unwrap_or(f64::NAN);
    checks.push(Check::build(LEDGER, "lagrangian-witness", "the witness r·L has minimal area (π/2)r²").near(w, PI / 2.0 * r * r, tol));
    checks.push(Check::build(LEDGER, "lagrangian-bound", "the Lagrangian lower bound at r = 0.99 exceeds 0.49π").at_least(w, 0.49 * PI));
    checks.push(Check::build(LEDGER, "lagrangian-supremum", "the Lagrangian lower bound is π/2").near(lag.lower, PI / 2.0, tol));

    let products: Vec<_> = ledger.rows.iter().filter(|row| row.d > n && row.d + 3 <= 2 * n).collect();
    for row in &products {
        let d = row.d;
        checks.push(
            Check::build(LEDGER, &format!("product-witness-d{d}"), "the balanced product witness has minimal area πr²/3")
                .near(row.witness_value.unwrap_or(f64::NAN), PI * r * r / 3.0, tol),
        );
        checks.push(Check::build(LEDGER, &format!("product-bound-d{d}"), "the coisotropic lower bound is π/3").near(row.lower, PI / 3.0, tol));
    }
    let uncertified: Vec<usize> = ledger.rows.iter().filter(|row| row.witness_value.is_some() && !row.certified).map(|row| row.d).collect();
    checks.push(
        Check::build(LEDGER, "quadrature-certified", "every computed row matches a quadrature loop area")
            .holds(uncertified.is_empty(), Some(uncertified.len() as f64), "0 uncertified rows"),
    );
    let inverted = ledger.rows.iter().filter(|row| row.lower > row.upper + tol).count();
    checks.push(Check::build(LEDGER, "bounds-ordered", "lower bounds never exceed upper bounds").holds(
        inverted == 0,
        Some(inverted as f64),
        "0 inverted rows",
    ));

    let (bad, pairs) = product_bruteforce(50, cfg.seed)?;
    checks.push(
        Check::build(LEDGER, "product-spectrum", "the product spectrum equals the Minkowski sum on [−10, 10]")
            .holds(bad == 0, Some(bad as f64), "0 mismatching pairs")
            .with_detail("50 random commensurable pairs"),
    );
    Ok((checks, json!({ "ledger": ledger, "product_rows": products.len(), "bruteforce": pairs })))
}

// ---------------------------------------------------------------- gcd-sweep

const GCD: &str = "gcd-sweep";
pub const SPLIT_BUDGETS: [f64; 3] = [0.3, 0.6, 0.9];

pub fn gcd_sweep(cfg: &RunConfig, out: &mut Output) -> Result<(Vec<Check>, Value)> {
    let mut checks = Vec::new();
    let mut results = Vec::new();
    for c in SPLIT_BUDGETS {
        let s = optimal_split(c, cfg.resolution)?;
        let cell = c / s.grid_points as f64;
        checks.push(Check::build(GCD, &format!("split-r2-{c}"), "the best split puts r² = 2c/3").near(s.r2, 2.0 * c / 3.0, cell));
        checks.push(Check::build(GCD, &format!("split-value-{c}"), "the best split value is cπ/3").near(s.value, c * PI / 3.0, 1e-6));
        results.push(s);
    }

    let c = SPLIT_BUDGETS[SPLIT_BUDGETS.len() - 1];
    let order = farey_order_for(cfg.resolution);
    let mut curve: Vec<(f64, f64)> = farey_interior(order)
        .into_iter()
        .map(|(p, q)| {
            let r2 = c * p as f64 / q as f64;
            (r2, split_value(c, r2).unwrap_or(0.0))
        })
        .collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut csv = String::from("c,r2,value\n");
    for (r2, v) in &curve {
        let _ = writeln!(csv, "{c},{r2:.15},{v:.15}");
    }
    out.text("gcd_sweep.csv", &csv)?;
    out.plot("gcd_sweep.svg", || {
        let best = [(2.0 * c / 3.0, c * PI / 3.0)];
        xy_plot(
            &format!("π·gcd(r²/2, c − r²) over rational splits, c = {c}"),
            "r²",
            "minimal area",
            &[
                Series { label: "grid", points: &curve, color: "#2c3e50", line: false },
                Series { label: "r² = 2c/3", points: &best, color: "#c0392b", line: false },
            ],
        )
    })?;
    Ok((checks, json!({ "splits": results, "sweep_order": order, "sweep_points": curve.len() })))
}

// ---------------------------------------------------------------- embed2d

const EMBED: &str = "embed2d";

pub fn embed2d(cfg: &RunConfig, out: &mut Output) -> Result<(Vec<Check>, Value)> {
    let tol = cfg.tolerances.jacobian;
    let square = PlanarDomain::rectangle([0.0, 0.0], [1.0, 1.0])?;
    let opts = |grid| EmbedOptions { grid, tolerance: tol, ..EmbedOptions::default() };
    let fine = volume_embed_with(&square, cfg.target_area, &opts(cfg.grid))?;
    let coarse = volume_embed_with(&square, cfg.target_area, &opts(cfg.grid / 2))?;
    let fc = &fine.certificate;
    let mut checks = vec![
        Check::build(EMBED, "jacobian", "the embedding of the unit square preserves area").at_most(fc.max_deviation, tol),
        Check::build(EMBED, "inside-target", "the image lies inside the target disc").holds(
            fine.inside_target(),
            Some(fine.image_radius),
            &format!("< {}", fine.target_radius),
        ),
    ];
    let ratio = coarse.certificate.max_deviation / fc.max_deviation;
    checks.push(
        Check::build(EMBED, "refinement", "halving the grid spacing reduces the Jacobian error at least threefold")
            .at_least(ratio, 3.0)
            .with_detail(format!("{:e} at {} -> {:e} at {}", coarse.certificate.max_deviation, cfg.grid / 2, fc.max_deviation, cfg.grid)),
    );
    let disc = PlanarDomain::disc([0.3, -0.2], (0.9 / PI).sqrt())?;
    let d = volume_embed_with(&disc, cfg.target_area, &opts(cfg.grid / 2))?;
    checks.push(Check::build(EMBED, "disc-branch", "a disc is embedded by translation").at_most(d.certificate.max_deviation, tol));

    let dev: Vec<f64> = fine.map.jacobian_field().iter().map(|j| j - 1.0).collect();
    let bins = 40;
    let span = max_abs(dev.iter().copied()).max(1e-15);
    let edges: Vec<f64> = (0..=bins).map(|i| -span + 2.0 * span * i as f64 / bins as f64).collect();
    let mut counts = vec![0usize; bins];
    for v in &dev {
        let i = (((v + span) / (2.0 * span)) * bins as f64).floor() as usize;
        counts[i.min(bins - 1)] += 1;
    }
    let mut csv = String::from("lower,upper,count\n");
    for i in 0..bins {
        let _ = writeln!(csv, "{:.6e},{:.6e},{}", edges[i], edges[i + 1], counts[i]);
    }
    out.text("jacobian_hist.csv", &csv)?;
    out.plot("jacobian_hist.svg", || histogram(&format!("Jacobian − 1 on the {0}×{0} grid", cfg.grid), "det − 1", &edges, &counts))?;
    let data = json!({
        "fine": { "grid": cfg.grid, "certificate": fine.certificate, "shrink": fine.shrink, "image_radius": fine.image_radius, "target_radius": fine.target_radius },
        "coarse": { "grid": cfg.grid / 2, "certificate": coarse.certificate },
        "disc": d.certificate,
    });
    Ok((checks, data))
}

// ---------------------------------------------------------------- squeeze

const SQUEEZE: &str = "squeeze";

fn curve<F: Fn(f64) -> [f64; 4]>(m: usize, f: F) -> Result<SampledSet> {
    let pts = (0..m).map(|i| PhasePoint::new(2, f(2.0 * PI * i as f64 / m as f64).to_vec())).collect::<symcap::Result<Vec<_>>>()?;
    Ok(SampledSet::from_points(2, pts)?)
}

/// A closed curve in `R^4` whose `(q₁, p₁)` shadow is a thin ellipse.
pub fn thin_curve() -> Result<SampledSet> {
    curve(4000, |t| [0.2 * t.cos(), 0.5 * (2.0 * t).cos(), 0.05 * t.sin(), 0.5 * (3.0 * t).sin()])
}

/// A closed curve on the unit sphere in `R^4`.
pub fn sphere_curve() -> Result<SampledSet> {
    let r = (1.0f64 - 0.81).sqrt();
    curve(4000, |t| [0.9 * t.cos(), r * (3.0 * t).cos(), 0.9 * t.sin(), r * (3.0 * t).sin()])
}

pub fn squeeze(cfg: &RunConfig, _out: &mut Output) -> Result<(Vec<Check>, Value)> {
    let opts = SqueezeOptions { defect_tolerance: cfg.tolerances.symplectic, seed: cfg.seed, ..SqueezeOptions::default() };
    let mut checks = Vec::new();
    let mut data = serde_json::Map::new();
    let cases = [
        ("slice", "a curve in the closed unit ball squeezes into the cylinder of capacity π", sphere_curve()?, PI),
        ("shadow", "a curve with small shadow squeezes into the cylinder of capacity 0.5", thin_curve()?, 0.5),
    ];
    for (route, claim, set, a) in cases {
        let id = format!("{route}-route");
        checks.push(Check::build(SQUEEZE, &id, claim).with(|c| {
            let e = squeeze_pipeline(&set, a, &opts)?;
            let cert = e.certificate;
            let taken = match cert.route {
                RouteTaken::Shadow { .. } => "shadow",
                RouteTaken::Slice { .. } => "slice",
            };
            let ok = cert.pass && taken == route && cert.symplecticity_defect <= cfg.tolerances.symplectic && cert.probes >= 1000;
            let detail = format!("route {taken}, {} probes, image margin {:e}", cert.probes, -cert.image_violation);
            data.insert(route.into(), serde_json::to_value(&cert)?);
            Ok(c.holds(ok, Some(cert.symplecticity_defect), &format!("certified via the {route} route, defect <= {:e}", cfg.tolerances.symplectic))
                .with_detail(detail))
        }));
    }
    checks.push(Check::build(SQUEEZE, "x-refused", "the pipeline does not certify X into the cylinder of capacity π").with(|c| {
        let x = assemble_x(2, &XSampling { seed: cfg.seed, ..XSampling::with_total(2, 20_000) })?;
        Ok(match squeeze_pipeline(&x, PI, &opts) {
            Err(Error::NotSqueezable(why)) => {
                data.insert("x".into(), json!({ "refused": why }));
                c.holds(true, None, "not squeezable").with_detail(why)
            }
            Err(e) => return Err(e.into()),
            Ok(e) => c.holds(false, Some(e.certificate.symplecticity_defect), "not squeezable").with_detail("X was certified"),
        })
    }));
    Ok((checks, Value::Object(data)))
}

// ---------------------------------------------------------------- energy

const ENERGY: &str = "energy";

pub fn energy(cfg: &RunConfig, out: &mut Output) -> Result<(Vec<Check>, Value)> {
    let n = cfg.n;
    let steps = cfg.flow_steps;
    let mut checks = Vec::new();
    let mut data = serde_json::Map::new();

    checks.push(Check::build(ENERGY, "momentum-translation", "the flow of H = p₁ translates q₁ by one").with(|c| {
        let h = Hamiltonian::momentum(n, 0);
        let mut err: f64 = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..32 {
            let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y = time_one_map(&h, &PhasePoint::new(n, x.clone())?, steps)?;
            for (k, (a, b)) in x.iter().zip(y.coords()).enumerate() {
                err = err.max((b - a - if k == 0 { 1.0 } else { 0.0 }).abs());
            }
        }
        Ok(c.at_most(err, cfg.tolerances.flow))
    }));
    checks.push(Check::build(ENERGY, "time-one-symplectic", "time-one maps preserve the symplectic form").with(|c| {
        let spec = CandidateSpec { kind: CandidateKind::Fourier, count: 1, budget: 2.0, support_radius: 2.0, cutoff_width: 0.6, seed: cfg.seed };
        let h = candidate_family(2, &spec)?.remove(0);
        let probes = (0..8).map(|k| PhasePoint::new(2, vec![0.1 * k as f64, -0.3, 0.2, 0.05 * k as f64])).collect::<symcap::Result<Vec<_>>>()?;
        let d = symplecticity_defect(|x: &PhasePoint| time_one_map(&h, x, steps), &probes, 1e-5)?;
        Ok(c.at_most(d, cfg.tolerances.symplectic))
    }));
    checks.push(Check::build(ENERGY, "rectangle", "a ramp displaces the unit square with energy at most 1.1 times its area").with(|c| {
        let cert = displacement_check(&rectangle_ramp(0.04, 0.04)?, &unit_square_samples(100)?, steps)?;
        let norm = cert.hofer_norm.unwrap_or(f64::INFINITY);
        data.insert("rectangle".into(), serde_json::to_value(&cert)?);
        Ok(c.holds(cert.displaced && norm <= 1.1, Some(norm), "displaced with norm <= 1.1"))
    }));

    checks.push(Check::build(ENERGY, "l-tilde-candidates", "no candidate with norm below 0.9π displaces √2·U·L").with(|c| {
        let set = l_tilde_samples(2, 64, 64)?;
        let certs = candidate_sweep(&cfg.candidates, &set, steps)?;
        let mut csv = String::from("hamiltonian,hofer_norm,displaced,min_separation,fill_distance\n");
        for k in &certs {
            let _ = writeln!(csv, "{},{:.9},{},{:.9e},{:.9e}", k.hamiltonian, k.hofer_norm.unwrap_or(f64::NAN), k.displaced, k.min_separation, k.fill_distance);
        }
        out.text("candidates.csv", &csv)?;
        let cheap_displacing = certs.iter().filter(|k| k.displaced && k.hofer_norm.is_some_and(|v| v < 0.9 * PI)).count();
        let below = certs.iter().filter(|k| k.hofer_norm.is_some_and(|v| v < 0.9 * PI)).count();
        data.insert("candidates".into(), json!({ "count": certs.len(), "below_budget": below, "displacing_below_budget": cheap_displacing }));
        Ok(c.holds(cheap_displacing == 0 && !certs.is_empty(), Some(cheap_displacing as f64), "0 displacing candidates")
            .with_detail(format!("{} candidates, {below} below 0.9π", certs.len())))
    }));

    checks.push(Check::build(ENERGY, "cylinder", "a shear displaces the truncated cylinder of capacity π with overhead at most 0.25").with(|c| {
        let report = cylinder_energy_probe(2, PI, 4.0, 0.25)?;
        let mut csv = String::from("scale,hofer_norm,overhead,displaced,min_separation,rest_drift\n");
        for t in &report.trials {
            let _ = writeln!(csv, "{},{:.9},{:.9},{},{:.9e},{:.3e}", t.scale, t.hofer_norm, t.overhead, t.displaced, t.min_separation, t.rest_drift);
        }
        out.text("cylinder.csv", &csv)?;
        data.insert("cylinder".into(), serde_json::to_value(&report)?);
        Ok(c.at_most(report.best_overhead, 0.25))
    }));
    Ok((checks, Value::Object(data)))
}
