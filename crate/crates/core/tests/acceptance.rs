//! Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.

mod common;

use arbor::calculus::{
    copotential, footnote_map, forward_defect, forward_projection, gradient, p_laplacian,
    potential, Charge, EdgeFn, Exponent, VertexFn,
};
use arbor::capacity::{
    capacity_optimize, capacity_recursive, rescaling_residuals, uniqueness_pairing, DEFAULT_TOL,
};
use arbor::carleson::{
    capacity_via_carleson, carleson_norm, gram_solve, radial_variation, sobolev_norm,
};
use arbor::cli::spine_sweep;
use arbor::counterexample::Counterexample;
use arbor::dirichlet::{
    p_harmonic_extension, poisson, regular_convergence, BoundaryData, BoundaryRule,
};
use arbor::dyadic::Dyadic;
use arbor::stochastic::{capacity_escape_identity, simulate_escape};
use arbor::tree::{GeodesicRay, Tree, TreeSpec};
use arbor::wiener::{capacity_form_terms, wiener_series};
use common::{random_set, random_tree, rng};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const EXPONENTS: [f64; 3] = [1.5, 2.0, 3.0];

fn exp(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

fn random_exponent(rng: &mut ChaCha8Rng) -> Exponent {
    exp(EXPONENTS[rng.random_range(0..EXPONENTS.len())])
}

fn random_ray(rng: &mut ChaCha8Rng, tree: &Tree) -> GeodesicRay {
    GeodesicRay::sons(
        (0..tree.depth() + 1)
            .map(|_| rng.random_range(0..4))
            .collect(),
    )
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn solvers_agree() -> Outcome {
    let mut rng = rng(1);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for i in 0..100 {
        let tree = random_tree(&mut rng, 1000);
        let set = random_set(&mut rng, &tree, 0.4);
        for p in EXPONENTS {
            let p = exp(p);
            let a = capacity_recursive(&tree, &set, p).map_err(|e| e.to_string())?;
            let b = capacity_optimize(&tree, &set, p, DEFAULT_TOL).map_err(|e| e.to_string())?;
            let diff = (a.capacity - b.capacity).abs() / a.capacity.max(1.0);
            ensure(diff <= 1e-8, || {
                format!(
                    "tree {i} ({} edges), p = {}: diff {diff:.3e}",
                    tree.edge_count(),
                    p.p()
                )
            })?;
            worst = worst.max(diff);
            cases += 1;
        }
    }
    Ok(format!("{cases} cases, max scaled difference {worst:.2e}"))
}

fn escape_identity() -> Outcome {
    let tree = Tree::homogeneous(2, 10).unwrap();
    let exact = 1024.0 / 2047.0;
    let r = capacity_escape_identity(&tree, 100_000, 2024).map_err(|e| e.to_string())?;
    ensure((r.capacity - exact).abs() <= 1e-10, || {
        format!("capacity {}", r.capacity)
    })?;
    ensure((r.exact_escape - exact).abs() <= 1e-10, || {
        format!("exact escape {}", r.exact_escape)
    })?;
    let z = (r.mc_estimate - exact).abs() / r.std_error;
    ensure(z <= 3.0, || {
        format!("Monte Carlo off by {z:.2} standard errors")
    })?;

    let start = tree.end_vertex(arbor::tree::ROOT);
    let runs: Vec<_> = [1, 3]
        .iter()
        .map(|&threads| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| simulate_escape(&tree, start, 100_000, 2024).unwrap())
        })
        .collect();
    ensure(runs[0] == runs[1] && runs[0].value == r.mc_estimate, || {
        "estimate depends on the thread count".into()
    })?;
    Ok(format!(
        "c_2 = {:.12}, estimate {:.5} ({z:.2} standard errors)",
        r.capacity, r.mc_estimate
    ))
}

fn rescaling() -> Outcome {
    let mut rng = rng(3);
    let (mut r1max, mut r2max) = (0.0f64, 0.0f64);
    for i in 0..40 {
        let tree = random_tree(&mut rng, 300);
        let set = random_set(&mut rng, &tree, 0.5);
        let p = random_exponent(&mut rng);
        let eq = capacity_recursive(&tree, &set, p).map_err(|e| e.to_string())?;
        let (r1, r2) = rescaling_residuals(&tree, &eq).map_err(|e| e.to_string())?;
        ensure(r1 <= 1e-9 && r2 <= 1e-9, || {
            format!("instance {i}: r1 {r1:.3e}, r2 {r2:.3e}")
        })?;
        r1max = r1max.max(r1);
        r2max = r2max.max(r2);
    }
    Ok(format!(
        "40 instances, r1 <= {r1max:.2e}, r2 <= {r2max:.2e}"
    ))
}

fn telescoping() -> Outcome {
    let mut rng = rng(4);
    let (mut tele, mut form) = (0.0f64, 0.0f64);
    for i in 0..60 {
        let tree = random_tree(&mut rng, 400);
        let set = random_set(&mut rng, &tree, 0.6);
        let p = random_exponent(&mut rng);
        let ray = random_ray(&mut rng, &tree);
        let horizon = rng.random_range(0..=tree.depth());
        let r = wiener_series(&tree, &set, &ray, p, horizon).map_err(|e| e.to_string())?;
        ensure(r.telescoping_residual <= 1e-10, || {
            format!(
                "instance {i}: telescoping residual {:.3e}",
                r.telescoping_residual
            )
        })?;
        tele = tele.max(r.telescoping_residual);
        let terms =
            capacity_form_terms(&tree, &set, &ray, p, horizon).map_err(|e| e.to_string())?;
        for (k, (a, b)) in terms.iter().zip(&r.c_seq).enumerate() {
            let rel = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
            ensure(rel <= 1e-9, || {
                format!("instance {i}, term {k}: {a} vs {b}")
            })?;
            form = form.max(rel);
        }
    }
    Ok(format!(
        "60 instances, telescoping <= {tele:.2e}, capacity form <= {form:.2e}"
    ))
}

fn dyadic_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-64i32..=64) as f64 / 8.0)
        .collect()
}

fn calculus() -> Outcome {
    let mut rng = rng(5);
    let mut checked = 0;
    for i in 0..1000 {
        let tree = random_tree(&mut rng, 200);
        let f = EdgeFn(dyadic_values(&mut rng, tree.edge_count()));
        ensure(gradient(&tree, &potential(&tree, &f)) == f, || {
            format!("grad(If) != f on tree {i}")
        })?;
        let mut g = VertexFn(dyadic_values(&mut rng, tree.vertex_count()));
        g.0[0] = 0.0;
        ensure(potential(&tree, &gradient(&tree, &g)) == g, || {
            format!("I(grad g) != g on tree {i}")
        })?;

        let p = random_exponent(&mut rng);
        let generic = EdgeFn(
            (0..tree.edge_count())
                .map(|_| rng.random_range(0.05..1.0))
                .collect(),
        );
        for h in [generic.clone(), forward_projection(&tree, &generic)] {
            let scale = h.0.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            let tol = 1e-9 * scale;
            let defect = forward_defect(&tree, &h);
            let lap = p_laplacian(&tree, &potential(&tree, &footnote_map(&h, p)), p).max_interior();
            ensure((defect <= tol) == (lap <= tol), || {
                format!("tree {i}: defect {defect:.3e} but p-Laplacian {lap:.3e}")
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "1000 exact round trips, {checked} additivity equivalences"
    ))
}

fn counterexample() -> Outcome {
    for s in 2..=10 {
        let c = Counterexample::new(s, 2).map_err(|e| e.to_string())?;
        ensure(c.forward_defect_exact() == Dyadic::ZERO, || {
            format!("spine {s}: defect")
        })?;
        let spine_leaf = c.spine_leaf();
        for &l in c.tree.leaves() {
            let v = c.boundary_potential_exact(l).map_err(|e| e.to_string())?;
            let ok = if l == spine_leaf {
                v.is_none()
            } else {
                v == Some(Dyadic::ZERO)
            };
            ensure(ok, || format!("spine {s}: potential {v:?} at leaf {l}"))?;
        }
        let zero =
            gram_solve(&c.tree, &vec![0.0; c.tree.leaf_count()]).map_err(|e| e.to_string())?;
        ensure(zero.masses().iter().all(|&m| m == 0.0), || {
            format!("spine {s}: gram_solve(0) != 0")
        })?;
    }
    let depths: Vec<usize> = (2..=10).collect();
    let rows = spine_sweep(&depths, 1, exp(2.0)).map_err(|e| e.to_string())?;
    ensure(
        rows.windows(2).all(|w| w[1].partial_sum > w[0].partial_sum),
        || "spine partial sums do not increase".into(),
    )?;
    Ok(format!(
        "spine depths 2..10 exact, partial sums {:.4} .. {:.4}",
        rows[0].partial_sum,
        rows.last().unwrap().partial_sum
    ))
}

fn dirichlet() -> Outcome {
    let mut rng = rng(7);
    let spec = TreeSpec::homogeneous(2, 4);
    let depths = [4, 6, 8, 10, 12];
    let mut worst = 0.0f64;
    for i in 0..24 {
        let level = rng.random_range(1..=2);
        let tent: Vec<usize> = (0..level).map(|_| rng.random_range(0..2)).collect();
        let ray = GeodesicRay::sons((0..12).map(|_| rng.random_range(0..2)).collect());
        let rule = BoundaryRule::tent_indicator(tent.clone());
        let rows = regular_convergence(&spec, &rule, &ray, &depths).map_err(|e| e.to_string())?;
        let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
        ensure(gaps.windows(2).all(|w| w[1] <= w[0]), || {
            format!("case {i} (tent {tent:?}): gaps {gaps:?} not decreasing")
        })?;
        let last = *gaps.last().unwrap();
        ensure(last < 1e-3, || {
            format!("case {i} (tent {tent:?}): gap {last:.3e} at depth 12")
        })?;
        worst = worst.max(last);
    }

    let mut rng = common::rng(8);
    for i in 0..200 {
        let tree = random_tree(&mut rng, 300);
        let n = tree.leaf_count();
        let lo: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|v| v + rng.random_range(0.0..0.5)).collect();
        let a = rng.random_range(-1.0..1.0);
        let phi_lo = BoundaryData::new(&tree, lo, a).map_err(|e| e.to_string())?;
        let phi_hi = BoundaryData::new(&tree, hi, a + 0.1).map_err(|e| e.to_string())?;
        let mut pairs = vec![(
            poisson(&tree, &phi_lo).map_err(|e| e.to_string())?,
            poisson(&tree, &phi_hi).map_err(|e| e.to_string())?,
        )];
        if i % 10 == 0 {
            let p = exp(3.0);
            pairs.push((
                p_harmonic_extension(&tree, &phi_lo, p, 1e-11).map_err(|e| e.to_string())?,
                p_harmonic_extension(&tree, &phi_hi, p, 1e-11).map_err(|e| e.to_string())?,
            ));
        }
        let (min, max) = {
            let (a, b) = phi_lo.range();
            let (c, d) = phi_hi.range();
            (a.min(c), b.max(d))
        };
        for (k, (u, v)) in pairs.iter().enumerate() {
            let slack = 1e-9;
            ensure(
                u.0.iter()
                    .chain(&v.0)
                    .all(|&x| x >= min - slack && x <= max + slack),
                || format!("tree {i}, solver {k}: maximum principle violated"),
            )?;
            ensure(u.0.iter().zip(&v.0).all(|(x, y)| *x <= y + slack), || {
                format!("tree {i}, solver {k}: comparison violated")
            })?;
        }
    }
    Ok(format!(
        "24 tent/ray cases, worst gap at depth 12 {worst:.2e}; 200 comparison trees"
    ))
}

fn carleson() -> Outcome {
    let mut rng = rng(9);
    let mut cm_dev = 0.0f64;
    let mut sandwiches = 0;
    for i in 0..30 {
        let tree = random_tree(&mut rng, 300);
        let set = random_set(&mut rng, &tree, 0.5);
        let p = random_exponent(&mut rng);
        let eq = capacity_recursive(&tree, &set, p).map_err(|e| e.to_string())?;
        let cm = carleson_norm(&tree, &eq.eq_measure, p).map_err(|e| e.to_string())?;
        ensure((cm.cm_norm - 1.0).abs() <= 1e-9, || {
            format!("instance {i}: CM norm {}", cm.cm_norm)
        })?;
        cm_dev = cm_dev.max((cm.cm_norm - 1.0).abs());

        let candidates: Vec<Charge> = (0..100)
            .map(|_| {
                Charge::new(
                    tree.leaves()
                        .iter()
                        .map(|&l| {
                            if set.contains(l) {
                                rng.random_range(0.0..1.0)
                            } else {
                                0.0
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        let r = capacity_via_carleson(&tree, &set, p, eq.capacity, &candidates)
            .map_err(|e| e.to_string())?;
        ensure(r.sandwiches.iter().all(|s| s.holds(1e-9)), || {
            format!("instance {i}: sandwich fails")
        })?;
        sandwiches += r.sandwiches.len();

        let g = VertexFn(
            (0..tree.vertex_count())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        );
        let norm = sobolev_norm(&tree, &g, p);
        for n in 0..=tree.depth() {
            let gn = radial_variation(&tree, &g, n).map_err(|e| e.to_string())?;
            let v = sobolev_norm(&tree, &gn, p);
            ensure(v <= norm * (1.0 + 1e-12), || {
                format!("instance {i}, level {n}: {v} > {norm}")
            })?;
        }
    }
    Ok(format!(
        "30 equilibria, |CM - 1| <= {cm_dev:.2e}, {sandwiches} sandwiches"
    ))
}

fn pairing() -> Outcome {
    let mut rng = rng(10);
    let mut min_pos = f64::INFINITY;
    for i in 0..1000 {
        let tree = random_tree(&mut rng, 100);
        let p = random_exponent(&mut rng);
        let mut charge = || {
            Charge::new(
                (0..tree.leaf_count())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect(),
            )
        };
        let m = copotential(&tree, &charge());
        let v = copotential(&tree, &charge());
        let d = copotential(&tree, &charge());
        let pv = uniqueness_pairing(&m, &v, p);
        ensure(pv >= 0.0, || format!("pair {i}: pairing {pv:.3e}"))?;
        ensure(uniqueness_pairing(&m, &m, p) == 0.0, || {
            format!("pair {i}: nonzero self pairing")
        })?;
        if d.0.iter().all(|&x| x == 0.0) {
            continue;
        }
        let mut prev = f64::INFINITY;
        for k in 1..=6 {
            let s = 10f64.powi(-k);
            let ms = EdgeFn(m.0.iter().zip(&d.0).map(|(a, b)| a + s * b).collect());
            let val = uniqueness_pairing(&m, &ms, p);
            ensure(val > 0.0 && val <= prev, || {
                format!("pair {i}, s = {s:e}: pairing {val:.3e}")
            })?;
            prev = val;
        }
        min_pos = min_pos.min(prev);
    }
    Ok(format!(
        "1000 pairs nonnegative, smallest perturbed pairing {min_pos:.2e}"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("recursive and barrier capacities agree", solvers_agree),
        ("capacity, escape probability and walks", escape_identity),
        ("rescaling identities", rescaling),
        ("telescoping and capacity-form terms", telescoping),
        ("calculus identities", calculus),
        ("counterexample potential", counterexample),
        ("Dirichlet convergence and comparison", dirichlet),
        ("Carleson norms and sandwiches", carleson),
        ("uniqueness pairing", pairing),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
