//! Acceptance criteria 1 to 9. Prints one `PASS`/`FAIL` line per criterion
//! and exits nonzero if any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::Exp1;
use ratings_xva::copula::{build_joint_generator, CopulaSpec};
use ratings_xva::instruments::{CdsPricer, CdsSpec};
use ratings_xva::output::{run_grid, RunOptions};
use ratings_xva::rates::{build_rate_grid, merge_times, sample_rate_path, VasicekParams};
use ratings_xva::rating::{generator_from_annual_matrix, transition_matrix_from_rows, GeneratorMatrix, RatingScale};
use ratings_xva::rng::{path_rng, RATE_STREAM, RATING_STREAM};
use ratings_xva::scenario::Scenario;
use ratings_xva::xva::{AdjustmentReport, XvaModel};

const P1: [[f64; 4]; 4] = [
    [0.9, 0.08, 0.017, 0.003],
    [0.05, 0.85, 0.09, 0.01],
    [0.01, 0.09, 0.8, 0.1],
    [0.0, 0.0, 0.0, 1.0],
];
const P2: [[f64; 4]; 4] = [
    [0.8, 0.1, 0.05, 0.05],
    [0.04, 0.9, 0.03, 0.03],
    [0.015, 0.1, 0.7, 0.185],
    [0.0, 0.0, 0.0, 1.0],
];
const P3: [[f64; 4]; 4] = [
    [0.95, 0.03, 0.019, 0.001],
    [0.04, 0.85, 0.107, 0.003],
    [0.01, 0.19, 0.791, 0.009],
    [0.0, 0.0, 0.0, 1.0],
];

/// Printed `|CVA^R(D,D)|` for the uncollateralized, linear and exponential
/// IRS tables at α = 0, ×1e-3.
const PRINTED_CVA_R_DD: [f64; 3] = [10.0080, 5.28229, 3.16512];
const PRINTED_MITIGATION_BB: f64 = 65.42;

/// Printed (K1, K2, URVA, DRVA, CVA^R) rows of the α = 0 IRS tables, ×1e-3,
/// for the uncollateralized, linear and exponential schemes.
type PrintedRow = (&'static str, &'static str, f64, f64, f64);
const PRINTED_IRS_ALPHA0: [[PrintedRow; 9]; 3] = [
    [
        ("B", "B", 1.21214, 7.46661, -3.46070),
        ("B", "C", 1.13272, 7.60683, -3.70490),
        ("C", "B", 0.90323, 7.47735, -3.52316),
        ("C", "C", 0.91109, 7.61633, -3.42379),
        ("B", "D", 1.20710, 0.0, -10.9490),
        ("D", "B", 0.0, 7.77754, -1.97620),
        ("C", "D", 0.83628, 0.0, -10.8708),
        ("D", "C", 0.0, 7.76986, -2.49033),
        ("D", "D", 0.0, 0.0, -10.0080),
    ],
    [
        ("B", "B", 0.65278, 4.25839, -1.63502),
        ("B", "C", 0.60496, 3.17065, -2.83349),
        ("C", "B", 0.42969, 4.23383, -1.46087),
        ("C", "C", 0.43839, 3.20526, -2.62174),
        ("B", "D", 0.67613, 0.0, -5.86146),
        ("D", "B", 0.0, 4.37787, -0.77911),
        ("C", "D", 0.43038, 0.0, -5.62184),
        ("D", "C", 0.0, 3.26057, -2.14826),
        ("D", "D", 0.0, 0.0, -5.28229),
    ],
    [
        ("B", "B", 0.37784, 2.47245, -1.09280),
        ("B", "C", 0.33067, 1.54366, -2.01777),
        ("C", "B", 0.22534, 2.40717, -0.90573),
        ("C", "C", 0.23310, 1.57223, -1.90281),
        ("B", "D", 0.38613, 0.0, -3.52582),
        ("D", "B", 0.0, 2.53262, -0.57345),
        ("C", "D", 0.23556, 0.0, -3.30011),
        ("D", "C", 0.0, 1.60587, -1.63533),
        ("D", "D", 0.0, 0.0, -3.16512),
    ],
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn rows(m: &[[f64; 4]; 4]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

fn embedded(m: &[[f64; 4]; 4]) -> GeneratorMatrix {
    let scale = RatingScale::new(4).unwrap();
    let p = transition_matrix_from_rows(scale, 1.0, &rows(m)).unwrap();
    generator_from_annual_matrix(&p).unwrap().generator
}

fn shipped_params() -> VasicekParams {
    VasicekParams::new(0.05, 0.1, 0.05, 0.01).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let s = shipped_params().par_swap_rate(10.0, 4.0).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = (s - 0.0496).abs() <= 2e-4 && secs < 1.0;
    outcome(pass, format!("par swap rate {s:.6} (printed 0.0496, tolerance 2e-4), {secs:.3}s"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let g1 = embedded(&P1);
    let g2 = embedded(&P2);
    let mut worst = 0.0f64;
    for alpha in [0.0, 0.3, 0.7, 1.0] {
        let joint = build_joint_generator(&g1, &g2, CopulaSpec::new(alpha).unwrap()).unwrap();
        for t in [0.25, 0.5, 1.0, 2.0, 5.0] {
            let pj: DMatrix<f64> = (joint.matrix() * t).exp();
            let m1 = g1.transition(t);
            let m2 = g2.transition(t);
            for i1 in 1..=4 {
                for i2 in 1..=4 {
                    let from = joint.index(&[i1, i2]);
                    for k in 1..=4 {
                        let first: f64 = (1..=4).map(|j| pj[(from, joint.index(&[k, j]))]).sum();
                        let second: f64 = (1..=4).map(|j| pj[(from, joint.index(&[j, k]))]).sum();
                        worst = worst
                            .max((first - m1[(i1 - 1, k - 1)]).abs())
                            .max((second - m2[(i2 - 1, k - 1)]).abs());
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-8 && secs < 5.0, format!("max marginal deviation {worst:.2e} (tolerance 1e-8), {secs:.2}s"))
}

fn criterion_3() -> Outcome {
    let scenario = Scenario::from_path(&config("irs_paper.cfg")).unwrap();
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for &alpha in &scenario.alphas {
        let model = scenario.model(alpha).unwrap();
        let reports = match model.estimate(20_000, scenario.seed) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("alpha {alpha}: {e}"));
                continue;
            }
        };
        for r in &reports {
            checked += 1;
            if let Err(e) = r.check_identities() {
                failures.push(format!("alpha {alpha} {} ({},{}): {e}", r.scheme, r.k1, r.k2));
            }
            if r.is_baseline() && (r.urva.value != 0.0 || r.drva.value != 0.0 || r.cva_r.value != r.cva.value) {
                failures.push(format!("alpha {alpha} {} baseline differs from the trigger-free values", r.scheme));
            }
            if r.cva_rh.value != r.cva_r.value {
                failures.push(format!("alpha {alpha} {} CVA^Rh differs from CVA^R with Rh = 1", r.scheme));
            }
        }
        failures.extend(pathwise_failures(&model, scenario.seed, 2_000));
    }
    let detail = if failures.is_empty() {
        format!("{checked} reports and 4000 paths satisfy every identity")
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn pathwise_failures(model: &XvaModel, seed: u64, n: u64) -> Vec<String> {
    let triggers = &model.inputs().triggers;
    let recovery = model.inputs().recovery;
    let mut out = Vec::new();
    for i in 0..n {
        let Some(cells) = model.path_terms(seed, i).unwrap() else { continue };
        for (c, t) in cells.iter().enumerate() {
            let trig = triggers[c % triggers.len()];
            let baseline = trig.k1 == 4 && trig.k2 == 4;
            if t.ucva - t.ucva_r != t.urva || t.dva - t.dva_r != t.drva {
                out.push(format!("path {i} cell {c}: RVA legs do not difference"));
            }
            if baseline && (t.ucva_r != t.ucva || t.dva_r != t.dva) {
                out.push(format!("path {i} cell {c}: CVA^R != CVA at (D,D)"));
            }
            if recovery.rh1 == 1.0 && recovery.rh2 == 1.0 && (t.ucva_rh != t.ucva_r || t.dva_rh != t.dva_r) {
                out.push(format!("path {i} cell {c}: CVA^Rh != CVA^R at Rh = 1"));
            }
        }
    }
    out
}

fn criterion_4() -> Outcome {
    let scale = RatingScale::new(4).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for (name, m) in [("P1", &P1), ("P2", &P2), ("P3", &P3)] {
        let p = transition_matrix_from_rows(scale, 1.0, &rows(m)).unwrap();
        let e = generator_from_annual_matrix(&p).unwrap();
        let back = e.generator.transition(1.0);
        let err = (&back - p.matrix()).abs().max();
        pass &= err <= 1e-3;
        details.push(format!("{name} {err:.2e} (logged {:.2e})", e.reproduction_error));
    }
    outcome(pass, format!("entrywise reproduction errors {} (tolerance 1e-3)", details.join(", ")))
}

fn report<'a>(reports: &'a [AdjustmentReport], scheme: &str, k1: usize, k2: usize) -> &'a AdjustmentReport {
    reports.iter().find(|r| r.scheme == scheme && r.k1 == k1 && r.k2 == k2).unwrap()
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let scenario = Scenario::from_path(&config("irs_paper.cfg")).unwrap();
    let scale = scenario.scale;
    let model = scenario.model(0.0).unwrap();
    let reports = model.estimate(200_000, scenario.seed).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let schemes = ["none", "linear", "exponential"];

    let cva: Vec<f64> = schemes.iter().map(|s| report(&reports, s, 4, 4).cva_r.value.abs() * 1e3).collect();
    let monotone = cva[0] > cva[1] && cva[1] > cva[2];
    let within: Vec<bool> = cva
        .iter()
        .zip(PRINTED_CVA_R_DD)
        .map(|(ours, printed)| (ours - printed).abs() <= 0.5 * printed)
        .collect();
    let part_a = monotone && within.iter().all(|&w| w);

    let bb = report(&reports, "none", 2, 2).mitigation_pct.unwrap_or(f64::NAN);
    let part_b = bb > 0.0 && (50.0..=80.0).contains(&bb);

    let mut mismatches = Vec::new();
    for (scheme, table) in schemes.iter().zip(&PRINTED_IRS_ALPHA0) {
        for &(l1, l2, urva, drva, cva_r) in table {
            let r = report(&reports, scheme, scale.parse(l1).unwrap(), scale.parse(l2).unwrap());
            for (name, printed, ours) in
                [("URVA", urva, r.urva.value), ("DRVA", drva, r.drva.value), ("CVA^R", cva_r, r.cva_r.value)]
            {
                if sign(printed) != sign(ours) {
                    mismatches.push(format!("{scheme} ({l1},{l2}) {name} printed {printed} ours {:.5}", ours * 1e3));
                }
            }
        }
    }
    let part_c = mismatches.is_empty();

    let pass = part_a && part_b && part_c;
    let detail = format!(
        "(a) |CVA^R(D,D)| x1e-3 none {:.3} / linear {:.3} / exponential {:.3}, monotone {monotone}, \
         within 50% of printed {:?}: {}; (b) mitigation (B,B) {bb:.2}% (printed {PRINTED_MITIGATION_BB}%): {}; \
         (c) {} of 81 signs differ{}: {}; {secs:.1}s",
        cva[0],
        cva[1],
        cva[2],
        within,
        if part_a { "PASS" } else { "FAIL" },
        if part_b { "PASS" } else { "FAIL" },
        mismatches.len(),
        if mismatches.is_empty() { String::new() } else { format!(" [{}]", mismatches.join(", ")) },
        if part_c { "PASS" } else { "FAIL" },
    );
    outcome(pass, detail)
}

/// First passage of a single chain to its last state, or `∞`.
fn reference_default_time<R: Rng>(g: &GeneratorMatrix, start: usize, horizon: f64, rng: &mut R) -> f64 {
    let k = g.dim();
    let mut state = start - 1;
    let mut t = 0.0;
    loop {
        let out = -g.rate(state, state);
        if out <= 0.0 {
            return f64::INFINITY;
        }
        let hold: f64 = rng.sample(Exp1);
        t += hold / out;
        if t > horizon {
            return f64::INFINITY;
        }
        let u = rng.random::<f64>() * out;
        let mut acc = 0.0;
        let mut next = k - 1;
        for j in (0..k).filter(|&j| j != state) {
            acc += g.rate(state, j);
            if u < acc {
                next = j;
                break;
            }
        }
        state = next;
        if state == k - 1 {
            return t;
        }
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let params = shipped_params();
    let g3 = embedded(&P3);
    let spec = CdsSpec::default();
    let pricer = CdsPricer::new(&spec, &g3, params, 1).unwrap();
    let kappa = pricer.spread();
    let tenor = spec.tenor;
    let base = build_rate_grid(tenor, &[], 1.0 / 48.0);
    let n = 10_000u64;
    let mut details = Vec::new();
    let mut pass = true;
    for rating in 1..=3 {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..n {
            let mut rating_rng = path_rng(77 + rating as u64, i, RATING_STREAM);
            let tau3 = reference_default_time(&g3, rating, tenor, &mut rating_rng);
            let end = tau3.min(tenor);
            let grid = merge_times(&base, &[end]);
            let mut rate_rng = path_rng(77 + rating as u64, i, RATE_STREAM);
            let path = sample_rate_path(&params, &grid, &mut rate_rng).unwrap();
            let mut premium = 0.0;
            for w in grid.windows(2).take_while(|w| w[1] <= end) {
                premium += 0.5 * (path.discount(w[0]) + path.discount(w[1])) * (w[1] - w[0]);
            }
            let protection = if tau3 <= tenor { (1.0 - spec.reference_recovery) * path.discount(tau3) } else { 0.0 };
            let x = protection - kappa * premium;
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / (n as f64 - 1.0)).sqrt();
        let quad = pricer.price_state(0.0, rating, params.r0).unwrap();
        let ok = (quad - mean).abs() <= 3.0 * se;
        pass &= ok;
        details.push(format!("rating {rating}: quadrature {quad:.6} vs MC {mean:.6} ± {se:.6}"));
    }

    let lambda = 0.02;
    let mut a = DMatrix::zeros(2, 2);
    a[(0, 1)] = lambda;
    let flat = GeneratorMatrix::from_off_diagonal(a).unwrap();
    let flat_pricer = CdsPricer::new(&spec, &flat, params, 1).unwrap();
    let triangle = (1.0 - spec.reference_recovery) * lambda;
    let err = (flat_pricer.spread() - triangle).abs();
    pass &= err <= 1e-6;
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 30.0;
    details.push(format!("credit triangle error {err:.2e}"));
    outcome(pass, format!("{}; {secs:.1}s", details.join("; ")))
}

fn criterion_7() -> Outcome {
    let params = shipped_params();
    let horizons = [1.0, 5.0, 10.0];
    let grid = build_rate_grid(10.0, &horizons, 1.0 / 48.0);
    let n = 100_000u64;
    let mut r_sum = [0.0; 3];
    let mut r_sq = [0.0; 3];
    let mut d_sum = [0.0; 3];
    let mut d_sq = [0.0; 3];
    let mut m_sum = 0.0;
    let mut m_sq = 0.0;
    for i in 0..n {
        let mut rng = path_rng(4242, i, RATE_STREAM);
        let path = sample_rate_path(&params, &grid, &mut rng).unwrap();
        for (j, &t) in horizons.iter().enumerate() {
            let r = path.rate_at(t);
            r_sum[j] += r;
            r_sq[j] += r * r;
            let d = path.discount(t);
            d_sum[j] += d;
            d_sq[j] += d * d;
        }
        let m = path.discount(5.0) * params.bond_price(path.rate_at(5.0), 5.0, 10.0);
        m_sum += m;
        m_sq += m * m;
    }
    let nf = n as f64;
    let stats = |s: f64, q: f64| {
        let mean = s / nf;
        let var = (q / nf - mean * mean) * nf / (nf - 1.0);
        (mean, var, (var / nf).sqrt())
    };
    let mut pass = true;
    let mut details = Vec::new();
    for (j, &t) in horizons.iter().enumerate() {
        let (mean, var, se) = stats(r_sum[j], r_sq[j]);
        let exp_mean = params.conditional_mean(params.r0, t);
        let exp_var = params.conditional_variance(t);
        let ok_mean = (mean - exp_mean).abs() <= 3.0 * se;
        let ok_var = ((var - exp_var) / exp_var).abs() <= 0.05;
        let (d, _, d_se) = stats(d_sum[j], d_sq[j]);
        let bond = params.bond_price(params.r0, 0.0, t);
        let ok_bond = (d - bond).abs() <= 3.0 * d_se;
        pass &= ok_mean && ok_var && ok_bond;
        details.push(format!(
            "T={t}: mean {mean:.6}/{exp_mean:.6}, var {var:.3e}/{exp_var:.3e}, E[1/B] {d:.6}/{bond:.6} ± {d_se:.1e}"
        ));
    }
    let (m, _, m_se) = stats(m_sum, m_sq);
    let p010 = params.bond_price(params.r0, 0.0, 10.0);
    let ok_mart = (m - p010).abs() <= 3.0 * m_se;
    pass &= ok_mart;
    details.push(format!("E[P(5,10)/B_5] - P(0,10) = {:.2e} (3 SE {:.2e})", m - p010, 3.0 * m_se));
    outcome(pass, details.join("; "))
}

fn criterion_8() -> Outcome {
    let mut scenario = Scenario::from_path(&config("irs_paper.cfg")).unwrap();
    scenario.investor_default_free = true;
    let mut negatives = Vec::new();
    let mut max_drva = 0.0f64;
    let mut cells = 0;
    for &alpha in &scenario.alphas.clone() {
        let model = scenario.model(alpha).unwrap();
        let reports = model.estimate(50_000, scenario.seed).unwrap();
        for r in &reports {
            cells += 1;
            max_drva = max_drva.max(r.drva.value.abs());
            if r.rva.value < 0.0 {
                negatives.push(format!("alpha {alpha} {} ({},{}) RVA {:.3e}", r.scheme, r.k1, r.k2, r.rva.value));
            }
        }
    }
    let pass = negatives.is_empty();
    let detail = if pass {
        format!("RVA >= 0 in all {cells} cells, max |DRVA| {max_drva:.1e}")
    } else {
        negatives.join("; ")
    };
    outcome(pass, detail)
}

fn csv_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for name in ["irs_paper.cfg", "cds_paper.cfg"] {
        let scenario = Scenario::from_path(&config(name)).unwrap();
        let mut outputs = Vec::new();
        for threads in [1, 4] {
            let dir = tempfile::tempdir().unwrap();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_grid(&scenario, dir.path(), RunOptions::from_scenario(&scenario))).unwrap();
            outputs.push(csv_bytes(dir.path()));
        }
        let same = outputs[0] == outputs[1] && !outputs[0].is_empty();
        pass &= same;
        details.push(format!(
            "{name}: {} CSV files, {} paths, 1 vs 4 threads {}",
            outputs[0].len(),
            scenario.n_paths,
            if same { "identical" } else { "differ" }
        ));
    }
    details.push(format!("{:.1}s", start.elapsed().as_secs_f64()));
    outcome(pass, details.join("; "))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "par swap rate", criterion_1),
        (2, "copula marginal consistency", criterion_2),
        (3, "identity suite", criterion_3),
        (4, "generator embedding", criterion_4),
        (5, "reference-scale qualitative reproduction", criterion_5),
        (6, "CDS pricing oracle", criterion_6),
        (7, "Vasicek checks", criterion_7),
        (8, "unilateral RVA nonnegativity", criterion_8),
        (9, "determinism across thread counts", criterion_9),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (id, name, run) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {id} ({name}): {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
