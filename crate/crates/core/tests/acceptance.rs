//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use asymlab::asymptote::{
    asymptote_verdict, cesaro_gram_limit, classify_c_class, power_bound, riesz_bounds, OrbitClass,
    VerdictKind,
};
use asymlab::eigenbasis::{
    diagonal_operator, dual_family, eigen_residual, example_noest_system, helson_szego_family,
    noest_coupling, noest_default_angles, noest_default_c, partial_sum_norms,
    partial_sum_projections, skew_projections, EigenSystemSpec, FamilyKind,
};
use asymlab::linalg::{
    gram_matrix, matrix_spectral_norm, max_abs_diff, spectral_norm, CMatrix,
};
use asymlab::model_space::{
    build_txy, clark_inner, clark_unitary, model_space_basis, multiplier_phi0,
    reproducing_residual, unitarity_residual, ClarkMeasure,
};
use asymlab::poly::Poly;
use asymlab::weighted_shift::{
    block_gram_components, embedding_y, eigenvector_residual_grid, inverse_compression_eigenvector,
    nested_embedding_j, quasianalytic_classifier, unweighted_shift, weighted_shift, Weight,
    WeightTrend, DEFAULT_CLASSIFIER_LADDER,
};
use asymlab::{FourierVector, IndexWindow, MatrixOperator, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Default)]
struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn below(&mut self, label: &str, value: f64, bound: f64) {
        self.require(value < bound, format!("{label} = {value:.3e} not below {bound:.0e}"));
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn fail_on<T>(&mut self, label: &str, r: asymlab::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.failures.push(format!("{label}: {e}"));
                None
            }
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, window: IndexWindow) -> FourierVector {
    let coeffs = (0..window.len())
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    FourierVector::new(window, coeffs).unwrap()
}

fn unit_circle_angles(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    // Jittered equispaced angles keep atoms apart.
    let offset = rng.random_range(0.0..2.0 * PI);
    (0..count)
        .map(|k| offset + 2.0 * PI * (k as f64 + rng.random_range(-0.25..0.25)) / count as f64)
        .collect()
}

fn random_measure(rng: &mut ChaCha8Rng, angles: &[f64]) -> ClarkMeasure {
    ClarkMeasure::new(
        angles
            .iter()
            .map(|&t| (C64::from_polar(1.0, t), rng.random_range(0.5..1.5)))
            .collect(),
    )
    .unwrap()
}

fn op_residual(a: &MatrixOperator, b: &MatrixOperator) -> f64 {
    max_abs_diff(a.entries(), b.entries())
}

/// Projection algebra and eigen-identities of one biorthogonal system.
fn exact_algebra(check: &mut Check, label: &str, primal: Vec<FourierVector>) -> f64 {
    let Some(system) = check.fail_on(label, dual_family(primal)) else {
        return f64::NAN;
    };
    let mut worst = system.biorthogonality_residual();
    let qs = skew_projections(&system);
    for (n, q) in qs.iter().enumerate() {
        let q2 = q.compose(q).unwrap();
        worst = worst.max(op_residual(&q2, q));
        for k in [n + 1, n + 3].into_iter().filter(|&k| k < qs.len()) {
            let qk = q.compose(&qs[k]).unwrap();
            worst = worst.max(qk.max_abs());
            worst = worst.max(qs[k].compose(q).unwrap().max_abs());
        }
    }
    if let Some(ps) = check.fail_on(label, partial_sum_projections(&system)) {
        let len = ps.len();
        for (n, m) in [(0, len - 1), (len / 3, len / 2), (len - 1, 1), (len / 2, len / 2)] {
            let prod = ps[n].0.compose(&ps[m].0).unwrap();
            worst = worst.max(op_residual(&prod, &ps[n.min(m)].0));
        }
    }
    let spec = EigenSystemSpec::with_default_angles(system.len(), FamilyKind::Explicit);
    if let Some(t) = check.fail_on(label, diagonal_operator(&spec, &system)) {
        if let Some(r) = check.fail_on(label, eigen_residual(&t, &system, &spec.eigenvalues())) {
            worst = worst.max(r);
        }
    }
    worst
}

fn intertwining(check: &mut Check, w0: &Weight, w: &Weight) -> f64 {
    let y = embedding_y(w);
    let s = weighted_shift(w);
    let u = unweighted_shift(w.window());
    let lhs = y.compose(&s).unwrap();
    let rhs = u.compose(&y).unwrap();
    let mut worst = op_residual(&lhs, &rhs);
    if let Some(j) = check.fail_on("nested embedding", nested_embedding_j(w0, w)) {
        worst = worst.max(op_residual(&embedding_y(w0), &y.compose(&j).unwrap()));
    }
    worst
}

fn criterion_1() -> Check {
    let mut check = Check::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut configs = 0;
    let mut worst = 0.0f64;
    for k in 0..8 {
        let dim = 12 + 4 * k;
        let window = IndexWindow::new(-(dim as i64) / 2, dim as i64 / 2).unwrap();
        let count = dim / 2 + k;
        let family = (0..count).map(|_| random_vector(&mut rng, window)).collect();
        worst = worst.max(exact_algebra(&mut check, &format!("random family {k}"), family));
        configs += 1;
    }
    for (alpha, n) in [(-0.25, 16), (0.25, 16), (-0.25, 32), (0.25, 32)] {
        let family = helson_szego_family(alpha, n).unwrap();
        worst = worst.max(exact_algebra(&mut check, &format!("psi_{alpha} N={n}"), family));
        configs += 1;
    }
    for pairs in [4, 8, 16, 32] {
        let cs = noest_default_c(pairs);
        let family = example_noest_system(&cs, &noest_default_angles(&cs), pairs)
            .unwrap()
            .system
            .primal()
            .to_vec();
        worst = worst.max(exact_algebra(&mut check, &format!("block pairs {pairs}"), family));
        configs += 1;
    }
    for m in [8usize, 16, 32] {
        let window = IndexWindow::symmetric(m);
        for (w0, w) in [
            (Weight::exponential(window, 1.0).unwrap(), Weight::stretched(window, 0.5).unwrap()),
            (Weight::stretched(window, 0.5).unwrap(), Weight::constant(window)),
        ] {
            worst = worst.max(intertwining(&mut check, &w0, &w));
            configs += 1;
        }
    }
    check.require(configs >= 20, format!("only {configs} configurations"));
    check.below("max residual", worst, 1e-10);
    check.note(format!("{configs} configurations, max residual {worst:.2e}"));
    check
}

fn criterion_2() -> Check {
    let mut check = Check::default();
    let pairs = 33;
    let cs = noest_default_c(pairs);
    let Some(sys) = check.fail_on(
        "block system",
        example_noest_system(&cs, &noest_default_angles(&cs), pairs),
    ) else {
        return check;
    };
    let mut q_err = 0.0f64;
    for (n, q) in skew_projections(&sys.system).iter().enumerate().take(65) {
        let expected = (1.0 + cs[n / 2].powi(2)).sqrt();
        let dense = matrix_spectral_norm(q.entries(), 1e-12).unwrap();
        q_err = q_err.max((dense - expected).abs());
    }
    check.below("max | ||Q_n|| - sqrt(1+c_n^2) |", q_err, 1e-10);

    let coupling = noest_coupling(&cs, &sys.eigenvalues);
    let t = sys.t.entries();
    let even: Vec<usize> = (0..pairs).map(|n| 2 * n).collect();
    let odd: Vec<usize> = (0..pairs).map(|n| 2 * n + 1).collect();
    let block = CMatrix::from_fn(pairs, pairs, |i, j| t[(even[i], odd[j])]);
    let off = matrix_spectral_norm(&block, 1e-12).unwrap();
    check.require(
        off <= coupling + 1e-8,
        format!("off-diagonal block norm {off:.6e} exceeds coupling {coupling:.6e}"),
    );

    let mut bounds = Vec::new();
    for m in [64usize, 128, 256] {
        let pairs = m / 2;
        let cs = noest_default_c(pairs);
        let sys = example_noest_system(&cs, &noest_default_angles(&cs), pairs).unwrap();
        if let Some(b) = check.fail_on("power bound", power_bound(&sys.t, 64)) {
            bounds.push(b);
        }
    }
    if bounds.len() == 3 {
        let lo = bounds.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = bounds.iter().copied().fold(0.0, f64::max);
        check.below("power bound variation", (hi - lo) / lo, 0.05);
        check.note(format!(
            "off-block {off:.4} <= {coupling:.4}, power bounds {:.4}/{:.4}/{:.4}",
            bounds[0], bounds[1], bounds[2]
        ));
    }
    check
}

fn criterion_3() -> Check {
    let mut check = Check::default();
    let ladder = [16usize, 32, 64, 128];
    for (alpha, expected) in [(-0.25, VerdictKind::LowerBoundHolds), (0.25, VerdictKind::LowerBoundDecays)] {
        let mut rungs = Vec::new();
        let mut lowers = Vec::new();
        let mut uppers = Vec::new();
        for &n in &ladder {
            let family = helson_szego_family(alpha, n).unwrap();
            let Some(rb) = check.fail_on("riesz bounds", riesz_bounds(&family)) else {
                return check;
            };
            lowers.push(rb.lower);
            uppers.push(rb.upper);
            let system = dual_family(family.clone()).unwrap();
            let spec = EigenSystemSpec::with_default_angles(n, FamilyKind::HelsonSzego { alpha });
            let t = diagonal_operator(&spec, &system).unwrap();
            let t_norm = spectral_norm(&t, 1e-12).unwrap();
            let sup_p = partial_sum_norms(&system).unwrap().into_iter().fold(0.0, f64::max);
            let bound = (2.0 * PI + 1.0) * sup_p + 1e-6;
            check.require(
                t_norm <= bound,
                format!("alpha={alpha} N={n}: ||T|| = {t_norm:.4} exceeds {bound:.4}"),
            );
            rungs.push((n, family));
        }
        let (flat, moving) = if alpha < 0.0 { (&lowers, &uppers) } else { (&uppers, &lowers) };
        let top = &flat[1..];
        let lo = top.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = top.iter().copied().fold(0.0, f64::max);
        check.below(&format!("alpha={alpha} plateau variation"), (hi - lo) / lo, 0.10);
        let monotone = if alpha < 0.0 {
            moving.windows(2).all(|p| p[1] > p[0])
        } else {
            moving.windows(2).all(|p| p[1] < p[0])
        };
        check.require(monotone, format!("alpha={alpha}: moving bound not monotone: {moving:?}"));
        if let Some(v) = check.fail_on("verdict", asymptote_verdict(&rungs)) {
            check.require(
                v.kind == expected,
                format!("alpha={alpha}: verdict {} expected {}", v.kind.as_str(), expected.as_str()),
            );
            check.note(format!(
                "alpha={alpha}: {} (slope {:.3})",
                v.kind.as_str(),
                v.trend_exponent
            ));
        }
    }
    check
}

fn criterion_4() -> Check {
    let mut check = Check::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);

    let one = clark_inner(&ClarkMeasure::new(vec![(C64::new(1.0, 0.0), 1.0)]).unwrap()).unwrap();
    let two = clark_inner(
        &ClarkMeasure::new(vec![(C64::new(1.0, 0.0), 0.5), (C64::new(-1.0, 0.0), 0.5)]).unwrap(),
    )
    .unwrap();
    for (label, u, n) in [("z", &one, 1), ("z^2", &two, 2)] {
        let err_num = u.num().sub(&Poly::monomial(n)).coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let err_den = u.den().sub(&Poly::one()).coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
        check.below(&format!("{label} coefficient error"), err_num.max(err_den), 1e-12);
    }

    let (mut unimod, mut origin, mut unitary, mut repro) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut ys, mut xt, mut xy) = (0.0f64, 0.0f64, 0.0f64);
    for count in 1..=6usize {
        let angles = unit_circle_angles(&mut rng, count);
        let sigma_u = random_measure(&mut rng, &angles);
        let sigma_v = random_measure(&mut rng, &angles);
        let Some(u) = check.fail_on("clark_inner", clark_inner(&sigma_u)) else { continue };
        let Some(v) = check.fail_on("clark_inner", clark_inner(&sigma_v)) else { continue };
        unimod = unimod.max(u.diagnostics().unimodularity);
        origin = origin.max(u.diagnostics().value_at_zero);
        let d = 2 * count + 32;
        let Some(rep) = check.fail_on("basis", model_space_basis(&u, d)) else { continue };
        if let Some(vu) = check.fail_on("clark unitary", clark_unitary(&rep, &sigma_u)) {
            unitary = unitary.max(unitarity_residual(&vu));
        }
        let points: Vec<C64> = (0..16).map(|k| C64::from_polar(1.0, 0.1 + k as f64 * 0.39)).collect();
        if let Some(r) = check.fail_on("reproducing", reproducing_residual(&rep, &points)) {
            repro = repro.max(r);
        }
        if count < 2 {
            // One atom forces u = v, so T = S.
            continue;
        }
        let Some(phi) = check.fail_on("phi0", multiplier_phi0(&u, &v, d)) else { continue };
        let d_txy = 2 * (u.degree() + v.degree()) + 32;
        if let Some(r) = check.fail_on("T, X, Y", build_txy(&u, &v, &phi.phi0, d_txy)) {
            ys = ys.max(r.ys_ty_residual);
            xt = xt.max(r.xt_sx_residual);
            xy = xy.max(r.xy_phi_residual);
            check.require(r.defect_rank == 1, format!("{count} atoms: rank(T - S) = {}", r.defect_rank));
        }
    }
    check.below("| |u| - 1 |", unimod, 1e-9);
    check.below("|u(0)|", origin, 1e-12);
    check.below("unitarity residual", unitary, 1e-9);
    check.below("reproducing residual", repro, 1e-8);
    check.below("YS - TY", ys, 1e-8);
    check.below("XT - SX", xt, 1e-8);
    check.below("XY - phi0(S)", xy, 1e-8);
    check.note(format!(
        "unitarity {unitary:.1e}, reproducing {repro:.1e}, YS-TY {ys:.1e}, XT-SX {xt:.1e}, XY-phi0 {xy:.1e}"
    ));
    check
}

fn criterion_5() -> Check {
    let mut check = Check::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let (mut smallest, mut containment, mut variance) = (f64::INFINITY, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let count = rng.random_range(2..=6usize);
        let angles = unit_circle_angles(&mut rng, count);
        let u = clark_inner(&random_measure(&mut rng, &angles)).unwrap();
        let v = clark_inner(&random_measure(&mut rng, &angles)).unwrap();
        let d = 2 * count + 32;
        let Some(p) = check.fail_on("phi0", multiplier_phi0(&u, &v, d)) else { continue };
        check.require(
            p.density_rank == p.dim_v,
            format!("rank {} below dim K_v = {}", p.density_rank, p.dim_v),
        );
        smallest = smallest.min(p.density_smallest());
        containment = containment.max(p.containment_residual);
        let (_, var) = asymlab::model_space::unimodular_constant(&u, &v, &p.phi0);
        variance = variance.max(var);
    }
    check.require(smallest > 1e-6, format!("smallest singular value {smallest:.3e} not above 1e-6"));
    check.below("containment residual", containment, 1e-8);
    check.below("variance of c", variance, 1e-8);
    check.note(format!("sigma_min {smallest:.3e}, containment {containment:.1e}, var(c) {variance:.1e}"));
    check
}

fn criterion_6() -> Check {
    let mut check = Check::default();
    let mut grid_max = Vec::new();
    for m in [64usize, 96, 128] {
        let window = IndexWindow::symmetric(m);
        let w0 = Weight::exponential(window, 1.0).unwrap();
        let w = Weight::stretched(window, 0.5).unwrap();
        for (label, weight) in [("omega0", &w0), ("omega", &w)] {
            let norm = spectral_norm(&weighted_shift(weight), 1e-12).unwrap();
            check.require(norm <= 1.0 + 1e-12, format!("M={m} {label}: ||S|| = {norm:.15}"));
            let probes = vec![
                FourierVector::unit(window, 0).unwrap(),
                FourierVector::unit(window, -1).unwrap(),
            ];
            if let Some(tag) = check.fail_on("classify", classify_c_class(&weighted_shift(weight), &probes, m, 1e-3)) {
                check.require(
                    tag.forward == OrbitClass::C1Dot && tag.backward == OrbitClass::C0Dot,
                    format!(
                        "M={m} {label}: class {}/{}",
                        tag.forward.as_str(),
                        tag.backward.as_str()
                    ),
                );
            }
        }
        if let Some((_, r)) = check.fail_on("eigenvector", inverse_compression_eigenvector(&w, C64::new(0.5, 0.0), m)) {
            check.below(&format!("M={m} eigenvector residual at 0.5"), r, 1e-8);
        }
        if let Some(grid) = check.fail_on("grid", eigenvector_residual_grid(&w, m, 0.05, 0.8)) {
            let top = grid.iter().map(|g| g.1).fold(0.0, f64::max);
            check.below(&format!("M={m} grid residual"), top, 1e-6);
            grid_max.push((m, top));
        }
    }
    let w = Weight::stretched(IndexWindow::symmetric(64), 0.5).unwrap();
    if let (Ok(g1), Ok(g2)) = (
        eigenvector_residual_grid(&w, 64, 0.05, 0.8),
        eigenvector_residual_grid(&w, 128, 0.05, 0.8),
    ) {
        let a = g1.iter().map(|g| g.1).fold(0.0, f64::max);
        let b = g2.iter().map(|g| g.1).fold(0.0, f64::max);
        check.require(b < a, format!("grid residual does not decrease under doubling: {a:.2e} -> {b:.2e}"));
    }

    let window = IndexWindow::symmetric(16);
    let w0 = Weight::exponential(window, 1.0).unwrap();
    if let Some(v) = check.fail_on("classifier", quasianalytic_classifier(&w0, &DEFAULT_CLASSIFIER_LADDER)) {
        check.require(v.verdict == WeightTrend::QuasianalyticTrend, format!("omega0 labelled {}", v.verdict.as_str()));
        let worst = v
            .quasi_partial_sums
            .iter()
            .map(|&(n, s)| (s - (1..=n).map(|k| 1.0 / k as f64).sum::<f64>()).abs())
            .fold(0.0, f64::max);
        check.below("partial sums vs harmonic numbers", worst, 1e-9);
    }
    let w = Weight::stretched(window, 0.5).unwrap();
    if let Some(v) = check.fail_on("classifier", quasianalytic_classifier(&w, &DEFAULT_CLASSIFIER_LADDER)) {
        check.require(v.verdict == WeightTrend::RegularTrend, format!("omega labelled {}", v.verdict.as_str()));
        let tail = v.tail_estimate.unwrap_or(f64::INFINITY);
        check.below("regular weight tail at N = 1e4", tail, 1e-3);
        check.note(format!("regular-weight tail estimate {tail:.3e}"));
    }
    if let Some((_, top)) = grid_max.last() {
        check.note(format!("grid residual at M=128 {top:.1e}"));
    }
    check
}

fn criterion_7() -> Check {
    let mut check = Check::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let mut exact = 0.0f64;
    for d in [32usize, 48, 64] {
        let window = IndexWindow::hardy(d);
        let s = unweighted_shift(window);
        let probes: Vec<FourierVector> = (0..3)
            .map(|_| {
                let v = random_vector(&mut rng, window);
                let mut c = v.coeffs().to_vec();
                c[8..].iter_mut().for_each(|z| *z = C64::default());
                FourierVector::new(window, c).unwrap()
            })
            .collect();
        let expected = gram_matrix(&asymlab::linalg::column_matrix(&probes).unwrap());
        let max_power = (d - 8).next_power_of_two() / 2;
        if let Some(r) = check.fail_on("isometry", cesaro_gram_limit(&s, &probes, max_power, 1e-10)) {
            exact = exact.max(max_abs_diff(&r.gram, &expected));
        }
        let phases: Vec<C64> = (0..=d).map(|k| C64::from_polar(1.0, 0.3 * k as f64)).collect();
        let u = MatrixOperator::diagonal(window, &phases).unwrap();
        let probes: Vec<FourierVector> = (0..3).map(|_| random_vector(&mut rng, window)).collect();
        let expected = gram_matrix(&asymlab::linalg::column_matrix(&probes).unwrap());
        if let Some(r) = check.fail_on("unitary", cesaro_gram_limit(&u, &probes, 64, 1e-10)) {
            exact = exact.max(max_abs_diff(&r.gram, &expected));
        }
    }
    check.below("isometry Gram error", exact, 1e-10);

    let m = 96usize;
    let window = IndexWindow::symmetric(m);
    let w = Weight::stretched(window, 0.5).unwrap();
    let probes: Vec<FourierVector> = (0..3)
        .map(|_| {
            let v = random_vector(&mut rng, window);
            let c: Vec<C64> = window
                .indices()
                .zip(v.coeffs())
                .map(|(n, z)| if (-8..=8).contains(&n) { *z } else { C64::default() })
                .collect();
            FourierVector::new(window, c).unwrap()
        })
        .collect();
    let y = embedding_y(&w);
    let pushed = y.entries() * asymlab::linalg::column_matrix(&probes).unwrap();
    let mut pushforward = 0.0;
    if let Some(r) = check.fail_on("weighted shift", cesaro_gram_limit(&weighted_shift(&w), &probes, 64, 1e-10)) {
        pushforward = max_abs_diff(&r.gram, &gram_matrix(&pushed));
        check.below("pushforward Gram error", pushforward, 1e-6);
    }

    let w0 = Weight::exponential(window, 1.0).unwrap();
    let probes = vec![
        FourierVector::unit(window, 0).unwrap(),
        FourierVector::unit(window, -1).unwrap(),
    ];
    if let Some(r) = check.fail_on("block gram", block_gram_components(&w0, &w, 0.5, &probes)) {
        check.below("component (a) residual", r.component_a_residual, 1e-6);
        check.note(format!(
            "isometry {exact:.1e}, pushforward {pushforward:.1e}, component (a) {:.1e}",
            r.component_a_residual
        ));
    }
    check
}

fn cli_binary() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let bin = dir.join(format!("asymlab{}", std::env::consts::EXE_SUFFIX));
    if bin.exists() {
        return Some(bin);
    }
    let status = Command::new(env!("CARGO"))
        .args(["build", "-q", "-p", "asymlab-cli"])
        .env("CARGO_TARGET_DIR", dir.parent()?)
        .status()
        .ok()?;
    (status.success() && bin.exists()).then_some(bin)
}

fn sha256_file(path: &Path) -> Option<String> {
    Some(hex::encode(Sha256::digest(std::fs::read(path).ok()?)))
}

/// The `files` map of a run manifest: data file name to sha256.
fn manifest_files(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_to_string(dir.join("manifest.json"))
        .ok()
        .and_then(|text| serde_json::from_str::<serde_json::Value>(&text).ok())
        .and_then(|v| serde_json::from_value(v["files"].clone()).ok())
        .unwrap_or_default()
}

fn criterion_8() -> Check {
    let mut check = Check::default();
    let Some(bin) = cli_binary() else {
        check.require(false, "asymlab binary not available");
        return check;
    };
    let list = Command::new(&bin).arg("list").output().unwrap();
    let names: Vec<String> = String::from_utf8_lossy(&list.stdout)
        .lines()
        .filter_map(|l| l.split_whitespace().next().map(str::to_string))
        .collect();
    check.require(names.len() >= 6, format!("{} built-in specs", names.len()));
    let scratch = tempfile::tempdir().expect("temporary directory");
    let mut files = 0;
    for name in &names {
        let mut runs = Vec::new();
        for pass in 0..2 {
            let out = scratch.path().join(format!("{name}-{pass}"));
            let status = Command::new(&bin)
                .args(["run", &format!("builtin:{name}"), "--out"])
                .arg(&out)
                .output()
                .unwrap();
            check.require(status.status.success(), format!("{name}: run {pass} failed"));
            runs.push(out);
        }
        let first = manifest_files(&runs[0]);
        check.require(!first.is_empty(), format!("{name}: manifest lists no files"));
        check.require(first == manifest_files(&runs[1]), format!("{name}: manifest hashes differ between runs"));
        for (file, hash) in &first {
            let a = std::fs::read(runs[0].join(file)).unwrap_or_default();
            let b = std::fs::read(runs[1].join(file)).unwrap_or_default();
            check.require(a == b, format!("{name}/{file} differs between runs"));
            check.require(
                sha256_file(&runs[0].join(file)).as_ref() == Some(hash),
                format!("{name}/{file} hash mismatch"),
            );
            files += 1;
        }
        let validate = Command::new(&bin).arg("validate").arg(runs[0].join("manifest.json")).status();
        check.require(validate.is_ok_and(|s| s.success()), format!("{name}: manifest does not verify"));
    }
    check.note(format!("{} specs, {files} files byte-identical", names.len()));
    check
}

/// Name, runtime limit and check.
type Criterion = (&'static str, Duration, fn() -> Check);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 exact algebra", Duration::from_secs(10), criterion_1),
        ("2 block-pair closed forms", Duration::from_secs(30), criterion_2),
        ("3 Helson-Szego ladder", Duration::from_secs(120), criterion_3),
        ("4 model-space suite", Duration::from_secs(30), criterion_4),
        ("5 multiplier density", Duration::from_secs(20), criterion_5),
        ("6 weighted-shift suite", Duration::from_secs(60), criterion_6),
        ("7 Gram-limit oracle", Duration::from_secs(60), criterion_7),
        ("8 CLI determinism", Duration::from_secs(600), criterion_8),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let mut check = run();
        let elapsed = start.elapsed();
        if elapsed > limit {
            check.failures.push(format!("runtime {:.1}s over {}s", elapsed.as_secs_f64(), limit.as_secs()));
        }
        let status = if check.failures.is_empty() { "PASS" } else { "FAIL" };
        let detail = if check.failures.is_empty() {
            check.notes.join("; ")
        } else {
            check.failures.join("; ")
        };
        println!("{status} criterion {name} ({:.2}s): {detail}", elapsed.as_secs_f64());
        if !check.failures.is_empty() {
            failed += 1;
            for n in &check.notes {
                println!("     note: {n}");
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
