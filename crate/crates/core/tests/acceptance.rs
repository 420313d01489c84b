//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qubit_revival::dynamics::{
    expected_excitations, Frame, ModelKind, ModelParams, System, TimeGrid,
};
use qubit_revival::measures::{
    basin_scan, concurrence_and_tangle, linear_entropy, reduced_two_qubit_density, swap_qubits,
    DiagnosticsRecord,
};
use qubit_revival::mismatch::gaussian_weight_grid;
use qubit_revival::qalg::{
    hermitian_residual, partial_trace, ComplexMatrix, ComplexVector, EigenSystem, TensorLayout, C64,
};
use qubit_revival::scenario::{
    field_spin_deviation, preset_text, run_on_grid, run_scenario_detailed, ScenarioConfig,
    ScenarioRun, TimeSeries, PRESET_NAMES,
};

struct Line {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

type Criterion = Box<dyn FnOnce(&mut Runs) -> Line>;

#[derive(Default)]
struct Runs(BTreeMap<String, (ScenarioRun, Duration)>);

impl Runs {
    fn get(&mut self, name: &str) -> &(ScenarioRun, Duration) {
        if !self.0.contains_key(name) {
            let config = ScenarioConfig::preset(name).expect("preset");
            let start = Instant::now();
            let run = run_scenario_detailed(&config).expect("preset runs");
            self.0.insert(name.to_string(), (run, start.elapsed()));
        }
        &self.0[name]
    }

    fn elapsed(&mut self, names: &[&str]) -> Duration {
        names.iter().map(|n| self.get(n).1).sum()
    }
}

/// Diagnostics at exactly `t_r / 4` and `3 t_r / 4`.
fn attractor_records(config: &ScenarioConfig) -> (DiagnosticsRecord, DiagnosticsRecord) {
    let tr = config.revival_estimate().unwrap().t_revival;
    let grid = TimeGrid::new(vec![0.0, 0.25 * tr, 0.75 * tr]).unwrap();
    let r = run_on_grid(config, &grid).unwrap().series.records;
    (r[1], r[2])
}

fn window_max(series: &TimeSeries, column: &str, from: f64, to: f64) -> f64 {
    series
        .window(from, to)
        .map(|r| r.column(column).unwrap())
        .fold(0.0, f64::max)
}

/// Longest contiguous run of concurrence `< 1e-8`, as `(start, end)` times.
fn longest_zero_run(series: &TimeSeries) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    let mut start: Option<f64> = None;
    let mut last = 0.0;
    for r in &series.records {
        if r.concurrence < 1e-8 {
            start.get_or_insert(r.t);
            last = r.t;
        } else if let Some(s) = start.take() {
            if best.is_none_or(|(a, b)| last - s > b - a) {
                best = Some((s, last));
            }
        }
    }
    if let Some(s) = start {
        if best.is_none_or(|(a, b)| last - s > b - a) {
            best = Some((s, last));
        }
    }
    best
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

fn attractor_reproduction(
    runs: &mut Runs,
    preset: &str,
    budget: Duration,
    single_thread: bool,
) -> (bool, String, DiagnosticsRecord) {
    let config = ScenarioConfig::preset(preset).unwrap();
    let start = Instant::now();
    let (run, (quarter, three_quarter)) = if single_thread {
        single_threaded(|| (run_scenario_detailed(&config).unwrap(), attractor_records(&config)))
    } else {
        (run_scenario_detailed(&config).unwrap(), attractor_records(&config))
    };
    let elapsed = start.elapsed();
    let tr = run.estimate.t_revival;
    let tau0 = run.series.records[0].tangle;
    let peak = window_max(&run.series, "tangle", 0.4 * tr, 0.6 * tr);
    let checks = [
        (tau0 - 1.0).abs() <= 1e-9,
        quarter.tangle < 0.05,
        quarter.p_att_plus > 0.9,
        quarter.s_lin < 0.1,
        peak > 0.5,
        elapsed < budget,
    ];
    let detail = format!(
        "t_r={tr:.4}; tau(0)-1={:.1e} [|.|<=1e-9 {}]; at t_r/4: tau={:.2e} [<0.05 {}], P+={:.4} [>0.9 {}], S_L={:.4} [<0.1 {}]; revival-window tangle peak={:.4} [>0.5 {}]; runtime {:.1}s [<{}s {}]",
        tau0 - 1.0,
        mark(checks[0]),
        quarter.tangle,
        mark(checks[1]),
        quarter.p_att_plus,
        mark(checks[2]),
        quarter.s_lin,
        mark(checks[3]),
        peak,
        mark(checks[4]),
        elapsed.as_secs_f64(),
        budget.as_secs(),
        mark(checks[5]),
    );
    runs.0.insert(preset.to_string(), (run, elapsed));
    (checks.iter().all(|c| *c), detail, three_quarter)
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn criterion_1(runs: &mut Runs) -> Line {
    let (pass, detail, _) = attractor_reproduction(runs, "fig1", Duration::from_secs(30), true);
    Line {
        id: "1",
        title: "field mode, Bell state (preset fig1)",
        pass,
        detail,
    }
}

fn sudden_death(series: &TimeSeries, tr: f64) -> (bool, String) {
    match longest_zero_run(series) {
        None => (false, "no zero-concurrence interval".into()),
        Some((a, b)) => {
            let before = window_max(series, "concurrence", 0.0, a);
            let after = window_max(series, "concurrence", b, f64::INFINITY);
            let ok = b - a > 0.05 * tr && before > 1e-8 && after > 1e-8;
            (
                ok,
                format!(
                    "longest C<1e-8 interval [{:.3}, {:.3}] t_r, length {:.4} t_r [>0.05 {}]; peak before {:.4}, after {:.4} [>1e-8 {}]",
                    a / tr,
                    b / tr,
                    (b - a) / tr,
                    mark(b - a > 0.05 * tr),
                    before,
                    after,
                    mark(before > 1e-8 && after > 1e-8)
                ),
            )
        }
    }
}

fn criterion_2(runs: &mut Runs) -> Line {
    let (run, elapsed) = runs.get("fig2");
    let (ok, detail) = sudden_death(&run.series, run.estimate.t_revival);
    let fast = *elapsed < Duration::from_secs(30);
    Line {
        id: "2",
        title: "field mode, out-of-basin state (preset fig2)",
        pass: ok && fast,
        detail: format!(
            "{detail}; runtime {:.1}s [<30s {}]",
            elapsed.as_secs_f64(),
            mark(fast)
        ),
    }
}

fn criterion_3(runs: &mut Runs) -> Line {
    let (pass, detail, three) = attractor_reproduction(runs, "fig4", Duration::from_secs(60), false);
    let p_ok = three.p_att_plus < 0.1;
    let purity = 1.0 - three.s_lin;
    let purity_ok = purity > 0.85;
    Line {
        id: "3",
        title: "composite spin, Bell state (preset fig4)",
        pass: pass && p_ok && purity_ok,
        detail: format!(
            "{detail}; at 3t_r/4: P+={:.4} [<0.1 {}], purity={:.4} [>0.85 {}]",
            three.p_att_plus,
            mark(p_ok),
            purity,
            mark(purity_ok)
        ),
    }
}

fn criterion_4(runs: &mut Runs) -> Line {
    let (run, _) = runs.get("fig5");
    let tr = run.estimate.t_revival;
    let (death, detail) = sudden_death(&run.series, tr);
    let first = window_max(&run.series, "concurrence", 0.2 * tr, 0.3 * tr);
    let second = window_max(&run.series, "concurrence", 0.7 * tr, 0.8 * tr);
    Line {
        id: "4",
        title: "composite spin, out-of-basin state (preset fig5)",
        pass: death && first > 0.05 && second > 0.05,
        detail: format!(
            "{detail}; C peak in [0.2,0.3] t_r={first:.4} [>0.05 {}]; C peak in [0.7,0.8] t_r={second:.4} [>0.05 {}]",
            mark(first > 0.05),
            mark(second > 0.05)
        ),
    }
}

fn criterion_5(runs: &mut Runs) -> Line {
    let families: [(&str, [&str; 4], &str); 3] = [
        ("field", ["fig1", "fig6a", "fig6b", "fig6c"], "tangle"),
        ("spin", ["fig4", "fig7a", "fig7b", "fig7c"], "tangle"),
        ("spin out-of-basin", ["fig5", "fig8a", "fig8b", "fig8c"], "concurrence"),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, names, column) in families {
        let elapsed = runs.elapsed(&names);
        let mut peaks = Vec::new();
        let mut taus = Vec::new();
        let mut s_quarter = Vec::new();
        let mut s_three = Vec::new();
        let mut members = Vec::new();
        for name in names {
            let (run, _) = runs.get(name);
            let tr = run.estimate.t_revival;
            peaks.push(window_max(&run.series, column, 0.4 * tr, 0.6 * tr));
            members.push(run.sample_count);
            let (q, t) = attractor_records(&ScenarioConfig::preset(name).unwrap());
            taus.push(q.tangle.max(t.tangle));
            s_quarter.push(q.s_lin);
            s_three.push(t.s_lin);
        }
        let monotone = peaks.windows(2).all(|w| w[1] <= w[0]);
        let unentangled = taus.iter().all(|t| *t < 0.05);
        let rising = |s: &[f64]| s.windows(2).all(|w| w[1] > w[0]);
        let entropy = rising(&s_quarter) && rising(&s_three);
        let fast = elapsed < Duration::from_secs(600);
        pass &= monotone && unentangled && entropy && fast;
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(",");
        parts.push(format!(
            "{label} (delta width 0,0.1,0.3,0.5; members {:?}): revival {column} peaks {} [non-increasing {}]; max attractor tangle {} [<0.05 {}]; S_L at t_r/4 {} and 3t_r/4 {} [increasing {}]; runtime {:.1}s [<600s {}]",
            members,
            fmt(&peaks),
            mark(monotone),
            fmt(&taus),
            mark(unentangled),
            fmt(&s_quarter),
            fmt(&s_three),
            mark(entropy),
            elapsed.as_secs_f64(),
            mark(fast)
        ));
    }
    Line {
        id: "5",
        title: "decoherence suppression across mismatch widths",
        pass,
        detail: parts.join(" | "),
    }
}

fn criterion_6(runs: &mut Runs) -> Line {
    let start = Instant::now();
    let (low, _) = runs.get("fig9b");
    let tr = low.estimate.t_revival;
    let low_peak = window_max(&low.series, "tangle", 0.4 * tr, 0.6 * tr);
    let wide_text = preset_text("fig9c").unwrap().replace("delta_width=0.3", "delta_width=0.5");
    let wide = run_scenario_detailed(&ScenarioConfig::parse(&wide_text).unwrap()).unwrap();
    let wide_peak = window_max(&wide.series, "tangle", 0.4 * tr, 0.6 * tr);
    let elapsed = start.elapsed() + runs.get("fig9b").1;
    let fast = elapsed < Duration::from_secs(120);
    Line {
        id: "6",
        title: "small composite spin robustness (N=25, |zeta|^2=9)",
        pass: low_peak > 0.1 && wide_peak < 0.05 && fast,
        detail: format!(
            "t_r={tr:.4}; revival-window tangle peak at width 0.1={low_peak:.4} [>0.1 {}], at width 0.5={wide_peak:.4} [<0.05 {}]; runtime {:.1}s [<120s {}]",
            mark(low_peak > 0.1),
            mark(wide_peak < 0.05),
            elapsed.as_secs_f64(),
            mark(fast)
        ),
    }
}

fn criterion_7() -> Line {
    let points = basin_scan(75, 144).unwrap();
    let zeros: Vec<_> = points.iter().filter(|p| p.tangle < 1e-6).collect();
    let on_axis = |chi: f64| zeros.iter().any(|p| (p.r - 0.5).abs() < 1e-12 && (chi - p.chi).abs() < 1e-12);
    let zeros_ok = zeros.len() == 2 && on_axis(0.0) && on_axis(PI);
    let origin = points
        .iter()
        .filter(|p| p.r == 0.0)
        .map(|p| (p.tangle - 1.0).abs())
        .fold(0.0, f64::max);
    let edge = points
        .iter()
        .find(|p| (p.r - FRAC_1_SQRT_2).abs() < 1e-15 && p.chi == 0.0)
        .map(|p| (p.tangle - 1.0).abs())
        .unwrap_or(f64::INFINITY);
    let ends_ok = origin <= 1e-9 && edge <= 1e-9;
    let listed: Vec<String> = zeros
        .iter()
        .map(|p| format!("(r={:.4}, chi={:.4})", p.r, p.chi))
        .collect();
    Line {
        id: "7",
        title: "basin surface on the 75x144 grid",
        pass: zeros_ok && ends_ok,
        detail: format!(
            "{} points; tau<1e-6 at {} [exactly a=+-1/2 {}]; |tau-1| at a=0: {origin:.1e}, at a=1/sqrt2: {edge:.1e} [<=1e-9 {}]",
            points.len(),
            listed.join(" "),
            mark(zeros_ok),
            mark(ends_ok)
        ),
    }
}

fn random_pure_two_qubit(rng: &mut impl Rng) -> ComplexVector {
    let v = ComplexVector::from_fn(4, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

fn criterion_8() -> Line {
    // (a) Werner states p |Phi+><Phi+| + (1 - p) I/4: C = max(0, (3p - 1)/2).
    let phi = ComplexVector::from_column_slice(&[
        C64::new(FRAC_1_SQRT_2, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(FRAC_1_SQRT_2, 0.0),
    ]);
    let bell = &phi * phi.adjoint();
    let werner = (0..=5)
        .map(|k| {
            let p = 0.2 * k as f64;
            let rho = bell.map(|z| z * p) + ComplexMatrix::identity(4, 4).map(|z| z * (0.25 * (1.0 - p)));
            let c = concurrence_and_tangle(&rho).unwrap().concurrence;
            (c - (1.5 * p - 0.5).max(0.0)).abs()
        })
        .fold(0.0, f64::max);

    // (b) Pure states: tau = 4 det(Tr_B |psi><psi|).
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let layout = TensorLayout::new(vec![2, 2]).unwrap();
    let pure = (0..1000)
        .map(|_| {
            let psi = random_pure_two_qubit(&mut rng);
            let rho = &psi * psi.adjoint();
            let a = partial_trace(&rho, &layout, &[0]).unwrap();
            let det = (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]).re;
            (concurrence_and_tangle(&rho).unwrap().tangle - 4.0 * det).abs()
        })
        .fold(0.0, f64::max);

    // (c) Dicke-ladder model against the full tensor product of N spins.
    let times: Vec<f64> = (0..120).map(|k| k as f64 * 0.125).collect();
    let qubits = [
        C64::new(0.6, 0.0),
        C64::new(0.0, 0.48),
        C64::new(0.0, 0.0),
        C64::new(0.64, 0.0),
    ];
    let mut symmetric = 0.0f64;
    for n_spins in 1..=10 {
        let params = ModelParams::new(
            ModelKind::Spin { n_spins },
            1.0,
            vec![1.0, 1.15],
            vec![1.0, 0.8],
        )
        .unwrap();
        let zeta2 = 0.4 * n_spins as f64;
        let full = common::full_tensor_p_ee(&params, &qubits, zeta2, 0.3, &times);
        let sym = common::symmetric_p_ee(&params, &qubits, zeta2, 0.3, &times);
        symmetric = symmetric.max(common::max_abs_diff(&full, &sym));
    }

    let ok = [werner < 1e-9, pure < 1e-9, symmetric < 1e-8];
    Line {
        id: "8",
        title: "oracle equivalences",
        pass: ok.iter().all(|c| *c),
        detail: format!(
            "(a) Werner concurrence max error {werner:.1e} [<1e-9 {}]; (b) tau vs 4 det over 1000 random states {pure:.1e} [<1e-9 {}]; (c) symmetric vs full tensor P_ee, N=1..10, {symmetric:.1e} [<1e-8 {}]",
            mark(ok[0]),
            mark(ok[1]),
            mark(ok[2])
        ),
    }
}

#[derive(Default)]
struct InvariantTally {
    unitarity: f64,
    conservation: f64,
    trace: f64,
    hermiticity: f64,
    min_eigenvalue: f64,
    swap: f64,
    swap_restoration: f64,
    mixing_deficit: f64,
}

fn check_preset(name: &str, run: &ScenarioRun, tally: &mut InvariantTally) {
    let config = ScenarioConfig::preset(name).unwrap();
    for rho in &run.densities {
        let tr: C64 = rho.diagonal().iter().sum();
        tally.trace = tally.trace.max((tr - C64::new(1.0, 0.0)).norm());
        tally.hermiticity = tally.hermiticity.max(hermitian_residual(rho));
        let min = EigenSystem::hermitian(rho).unwrap().eigenvalues[0];
        tally.min_eigenvalue = tally.min_eigenvalue.min(min);
        let swap = (swap_qubits(rho) - rho).camax();
        if config.delta_width == 0.0 {
            tally.swap = tally.swap.max(swap);
        } else {
            tally.swap_restoration = tally.swap_restoration.max(swap);
        }
    }

    // Members on a coarse subgrid: unitarity, conservation, mixing.
    let times = run.series.times();
    let stride = times.len().div_ceil(24);
    let sub: Vec<usize> = (0..times.len()).step_by(stride).collect();
    let base = config.model_params().unwrap();
    let psi0 = config.initial_state().unwrap();
    let ensemble = gaussian_weight_grid(config.delta_width, run.sample_count.max(1)).unwrap();
    let mut mean_entropy = vec![0.0; sub.len()];
    for (delta, weight) in ensemble.members() {
        let system = System::new(base.with_mismatch(delta).unwrap()).unwrap();
        let spec = system.spec();
        let traj = system.trajectory(&psi0, Frame::Rotating).unwrap();
        let n0 = expected_excitations(&spec, &psi0);
        for (slot, &i) in sub.iter().enumerate() {
            let psi = traj.state_at(times[i]);
            tally.unitarity = tally.unitarity.max((psi.norm_squared() - 1.0).abs());
            tally.conservation = tally.conservation.max((expected_excitations(&spec, &psi) - n0).abs());
            let rho = reduced_two_qubit_density(&psi, &spec).unwrap();
            mean_entropy[slot] += weight * linear_entropy(&rho);
        }
    }
    for (slot, &i) in sub.iter().enumerate() {
        let deficit = mean_entropy[slot] - linear_entropy(&run.densities[i]);
        tally.mixing_deficit = tally.mixing_deficit.max(deficit);
    }
}

fn criterion_9(runs: &mut Runs) -> Line {
    let mut tally = InvariantTally::default();
    for name in PRESET_NAMES {
        runs.get(name);
        check_preset(name, &runs.0[name].0, &mut tally);
    }
    let t = &tally;
    let checks = [
        ("unitarity |norm^2-1|", t.unitarity, t.unitarity < 1e-9, "<1e-9"),
        ("excitation drift", t.conservation, t.conservation < 1e-8, "<1e-8"),
        ("|trace-1|", t.trace, t.trace <= 1e-10, "<=1e-10"),
        ("Hermitian residual", t.hermiticity, t.hermiticity <= 1e-10, "<=1e-10"),
        ("min eigenvalue", t.min_eigenvalue, t.min_eigenvalue >= -1e-10, ">=-1e-10"),
        ("swap asymmetry (identical couplings)", t.swap, t.swap <= 1e-9, "<=1e-9"),
        ("swap asymmetry of ensemble averages", t.swap_restoration, t.swap_restoration <= 1e-9, "<=1e-9"),
        ("mixing entropy deficit", t.mixing_deficit, t.mixing_deficit <= 1e-12, "<=1e-12"),
    ];
    Line {
        id: "9",
        title: "structural invariants on every preset",
        pass: checks.iter().all(|c| c.2),
        detail: checks
            .iter()
            .map(|(name, v, ok, bound)| format!("{name} {v:.1e} [{bound} {}]", mark(*ok)))
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn criterion_10() -> Line {
    let start = Instant::now();
    let deviations: Vec<f64> = [150, 600, 2400]
        .iter()
        .map(|&n| field_spin_deviation(25.0, n, 1.0, 1200).unwrap())
        .collect();
    let elapsed = start.elapsed();
    let decreasing = deviations.windows(2).all(|w| w[1] < w[0]);
    let fast = elapsed < Duration::from_secs(300);
    Line {
        id: "10",
        title: "field/spin correspondence, N = 150, 600, 2400",
        pass: decreasing && fast,
        detail: format!(
            "max |P_ee spin - P_ee field| on [0, t_r/2]: {:.4}, {:.4}, {:.4} [decreasing {}]; runtime {:.1}s [<300s {}]",
            deviations[0],
            deviations[1],
            deviations[2],
            mark(decreasing),
            elapsed.as_secs_f64(),
            mark(fast)
        ),
    }
}

fn main() {
    let mut runs = Runs::default();
    let criteria: Vec<Criterion> = vec![
        Box::new(criterion_1),
        Box::new(criterion_2),
        Box::new(criterion_3),
        Box::new(criterion_4),
        Box::new(criterion_5),
        Box::new(criterion_6),
        Box::new(|_| criterion_7()),
        Box::new(|_| criterion_8()),
        Box::new(criterion_9),
        Box::new(|_| criterion_10()),
    ];
    let mut failed = Vec::new();
    for criterion in criteria {
        let line = criterion(&mut runs);
        println!(
            "{} criterion {:>2} {}: {}",
            if line.pass { "PASS" } else { "FAIL" },
            line.id,
            line.title,
            line.detail
        );
        if !line.pass {
            failed.push(line.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {}", failed.join(", "));
        std::process::exit(1);
    }
}
