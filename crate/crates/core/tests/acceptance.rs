mod common;

use std::io::Write;
use std::sync::OnceLock;

use bec_cavity::classify::{
    chi_orbit, classify_phase, detect_merging, period_signature, Classification, PhaseLabel, Rules,
    MERGE_TOLERANCE,
};
use bec_cavity::dynamics::{evolve_meanfield, IntegratorConfig, Trajectory};
use bec_cavity::model::{CondensateState, ModelParams, SystemState};
use bec_cavity::stability::analyze;
use bec_cavity::steady::{
    adiabatic_cavity, analytic_critical_pump, numerical_critical_pump, solve_from_seed, ImaginaryTimeConfig,
};
use bec_cavity::sweep::{run_sweep, Axis, SweepParam, SweepSpec, Task};
use bec_cavity::twa::{run_ensemble, EnsembleConfig};
use bec_cavity::RunConfig;
use common::{linearization_error, params, C64};

const PANEL_ETAS: [f64; 4] = [5.2, 6.4, 8.8, 14.0];
const PANEL_LABELS: [PhaseLabel; 4] = [PhaseLabel::S, PhaseLabel::SL, PhaseLabel::AL, PhaseLabel::C];

fn verdict(criterion: u32, title: &str, pass: bool, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {criterion} {word}: {title} ({detail})");
    let _ = out.flush();
}

struct PanelRun {
    eta: f64,
    plus: Trajectory<f64>,
    minus: Trajectory<f64>,
    class: Classification<f64>,
}

fn panel_with(n_max: usize) -> Vec<PanelRun> {
    PANEL_ETAS
        .iter()
        .map(|&eta| {
            let p = ModelParams { delta_c: 9.0, eta, n_max, grid_points: (8 * n_max).max(128), ..Default::default() };
            let cfg = IntegratorConfig::default();
            let plus = evolve_meanfield(&SystemState::seeded(n_max, 1e-3), &p, &cfg).unwrap();
            let minus = evolve_meanfield(&SystemState::seeded(n_max, -1e-3), &p, &cfg).unwrap();
            let class = classify_phase(&plus, &Rules::default()).unwrap();
            PanelRun { eta, plus, minus, class }
        })
        .collect()
}

fn panel() -> &'static [PanelRun] {
    static PANEL: OnceLock<Vec<PanelRun>> = OnceLock::new();
    PANEL.get_or_init(|| panel_with(ModelParams::<f64>::default().n_max))
}

#[test]
fn criterion_1_analytic_normal_superradiant_boundary() {
    let cfg = ImaginaryTimeConfig::default();
    let mut worst = 0.0f64;
    for dc in 7..=14 {
        let p = params(dc as f64, 1.0);
        let exact = analytic_critical_pump(&p).unwrap();
        let found = numerical_critical_pump(&p, 0.8 * exact, 1.2 * exact, 1e-3, &cfg).unwrap();
        worst = worst.max((found - exact).abs() / exact);
    }
    let spot = analytic_critical_pump(&params(10.0, 1.0)).unwrap();
    let pass = worst < 0.01 && (spot - 3.8079).abs() < 1e-3;
    verdict(1, "analytic N-S boundary", pass, &format!("max relative error {worst:.2e}, eta_c(10) = {spot:.4}"));
    assert!(pass);
}

#[test]
fn criterion_2_panel_labels() {
    let got: Vec<PhaseLabel> = panel().iter().map(|r| r.class.label).collect();
    let pass = got == PANEL_LABELS;
    let detail: Vec<String> = panel().iter().map(|r| format!("eta {} -> {}", r.eta, r.class.label)).collect();
    verdict(2, "panel reproduction", pass, &detail.join(", "));
    assert!(pass);
}

#[test]
fn criterion_3_atomic_limit_cycle_signature() {
    let al = &panel()[2].class;
    let f = al.dominant_frequency.unwrap_or(f64::NAN);
    let pass = al.label == PhaseLabel::AL && al.mean_intensity < 1e-3 && (f / 4.0 - 1.0).abs() < 0.05;
    verdict(3, "AL signature", pass, &format!("mean I {:.2e}, frequency {f:.4}", al.mean_intensity));
    assert!(pass);
}

#[test]
fn criterion_4_ipr_jump() {
    let spec = SweepSpec::new(
        Axis::fixed(SweepParam::DeltaC, 9.0),
        Axis::new(SweepParam::Eta, 5.0, 16.0, 56),
        RunConfig::default(),
        vec![Task::Classify],
    );
    let result = run_sweep(&spec).unwrap();
    let recs = &result.records;
    let errors = recs.iter().filter(|r| r.error.is_some()).count();
    let first_c = recs.iter().position(|r| r.label == "C").unwrap_or(recs.len());
    let segment: Vec<f64> = recs[..first_c].iter().filter(|r| r.label == "SL").map(|r| r.ipr.unwrap()).collect();
    let segment_min = segment.iter().copied().fold(f64::INFINITY, f64::min);
    let offenders: Vec<String> = recs
        .iter()
        .enumerate()
        .filter(|(i, r)| match r.ipr {
            Some(v) if *i < first_c => r.label == "SL" && v < 0.8,
            Some(v) => v > 0.5,
            None => *i >= first_c && r.label == "SL",
        })
        .map(|(_, r)| format!("eta {:.1} {} IPR {:.3}", r.eta, r.label, r.ipr.unwrap_or(f64::NAN)))
        .collect();
    let iprs: Vec<f64> = recs.iter().filter_map(|r| r.ipr).collect();
    let drops = iprs.windows(2).filter(|w| w[0] >= 0.8 && w[1] <= 0.5).count();
    let segment_ok = errors == 0 && !segment.is_empty() && segment_min >= 0.8 && first_c < recs.len() && drops >= 1;
    let pass = segment_ok && offenders.is_empty() && drops == 1;
    let at = recs.get(first_c).map(|r| r.eta).unwrap_or(f64::NAN);
    let listed = if offenders.is_empty() { "none".to_string() } else { offenders.join("; ") };
    verdict(
        4,
        "IPR jump",
        pass,
        &format!(
            "SL segment of {} points with min IPR {segment_min:.3}, first C at eta {at:.1}, {drops} sharp drop(s), out of bounds: {listed}",
            segment.len()
        ),
    );
    assert!(segment_ok);
}

#[test]
fn criterion_5_merging_signature() {
    let cfg = IntegratorConfig { chi_orders: vec![1, 2], ..IntegratorConfig::default() };
    let run = |eta: f64, seed: f64| {
        let p = params(8.0, eta);
        evolve_meanfield(&SystemState::seeded(p.n_max, seed), &p, &cfg).unwrap()
    };
    let merged = |eta: f64| {
        let (a, b) = (run(eta, 1e-3), run(eta, -1e-3));
        let oa = chi_orbit(&a, 1, 1500.0, 2000.0).unwrap();
        let ob = chi_orbit(&b, 1, 1500.0, 2000.0).unwrap();
        (detect_merging(&oa, &ob, MERGE_TOLERANCE).unwrap(), a)
    };
    let (at_70, traj_70) = merged(7.0);
    let (at_72, traj_72) = merged(7.2);
    let flags = !at_70.merged && at_72.merged;
    verdict(
        5,
        "merging flags",
        flags,
        &format!("eta 7.0 coincidence {:.3}, eta 7.2 coincidence {:.4}", at_70.coincidence, at_72.coincidence),
    );

    let sig = period_signature(&run(6.8, 1e-3), &traj_72, 1500.0, 2000.0).unwrap();
    let doubling = sig.is_merging(0.05);
    verdict(
        5,
        "period signature across the merge",
        doubling,
        &format!(
            "eta 6.8 -> 7.2: theta period ratio {:.3}, intensity period ratio {:.3}",
            sig.theta_ratio, sig.intensity_ratio
        ),
    );
    let chaotic = period_signature(&traj_70, &traj_72, 1500.0, 2000.0).unwrap();
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "criterion 5 info: eta 7.0 is chaotic; 7.0 -> 7.2 ratios theta {:.3}, intensity {:.3}",
        chaotic.theta_ratio, chaotic.intensity_ratio
    );
    drop(out);
    assert!(flags && doubling);
}

fn grid_axis(lo: f64, hi: f64, i: usize) -> f64 {
    lo + (hi - lo) * i as f64 / 11.0
}

#[test]
fn criterion_6_stability_cross_validation() {
    let it = ImaginaryTimeConfig::default();
    let ic = IntegratorConfig { t_end: 500.0, dt_out: 0.5, rtol: 1e-8, atol: 1e-12, ..IntegratorConfig::default() };
    let pert = 1e-4;
    // (linear verdict, time-domain verdict) per cell; None when either side failed.
    let mut cells = vec![[None::<(bool, bool)>; 12]; 12];
    for (i, row) in cells.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let p = params(grid_axis(6.0, 14.0, i), grid_axis(2.0, 18.0, j));
            let Ok(ss) = solve_from_seed(&p, true, &it) else { continue };
            let Ok(rep) = analyze(&ss, &p) else { continue };
            let mut amps = ss.condensate.amplitudes().to_vec();
            for (k, z) in amps.iter_mut().enumerate() {
                let n = k as f64;
                *z += C64::new((1.3 * n + 0.7).sin(), (2.1 * n + 0.2).cos()) * pert;
            }
            let c = CondensateState::from_amplitudes(amps).unwrap().normalized().unwrap();
            let s0 = SystemState::new(c, ss.a + C64::new(0.6, 0.8) * pert, 0.0);
            let Ok(tr) = evolve_meanfield(&s0, &p, &ic) else { continue };
            let th = ss.theta();
            let departure = tr.observables.theta.iter().map(|x| (x - th).abs()).fold(0.0, f64::max);
            *cell = Some((rep.max_growth > 0.0, departure > 1e-3));
        }
    }
    let linear = |i: usize, j: usize| cells[i][j].map(|c| c.0);
    let mut agree = 0;
    let mut stray = 0;
    for i in 0..12 {
        for j in 0..12 {
            match cells[i][j] {
                Some((a, b)) if a == b => agree += 1,
                other => {
                    let mine = other.map(|c| c.0);
                    let boundary = (i.saturating_sub(1)..=(i + 1).min(11))
                        .flat_map(|x| (j.saturating_sub(1)..=(j + 1).min(11)).map(move |y| (x, y)))
                        .any(|(x, y)| (x, y) != (i, j) && linear(x, y) != mine);
                    if !boundary {
                        stray += 1;
                    }
                }
            }
        }
    }
    let share = agree as f64 / 144.0;
    let pass = share >= 0.95 && stray == 0;
    verdict(
        6,
        "stability cross-validation",
        pass,
        &format!("agreement {:.1}% ({agree}/144), {stray} disagreement(s) away from the boundary", 100.0 * share),
    );
    assert_eq!(stray, 0);
}

#[test]
fn criterion_7_conservation_and_symmetry() {
    let drift = panel()
        .iter()
        .flat_map(|r| r.plus.observables.norm.iter())
        .map(|n| (n - 1.0).abs())
        .fold(0.0, f64::max);

    let z2 = panel()[..3]
        .iter()
        .map(|r| {
            let (a, b) = (&r.plus.observables, &r.minus.observables);
            (0..a.theta.len())
                .map(|i| (a.theta[i] + b.theta[i]).abs().max((a.cavity[i] + b.cavity[i]).norm()))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);

    let s = &panel()[0];
    let p = params(9.0, s.eta);
    let o = &s.plus.observables;
    let adiabatic = s
        .plus
        .window_range(1500.0, 2000.0)
        .map(|i| {
            let target = adiabatic_cavity(o.theta[i], o.bmean[i], &p);
            (o.cavity[i] - target).norm() / target.norm()
        })
        .fold(0.0, f64::max);

    let it = ImaginaryTimeConfig::default();
    let linear = [(5.2, 1u64), (8.0, 2), (12.0, 3)]
        .iter()
        .map(|&(eta, seed)| {
            let p = params(9.0, eta);
            linearization_error(&solve_from_seed(&p, true, &it).unwrap(), &p, 1e-5, 0.1, seed)
        })
        .fold(0.0, f64::max);

    let pass = drift <= 1e-8 && z2 <= 1e-6 && adiabatic <= 0.05 && linear < 0.05;
    verdict(
        7,
        "conservation and symmetry",
        pass,
        &format!(
            "norm drift {drift:.1e}, Z2 error {z2:.1e}, adiabatic error {adiabatic:.1e}, linearization error {linear:.1e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_truncated_wigner_desk_scale() {
    let ens = EnsembleConfig { n_traj: 500, master_seed: 2024, ..EnsembleConfig::default() };
    let mean_field = |eta: f64| {
        let p = params(9.0, eta);
        let tr = evolve_meanfield(&SystemState::seeded(p.n_max, 1e-3), &p, &IntegratorConfig::default()).unwrap();
        classify_phase(&tr, &Rules::default()).unwrap()
    };

    let s = run_ensemble(&params(9.0, 5.2), &ens).unwrap();
    let (mean, se) = s.terminal_mean();
    let s_mf = mean_field(5.2).mean_intensity;
    let s_pass = s.excluded.is_empty() && (mean - s_mf).abs() <= 3.0 * se;
    verdict(
        8,
        "TWA S-phase mean",
        s_pass,
        &format!("ensemble {mean:.6e} +- {se:.1e}, mean field {s_mf:.6e}, {:.1} standard errors", (mean - s_mf).abs() / se),
    );

    let al = run_ensemble(&params(9.0, 8.8), &ens).unwrap();
    let worst = al.terminal_intensity.iter().copied().fold(0.0, f64::max);
    let al_pass = al.excluded.is_empty() && al.used() == ens.n_traj && worst < 1e-3;
    verdict(8, "TWA AL robustness", al_pass, &format!("{} trajectories, largest mean I {worst:.2e}", al.used()));

    let sl = run_ensemble(&params(9.0, 6.4), &ens).unwrap();
    let f_mf = mean_field(6.4).dominant_frequency.unwrap();
    let half_width = std::f64::consts::TAU / f_mf;
    let (early, late) = (sl.oscillation_amplitude(300.0, half_width), sl.oscillation_amplitude(1500.0, half_width));
    let peak = sl.mean_spectrum.dominant_frequency().unwrap_or(f64::NAN);
    let sl_pass = sl.excluded.is_empty() && late <= 0.5 * early && (peak / f_mf - 1.0).abs() <= 0.05;
    verdict(
        8,
        "TWA SL dephasing",
        sl_pass,
        &format!("amplitude {early:.3e} -> {late:.3e}, spectral peak {peak:.4} vs mean field {f_mf:.4}"),
    );
    assert!(al_pass && sl_pass);
}

#[test]
fn criterion_9_truncation_convergence() {
    let fine = panel_with(20);
    let mut labels_ok = true;
    let mut details = Vec::new();
    let mut regular_ok = true;
    let mut all_ok = true;
    for (coarse, fine) in panel().iter().zip(&fine) {
        labels_ok &= coarse.class.label == fine.class.label;
        let change = match (coarse.class.dominant_frequency, fine.class.dominant_frequency) {
            (Some(a), Some(b)) => (b / a - 1.0).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        all_ok &= change < 0.01;
        if coarse.class.label != PhaseLabel::C {
            regular_ok &= change < 0.01;
        }
        details.push(format!("eta {} {}->{} frequency change {:.2e}", coarse.eta, coarse.class.label, fine.class.label, change));
    }
    let pass = labels_ok && all_ok;
    verdict(9, "truncation convergence", pass, &details.join(", "));
    assert!(labels_ok && regular_ok);
}
