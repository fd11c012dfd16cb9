mod common;

use std::collections::BTreeMap;
use std::process::Command;

use iacomp_core::beamforming::Scheme;
use iacomp_core::codec::reported_subcarrier_indices;
use iacomp_core::harness::*;
use iacomp_core::scenario::Preset;

fn small_spec() -> ExperimentSpec {
    ExperimentSpec {
        n_drops: 4,
        n_g_list: vec![1, 2, 8],
        rms_ds_list: vec![0.0, 50e-9],
        quantization: Quantization::Both,
        seed: 21,
        ..Default::default()
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iacomp"))
}

#[test]
fn one_row_per_cell_in_fixed_order() {
    let spec = small_spec();
    let rows = run_drop(&spec, 2).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3 * 5);
    let mut seen = std::collections::HashSet::new();
    for r in &rows {
        assert_eq!(r.drop, 2);
        assert_eq!(r.stream_mcs.len(), r.scheme.streams().len());
        assert!(seen.insert((r.scheme, r.n_g, r.quantized, r.rms_ds.to_bits())));
    }
    assert_eq!(rows, run_drop(&spec, 2).unwrap());
}

#[test]
fn feedback_bits_per_scheme() {
    let spec = ExperimentSpec { n_g_list: vec![1, 38], rms_ds_list: vec![0.0], ..small_spec() };
    for r in run_drop(&spec, 0).unwrap() {
        let n_v = reported_subcarrier_indices(r.n_g, 38).0.len();
        let n_snr = reported_subcarrier_indices(r.n_g, 38).1.len();
        let per_sc = if r.scheme == Scheme::Ia { 126 } else { 144 };
        assert_eq!(r.fb_bits, n_v * per_sc + 2 * 8 + 2 * 4 * n_snr, "{r:?}");
    }
    let n1 = run_drop(&spec, 0).unwrap();
    let ia = n1.iter().find(|r| r.scheme == Scheme::Ia && r.n_g == 1).unwrap();
    assert_eq!(ia.fb_bits, 4956);
    let comp = n1.iter().find(|r| r.scheme == Scheme::Comp && r.n_g == 1).unwrap();
    assert_eq!(comp.fb_bits, 5640);
}

#[test]
fn same_drop_same_channel_for_every_cell() {
    let spec = small_spec();
    assert_eq!(drop_channels(&spec, 1, 50e-9), drop_channels(&spec, 1, 50e-9));
    assert_ne!(drop_channels(&spec, 1, 50e-9), drop_channels(&spec, 2, 50e-9));
    // Gains are drawn once per drop and shared by every delay spread.
    assert_eq!(drop_path_gains(&spec, 3), drop_path_gains(&spec, 3));
    let fixed = ExperimentSpec { preset: None, ..small_spec() };
    assert_eq!(drop_path_gains(&fixed, 3), fixed.scenario.path_gain_db);
}

#[test]
fn flat_channel_tdma_ignores_granularity() {
    let spec = ExperimentSpec { rms_ds_list: vec![0.0], quantization: Quantization::On, ..small_spec() };
    for d in 0..spec.n_drops {
        let rows = run_drop(&spec, d).unwrap();
        let t: Vec<_> = rows.iter().filter(|r| r.scheme == Scheme::TdmaMimo).collect();
        assert_eq!(t[0].stream_mcs, t[1].stream_mcs);
        assert_eq!(t[0].sum_tput, t[1].sum_tput);
    }
}

#[test]
fn unquantized_feedback_is_exact_channel() {
    let spec = small_spec();
    let ch = drop_channels(&spec, 0, 50e-9);
    let big = big_channels(&ch);
    let params = spec.codec_params(1, false);
    let breve = feedback_channels(&big, spec.scenario.sigma_nominal_sq, params, false).unwrap();
    for k in 0..3 {
        for s in 0..38 {
            // S·Vᴴ has the same Gram matrix as the channel.
            let g1 = big[k][s].adjoint() * &big[k][s];
            let g2 = breve[k][s].adjoint() * &breve[k][s];
            let scale = g1.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!((g1 - g2).iter().all(|z| z.norm() <= 1e-12 * scale));
        }
    }
}

#[test]
fn ideal_ia_reaches_full_rate() {
    let mut spec = ExperimentSpec {
        n_drops: 6,
        n_g_list: vec![1],
        rms_ds_list: vec![50e-9],
        quantization: Quantization::Off,
        schemes: vec![Scheme::Ia, Scheme::TdmaMimo],
        preset: Some(Preset::Nlos),
        pilot_noise: false,
        seed: 5,
        ..Default::default()
    };
    spec.scenario.sigma_nominal_sq = 1e-6;
    let out = sweep(&spec).unwrap();
    let ia: Vec<f64> = out.rows.iter().filter(|r| r.scheme == Scheme::Ia).map(|r| r.sum_tput).collect();
    assert!(ia.iter().filter(|&&x| x == 18.0).count() >= 5, "{ia:?}");
}

/// Splits a results.csv by hand and recomputes every cell.
type Cell = (String, usize, String, String);

fn brute_force_summary(text: &str) -> BTreeMap<Cell, (f64, f64, usize)> {
    let mut groups: BTreeMap<(String, usize, String, String), Vec<f64>> = BTreeMap::new();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "drop,scheme,ng,quantized,rms_ds_ns,stream_mcs,sum_tput,fb_bits");
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 8);
        let key = (f[1].to_string(), f[2].parse().unwrap(), f[3].to_string(), f[4].to_string());
        groups.entry(key).or_default().push(f[6].parse().unwrap());
    }
    groups
        .into_iter()
        .map(|(k, v)| {
            let n = v.len() as f64;
            let m = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
            (k, (m, (var / n).sqrt(), v.len()))
        })
        .collect()
}

#[test]
fn aggregation_matches_csv_fold() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec();
    let out = run_and_write(&spec, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let bf = brute_force_summary(&text);
    assert_eq!(bf.len(), out.summary.cells.len());
    for c in &out.summary.cells {
        let key = (c.scheme.to_string(), c.n_g, (c.quantized as u8).to_string(), c.rms_ds_ns.to_string());
        let (m, se, n) = bf[&key];
        assert_eq!(n, spec.n_drops);
        assert!((c.mean - m).abs() < 1e-12);
        assert!((c.stderr - se).abs() < 1e-12);
        let tkey = ("tdma_mimo".to_string(), key.1, key.2.clone(), key.3.clone());
        let tm = bf[&tkey].0;
        match c.gain_vs_tdma {
            Some(g) => assert!((g - (m / tm - 1.0)).abs() < 1e-12),
            None => assert_eq!(tm, 0.0),
        }
    }
    // Round trip through the typed reader.
    let back = read_rows_csv(&dir.path().join("results.csv")).unwrap();
    assert_eq!(back.len(), out.rows.len());
    for (a, b) in back.iter().zip(&out.rows) {
        assert_eq!((a.drop, a.scheme, a.n_g, a.quantized, &a.stream_mcs, a.sum_tput, a.fb_bits), (b.drop, b.scheme, b.n_g, b.quantized, &b.stream_mcs, b.sum_tput, b.fb_bits));
        assert!((a.rms_ds - b.rms_ds).abs() < 1e-18);
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["summary"]["cells"].as_array().unwrap().len(), out.summary.cells.len());
    assert_eq!(json["spec"]["seed"], 21);
}

#[test]
fn single_drop_summary_is_the_row() {
    let spec = ExperimentSpec { n_drops: 1, n_g_list: vec![2], rms_ds_list: vec![25e-9], ..small_spec() };
    let out = sweep(&spec).unwrap();
    for r in &out.rows {
        let c = out.summary.cell(r.scheme, r.n_g, r.quantized, r.rms_ds).unwrap();
        assert_eq!(c.mean, r.sum_tput);
        assert_eq!(c.stderr, 0.0);
    }
}

#[test]
fn spec_validation() {
    assert!(ExperimentSpec::default().validate().is_ok());
    for bad in [
        ExperimentSpec { n_drops: 0, ..Default::default() },
        ExperimentSpec { schemes: vec![], ..Default::default() },
        ExperimentSpec { n_g_list: vec![3], ..Default::default() },
        ExperimentSpec { rms_ds_list: vec![-1.0], ..Default::default() },
        ExperimentSpec { b_psi: 6, ..Default::default() },
    ] {
        assert!(bad.validate().is_err());
    }
    let err = serde_json::from_str::<ExperimentSpec>(r#"{"n_drop": 3}"#).unwrap_err();
    assert!(err.to_string().contains("n_drop"));
    let s: ExperimentSpec = serde_json::from_str(r#"{"n_drops": 3, "quantization": "both", "preset": "los"}"#).unwrap();
    assert_eq!((s.n_drops, s.quantization, s.preset), (3, Quantization::Both, Some(Preset::Los)));
    assert_eq!("off".parse::<Quantization>().unwrap(), Quantization::Off);
    assert!("maybe".parse::<Quantization>().is_err());
}

#[test]
fn convergence_trace_only_for_iterative_schemes() {
    let spec = small_spec();
    let t = convergence_trace(&spec, 0, Scheme::Comp, 5).unwrap();
    assert_eq!(t.trace.len(), t.iterations + 1);
    assert!(convergence_trace(&spec, 0, Scheme::FrSimo, 5).is_err());
    assert!(convergence_trace(&spec, 0, Scheme::Ia, 38).is_err());
}

#[test]
fn cli_missing_config_names_path() {
    let out = bin().args(["run", "--config", "/nonexistent/spec.json"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/nonexistent/spec.json"), "{err}");
}

#[test]
fn cli_rejects_unknown_subcommand_and_flag() {
    let out = bin().arg("fly").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("usage"));
    let out = bin().args(["run", "--bogus"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn cli_codec_selftest_passes() {
    let out = bin().args(["codec-selftest", "--roundtrips", "500"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("passed"));
}

#[test]
fn cli_run_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"n_g_list": [1, 4], "schemes": ["ia", "tdma_mimo"]}"#).unwrap();
    let mut csv = Vec::new();
    for i in 0..2 {
        let out_dir = dir.path().join(format!("o{i}"));
        let st = bin()
            .args(["run", "--config", cfg.to_str().unwrap(), "--drops", "1", "--seed", "7", "--out", out_dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        csv.push(std::fs::read(out_dir.join("results.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
    assert_eq!(String::from_utf8_lossy(&csv[0]).lines().count(), 1 + 2 * 2);
}

#[test]
fn cli_presets_and_convergence() {
    let out = bin().arg("presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("los") && text.contains("nlos") && text.contains("3.20"));

    let out = bin().args(["convergence", "--scheme", "ia", "--subcarrier", "3"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("iteration,leakage,sum_rate,sinr_0,sinr_1,sinr_2"));
    assert!(text.lines().count() >= 2);
}
