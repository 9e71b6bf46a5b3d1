use std::sync::Arc;

use proptest::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use twin_core::sim::{self, DOF_MODELS};
use twin_core::{Catalog, FaultRates, SimConfig, SimState, TelemetryRecord, TimeSeriesStore};

fn series(records: &[TelemetryRecord], name: &str) -> Vec<f64> {
    let id = Catalog::builtin().id(name).unwrap();
    records.iter().filter(|r| r.parameter == id).map(|r| r.value).collect()
}

#[test]
fn spike_rate_matches_binomial_expectation() {
    let mut cfg = SimConfig::default();
    cfg.faults = FaultRates { spike: 0.01, ..FaultRates::default() };
    let records = sim::generate(&cfg, 600).unwrap();
    assert!(records.len() >= 10_000);
    let cat = Catalog::builtin();
    let spikes = records[..10_000]
        .iter()
        .filter(|r| !cat.is_physical_id(r.parameter, r.value))
        .count() as f64;
    let (n, p) = (10_000.0f64, 0.01);
    let sigma = (n * p * (1.0 - p)).sqrt();
    assert!((spikes - n * p).abs() <= 3.0 * sigma, "{spikes} spikes");
}

#[test]
fn clean_stream_ingests_without_rejections() {
    let records = sim::generate(&SimConfig::default(), 3600).unwrap();
    let mut store = TimeSeriesStore::new(Catalog::builtin());
    let report = store.ingest_batch(&records);
    assert_eq!(report.rejected_unphysical, 0);
    assert_eq!(report.deduplicated, 0);
    assert_eq!(report.accepted, records.len());
}

#[test]
fn energy_counter_integrates_active_power() {
    let mut cfg = SimConfig::default();
    cfg.wind.mean = 11.0;
    let records = sim::generate(&cfg, 2 * 3600).unwrap();
    let power_id = Catalog::builtin().id("WTUR.ActivePower").unwrap();
    let energy_id = Catalog::builtin().id("WAVL.AccumulatedEnergy").unwrap();
    let energy: Vec<_> = records.iter().filter(|r| r.parameter == energy_id).collect();
    // Windows of 1 h and 1.5 h starting at different counter samples.
    for (a, b) in [(0, 900), (100, 1000), (0, 1350)] {
        let (e0, e1) = (energy[a], energy[b]);
        let integral: f64 = records
            .iter()
            .filter(|r| r.parameter == power_id && r.timestamp > e0.timestamp && r.timestamp <= e1.timestamp)
            .map(|r| r.value / 3600.0)
            .sum();
        let counted = e1.value - e0.value;
        assert!(integral > 0.0);
        assert!((counted - integral).abs() <= 0.01 * integral, "{counted} vs {integral}");
    }
}

const DOF_NAMES: [&str; 6] = ["WTOW.Surge", "WTOW.Sway", "WTOW.Heave", "WTOW.Roll", "WTOW.Pitch", "WTOW.Yaw"];

#[test]
fn tower_motion_is_bounded_by_wave_amplitudes() {
    for mean in [6.0, 12.0, 20.0] {
        let mut cfg = SimConfig::default();
        cfg.wind.mean = mean;
        let amp: f64 = cfg.waves.iter().map(|w| w.amplitude).sum();
        let records = sim::generate(&cfg, 3600).unwrap();
        for (name, model) in DOF_NAMES.iter().zip(DOF_MODELS) {
            // Thrust is normalized to at most 1.
            let bound = model.scale * amp + model.thrust_coupling.abs();
            for v in series(&records, name) {
                assert!(v.abs() <= bound, "{name} = {v} exceeds {bound}");
            }
        }
    }
}

fn dominant_period(signal: &[f64], min_freq: f64) -> (f64, f64) {
    let n = signal.len();
    let mean = signal.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bin = 1.0 / n as f64;
    let (k, _) = buf[1..n / 2]
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1, c.norm()))
        .filter(|&(i, _)| i as f64 * bin >= min_freq)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    (k as f64 * bin, bin)
}

#[test]
fn tower_spectra_peak_at_wave_periods() {
    let cfg = SimConfig::default();
    let records = sim::generate(&cfg, 3600).unwrap();
    let wave_freqs: Vec<f64> = cfg.waves.iter().map(|w| 1.0 / w.period).collect();
    for (name, model) in DOF_NAMES.iter().zip(DOF_MODELS) {
        let signal = series(&records, name);
        assert_eq!(signal.len(), 3600);
        // Thrust-coupled motions also carry slow drift; look in the wave band.
        let min_freq = if model.thrust_coupling != 0.0 { 1.0 / 30.0 } else { 0.0 };
        let (freq, bin) = dominant_period(&signal, min_freq);
        assert!(
            wave_freqs.iter().any(|f| (f - freq).abs() <= bin),
            "{name} peaks at {:.2} s",
            1.0 / freq
        );
    }
}

#[test]
fn wind_speed_is_strongly_autocorrelated() {
    let cfg = SimConfig::default();
    let mut state = SimState::new(&cfg, Catalog::builtin()).unwrap();
    let mut xs = Vec::with_capacity(6 * 3600);
    for _ in 0..6 * 3600 {
        state = sim::step(&state, &cfg, 1).0;
        xs.push(state.wind_speed);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    assert!(cov / var > 0.9, "lag-1 autocorrelation {}", cov / var);
}

#[test]
fn hourly_steps_keep_slow_statistics() {
    let cfg = SimConfig::default();
    let hourly = sim::generate_with_step(&cfg, 30 * 86_400, 3600).unwrap();
    let wind = series(&hourly, "WMET.WindSpeed");
    assert_eq!(wind.len(), 30 * 24);
    let mean = wind.iter().sum::<f64>() / wind.len() as f64;
    assert!((mean - cfg.wind.mean).abs() < 3.0, "mean {mean}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn clean_runs_never_emit_unphysical_values(seed in any::<u64>(), mean in 0.0f64..30.0, secs in 1u64..400) {
        let mut cfg = SimConfig::default();
        cfg.seed = seed;
        cfg.wind.mean = mean;
        let catalog: Arc<Catalog> = Catalog::builtin();
        let mut store = TimeSeriesStore::new(catalog);
        let report = store.ingest_batch(&sim::generate(&cfg, secs).unwrap());
        prop_assert_eq!(report.rejected_unphysical, 0);
    }

    #[test]
    fn generation_is_reproducible(seed in any::<u64>(), secs in 1u64..120) {
        let mut cfg = SimConfig::default();
        cfg.seed = seed;
        cfg.faults = FaultRates { gap: 0.02, duplicate: 0.02, spike: 0.02, reorder: 0.02 };
        prop_assert_eq!(sim::generate(&cfg, secs).unwrap(), sim::generate(&cfg, secs).unwrap());
    }
}
