//! Scratch probe for tuning acceptance constants (not part of the suite).

use std::time::Instant;

use fskwave::optimizer::{batch_optimize, OptimizerConfig};
use fskwave::stats::{
    approx_psl_cdf, exhaustive_psl_cdf, monte_carlo_psl_cdf, wasserstein1, K0Mode,
    DEFAULT_ENUMERATION_BUDGET,
};
use fskwave::waveform::WaveformSpec;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();

    if which == "tables" || which.is_empty() {
        // published-distance desk check
        for (l, m) in [(4usize, 4usize), (8, 4)] {
            let emp = exhaustive_psl_cdf(l, m, None, DEFAULT_ENUMERATION_BUDGET).unwrap();
            for mode in K0Mode::ALL {
                let approx = approx_psl_cdf(l, m, mode).unwrap();
                let w1 = wasserstein1(&emp, &approx).unwrap();
                println!("L={l} M={m} mode={}: W1 = {w1:.4}", mode.label());
            }
        }
        let t = Instant::now();
        let mc = monte_carlo_psl_cdf(16, 4, 10_000, 42, None).unwrap();
        println!("MC grid CDF L=16 M=4 n=1e4 took {:?}", t.elapsed());
        for mode in K0Mode::ALL {
            let approx = approx_psl_cdf(16, 4, mode).unwrap();
            println!(
                "L=16 M=4 mode={}: W1(grid-MC, approx) = {:.4}",
                mode.label(),
                wasserstein1(&mc, &approx).unwrap()
            );
        }
    }

    if which == "batch" || which.is_empty() {
        let t = Instant::now();
        let spec = WaveformSpec::new(8, 4, 1.0, 1).unwrap();
        let mut cfg = OptimizerConfig::default();
        cfg.seed = 2024;
        let count = spec.family_size().unwrap();
        let indices: Vec<u128> = (0..200u128).map(|i| i * (count / 200) + 7).collect();
        let batch = batch_optimize(&spec, &indices, &cfg).unwrap();
        println!(
            "L=8 M=4 n=200: mean pre {:.4} post {:.4} drop {:.4} ({:?})",
            batch.summary.mean_pre_psl,
            batch.summary.mean_post_psl,
            batch.summary.mean_drop,
            t.elapsed()
        );
    }

    if which == "surface" {
        use fskwave::ambiguity::sampled_af_surface;
        use fskwave::waveform::FskWaveform;
        let spec = WaveformSpec::new(16, 4, 1.0, 1).unwrap();
        let t = Instant::now();
        let n = 50;
        let mut acc = 0.0;
        for i in 0..n as u128 {
            let wf = FskWaveform::from_index(spec, (i * 71_234_567) % spec.family_size().unwrap()).unwrap();
            let surface = sampled_af_surface(&wf, 16).unwrap();
            acc += surface.local_maxima_psl().unwrap() - wf.grid_psl();
        }
        println!(
            "L=16 M=4 ovs=16: {} surfaces in {:?} (mean lm-grid gap {:.5})",
            n,
            t.elapsed(),
            acc / n as f64
        );
    }
}
