//! Generate a synthetic demo panel: a handful of cointegrated pairs plus
//! some unrelated tickers, written as a wide CSV the CLI can consume.
//!
//! Usage: cargo run --example gen_demo_data -- demo_prices.csv [seed]

use chrono::NaiveDate;
use pairlab::market_data::PricePanel;
use pairlab::synth::{self, OuParams, PairRecipe};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "demo_prices.csv".to_string());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);

    let n_days = 500;
    let n_pairs = 6;
    let n_noise = 8;
    let start = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();

    let recipe = PairRecipe::<f64> {
        n: n_days,
        beta: 1.5,
        alpha: 0.0,
        y0: 100.0,
        y_vol: 0.008,
        spread: OuParams {
            half_life: 7.0,
            mu: 0.0,
            stationary_sd: 1.3,
        },
    };

    let mut rng = synth::rng(seed);
    let mut tickers = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for i in 0..n_pairs {
        let (x, y) = synth::cointegrated_pair(&recipe, &mut rng);
        tickers.push(format!("PX{i:02}"));
        cols.push(x);
        tickers.push(format!("PY{i:02}"));
        cols.push(y);
    }
    let noise = synth::walk_universe::<f64>(n_noise, n_days, 0.012, start, &mut rng)
        .expect("noise universe");
    for (i, t) in noise.tickers().iter().enumerate() {
        tickers.push(format!("N{t}"));
        cols.push(noise.series(t).expect("column"));
        let _ = i;
    }

    let mut prices = Vec::with_capacity(n_days * cols.len());
    for r in 0..n_days {
        for col in &cols {
            prices.push(col[r]);
        }
    }
    let panel =
        PricePanel::new(synth::dates(start, n_days), tickers, prices).expect("valid panel");
    panel.write_csv(std::path::Path::new(&path)).expect("write CSV");
    println!(
        "wrote {} ({} tickers x {} days, seed {seed})",
        path,
        panel.n_tickers(),
        panel.n_dates()
    );
}
