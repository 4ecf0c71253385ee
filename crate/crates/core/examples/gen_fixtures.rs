//! Regenerates the bundled synthetic fixtures under `data/fixtures/`.
//!
//! `cargo run -p stagefreq --example gen_fixtures [-- <dir>]`

use std::fs::{self, File};
use std::path::PathBuf;

use stagefreq::ingest::AnnualMaximaSeries;
use stagefreq::synthetic::{self, StationRecipe};

fn series_from(values: Vec<f64>, first_year: i32) -> AnnualMaximaSeries {
    let years = (first_year..first_year + values.len() as i32).collect();
    AnnualMaximaSeries::new(years, values, None).expect("positive synthetic series")
}

fn main() -> stagefreq::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures"));
    fs::create_dir_all(&dir).expect("create fixture directory");
    let create = |name: &str| File::create(dir.join(name)).expect("create fixture file");

    for (id, recipe, seed) in [
        ("trending", StationRecipe::trending(), synthetic::TRENDING_SEED),
        ("heavy_tail", StationRecipe::heavy_tail(), synthetic::HEAVY_TAIL_SEED),
    ] {
        let st = recipe.generate(id, seed)?;
        st.stage.write_csv(create(&format!("{id}_stage.csv")))?;
        synthetic::write_monthly_csv(&st.monthly_index, create(&format!("{id}_dmi.csv")))?;
        let meta = serde_json::to_string_pretty(&st.meta)?;
        fs::write(dir.join(format!("{id}_meta.json")), meta + "\n").expect("write meta");
    }

    let step = synthetic::step_series(30, 30, 5.0, 8.0, 1.0, synthetic::STEP_SEED);
    series_from(step, 1961).write_csv(create("step_change_stage.csv"))?;
    let noise = synthetic::white_noise(60, 6.0, 0.5, synthetic::WHITE_NOISE_SEED);
    series_from(noise, 1961).write_csv(create("white_noise_stage.csv"))?;
    let gumbel = synthetic::gumbel_sample(50, 5.0, 1.0, synthetic::GUMBEL_SEED)?;
    series_from(gumbel, 1971).write_csv(create("gumbel_stage.csv"))?;
    Ok(())
}
