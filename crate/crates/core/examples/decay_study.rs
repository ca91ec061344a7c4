//! Monte-Carlo deviation probabilities over a grid of M, the fitted log-log
//! slope, and an SVG of p̂ against the bound.
//!
//!     cargo run --release --example decay_study [out_dir]

use rqip::experiments::{run_study, Study, StudyConfig, StudyGrid};

fn main() -> rqip::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "decay-study".into());
    let mut cfg = StudyConfig::default_for(Study::Concentration, 2024, &out);
    // one cell keeps the example quick
    if let StudyGrid::Concentration(cells) = &mut cfg.grid {
        cells.truncate(1);
    }
    let result = run_study(&cfg)?;
    print!("{}", result.to_csv_string()?);
    println!("{}", serde_json::to_string_pretty(&result.cells[0]).expect("json"));
    for path in result.write_artifacts(&cfg.output_dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
