//! Pilot run of the Γ-convergence experiment on `benchmark_line5`, on seeds
//! disjoint from the acceptance seeds. Prints per-N medians and recovery
//! gaps as JSON; the committed threshold was derived from this output.
//!
//! cargo run --release -p cournot-nash --example gamma_pilot [scenario.json [first_seed]]

use cournot_nash::limits::GammaSetup;
use cournot_nash::{load_builtin, median, FwConfig, ScenarioFile};

const NS: [usize; 4] = [8, 32, 128, 512];

fn main() -> cournot_nash::Result<()> {
    let f = match std::env::args().nth(1) {
        Some(path) => ScenarioFile::load(path)?,
        None => load_builtin("benchmark_line5")?,
    };
    let setup = GammaSetup::new(&f.scenario, "benchmark_line5", &FwConfig::default(), false)?;
    let first: u64 = std::env::args().nth(2).map_or(Ok(1000), |s| s.parse()).expect("seed offset");
    let seeds: Vec<u64> = (first..first + 32).collect();
    let mut rows = Vec::new();
    for n in NS {
        let mut gap = Vec::new();
        let mut w1 = Vec::new();
        let mut ex = Vec::new();
        let mut an = Vec::new();
        let mut pr = Vec::new();
        for &seed in &seeds {
            let r = setup.replica(n, seed)?;
            gap.push(r.abs_gap);
            w1.push(r.w1_to_limit);
            ex.push(r.exploitability);
            let rec = setup.recovery(n, seed)?;
            an.push(rec.analytical_gap);
            pr.push(rec.probabilistic_gap);
        }
        rows.push(serde_json::json!({
            "N": n,
            "median_abs_gap": median(&mut gap),
            "max_abs_gap": gap.iter().copied().fold(0.0, f64::max),
            "median_w1_to_limit": median(&mut w1),
            "median_exploitability": median(&mut ex),
            "median_analytical_gap": median(&mut an),
            "median_probabilistic_gap": median(&mut pr),
        }));
    }
    let out = serde_json::json!({
        "scenario": "benchmark_line5",
        "value_limit": setup.value_limit(),
        "limit_plan": setup.limit_plan().rows(),
        "seeds": [seeds[0], seeds[seeds.len() - 1]],
        "medians": rows,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
