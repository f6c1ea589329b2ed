//! Classifies the five resource-combination circuits and a Kerr circuit.

use gaussim::circuit::{classify, parse};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("circuits");
    let mut names: Vec<String> = (1..=5).map(|row| format!("resources_row{row}.circ")).collect();
    names.push("kerr.circ".into());
    for name in names {
        let text = std::fs::read_to_string(dir.join(&name))?;
        let report = classify(&parse(&text)?);
        println!("{name:>17}: {}", report.verdict.name());
        for w in &report.witnesses {
            println!("{:>19}{}: {}", "", w.site, w.reason);
        }
    }
    Ok(())
}
