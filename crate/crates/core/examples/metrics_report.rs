//! Scores schemes 1 and 3 on a phantom and prints the JSON report and the
//! batch CSV.
//!
//! cargo run --release --example metrics_report

use bivmesh::metrics::{evaluate, write_csv, EvalOptions};
use bivmesh::phantom::{generate_phantom, procedural_template, PhantomSpec};
use bivmesh::pipeline::{reconstruct, PipelineConfig, Scheme};

fn main() -> bivmesh::Result<()> {
    let (v, _) = generate_phantom(&PhantomSpec::varied(8))?;
    let template = procedural_template(0)?;
    let cfg = PipelineConfig::default();
    let opts = EvalOptions::default();
    let mut rows = Vec::new();
    for scheme in [Scheme::Loop, Scheme::Fit] {
        let r = reconstruct(&v, &template, None, scheme, &cfg)?;
        rows.push(Ok(evaluate(&format!("scheme{scheme}"), &r.mesh, &v, r.seconds, &opts)?));
    }
    rows.push(Err(("broken".to_string(), "example failure".to_string())));
    if let Some(Ok(r)) = rows.get(1) {
        println!("{}", r.to_json()?);
    }
    write_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
