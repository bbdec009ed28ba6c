//! Trains the learned layers on a few phantoms and compares the five
//! schemes on held-out phantoms.
//!
//! cargo run --release --example ablation -- [train cases] [test cases]

use bivmesh::gsn::{train, TrainConfig};
use bivmesh::metrics::{evaluate, EvalOptions};
use bivmesh::phantom::{generate_phantom, procedural_template, PhantomSpec};
use bivmesh::pipeline::{reconstruct, training_case, PipelineConfig, Scheme};

fn main() -> bivmesh::Result<()> {
    env_logger::init();
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n_train = args.first().copied().unwrap_or(4);
    let n_test = args.get(1).copied().unwrap_or(5);
    let template = procedural_template(0)?;
    let cfg = PipelineConfig::default();

    let mut cases = Vec::new();
    for k in 0..n_train {
        let (v, _) = generate_phantom(&PhantomSpec::varied(1000 + k as u64))?;
        cases.push(training_case(&template, &v, &cfg, k as u64)?);
    }
    let tc = TrainConfig {
        seed: 7,
        ..Default::default()
    };
    let result = train(&cases, &tc)?;
    let h = &result.history;
    println!(
        "training: initial {:.5} final {:.5} best {:.5} (ratio {:.3})",
        h[0],
        h[h.len() - 1],
        result.best_loss,
        h[h.len() - 1] / h[0]
    );

    let mut sums = [[0.0f64; 4]; 5];
    for k in 0..n_test {
        let (v, _) = generate_phantom(&PhantomSpec::varied(k as u64))?;
        for s in Scheme::ALL {
            let r = reconstruct(&v, &template, Some(&result.best), s, &cfg)?;
            let m = evaluate(&format!("{k}"), &r.mesh, &v, r.seconds, &EvalOptions::default())?;
            let row = &mut sums[s.id() as usize - 1];
            row[0] += m.dice.mean;
            row[1] += m.asd_mm;
            row[2] += m.non_manifold_ratio;
            row[3] += r.seconds;
            println!(
                "case {k} scheme {s}: dice {:.3} (lv {:.3} rv {:.3} myo {:.3}) asd {:.3} mm hd {:.1} t {:.2}s",
                m.dice.mean, m.dice.lv, m.dice.rv, m.dice.myo, m.asd_mm, m.hausdorff.mean, r.seconds
            );
        }
    }
    for s in Scheme::ALL {
        let r = sums[s.id() as usize - 1].map(|x| x / n_test as f64);
        println!(
            "scheme {s}: mean dice {:.4} asd {:.4} mm nmf {:.4} time {:.3}s",
            r[0], r[1], r[2], r[3]
        );
    }
    Ok(())
}
