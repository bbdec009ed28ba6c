//! Phantom generation and slice degradation at increasing shift levels.
//!
//! cargo run --release --example phantom_degradation

use bivmesh::metrics::dice;
use bivmesh::phantom::{degrade, generate_phantom, DegradationSpec, PhantomSpec};
use bivmesh::volume::{resample_isotropic, Label};

fn main() -> bivmesh::Result<()> {
    let spec = PhantomSpec::varied(3);
    println!("{}", serde_json::to_string_pretty(&spec)?);
    let (v, _) = generate_phantom(&spec)?;
    for l in [Label::Lv, Label::Rv, Label::Myo] {
        let n = v.data().iter().filter(|x| **x == l).count();
        println!("{:<4} {:>7} voxels", l.name(), n);
    }
    let myo = v.map(|l| *l == Label::Myo);
    for shift in [0.0, 4.0, 8.0, 12.0] {
        let d = DegradationSpec {
            max_shift_mm: shift,
            ..Default::default()
        };
        let dv = degrade(&v, &d, 1)?;
        println!("max shift {shift:>4} mm: myo dice {:.4}", dice(&dv.map(|l| *l == Label::Myo), &myo)?);
    }
    let thick = DegradationSpec {
        slice_multiplier: 5,
        max_shift_mm: 4.0,
        drop_apical: 1,
        drop_basal: 1,
    };
    let dv = degrade(&v, &thick, 1)?;
    println!("thick slices: dims {:?} spacing {:?}", dv.dims(), dv.spacing());
    let iso = resample_isotropic(&dv, 2.0)?;
    println!("resampled to 2 mm: dims {:?}", iso.dims());
    Ok(())
}
