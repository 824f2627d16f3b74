//! Standard-form polytopes: box embedding, vertex enumeration and the
//! normalization constants `R1` and `RH`.
//!
//! ```bash
//! cargo run --example polytope_vertices
//! ```

use entroqp::polytope::{constants, enumerate_vertices, Polytope};

fn main() -> entroqp::Result<()> {
    // [0,1] x [0.5,2] as {Ax = b, x >= 0}; the shifted coordinate gets a surplus
    let p = Polytope::box_to_standard(&[0.0, 0.5], &[1.0, 2.0])?;
    println!("standard form: {} rows, {} columns, rank {}", p.m(), p.n(), p.rank());

    let vs = enumerate_vertices(&p)?;
    let emb = p.embedding().expect("box polytope");
    for v in vs.iter() {
        println!("  vertex {:?}", emb.to_box(v));
    }

    let pc = constants(&p, &vs)?;
    println!("R1 = {:.4}, RH = {:.4}", pc.r1, pc.rh);

    // 3x3 transport polytope: one marginal row is redundant
    let t = Polytope::transport(&[0.2, 0.3, 0.5], &[0.4, 0.4, 0.2])?;
    let tv = enumerate_vertices(&t)?;
    println!("transport: {} rows, rank {}, {} vertices", t.m(), t.rank(), tv.len());
    Ok(())
}
