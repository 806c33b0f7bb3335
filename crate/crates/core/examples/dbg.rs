use std::sync::Arc;
use onsager_core::analytic::DiskFamily;
use onsager_core::fem::{Fem, ScalarField};
use onsager_core::geometry::{build_mesh, Domain, Point};
use onsager_core::pde::*;

fn main() {
    let mesh = Arc::new(build_mesh(&Domain::disk(1.0).unwrap(), 0.09).unwrap());
    let fem = Arc::new(Fem::new(mesh).unwrap());
    let ctx = PdeContext::constant_weight(fem).unwrap();
    let f = DiskFamily::new(12.0);
    let guess = ScalarField::from_fn(ctx.fem.mesh.clone(), |p: Point| f.u(p.norm()));
    let res = solve_gelfand(&ctx, f.eps_sq().sqrt(), &guess, NewtonOptions::default()).unwrap();
    println!("converged {} lambda {}", res.converged, res.lambda);
    let dense = dense_spectrum(&ctx, &res, Linearization::Gelfand, 6).unwrap();
    println!("dense: {:?}", dense);
    let spec = linearized_spectrum(&ctx, &res, Linearization::Gelfand, SpectrumOptions { k: 4, ..Default::default() }).unwrap();
    println!("lanczos (conv={}): {:?}", spec.converged, spec.eigenvalues);
    println!("residuals: {:?}", spec.residuals);
}
