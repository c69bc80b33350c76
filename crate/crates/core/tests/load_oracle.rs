//! Strong-form residuals of the manufactured loads, checked by central
//! differences with step 1e-5 at 100 random points for every coefficient
//! set of the accuracy tables.

mod common;

use common::oracle::{load_residuals, TABLE_PARAMETERS};

#[test]
fn manufactured_loads_satisfy_strong_form() {
    for (k, &(nu, cond, stor)) in TABLE_PARAMETERS.iter().enumerate() {
        let r = load_residuals(nu, cond, stor, 100, 100 + k as u64);
        println!("nu={nu} K={cond} c={stor}: momentum {:.2e}, total pressure {:.2e}, network {:.2e}", r[0], r[1], r[2]);
        assert!(r.iter().all(|v| *v <= 1e-6), "nu={nu} K={cond} c={stor}: {r:?}");
    }
}

#[test]
fn oracle_detects_wrong_loads() {
    // a perturbed Poisson ratio changes lambda and mu in the transcription
    // only through the library side, so the residual must blow up
    let r = load_residuals(0.3, 1.0, 1.0, 5, 1);
    assert!(r[0] < 1e-6);
    let bad = common::oracle::load_residuals_with_library_poisson(0.3, 0.31, 1.0, 1.0, 5, 1);
    assert!(bad[0] > 1e-3, "{bad:?}");
}
