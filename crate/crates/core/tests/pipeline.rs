use std::path::Path;

use qdomain::gustafsson::{build_g_16, quadrature_data, verify_quadrature};
use qdomain::io::load_domain;
use qdomain::kernels::ahlfors;
use qdomain::testdomains;
use qdomain::zip::{pack, ZipArchive};
use qdomain::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn data(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/domains").join(name)
}

#[test]
fn bundled_domains_match_the_builtins() {
    let disc = load_domain(&data("disc.json")).unwrap().build().unwrap();
    assert_eq!(disc, testdomains::disc(c(0.0, 0.0), 1.0, 64).unwrap());
    let annulus = load_domain(&data("annulus.json")).unwrap().build().unwrap();
    assert_eq!(annulus, testdomains::annulus(0.5, 256).unwrap());
    let blob = load_domain(&data("blob3.json")).unwrap().build().unwrap();
    assert_eq!(blob.connectivity(), 3);
    assert_eq!(blob, testdomains::blob_domain(3, 7).unwrap());
}

#[test]
fn blob_ahlfors_map_from_file() {
    let blob = load_domain(&data("blob3.json")).unwrap().build().unwrap();
    let f = ahlfors(&blob, c(0.0, 0.55)).unwrap();
    let r = f.report().unwrap();
    assert!((r.winding - 3.0).abs() < 1e-6);
    assert!(r.modulus_residual <= 1e-8);
}

#[test]
fn shifted_disc_schwarz_function_after_round_trip() {
    // h(w) = conj(c) + R²/(w − c) on the disc |w − c| < R
    let (center, radius) = (c(0.3, -0.2), 0.8);
    let d = testdomains::disc(center, radius, 64).unwrap();
    let g = build_g_16(&d, center, 1e-8).unwrap();
    let q = quadrature_data(&g).unwrap();
    assert!(verify_quadrature(&g, &q, 6).iter().all(|r| r.relative <= 1e-10));
    let archive = ZipArchive::from_bytes(&pack(&g).unwrap().to_bytes()).unwrap();
    let un = archive.unzip().unwrap();
    for w in [center + c(0.2, 0.1), center + c(-0.1, 0.3)] {
        let expect = center.conj() + radius * radius / (w - center);
        assert!((un.h(w).unwrap() - expect).norm() <= 1e-10, "{w}");
        assert!((un.H(w).unwrap() - expect).norm() <= 1e-10, "{w}");
    }
}
