use std::fs;

use puf_ldpc::geometry::build_eg;
use puf_ldpc::sketch::{build_instance_code, CodeFile, ConstructionConfig, Response};
use puf_ldpc::sparsemat::{read_matrix, write_matrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn matrix_file_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eg.txt");
    let h = build_eg(2, 8).unwrap().incidence_matrix();
    write_matrix(&h, &path).unwrap();
    assert_eq!(read_matrix(&path).unwrap(), h);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with(&format!("{} {} {}\n", h.n_rows(), h.n_cols(), h.nnz())));
}

#[test]
fn code_file_is_readable_as_plain_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("code.txt");
    let r = Response::random(128, &mut ChaCha8Rng::seed_from_u64(2));
    let code = build_instance_code(&r, &ConstructionConfig::for_length(128, 56, 2)).unwrap();
    let mut f = fs::File::create(&path).unwrap();
    code.write_to(&mut f).unwrap();
    drop(f);
    assert_eq!(read_matrix(&path).unwrap(), code.h);
    let back = CodeFile::read_from(fs::File::open(&path).map(std::io::BufReader::new).unwrap()).unwrap();
    assert_eq!(back.get::<usize>("n"), Some(128));
    assert_eq!(back.get::<usize>("k"), Some(56));
    assert_eq!(back.get::<u64>("seed"), Some(2));
}

#[test]
fn malformed_matrix_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    for text in ["", "2 2 1\n", "2 2 1\n0 2\n", "2 2 2\n1 0\n0 0\n", "x y z\n"] {
        fs::write(&path, text).unwrap();
        assert!(read_matrix(&path).is_err(), "{text:?}");
    }
}
