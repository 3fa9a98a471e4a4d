//! The vendored datasets still match their recorded checksums and parse to
//! the expected shapes.

use std::fs;
use std::path::Path;

use lptml::eval::{iris, wine};
use sha2::{Digest, Sha256};

#[test]
fn vendored_files_match_checksums() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let sums = fs::read_to_string(dir.join("SHA256SUMS")).unwrap();
    let mut checked = 0;
    for line in sums.lines().filter(|l| !l.trim().is_empty()) {
        let (want, name) = line.split_once(char::is_whitespace).unwrap();
        let bytes = fs::read(dir.join(name.trim())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), want, "{name}");
        checked += 1;
    }
    assert_eq!(checked, 2);
}

#[test]
fn builtin_shapes() {
    let i = iris();
    assert_eq!((i.len(), i.dim(), i.classes().len()), (150, 4, 3));
    let w = wine();
    assert_eq!((w.len(), w.dim(), w.classes().len()), (178, 13, 3));
}
