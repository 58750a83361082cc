#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> PathBuf {
    crate_dir().join("tests/fixtures").join(name)
}

pub fn ifaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifaudit"))
        .current_dir(crate_dir())
        .args(args)
        .output()
        .expect("spawn ifaudit")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// Compares against `tests/golden/<name>`. With `UPDATE_GOLDEN` set the file
/// is rewritten instead.
pub fn golden(name: &str, actual: &[u8]) -> Result<(), String> {
    let path = crate_dir().join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!(
            "{name} differs from golden:\n--- expected\n{}\n--- actual\n{}",
            String::from_utf8_lossy(&expected),
            String::from_utf8_lossy(actual)
        ))
    }
}

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// One line per criterion, then fail the test if it did not hold.
pub fn verdict(n: u32, name: &str, ok: bool, detail: impl AsRef<str>) {
    println!(
        "criterion {n:>2} {:<40} {}  {}",
        name,
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    assert!(ok, "criterion {n} ({name}) failed: {}", detail.as_ref());
}
