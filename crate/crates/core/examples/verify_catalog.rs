//! Runs every verification suite over the built-in catalog and prints the
//! pass/fail table.

use finsler::verify::{verify_catalog, VerifyOptions};

fn main() {
    let only: Vec<String> = std::env::args().skip(1).collect();
    let report = verify_catalog(&VerifyOptions { only, ..VerifyOptions::default() }).unwrap();
    print!("{}", report.table());
    std::process::exit(if report.passed() { 0 } else { 1 });
}
