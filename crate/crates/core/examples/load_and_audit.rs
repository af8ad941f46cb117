//! Load a flow CSV, print its class distribution and what cleaning removes.
//!
//! ```text
//! cargo run --example load_and_audit -- flows.csv Label
//! ```
//!
//! Without arguments a small table with dirty rows is built in memory.

use std::env;
use std::io::Cursor;

use nidsgap::dataset::{class_distribution, load_csv, read_csv};
use nidsgap::preprocess::clean;
use nidsgap::Result;

const DIRTY: &str = "\
Flow Duration,Fwd Packets,Bytes/s,Label
10,2,100.5,BENIGN
10,2,100.5,BENIGN
7,,80,BENIGN
3,9,Infinity,DoS
4,11,1200,DoS
5,12,1300,DoS
9,1,55,PortScan
";

fn main() -> Result<()> {
    let args: Vec<String> = env::args().skip(1).collect();
    let d = match args.as_slice() {
        [path] => load_csv(path, "Label", 1.0, 0)?,
        [path, label, ..] => load_csv(path, label, 1.0, 0)?,
        [] => read_csv(Cursor::new(DIRTY), "inline", "Label", 1.0, 0)?,
    };

    println!("{}: {} records x {} features", d.provenance(), d.len(), d.schema().dim());
    println!("{}", class_distribution(&d));

    let (cleaned, report) = clean(&d);
    println!(
        "dropped {} missing, {} non-finite, {} duplicate rows",
        report.dropped_missing, report.dropped_nonfinite, report.dropped_duplicates
    );
    println!("after cleaning:\n{}", class_distribution(&cleaned));
    Ok(())
}
