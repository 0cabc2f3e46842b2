//! Confusion-matrix metrics and fold aggregation.
//!
//! ```text
//! cargo run --example metrics
//! ```

use dualdi::evalkit::{accuracy, aggregate, confusion_matrix, uar, uf1};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = [0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 2, 2];
    let preds = [0, 0, 0, 1, 1, 1, 1, 1, 0, 0, 2, 1];
    let cm = confusion_matrix(&truth, &preds, 3)?;
    for row in cm.counts() {
        println!("{row:?}");
    }
    println!("accuracy {:.4}", accuracy(&cm)?);
    println!("UF1      {:.4}", uf1(&cm)?);
    println!("UAR      {:.4}", uar(&cm)?);

    let folds = [0.62, 0.71, 0.58, 0.66, 0.69];
    let s = aggregate(&folds)?;
    println!("5 folds: {:.4} +/- {:.4} (population std)", s.mean, s.std);
    Ok(())
}
