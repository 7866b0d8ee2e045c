use rffkm::metrics::{accuracy, nmi, purity, score};

fn main() -> rffkm::error::Result<()> {
    let truth = [0, 0, 0, 1, 1, 1, 2, 2, 2];
    let pred = [2, 2, 1, 0, 0, 0, 1, 1, 1];

    println!("ACC    {:.4}", accuracy(&pred, &truth)?);
    println!("NMI    {:.4}", nmi(&pred, &truth)?);
    println!("Purity {:.4}", purity(&pred, &truth)?);

    // more clusters than classes: ACC can only match one cluster per class
    let split = [0, 1, 2, 3, 3, 3, 4, 4, 4];
    println!("over-split: {:?}", score(&split, &truth)?);
    Ok(())
}
