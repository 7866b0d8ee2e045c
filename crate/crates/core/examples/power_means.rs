//! Power means, their gradients, and the annealing schedule that drives the
//! exponent towards minus infinity.

use rffkm::powermeans::{gradient_weights, power_mean, PowerSchedule};

fn main() -> rffkm::error::Result<()> {
    let y = [1.0, 4.0, 9.0];
    println!("{:>8}  {:>10}  gradient", "s", "M_s(y)");
    for s in [1.0, -1.0, -4.0, -16.0, -64.0, -500.0] {
        let grad = if s < 0.0 {
            let w = gradient_weights(&y, s)?;
            w.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(" ")
        } else {
            "-".into()
        };
        println!("{s:>8}  {:>10.6}  {grad}", power_mean(&y, s)?);
    }

    // exponents far below what naive powering survives
    println!("M_-50([1, 100]) = {}", power_mean(&[1.0, 100.0], -50.0)?);

    let schedule = PowerSchedule::single_view();
    let mut s = schedule.s0;
    let mut path = vec![s];
    for t in 1..=12 {
        s = schedule.advance(s, t);
        path.push(s);
    }
    println!("single-view schedule: {:?}", path.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>());
    Ok(())
}
