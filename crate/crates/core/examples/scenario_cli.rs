//! The four command verbs driven from a scenario document, as the binary
//! runs them.

use finsler_flow::scenario::{cmd_curvature, cmd_flow, cmd_report, cmd_verify, Scenario};

const SCENARIO: &str = "
# F = exp(a cos x1 cos x2) |y| under Ricci flow
[metric]
family = conformal-torus
a = 0.05

[grid]
n_x1 = 16
n_x2 = 16
n_theta = 16

[flow]
mode = ricci
horizon = 0.2

[output]
format = text
";

fn main() -> finsler_flow::Result<()> {
    let scenario = Scenario::parse(SCENARIO)?;
    assert_eq!(Scenario::parse(&scenario.emit())?, scenario);
    println!("normalized scenario:\n{}", scenario.emit());

    let dir = std::env::temp_dir().join("finsler-scenario-example");
    for outcome in [
        cmd_curvature(&scenario, &dir)?,
        cmd_flow(&scenario, &dir)?,
        cmd_verify(&dir, None)?,
        cmd_report(&dir)?,
    ] {
        print!("{}", outcome.summary);
        println!("exit code {}\n", outcome.exit_code());
    }
    Ok(())
}
