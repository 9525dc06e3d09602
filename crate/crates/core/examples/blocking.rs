//! The ego leads on the inside of a faster opponent and cares less about a
//! crash than the opponent does. The feedback solution anticipates that the
//! opponent will yield and blocks; the open-loop solution only swerves.

use ilqgames::batch::{run_batch, BatchSpec, SamplingRule};
use ilqgames::sim::{run_scenario, PlannerKind, ScenarioConfig};

fn main() -> ilqgames::Result<()> {
    let spec = BatchSpec {
        base: ScenarioConfig::default(),
        ego_planners: vec![PlannerKind::GameOpenLoop, PlannerKind::GameFeedback],
        opponent_planners: vec![PlannerKind::Sequential],
        ratios: vec![10.0],
        samples: 1,
        sampling: SamplingRule::Fixed { ego: 2.5, opponent: 3.0 },
        seed: 0,
    };
    spec.validate()?;
    for ego in [PlannerKind::GameOpenLoop, PlannerKind::GameFeedback] {
        let scenario = spec.scenario(ego, PlannerKind::Sequential, 10.0, (2.5, 3.0));
        let log = run_scenario(&scenario, 0)?;
        println!("\nego {ego}: outcome {}", log.summary.outcome.label());
        println!(
            "  overtake at {}, opponent slowest {:.2} m/s",
            log.summary.overtake_time.map_or("never".into(), |t| format!("{t:.2} s")),
            log.min_speed(1)
        );
        for (t, s) in log.times.iter().zip(&log.states).step_by(20) {
            println!("  t = {t:4.1}: ego n = {:5.2}, opponent n = {:5.2}, gap = {:6.1} m", s[0].n, s[1].n, s[1].s - s[0].s);
        }
    }

    // the same comparison through the batch runner
    let result = run_batch(&spec)?;
    for r in &result.records {
        println!("{} vs {}: {:?}", r.ego, r.opponent, r.overtake_time);
    }
    Ok(())
}
