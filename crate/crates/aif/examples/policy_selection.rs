//! Expected-free-energy policy scoring: how the novelty term steers the agent
//! toward research processes it knows least about.
//!
//! ```text
//! cargo run --example policy_selection
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use aif::inference::{expected_free_energy, select_policy, BeliefState};
use aif::math::Categorical;
use aif::model::{build_two_level_model, Hyper, ModelDims, MODALITY_OUTCOME};

fn main() -> aif::Result<()> {
    let (_, mut bottom) = build_two_level_model(ModelDims::default(), Hyper::default())?;

    // Pretend the agent has already studied processes 0 and 1 in industry 3.
    {
        let conc = bottom.concentrations[MODALITY_OUTCOME].as_mut().unwrap();
        for (process, counts) in [(0usize, 12.0), (1usize, 4.0)] {
            let column = conc.column_mut(3 * 4 + process);
            column[2] += counts; // all observations said "Neutral"
        }
    }
    bottom.refresh_likelihoods()?;

    // The agent knows it is in industry 3 (cue already processed).
    let belief = BeliefState::from_marginals(&[
        Categorical::one_hot(16, 3),
        Categorical::uniform(4),
    ])?;

    println!("policy   risk     ambiguity  novelty   total");
    let mut totals = Vec::new();
    for (k, policy) in bottom.policies.iter().enumerate() {
        let b = expected_free_energy(&bottom, &belief, policy)?;
        println!(
            "{k}        {:<8.4} {:<9.4}  {:<8.4}  {:<8.4}",
            b.risk, b.ambiguity, b.novelty, b.total
        );
        totals.push(b.total);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let choice = select_policy(&totals, bottom.policy_precision, &mut rng)?;
    println!(
        "\npolicy posterior: {:?}",
        choice
            .posterior
            .probs()
            .iter()
            .map(|p| (p * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );
    println!(
        "sampled policy {} (unvisited processes carry the most expected information gain)",
        choice.chosen
    );
    Ok(())
}
