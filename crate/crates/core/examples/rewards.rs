//! Score a small batch of responses, add the spatial bonus and compute
//! group-relative advantages.
//!
//! cargo run --example rewards

use stsynth::reward::{
    combined_reward, extract_answer, group_advantages, sgrpo_rewards, Gold, GroupRollout, Pairing, RewardConfig,
};

fn main() -> anyhow::Result<()> {
    let cfg = RewardConfig::default();
    let gold = Gold::Forecast(vec![100.0, 120.0, 110.0]);
    let with_spatial = [
        "<think>upstream peak arrives in one step</think><answer>[101, 118, 111]</answer>",
        "<think>flat</think><answer>[100, 100, 100]</answer>",
        "<think>copy node 0</think><answer>[90, 140]</answer>",
        "[100, 120, 110]",
    ];
    let without_spatial = [
        "<think>guess</think><answer>[100, 105, 105]</answer>",
        "<think>guess</think><answer>[100, 110, 105]</answer>",
        "<think>guess</think><answer>[80, 80, 80]</answer>",
        "<think>guess</think><answer>[100, 120, 110]</answer>",
    ];
    let score = |r: &&str| combined_reward(r, &gold, &cfg);
    let group = GroupRollout {
        question_id: "demo".into(),
        with_spatial: with_spatial.iter().map(score).collect(),
        without_spatial: without_spatial.iter().map(score).collect(),
    };
    let rewards = sgrpo_rewards(&group, &cfg, Pairing::Index)?;
    let advantages = group_advantages(&rewards);
    for (i, r) in with_spatial.iter().enumerate() {
        println!(
            "{i}: well-formed {:<5} r_sp {:.3} r_ns {:.3} R {:.3} A {:+.3}",
            extract_answer(r).well_formed,
            group.with_spatial[i],
            group.without_spatial[i],
            rewards[i],
            advantages[i],
        );
    }
    Ok(())
}
