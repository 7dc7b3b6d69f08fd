//! Generates a scenario, writes it as JSON and reads it back.

use unlearn_lab::scenario::{decompose_w_star, gen_scenario, Distribution, FeatureLayout, SyntheticScenario};

fn main() -> unlearn_lab::Result<()> {
    let s = gen_scenario(4, 2, FeatureLayout::new(3, 1, 3), 11, Distribution::Uniform)?;
    let text = s.to_json()?;
    println!("{}", &text[..text.len().min(400)]);
    let back = SyntheticScenario::from_json(&text)?;
    assert_eq!(back, s);
    let parts = decompose_w_star(&s);
    println!("w_r   {:?}", parts.remaining.as_slice());
    println!("w_lap {:?}", parts.overlap.as_slice());
    println!("w_f   {:?}", parts.forget.as_slice());
    Ok(())
}
