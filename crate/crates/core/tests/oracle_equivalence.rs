mod common;

use optkit::lp_model::Tag;
use optkit::parametric_lp::solve_parametric;
use optkit::reference_oracle::simplex_solve;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn parametric_matches_simplex_on_random_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut fallbacks, mut optimal) = (0, 0);
    for _ in 0..1000 {
        let p = common::random_lp(&mut rng, 6, 6);
        let oracle = simplex_solve(&p);
        let out = solve_parametric(&p);
        assert_eq!(out.effective_tag(), oracle.tag, "{p:?}");
        match out.tag {
            Tag::Optimal => {
                optimal += 1;
                assert_eq!(out.value, oracle.value);
                assert!(out.verify(&p));
            }
            Tag::Fallback => {
                fallbacks += 1;
                assert_eq!(out.value, oracle.value);
            }
            _ => {}
        }
    }
    assert!(optimal > 0);
    println!("fallback rate {fallbacks}/1000");
}
