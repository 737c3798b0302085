use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Problem, Split};

/// Stratified three-way split by (reasoning length, label).
///
/// Each stratum is ordered by id, shuffled with `seed`, and cut into equal
/// thirds; leftovers go to train. Input order does not matter. Returned
/// problems carry their `split` field.
pub fn split_even(problems: &[Problem], seed: u64) -> (Vec<Problem>, Vec<Problem>, Vec<Problem>) {
    let mut strata: BTreeMap<(Option<u64>, crate::Label), Vec<&Problem>> = BTreeMap::new();
    for p in problems {
        strata
            .entry((p.reasoning_length(), p.label))
            .or_default()
            .push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut dev, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (_, mut members) in strata {
        members.sort_by(|a, b| a.id.cmp(&b.id));
        members.shuffle(&mut rng);
        let third = members.len() / 3;
        let remainder = members.len() - 3 * third;
        for (i, p) in members.into_iter().enumerate() {
            let (dest, split) = if i < third + remainder {
                (&mut train, Split::Train)
            } else if i < 2 * third + remainder {
                (&mut dev, Split::Dev)
            } else {
                (&mut test, Split::Test)
            };
            let mut p = p.clone();
            p.split = Some(split);
            dest.push(p);
        }
    }
    for part in [&mut train, &mut dev, &mut test] {
        part.sort_by(|a, b| a.id.cmp(&b.id));
    }
    (train, dev, test)
}
