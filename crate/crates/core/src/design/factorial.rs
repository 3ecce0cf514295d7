//! Candidate profiles and choice-set construction.

use rand::Rng;

use crate::design::types::{Alternative, AttributeSpec, ChoiceSet, Design, Profile};
use crate::error::{Error, Result};

pub const DEFAULT_FACTORIAL_CAP: u128 = 1_000_000;

/// Cartesian product of realized levels, last attribute varying fastest.
pub fn full_factorial(specs: &[AttributeSpec]) -> Result<Vec<Profile>> {
    full_factorial_capped(specs, DEFAULT_FACTORIAL_CAP)
}

pub fn full_factorial_capped(specs: &[AttributeSpec], cap: u128) -> Result<Vec<Profile>> {
    if specs.is_empty() {
        return Err(Error::Argument("full factorial needs at least one attribute".into()));
    }
    for s in specs {
        s.validate()?;
    }
    let required = specs
        .iter()
        .try_fold(1u128, |acc, s| acc.checked_mul(s.level_count() as u128))
        .unwrap_or(u128::MAX);
    if required > cap {
        return Err(Error::Capacity {
            what: "full factorial".into(),
            required,
            cap,
        });
    }
    let levels: Vec<Vec<f64>> = specs.iter().map(AttributeSpec::levels).collect();
    let mut out = Vec::with_capacity(required as usize);
    let mut idx = vec![0usize; specs.len()];
    loop {
        out.push(Profile(idx.iter().zip(&levels).map(|(&i, l)| l[i]).collect()));
        let mut d = specs.len();
        loop {
            if d == 0 {
                return Ok(out);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < levels[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// All `C(n, j)` index combinations in lexicographic order.
pub fn enumerate_choice_sets(n_profiles: usize, j: usize) -> Result<Vec<Vec<usize>>> {
    if j < 1 {
        return Err(Error::Argument("choice sets need at least one non-opt-out alternative".into()));
    }
    if j > n_profiles {
        return Err(Error::Argument(format!(
            "cannot pick {j} distinct profiles from {n_profiles}"
        )));
    }
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..j).collect();
    loop {
        out.push(combo.clone());
        let mut i = j;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if combo[i] < n_profiles - j + i {
                combo[i] += 1;
                for t in i + 1..j {
                    combo[t] = combo[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Draw a grid level for `attr` on every non-opt-out alternative.
///
/// Draws are uniform with replacement; a draw that would make two profiles
/// in one set identical is redrawn.
pub fn assign_continuous_levels<R: Rng + ?Sized>(design: &Design, attr: &str, rng: &mut R) -> Result<Design> {
    let a = design
        .attributes()
        .iter()
        .position(|s| s.name == attr)
        .ok_or_else(|| Error::Schema(format!("attribute `{attr}` is not part of the design")))?;
    let spec = &design.attributes()[a];
    if !spec.is_continuous() {
        return Err(Error::Argument(format!("attribute `{attr}` is not continuous")));
    }
    let grid = spec.levels();
    const MAX_REDRAWS: usize = 1000;
    let mut sets = Vec::with_capacity(design.n_sets());
    for (s, set) in design.choice_sets().iter().enumerate() {
        let mut alts: Vec<Alternative> = Vec::with_capacity(set.alternatives.len());
        for alt in &set.alternatives {
            let Alternative::Profile(p) = alt else {
                alts.push(Alternative::OptOut);
                continue;
            };
            let mut values = p.0.clone();
            let mut attempts = 0;
            loop {
                values[a] = grid[rng.random_range(0..grid.len())];
                let clash = alts.iter().filter_map(Alternative::profile).any(|q| q.0 == values);
                if !clash {
                    break;
                }
                attempts += 1;
                if attempts >= MAX_REDRAWS {
                    return Err(Error::SearchFailure(format!(
                        "choice set {s}: cannot assign `{attr}` without duplicating a profile"
                    )));
                }
            }
            alts.push(Alternative::Profile(Profile(values)));
        }
        sets.push(ChoiceSet::new(alts));
    }
    Design::new(design.attributes().to_vec(), sets)
}

/// Factorial-mode design: enumerate combinations of the discrete full
/// factorial, cycle through them until `n_sets` sets exist, then draw every
/// continuous attribute.
pub fn factorial_design<R: Rng + ?Sized>(
    attributes: &[AttributeSpec],
    n_sets: usize,
    j_non_optout: usize,
    include_optout: bool,
    rng: &mut R,
) -> Result<Design> {
    if n_sets == 0 {
        return Err(Error::Argument("design needs at least one choice set".into()));
    }
    let discrete: Vec<usize> = (0..attributes.len()).filter(|&i| !attributes[i].is_continuous()).collect();
    let profiles: Vec<Profile> = if discrete.is_empty() {
        vec![Profile(Vec::new())]
    } else {
        let specs: Vec<AttributeSpec> = discrete.iter().map(|&i| attributes[i].clone()).collect();
        full_factorial(&specs)?
    };
    let embed = |p: &Profile| -> Profile {
        let mut values: Vec<f64> = attributes.iter().map(|a| a.levels()[0]).collect();
        for (k, &i) in discrete.iter().enumerate() {
            values[i] = p.0[k];
        }
        Profile(values)
    };
    let full: Vec<Profile> = profiles.iter().map(embed).collect();
    let combos = if discrete.is_empty() {
        // Only continuous attributes: every slot starts from the same
        // placeholder and is separated by the level draws below.
        vec![vec![0; j_non_optout]]
    } else {
        enumerate_choice_sets(full.len(), j_non_optout)?
    };
    let mut sets = Vec::with_capacity(n_sets);
    for s in 0..n_sets {
        let combo = &combos[s % combos.len()];
        let mut alts: Vec<Alternative> = Vec::with_capacity(j_non_optout + 1);
        for (slot, &i) in combo.iter().enumerate() {
            let mut p = full[i].clone();
            if discrete.is_empty() {
                // Keep placeholders distinct so the design validates.
                p.0.iter_mut().for_each(|x| *x += slot as f64 * 1e-6);
            }
            alts.push(Alternative::Profile(p));
        }
        if include_optout {
            alts.push(Alternative::OptOut);
        }
        sets.push(ChoiceSet::new(alts));
    }
    let mut design = Design::new(attributes.to_vec(), sets)?;
    for a in attributes.iter().filter(|a| a.is_continuous()) {
        design = assign_continuous_levels(&design, &a.name, rng)?;
    }
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeedStream, Stage};

    fn binary(name: &str) -> AttributeSpec {
        AttributeSpec::discrete(name, vec![0.0, 1.0])
    }

    fn brute_force_combinations(n: usize, j: usize) -> Vec<Vec<usize>> {
        (0u32..(1 << n))
            .filter(|m| m.count_ones() as usize == j)
            .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect::<Vec<_>>())
            .collect()
    }

    #[test]
    fn factorial_counts() {
        assert_eq!(full_factorial(&[binary("label"), binary("carbon")]).unwrap().len(), 4);
        assert_eq!(full_factorial(&[binary("a"), binary("b"), binary("c")]).unwrap().len(), 8);
        let three = full_factorial(&[AttributeSpec::discrete("x", vec![5.0, 1.0, 3.0])]).unwrap();
        assert_eq!(three, vec![Profile(vec![5.0]), Profile(vec![1.0]), Profile(vec![3.0])]);
    }

    #[test]
    fn factorial_is_lexicographic() {
        let p = full_factorial(&[binary("a"), AttributeSpec::discrete("b", vec![0.0, 1.0, 2.0])]).unwrap();
        let expect: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0, 2.0],
            vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0],
        ];
        assert_eq!(p.into_iter().map(|p| p.0).collect::<Vec<_>>(), expect);
    }

    #[test]
    fn factorial_capacity_error() {
        let many: Vec<AttributeSpec> = (0..21).map(|i| binary(&format!("a{i}"))).collect();
        match full_factorial(&many) {
            Err(Error::Capacity { required, cap, .. }) => {
                assert_eq!(required, 1 << 21);
                assert_eq!(cap, DEFAULT_FACTORIAL_CAP);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
        assert!(full_factorial(&[]).is_err());
    }

    #[test]
    fn choice_set_enumeration() {
        assert_eq!(enumerate_choice_sets(4, 2).unwrap().len(), 6);
        assert_eq!(enumerate_choice_sets(5, 5).unwrap(), vec![vec![0, 1, 2, 3, 4]]);
        let mut brute = brute_force_combinations(5, 2);
        brute.sort();
        assert_eq!(enumerate_choice_sets(5, 2).unwrap(), brute);
        for n in 1..=8 {
            for j in 1..=n {
                let mut b = brute_force_combinations(n, j);
                b.sort();
                assert_eq!(enumerate_choice_sets(n, j).unwrap(), b);
            }
        }
        assert!(enumerate_choice_sets(4, 0).is_err());
        assert!(enumerate_choice_sets(2, 3).is_err());
    }

    fn rose_attributes() -> Vec<AttributeSpec> {
        vec![binary("label"), binary("carbon"), AttributeSpec::continuous("price", 1.5, 4.5, 7)]
    }

    #[test]
    fn rose_factorial_design() {
        let mut rng = SeedStream::new(4).substream(Stage::ContinuousLevels, 0);
        let d = factorial_design(&rose_attributes(), 12, 2, true, &mut rng).unwrap();
        assert_eq!(d.n_sets(), 12);
        assert_eq!(d.n_alternatives(), 3);
        assert!(d.has_optout());
        d.validate_levels().unwrap();
        for set in d.choice_sets() {
            for p in set.alternatives.iter().filter_map(Alternative::profile) {
                assert!((1.5..=4.5).contains(&p.0[2]));
            }
        }
        // Each of the six pairs appears twice.
        let first: Vec<_> = d.choice_sets()[..6].iter().map(|s| s.alternatives[0].profile().unwrap().0[..2].to_vec()).collect();
        let second: Vec<_> = d.choice_sets()[6..].iter().map(|s| s.alternatives[0].profile().unwrap().0[..2].to_vec()).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn continuous_assignment_is_seeded() {
        let attrs = rose_attributes();
        let a = factorial_design(&attrs, 12, 2, true, &mut SeedStream::new(9).substream(Stage::ContinuousLevels, 0)).unwrap();
        let b = factorial_design(&attrs, 12, 2, true, &mut SeedStream::new(9).substream(Stage::ContinuousLevels, 0)).unwrap();
        assert_eq!(a, b);
        let narrow = vec![binary("label"), binary("carbon"), AttributeSpec::continuous("price", 1.5, 4.5, 2)];
        let c = factorial_design(&narrow, 6, 2, false, &mut SeedStream::new(1).substream(Stage::ContinuousLevels, 0)).unwrap();
        let d = factorial_design(&narrow, 6, 2, false, &mut SeedStream::new(1).substream(Stage::ContinuousLevels, 0)).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn continuous_level_frequencies() {
        // 35,000 sets x 2 slots = 70,000 assignments over 7 levels.
        let attrs = rose_attributes();
        let mut rng = SeedStream::new(2024).substream(Stage::ContinuousLevels, 0);
        let d = factorial_design(&attrs, 35_000, 2, true, &mut rng).unwrap();
        let grid = attrs[2].levels();
        let mut counts = [0usize; 7];
        for set in d.choice_sets() {
            for p in set.alternatives.iter().filter_map(Alternative::profile) {
                counts[grid.iter().position(|&g| g == p.0[2]).unwrap()] += 1;
            }
        }
        let n: f64 = 70_000.0;
        let p = 1.0 / 7.0;
        let bound = 3.0 * (n * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n * p).abs() < bound, "{counts:?}");
        }
    }

    #[test]
    fn assign_rejects_unknown_or_discrete() {
        let attrs = rose_attributes();
        let mut rng = SeedStream::new(1).substream(Stage::ContinuousLevels, 0);
        let d = factorial_design(&attrs, 2, 2, true, &mut rng).unwrap();
        assert!(matches!(assign_continuous_levels(&d, "colour", &mut rng), Err(Error::Schema(_))));
        assert!(matches!(assign_continuous_levels(&d, "label", &mut rng), Err(Error::Argument(_))));
    }
}
