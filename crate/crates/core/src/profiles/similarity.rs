use std::sync::Arc;

use rayon::prelude::*;

use super::{ProfileError, ProfileVector};
use crate::graph::Roster;
use crate::matrix::{MatrixKind, WeightedMatrix};

/// `u·v / (‖u‖ ‖v‖)`, clamped into `[0, 1]` for non-negative profiles.
pub fn cosine_similarity(u: &ProfileVector, v: &ProfileVector) -> Result<f64, ProfileError> {
    if u.category != v.category {
        return Err(ProfileError::CategoryMismatch(
            u.category.clone(),
            v.category.clone(),
        ));
    }
    if u.values.len() != v.values.len() {
        return Err(ProfileError::LengthMismatch(u.values.len(), v.values.len()));
    }
    let nu = norm(&u.values);
    if nu == 0.0 {
        return Err(ProfileError::ZeroVector(u.participant.clone()));
    }
    let nv = norm(&v.values);
    if nv == 0.0 {
        return Err(ProfileError::ZeroVector(v.participant.clone()));
    }
    Ok(cosine_raw(&u.values, &v.values, nu, nv))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn cosine_raw(u: &[f64], v: &[f64], nu: f64, nv: f64) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (dot / (nu * nv)).clamp(0.0, 1.0)
}

/// Pairwise similarities for one category, plus participants whose vector
/// was all zeros and therefore left undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub category: String,
    pub matrix: WeightedMatrix,
    pub zero_vectors: Vec<String>,
}

/// Symmetric similarity matrix over `roster`.
///
/// Entries involving a participant without a usable vector, and the
/// diagonal, stay undefined rather than zero.
pub fn similarity_matrix(
    roster: &Arc<Roster>,
    profiles: &[ProfileVector],
    category: &str,
) -> Result<SimilarityMatrix, ProfileError> {
    let n = roster.len();
    let mut slots: Vec<Option<(&[f64], f64)>> = vec![None; n];
    let mut zero_vectors = Vec::new();
    let mut width = None;
    for p in profiles.iter().filter(|p| p.category == category) {
        let Some(i) = roster.index_of(&p.participant) else {
            continue;
        };
        if let Some(w) = width {
            if w != p.values.len() {
                return Err(ProfileError::LengthMismatch(w, p.values.len()));
            }
        }
        width = Some(p.values.len());
        let nu = norm(&p.values);
        if nu == 0.0 {
            zero_vectors.push(p.participant.clone());
        } else {
            slots[i] = Some((p.values.as_slice(), nu));
        }
    }
    let defined = slots.iter().filter(|s| s.is_some()).count();
    if defined < 2 {
        return Err(ProfileError::TooFewProfiles {
            category: category.to_string(),
            defined,
        });
    }

    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let slots = &slots;
            (0..n).map(move |j| match (i != j, slots[i], slots[j]) {
                // order the operands so sim(i, j) and sim(j, i) are bitwise equal
                (true, Some(a), Some(b)) if i < j => cosine_raw(a.0, b.0, a.1, b.1),
                (true, Some(a), Some(b)) => cosine_raw(b.0, a.0, b.1, a.1),
                _ => f64::NAN,
            })
        })
        .collect();
    Ok(SimilarityMatrix {
        category: category.to_string(),
        matrix: WeightedMatrix::from_values(MatrixKind::Similarity, Arc::clone(roster), values),
        zero_vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::SummaryMode;
    use proptest::prelude::*;

    fn profile(id: &str, category: &str, values: &[f64]) -> ProfileVector {
        ProfileVector {
            participant: id.into(),
            category: category.into(),
            values: values.to_vec(),
            summary_modes: vec![SummaryMode::TMax; values.len()],
        }
    }

    #[test]
    fn political_worked_examples() {
        let s = cosine_similarity(
            &profile("a", "political", &[2.0, 5.0]),
            &profile("b", "political", &[2.0, 3.0]),
        )
        .unwrap();
        assert!((s - 0.98).abs() < 0.005, "{s}");
        let s = cosine_similarity(
            &profile("a", "political", &[0.0, 3.0]),
            &profile("b", "political", &[3.0, 3.0]),
        )
        .unwrap();
        assert!((s - 9.0 / (3.0 * 18f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn identical_vectors_have_similarity_one() {
        let u = profile("a", "music", &[1.0, 2.0, 3.0]);
        assert_eq!(cosine_similarity(&u, &u).unwrap(), 1.0);
    }

    #[test]
    fn undefined_cases() {
        let zero = profile("z", "music", &[0.0, 0.0]);
        let one = profile("o", "music", &[1.0, 0.0]);
        assert!(matches!(
            cosine_similarity(&zero, &one),
            Err(ProfileError::ZeroVector(id)) if id == "z"
        ));
        assert!(matches!(
            cosine_similarity(&one, &profile("p", "health", &[1.0, 0.0])),
            Err(ProfileError::CategoryMismatch(..))
        ));
    }

    #[test]
    fn matrix_flags_missing_and_zero_profiles() {
        let roster = Arc::new(Roster::new(["a", "b", "c", "d"]).unwrap());
        let profiles = vec![
            profile("a", "music", &[1.0, 0.0]),
            profile("b", "music", &[0.0, 1.0]),
            profile("c", "music", &[0.0, 0.0]),
            profile("a", "health", &[5.0, 5.0]),
        ];
        let sm = similarity_matrix(&roster, &profiles, "music").unwrap();
        assert_eq!(sm.matrix.get(0, 1), Some(0.0));
        assert_eq!(sm.matrix.get(0, 2), None);
        assert_eq!(sm.matrix.get(3, 0), None);
        assert_eq!(sm.matrix.get(0, 0), None);
        assert_eq!(sm.zero_vectors, vec!["c".to_string()]);

        assert!(matches!(
            similarity_matrix(&roster, &profiles, "health"),
            Err(ProfileError::TooFewProfiles { defined: 1, .. })
        ));
    }

    #[test]
    fn identical_profiles_off_diagonal_one() {
        let roster = Arc::new(Roster::new(["a", "b"]).unwrap());
        let p = [profile("a", "x", &[2.0, 7.0]), profile("b", "x", &[2.0, 7.0])];
        let sm = similarity_matrix(&roster, &p, "x").unwrap();
        assert_eq!(sm.matrix.get(0, 1), Some(1.0));
        assert_eq!(sm.matrix.get(1, 0), Some(1.0));
    }

    fn arb_vec() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..10.0, 4)
            .prop_filter("non-zero", |v| v.iter().any(|&x| x > 1e-3))
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_scale_invariant(u in arb_vec(), v in arb_vec(), alpha in 0.01f64..100.0) {
            let pu = profile("u", "c", &u);
            let pv = profile("v", "c", &v);
            let s = cosine_similarity(&pu, &pv).unwrap();
            prop_assert_eq!(s.to_bits(), cosine_similarity(&pv, &pu).unwrap().to_bits());
            prop_assert!((0.0..=1.0).contains(&s));
            let scaled: Vec<f64> = u.iter().map(|x| x * alpha).collect();
            let s2 = cosine_similarity(&profile("u", "c", &scaled), &pv).unwrap();
            prop_assert!((s - s2).abs() < 1e-12);
        }

        #[test]
        fn matrix_matches_pairwise_loop(rows in proptest::collection::vec(arb_vec(), 2..8)) {
            let n = rows.len();
            let roster = Arc::new(Roster::numbered(n));
            let profiles: Vec<_> = rows.iter().enumerate()
                .map(|(i, v)| profile(&i.to_string(), "c", v)).collect();
            let sm = similarity_matrix(&roster, &profiles, "c").unwrap();
            for i in 0..n {
                for j in 0..n {
                    if i == j { continue; }
                    let a = &rows[i];
                    let b = &rows[j];
                    let mut dot = 0.0;
                    let mut na = 0.0;
                    let mut nb = 0.0;
                    for k in 0..a.len() {
                        dot += a[k] * b[k];
                        na += a[k] * a[k];
                        nb += b[k] * b[k];
                    }
                    let expected = dot / (na.sqrt() * nb.sqrt());
                    prop_assert!((sm.matrix.value(i, j) - expected).abs() < 1e-12);
                    prop_assert_eq!(sm.matrix.value(i, j).to_bits(), sm.matrix.value(j, i).to_bits());
                }
            }
        }
    }
}
