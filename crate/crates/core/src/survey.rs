//! Kernel surveys: polarisation signatures, grouping by distance curve, and
//! CSV export.
//!
//! The distance curve of a kernel depends only on the multiset of its
//! one-step erasure maps, so curves are computed once per distinct multiset
//! and shared by every kernel that has it.
//!
//! Singular kernels lose capacity (some inputs are undetermined even without
//! erasures) and are not polarising transforms; their curve is pinned at the
//! no-polarisation value 1 instead of being evaluated.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::bec::{check_probability, one_step_profile, polarisation_distance_of, spectrum_len, TransitionProfile};
use crate::error::{Error, Result};
use crate::gf2::{partial_distances, Kernel};
use crate::io::{fmt_sig, write_atomic};

/// Curves closer than this in every component belong to the same group.
pub const CURVE_TOLERANCE: f64 = 1e-12;

/// Required drop of the distance between depth 1 and the final depth for a
/// kernel to count as polarising.
pub const POLARISING_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    /// Count rows of the one-step profile, sorted.
    pub profile_multiset: Vec<Vec<u64>>,
    /// Normalised polarisation distance at depths `1..=depth`.
    pub distance_curve: Vec<f64>,
    pub singular: bool,
}

fn check_survey_params(l: usize, eps0: f64, depth: u32) -> Result<()> {
    check_probability("design erasure probability", eps0)?;
    if eps0 == 0.0 {
        return Err(Error::out_of_range("design erasure probability", eps0));
    }
    if depth == 0 {
        return Err(Error::out_of_range("survey depth", depth));
    }
    spectrum_len(l, depth).map(|_| ())
}

fn distance_curve(profile: &TransitionProfile, eps0: f64, depth: u32) -> Vec<f64> {
    let l = profile.size();
    let mut z = vec![eps0];
    let mut curve = Vec::with_capacity(depth as usize);
    for _ in 0..depth {
        let mut next = Vec::with_capacity(z.len() * l);
        for &parent in &z {
            next.extend((0..l).map(|t| profile.eval0(t, parent)));
        }
        z = next;
        curve.push(polarisation_distance_of(&z, eps0).expect("nonempty spectrum, eps0 > 0"));
    }
    curve
}

pub fn signature(k: &Kernel, eps0: f64, depth: u32) -> Result<Signature> {
    check_survey_params(k.size(), eps0, depth)?;
    let profile = one_step_profile(k)?;
    let singular = !k.is_invertible();
    let distance_curve = if singular {
        vec![1.0; depth as usize]
    } else {
        distance_curve(&profile, eps0, depth)
    };
    Ok(Signature {
        profile_multiset: profile.multiset(),
        distance_curve,
        singular,
    })
}

/// One group of kernels sharing a distance curve.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupRecord {
    /// 1 is the group with the lowest distance at the final depth.
    pub group_id: usize,
    pub member_count: usize,
    /// First member in enumeration order.
    pub representative: Kernel,
    pub distance_curve: Vec<f64>,
    pub polarising: bool,
    pub singular_members: usize,
    /// Distinct profile multisets found in the group.
    pub profile_multisets: Vec<Vec<Vec<u64>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurveyEntry {
    pub kernel: Kernel,
    pub group_id: usize,
    /// Rate exponent; `None` for singular kernels.
    pub exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Survey {
    pub eps0: f64,
    pub depth: u32,
    pub groups: Vec<GroupRecord>,
    /// One entry per surveyed kernel, in enumeration order.
    pub entries: Vec<SurveyEntry>,
}

impl Survey {
    pub fn group(&self, id: usize) -> Option<&GroupRecord> {
        id.checked_sub(1).and_then(|i| self.groups.get(i))
    }

    pub fn polarising_count(&self) -> usize {
        self.groups.iter().filter(|g| g.polarising).map(|g| g.member_count).sum()
    }

    pub fn singular_count(&self) -> usize {
        self.groups.iter().map(|g| g.singular_members).sum()
    }

    /// Survey CSV, rows ordered by group and then enumeration order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kernel_rows,group_id,polarising,exponent");
        for d in 1..=self.depth {
            write!(out, ",d{d}").unwrap();
        }
        out.push('\n');
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by_key(|&i| (self.entries[i].group_id, i));
        for i in order {
            let e = &self.entries[i];
            let g = &self.groups[e.group_id - 1];
            write!(
                out,
                "{},{},{},{}",
                e.kernel.row_strings().join(";"),
                e.group_id,
                g.polarising as u8,
                e.exponent.map(fmt_sig).unwrap_or_default()
            )
            .unwrap();
            for &d in &g.distance_curve {
                write!(out, ",{}", fmt_sig(d)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

struct KernelFacts {
    multiset: Vec<Vec<u64>>,
    singular: bool,
    exponent: Option<f64>,
}

/// Groups a kernel family by distance curve at `eps0` over depths
/// `1..=depth`.
pub fn group_survey(family: impl IntoIterator<Item = Kernel>, eps0: f64, depth: u32) -> Result<Survey> {
    let kernels: Vec<Kernel> = family.into_iter().collect();
    let first = kernels.first().ok_or(Error::Empty("kernel family"))?;
    check_survey_params(first.size(), eps0, depth)?;
    if let Some(k) = kernels.iter().find(|k| k.size() != first.size()) {
        return Err(Error::Mismatch(format!(
            "survey mixes {}x{} and {}x{} kernels",
            first.size(),
            first.size(),
            k.size(),
            k.size()
        )));
    }

    let facts: Vec<KernelFacts> = kernels
        .par_iter()
        .map(|k| {
            let profile = one_step_profile(k)?;
            Ok(KernelFacts {
                multiset: profile.multiset(),
                singular: !k.is_invertible(),
                exponent: partial_distances(k).ok().map(|pd| pd.exponent),
            })
        })
        .collect::<Result<_>>()?;

    // distinct (multiset, singular) keys in first-appearance order
    let mut key_index: HashMap<(&[Vec<u64>], bool), usize> = HashMap::new();
    let mut keys: Vec<(usize, &KernelFacts)> = Vec::new();
    let kernel_key: Vec<usize> = facts
        .iter()
        .enumerate()
        .map(|(i, f)| {
            *key_index.entry((&f.multiset, f.singular)).or_insert_with(|| {
                keys.push((i, f));
                keys.len() - 1
            })
        })
        .collect();

    let curves: Vec<Vec<f64>> = keys
        .par_iter()
        .map(|(_, f)| {
            if f.singular {
                vec![1.0; depth as usize]
            } else {
                // rebuild the profile from its sorted rows; order is irrelevant
                // to the curve
                let profile = TransitionProfile::from_rows(first.size(), f.multiset.clone());
                distance_curve(&profile, eps0, depth)
            }
        })
        .collect();

    // cluster keys whose curves agree within tolerance
    let mut cluster_of_key = vec![0usize; keys.len()];
    let mut clusters: Vec<usize> = Vec::new(); // representative key per cluster
    for (key, curve) in curves.iter().enumerate() {
        let found = clusters.iter().position(|&rep| {
            curves[rep]
                .iter()
                .zip(curve)
                .all(|(a, b)| (a - b).abs() <= CURVE_TOLERANCE)
        });
        cluster_of_key[key] = found.unwrap_or_else(|| {
            clusters.push(key);
            clusters.len() - 1
        });
    }

    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&curves[clusters[a]], &curves[clusters[b]]);
        ca[ca.len() - 1]
            .total_cmp(&cb[cb.len() - 1])
            .then_with(|| ca.iter().zip(cb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
            .then_with(|| keys[clusters[a]].0.cmp(&keys[clusters[b]].0))
    });
    let mut group_of_cluster = vec![0usize; clusters.len()];
    for (rank, &c) in order.iter().enumerate() {
        group_of_cluster[c] = rank + 1;
    }

    let mut groups: Vec<GroupRecord> = order
        .iter()
        .enumerate()
        .map(|(rank, &c)| {
            let rep_key = clusters[c];
            let curve = curves[rep_key].clone();
            GroupRecord {
                group_id: rank + 1,
                member_count: 0,
                representative: kernels[keys[rep_key].0].clone(),
                polarising: curve[curve.len() - 1] < curve[0] - POLARISING_MARGIN,
                distance_curve: curve,
                singular_members: 0,
                profile_multisets: Vec::new(),
            }
        })
        .collect();
    for (key, &(_, f)) in keys.iter().enumerate() {
        let g = &mut groups[group_of_cluster[cluster_of_key[key]] - 1];
        if !g.profile_multisets.contains(&f.multiset) {
            g.profile_multisets.push(f.multiset.clone());
        }
    }

    let mut entries = Vec::with_capacity(kernels.len());
    for ((kernel, f), key) in kernels.into_iter().zip(&facts).zip(kernel_key) {
        let group_id = group_of_cluster[cluster_of_key[key]];
        let g = &mut groups[group_id - 1];
        g.member_count += 1;
        g.singular_members += f.singular as usize;
        entries.push(SurveyEntry {
            kernel,
            group_id,
            exponent: f.exponent,
        });
    }
    Ok(Survey {
        eps0,
        depth,
        groups,
        entries,
    })
}

pub fn export_survey(survey: &Survey, destination: &Path) -> Result<()> {
    if survey.entries.is_empty() {
        return Err(Error::Empty("survey records"));
    }
    write_atomic(destination, survey.to_csv().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{enumerate_kernels, KernelFamily};

    fn lt3() -> Vec<Kernel> {
        enumerate_kernels(3, KernelFamily::LowerTriangularUnitDiagonal)
            .unwrap()
            .collect()
    }

    #[test]
    fn signature_examples() {
        let s = signature(&Kernel::identity(3).unwrap(), 0.5, 3).unwrap();
        for d in s.distance_curve {
            assert!((d - 1.0).abs() < 1e-12);
        }
        let s = signature(&Kernel::arikan(), 0.5, 1).unwrap();
        assert_eq!(s.distance_curve, vec![0.25]);

        let a = signature(&Kernel::parse("100,110,011").unwrap(), 0.5, 5).unwrap();
        let b = signature(&Kernel::parse("100,110,101").unwrap(), 0.5, 5).unwrap();
        assert_eq!(a, b);

        assert!(signature(&Kernel::arikan(), 0.0, 3).is_err());
        assert!(signature(&Kernel::arikan(), 0.5, 0).is_err());
        assert!(matches!(signature(&Kernel::arikan(), 0.5, 30), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn singular_signature_is_flat() {
        let s = signature(&Kernel::parse("00,00").unwrap(), 0.5, 4).unwrap();
        assert!(s.singular);
        assert_eq!(s.distance_curve, vec![1.0; 4]);
    }

    #[test]
    fn lower_triangular_3x3_groups() {
        let survey = group_survey(lt3(), 0.5, 7).unwrap();
        let names = |g: &GroupRecord| -> Vec<String> {
            survey
                .entries
                .iter()
                .filter(|e| e.group_id == g.group_id)
                .map(|e| e.kernel.to_string())
                .collect()
        };
        let best = &survey.groups[0];
        assert!(best.polarising);
        assert_eq!(names(best), ["100,010,111", "100,110,011", "100,110,101", "100,110,111"]);
        let last = survey.groups.last().unwrap();
        assert_eq!(names(last), vec!["100,010,001".to_string()]);
        assert!(!last.polarising);
        assert_eq!(survey.groups.iter().map(|g| g.member_count).sum::<usize>(), 8);
    }

    #[test]
    fn single_kernel_family() {
        let survey = group_survey([Kernel::arikan()], 0.5, 3).unwrap();
        assert_eq!(survey.groups.len(), 1);
        assert_eq!(survey.groups[0].member_count, 1);
        assert!(survey.groups[0].polarising);
        assert!(group_survey(Vec::<Kernel>::new(), 0.5, 3).is_err());
    }

    #[test]
    fn csv_export() {
        let survey = group_survey(lt3(), 0.5, 5).unwrap();
        let csv = survey.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[0], "kernel_rows,group_id,polarising,exponent,d1,d2,d3,d4,d5");
        assert!(lines[1].starts_with("100;010;111,1,1,0.333333333333,0.291666666667,"));
        assert!(lines[8].starts_with("100;010;001,"));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("survey.csv");
        export_survey(&survey, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), csv);

        let empty = Survey {
            eps0: 0.5,
            depth: 5,
            groups: vec![],
            entries: vec![],
        };
        assert!(export_survey(&empty, &path).is_err());
    }
}
