//! Synthetic instances and instance families of varying size.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{default_capacities, Instance, Labels, ModelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("invalid generator parameters: {0}")]
    Parameters(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Knobs for [`generate`]. Each student favors a few topics that receive
/// `favored_share` of the weight budget; the rest is scattered over the
/// other topics. Favored topics are drawn with a skewed popularity so some
/// topics are much more sought after than others.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub m: usize,
    pub w_max: u32,
    /// Number of staff groups.
    pub groups: usize,
    /// Favored topics per student, drawn uniformly from this range.
    pub favored: (usize, usize),
    pub favored_share: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(n: usize, m: usize, w_max: u32, groups: usize, seed: u64) -> Self {
        GeneratorConfig { n, m, w_max, groups, favored: (2, 2), favored_share: 0.8, seed }
    }
}

/// Random instance with default capacities.
pub fn random_instance(n: usize, m: usize, w_max: u32, groups: usize, seed: u64) -> Result<Instance, GenerateError> {
    generate(&GeneratorConfig::new(n, m, w_max, groups, seed))
}

pub fn generate(cfg: &GeneratorConfig) -> Result<Instance, GenerateError> {
    let bad = |msg: String| Err(GenerateError::Parameters(msg));
    if cfg.n == 0 || cfg.m == 0 || cfg.w_max == 0 || cfg.groups == 0 {
        return bad(format!(
            "n, m, w_max and K must be positive (n = {}, m = {}, w_max = {}, K = {})",
            cfg.n, cfg.m, cfg.w_max, cfg.groups
        ));
    }
    if cfg.groups > cfg.m {
        return bad(format!("K = {} staff groups need at least as many topics (m = {})", cfg.groups, cfg.m));
    }
    if cfg.favored.0 == 0 || cfg.favored.0 > cfg.favored.1 {
        return bad(format!("favored topic range {:?} is empty or starts at zero", cfg.favored));
    }
    if !(0.0..=1.0).contains(&cfg.favored_share) {
        return bad(format!("favored_share {} outside [0, 1]", cfg.favored_share));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.m;
    // popularity 1/(rank+1) over a random ranking of the topics
    let ranking = index::sample(&mut rng, m, m).into_vec();
    let mut popularity = vec![0.0; m];
    for (rank, &j) in ranking.iter().enumerate() {
        popularity[j] = 1.0 / (rank as f64 + 1.0);
    }

    let rows = (0..cfg.n).map(|_| weight_row(cfg, &popularity, &mut rng)).collect();
    let (a, b) = default_capacities(cfg.n, m);
    let inst = Instance::builder(rows, cfg.w_max)
        .capacities(a, b)
        .groups(contiguous_groups(m, cfg.groups))
        .labels(Labels {
            students: (1..=cfg.n).map(|i| format!("s{i}")).collect(),
            topics: Vec::new(),
            staff: Vec::new(),
        })
        .build()?;
    Ok(inst)
}

fn weight_row(cfg: &GeneratorConfig, popularity: &[f64], rng: &mut ChaCha8Rng) -> Vec<u32> {
    let m = cfg.m;
    let k = rng.random_range(cfg.favored.0..=cfg.favored.1).min(m);
    let mut avail = popularity.to_vec();
    let mut favored = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = avail.iter().sum();
        let mut x = rng.random::<f64>() * total;
        let pick = avail
            .iter()
            .position(|&p| {
                x -= p;
                p > 0.0 && x < 0.0
            })
            .unwrap_or_else(|| avail.iter().rposition(|&p| p > 0.0).unwrap());
        avail[pick] = 0.0;
        favored.push(pick);
    }

    let mut row = vec![0u32; m];
    let others: Vec<usize> = (0..m).filter(|j| !favored.contains(j)).collect();
    let mut favored_units = (cfg.favored_share * f64::from(cfg.w_max)).round() as u32;
    if others.is_empty() {
        favored_units = cfg.w_max;
    }
    // random composition of the favored budget: k - 1 sorted cut points
    let mut cuts: Vec<u32> = (0..k - 1).map(|_| rng.random_range(0..=favored_units)).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    for (q, &j) in favored.iter().enumerate() {
        let end = cuts.get(q).copied().unwrap_or(favored_units);
        row[j] = end - prev;
        prev = end;
    }
    for _ in 0..cfg.w_max - favored_units {
        row[others[rng.random_range(0..others.len())]] += 1;
    }
    row
}

/// `groups` contiguous blocks: all but the last have `m / groups` topics,
/// the last takes the rest (15 topics, 4 groups: 3, 3, 3, 6).
pub fn contiguous_groups(m: usize, groups: usize) -> Vec<Vec<usize>> {
    let size = m / groups;
    (0..groups)
        .map(|k| {
            let end = if k + 1 == groups { m } else { (k + 1) * size };
            (k * size..end).collect()
        })
        .collect()
}

/// Derives an instance with `n_target` students from `base` by dropping
/// uniformly chosen students or by appending copies of uniformly chosen
/// students' weight rows. Capacities are reset to the defaults for the new
/// size; groups and topic labels carry over.
pub fn derive_family(base: &Instance, n_target: usize, seed: u64) -> Result<Instance, GenerateError> {
    if n_target == 0 {
        return Err(GenerateError::Parameters("n_target must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = base.n();
    let label = |i: usize| base.student_label(i).into_owned();
    let (rows, students): (Vec<Vec<u32>>, Vec<String>) = if n_target <= n {
        let mut keep = index::sample(&mut rng, n, n_target).into_vec();
        keep.sort_unstable();
        keep.into_iter().map(|i| (base.row(i).to_vec(), label(i))).unzip()
    } else {
        let mut rows: Vec<Vec<u32>> = base.weight_rows();
        let mut students: Vec<String> = (0..n).map(label).collect();
        let mut copies = vec![0usize; n];
        for _ in n..n_target {
            let i = rng.random_range(0..n);
            copies[i] += 1;
            rows.push(base.row(i).to_vec());
            students.push(format!("{}~{}", label(i), copies[i]));
        }
        (rows, students)
    };
    let (a, b) = default_capacities(n_target, base.m());
    let labels = Labels { students, ..base.labels().clone() };
    Ok(Instance::builder(rows, base.w_max())
        .capacities(a, b)
        .groups(base.groups().to_vec())
        .labels(labels)
        .build()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighborhoods::{applicable_kinds, NeighborhoodKind};

    #[test]
    fn reference_shaped_base() {
        let inst = random_instance(34, 15, 100, 4, 11).unwrap();
        assert!((0..34).all(|i| inst.row(i).iter().sum::<u32>() == 100));
        let sizes: Vec<usize> = inst.groups().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 3, 6]);
        assert_eq!(inst.min_students(), &[2; 15]);
        assert_eq!(inst.max_students(), &[3; 15]);
    }

    #[test]
    fn single_topic() {
        let inst = random_instance(7, 1, 50, 1, 3).unwrap();
        assert!((0..7).all(|i| inst.row(i) == [50]));
        assert_eq!((inst.min_students(), inst.max_students()), (&[7][..], &[7][..]));
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(random_instance(20, 6, 100, 2, 5).unwrap(), random_instance(20, 6, 100, 2, 5).unwrap());
        assert_ne!(random_instance(20, 6, 100, 2, 5).unwrap(), random_instance(20, 6, 100, 2, 6).unwrap());
    }

    #[test]
    fn invalid_parameters() {
        assert!(random_instance(0, 3, 10, 1, 0).is_err());
        assert!(random_instance(3, 3, 10, 4, 0).is_err());
        assert!(random_instance(3, 3, 0, 1, 0).is_err());
    }

    #[test]
    fn favored_topics_carry_most_weight() {
        let cfg = GeneratorConfig { favored: (1, 4), ..GeneratorConfig::new(200, 15, 100, 4, 2) };
        let inst = generate(&cfg).unwrap();
        for i in 0..200 {
            let mut row = inst.row(i).to_vec();
            row.sort_unstable_by(|a, b| b.cmp(a));
            assert!(row[..4].iter().sum::<u32>() >= 80, "{row:?}");
        }
    }

    #[test]
    fn family_sizes_and_shift_pattern() {
        let base = random_instance(34, 15, 100, 4, 1).unwrap();
        for n in 30..=45 {
            let inst = derive_family(&base, n, n as u64).unwrap();
            assert_eq!(inst.n(), n);
            assert_eq!(inst.groups(), base.groups());
            let shift = applicable_kinds(&inst).contains(&NeighborhoodKind::Shift);
            assert_eq!(shift, n % 15 != 0);
            // every row comes from the base
            for i in 0..n {
                assert!((0..34).any(|b| base.row(b) == inst.row(i)));
            }
        }
        assert_eq!(derive_family(&base, 34, 9).unwrap(), base);
    }
}
