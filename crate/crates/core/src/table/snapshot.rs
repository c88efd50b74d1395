use rand::seq::index;
use rand::Rng;

use super::{Table, TableError};

/// How the two snapshots of a pair relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    /// Each snapshot is an independent draw; they may share rows.
    #[default]
    Independent,
    /// The two snapshots share no rows. Requires `2 * r <= m`.
    Disjoint,
}

/// A row-subsampled view of a parent table.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub parent: String,
    /// Strictly increasing row indices into the parent.
    pub rows: Vec<usize>,
    pub table: Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotPair {
    pub a: Snapshot,
    pub b: Snapshot,
}

/// Draws two sorted sets of `r` distinct row indices from `0..m`.
pub fn sample_pair_indices<R: Rng + ?Sized>(
    m: usize,
    r: usize,
    rng: &mut R,
    mode: PairMode,
) -> Result<(Vec<usize>, Vec<usize>), TableError> {
    let needed = match mode {
        PairMode::Independent => r,
        PairMode::Disjoint => 2 * r,
    };
    if r == 0 || needed > m {
        return Err(TableError::InvalidSampleSize {
            requested: r,
            available: m,
        });
    }
    let sorted = |mut v: Vec<usize>| {
        v.sort_unstable();
        v
    };
    Ok(match mode {
        PairMode::Independent => {
            let a = index::sample(rng, m, r).into_vec();
            let b = index::sample(rng, m, r).into_vec();
            (sorted(a), sorted(b))
        }
        PairMode::Disjoint => {
            let mut both = index::sample(rng, m, 2 * r).into_vec();
            let b = both.split_off(r);
            (sorted(both), sorted(b))
        }
    })
}

pub fn sample_snapshot_pair<R: Rng + ?Sized>(
    t: &Table,
    r: usize,
    rng: &mut R,
    mode: PairMode,
) -> Result<SnapshotPair, TableError> {
    let (ia, ib) = sample_pair_indices(t.n_rows(), r, rng, mode)?;
    let snap = |rows: Vec<usize>| -> Result<Snapshot, TableError> {
        Ok(Snapshot {
            parent: t.name().to_string(),
            table: t.select_rows(&rows)?,
            rows,
        })
    };
    Ok(SnapshotPair {
        a: snap(ia)?,
        b: snap(ib)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn numbered(m: usize) -> Table {
        let rows: Vec<Vec<String>> = (0..m)
            .map(|i| vec![i.to_string(), format!("r{i}")])
            .collect();
        let rows: Vec<Vec<&str>> = rows
            .iter()
            .map(|r| r.iter().map(String::as_str).collect())
            .collect();
        Table::from_text("nums", &["i", "s"], &rows).unwrap()
    }

    #[test]
    fn full_sample_contains_every_row() {
        let t = numbered(6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pair = sample_snapshot_pair(&t, 6, &mut rng, PairMode::Independent).unwrap();
        assert_eq!(pair.a.rows, (0..6).collect::<Vec<_>>());
        assert_eq!(pair.b.rows, (0..6).collect::<Vec<_>>());
        assert_eq!(pair.a.table, t);
    }

    #[test]
    fn invalid_sizes() {
        let t = numbered(4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (r, mode) in [
            (0, PairMode::Independent),
            (5, PairMode::Independent),
            (3, PairMode::Disjoint),
        ] {
            assert!(matches!(
                sample_snapshot_pair(&t, r, &mut rng, mode),
                Err(TableError::InvalidSampleSize { .. })
            ));
        }
    }

    #[test]
    fn seeded_single_row_pairs_repeat() {
        let t = numbered(10);
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            sample_snapshot_pair(&t, 1, &mut rng, PairMode::Independent).unwrap()
        };
        let (p, q) = (draw(), draw());
        assert_eq!(p, q);
        assert_eq!(p.a.rows.len(), 1);
    }

    #[test]
    fn disjoint_pairs_share_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let (a, b) = sample_pair_indices(10, 5, &mut rng, PairMode::Disjoint).unwrap();
            assert!(a.iter().all(|i| !b.contains(i)));
        }
    }

    #[test]
    fn inclusion_frequency_is_uniform() {
        // Each row lands in a 5-of-10 sample with probability 1/2.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 10_000;
        let mut counts = [0usize; 10];
        for _ in 0..draws {
            let (a, _) = sample_pair_indices(10, 5, &mut rng, PairMode::Independent).unwrap();
            for i in a {
                counts[i] += 1;
            }
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");
        }
    }
}
