//! Seeded synthetic corpus for pretraining sanity runs. Every table has one
//! column from each generator (integer IDs, Gaussian floats, city names,
//! dates), with per-table generator parameters so that same-kind columns of
//! different tables are still distinguishable.

use chrono::{Duration, NaiveDate};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::table::{Cell, ColumnMeta, DType, Table};

pub const CITIES: [&str; 48] = [
    "Amsterdam",
    "Athens",
    "Auckland",
    "Bangkok",
    "Barcelona",
    "Beijing",
    "Berlin",
    "Bogota",
    "Boston",
    "Brussels",
    "Budapest",
    "Buenos Aires",
    "Cairo",
    "Cape Town",
    "Chicago",
    "Copenhagen",
    "Delhi",
    "Dublin",
    "Edinburgh",
    "Florence",
    "Geneva",
    "Hamburg",
    "Helsinki",
    "Istanbul",
    "Jakarta",
    "Kyoto",
    "Lagos",
    "Lima",
    "Lisbon",
    "London",
    "Madrid",
    "Manila",
    "Melbourne",
    "Mexico City",
    "Montreal",
    "Mumbai",
    "Nairobi",
    "Oslo",
    "Paris",
    "Prague",
    "Reykjavik",
    "Rome",
    "Santiago",
    "Seoul",
    "Stockholm",
    "Sydney",
    "Toronto",
    "Vienna",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusSpec {
    pub tables: usize,
    pub rows: usize,
    /// Distinct cities sampled per table.
    pub cities_per_table: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            tables: 64,
            rows: 32,
            cities_per_table: 5,
        }
    }
}

pub fn synthetic_corpus(spec: CorpusSpec, seed: u64) -> Vec<Table> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.tables)
        .map(|i| synthetic_table(i, &spec, &mut rng))
        .collect()
}

fn synthetic_table<R: Rng + ?Sized>(index: usize, spec: &CorpusSpec, rng: &mut R) -> Table {
    let m = spec.rows;
    let id_start: i64 = rng.random_range(1..1_000_000);
    let mut ids = Vec::with_capacity(m);
    let mut next = id_start;
    for _ in 0..m {
        ids.push(next);
        next += rng.random_range(1..=3);
    }
    ids.shuffle(rng);

    let mean: f64 = rng.random_range(-500.0..500.0);
    let std: f64 = rng.random_range(0.5..50.0);
    let normal = Normal::new(mean, std).expect("positive std");

    let cities: Vec<&str> = CITIES
        .choose_multiple(rng, spec.cities_per_table.min(CITIES.len()))
        .copied()
        .collect();

    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date");
    let first = epoch + Duration::days(rng.random_range(0..365 * 50));
    let span: i64 = rng.random_range(30..730);

    let rows = (0..m)
        .map(|i| {
            let value = (normal.sample(rng) * 100.0).round() / 100.0;
            let city = cities[rng.random_range(0..cities.len())];
            let date = first + Duration::days(rng.random_range(0..span));
            vec![
                Cell::Int(ids[i]),
                Cell::Float(value),
                Cell::Text(city.to_string()),
                Cell::Datetime(date.format("%Y-%m-%d").to_string()),
            ]
        })
        .collect();
    let columns = vec![
        ColumnMeta::new("id", DType::Int, true),
        ColumnMeta::new("measure", DType::Float, false),
        ColumnMeta::new("city", DType::Text, false),
        ColumnMeta::new("date", DType::Datetime, false),
    ];
    Table::new(format!("synthetic_{index:03}"), columns, rows)
        .expect("generated table is well-formed")
}
