use divlsh::band::ProjectionHash;
use divlsh::krein::{eta_pair, select_params};
use divlsh::lsh_l2::{collision_prob, L2Hash};
use divlsh::prob::{dirichlet_dataset, dirichlet_joint};
use divlsh::rng::{stream_rng, Stream};
use divlsh::srp::{asymmetric_pair, mil_collision_prob, Direction, SrpHash};
use divlsh::{AnnIndex, Dataset, IndexConfig, Point};

const DRAWS: usize = 100_000;

fn assert_rate(hits: usize, p: f64, what: &str) {
    let rate = hits as f64 / DRAWS as f64;
    let sigma = (p * (1.0 - p) / DRAWS as f64).sqrt();
    assert!(
        (rate - p).abs() <= 3.0 * sigma,
        "{what}: empirical {rate}, expected {p}, 3 sigma {}",
        3.0 * sigma
    );
}

#[test]
fn compound_l2_collision_is_power_of_single() {
    let (d, k, r) = (6, 3, 1.0);
    let x = vec![0.1; d];
    for (level, u) in [0.3, 0.8, 1.5].into_iter().enumerate() {
        let mut y = x.clone();
        y[2] += u;
        let hits = (0..DRAWS)
            .filter(|&i| {
                (0..k).all(|h| {
                    let mut rng = stream_rng(70 + level as u64, Stream::L2Hash, i as u64, h as u64);
                    let g = L2Hash::sample(d, r, &mut rng);
                    g.hash(&x) == g.hash(&y)
                })
            })
            .count();
        assert_rate(hits, collision_prob(u, r).unwrap().powi(k), &format!("u = {u}"));
    }
}

#[test]
fn srp_bits_follow_mil_collision_law() {
    let joint = dirichlet_joint(0.5, 2, 6, 3).unwrap();
    let params = select_params(0.5, 2).unwrap();
    let cols = joint.columns();
    let bound = cols
        .iter()
        .map(|c| eta_pair(c, &params).unwrap().norm_sq())
        .fold(0.0, f64::max);
    for (x, y) in [(0, 1), (2, 5)] {
        let (left, right) = asymmetric_pair(&cols[x], &cols[y], bound, &params).unwrap();
        for direction in [Direction::MaxInnerProduct, Direction::MinDivergence] {
            let query = match direction {
                Direction::MaxInnerProduct => right.clone(),
                Direction::MinDivergence => right.negated(),
            };
            let hits = (0..DRAWS)
                .filter(|&i| {
                    let h = SrpHash::sample(left.dim(), &mut stream_rng(80, Stream::SrpHash, x as u64, i as u64));
                    h.hash(left.values()) == h.hash(query.values())
                })
                .count();
            let p = mil_collision_prob(&cols[x], &cols[y], bound, &params, direction).unwrap();
            assert_rate(hits, p, &format!("columns {x},{y} {direction}"));
        }
    }
}

#[test]
fn recall_grows_with_tables() {
    let data = Dataset::Vectors(dirichlet_dataset(1.0, 8, 500, 11).unwrap());
    let queries: Vec<Point> = dirichlet_dataset(1.0, 8, 40, 12)
        .unwrap()
        .into_iter()
        .map(Point::Vector)
        .collect();
    let build = |tables| {
        let cfg = IndexConfig {
            hashes_per_table: 1,
            tables,
            bucket_width: 0.1,
            neighbors: 10,
            seed: 13,
            ..IndexConfig::default()
        };
        AnnIndex::build(data.clone(), cfg).unwrap()
    };
    let (one, forty) = (build(1), build(40));
    let mut recall = [0.0, 0.0];
    for q in &queries {
        let small = one.candidates(q).unwrap();
        let large = forty.candidates(q).unwrap();
        // table 0 is shared, so candidate sets are nested
        assert!(small.iter().all(|id| large.contains(id)));
        let truth = one.brute_force(q, 10).unwrap();
        recall[0] += divlsh::index::precision(&one.query(q, 10).unwrap().ids, &truth);
        recall[1] += divlsh::index::precision(&forty.query(q, 10).unwrap().ids, &truth);
    }
    assert!(recall[1] >= recall[0], "{recall:?}");
    assert!(recall[1] > recall[0] + 0.1 * queries.len() as f64, "{recall:?}");
}
