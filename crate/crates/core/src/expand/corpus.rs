//! Bundled germs: the straight line, the three-parabola germ, stars, and a crossing.

use super::germ::CurveGerm2D;

const LINE: &str = include_str!("../../data/line.json");
const EXAMPLE15: &str = include_str!("../../data/example15.json");
const CROSSING: &str = include_str!("../../data/crossing.json");
const STARS: [&str; 8] = [
    include_str!("../../data/star1.json"),
    include_str!("../../data/star2.json"),
    include_str!("../../data/star3.json"),
    include_str!("../../data/star4.json"),
    include_str!("../../data/star5.json"),
    include_str!("../../data/star6.json"),
    include_str!("../../data/star7.json"),
    include_str!("../../data/star8.json"),
];

fn load(text: &str) -> CurveGerm2D {
    CurveGerm2D::from_json(text).expect("bundled germ is valid")
}

pub fn line() -> CurveGerm2D {
    load(LINE)
}

/// PL approximation of `y (y - x^2) (y + x^2) = 0`, cooriented by `dy`.
pub fn example15() -> CurveGerm2D {
    load(EXAMPLE15)
}

/// Two transverse lines with distinct conormals at the origin.
pub fn crossing() -> CurveGerm2D {
    load(CROSSING)
}

/// `n` branches `y = a x^2` sharing the conormal `dy`, for `1 <= n <= 8`.
pub fn star(n: usize) -> Option<CurveGerm2D> {
    (1..=8).contains(&n).then(|| load(STARS[n - 1]))
}

/// Every bundled germ with its name.
pub fn all() -> Vec<(String, CurveGerm2D)> {
    let mut out = vec![("line".to_string(), line()), ("example15".to_string(), example15())];
    out.extend((1..=8).map(|n| (format!("star{n}"), star(n).unwrap())));
    out.push(("crossing".to_string(), crossing()));
    out
}

/// Bundled germ by name, as accepted by the CLI.
pub fn by_name(name: &str) -> Option<CurveGerm2D> {
    all().into_iter().find(|(n, _)| n == name).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::{draw_valid_constants, total_expansion, ClassifyTolerances, ConstantsRanges, GeometryTolerances, Mode, NodeKind};
    use rand::SeedableRng;

    #[test]
    fn censuses() {
        let tol = GeometryTolerances::default();
        for (name, g) in all() {
            for seed in 0..5 {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let c = draw_valid_constants(&g, &ConstantsRanges::default(), Mode::Full, &tol, &mut rng).unwrap();
                let graph = total_expansion(&g, &c, Mode::Full, &tol, &ClassifyTolerances::default()).unwrap();
                let census = graph.census();
                let corays = g.stratify().unwrap().corays.len();
                assert_eq!(census.get(NodeKind::End), 2 * corays, "{name}");
                assert_eq!(census.get(NodeKind::NotArboreal), 0, "{name}");
                assert_eq!(graph.euler_characteristic(), 1, "{name}");
            }
        }
    }
}
