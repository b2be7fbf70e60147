use geomnet::counting::{count_empirical, dimension_closed_form, dimension_molien, EmpiricalOptions};
use num_bigint::BigInt;

const TABLE: [(usize, usize, u64); 9] = [
    (3, 1, 5),
    (5, 1, 13),
    (7, 1, 25),
    (3, 2, 40),
    (5, 2, 312),
    (7, 2, 1200),
    (3, 3, 290),
    (5, 3, 5538),
    (7, 3, 40450),
];

pub fn closed_form_matches_reference_counts() {
    for (n, l, want) in TABLE {
        assert_eq!(dimension_closed_form(n, l).unwrap(), BigInt::from(want), "N={n} l={l}");
    }
}

pub fn molien_agrees_with_closed_form() {
    for n in [3, 5, 7] {
        for l in 0..=5 {
            assert_eq!(dimension_molien(n, l).unwrap(), dimension_closed_form(n, l).unwrap(), "N={n} l={l}");
        }
    }
}

/// Averages the character of equivariant degree-l maps over the full
/// translation-by-B_2 group, with traces taken from the image action.
pub fn closed_form_matches_character_average() {
    use geomnet::{GeometricImage, Group, Parity, TensorSpec};
    for n in [3usize, 5] {
        let spec = TensorSpec::new(2, 1, Parity::Pos);
        let size = n * n * 2;
        let group = Group::hyperoctahedral(2);
        let mut traces = Vec::new();
        for g in group.elements() {
            for tx in 0..n as i64 {
                for ty in 0..n as i64 {
                    let mut tr = 0.0;
                    for i in 0..size {
                        let e = GeometricImage::one_hot(n, spec, i).act(g).unwrap().translate(&[tx, ty]).unwrap();
                        tr += e.data()[i];
                    }
                    traces.push(tr.round() as i64);
                }
            }
        }
        for l in 1..=2u32 {
            // Equivariant maps of degree l form Sym^l(V) (x) V; its character
            // is chi^2 for l = 1 and (chi^2 + chi(h^2)) chi / 2 for l = 2.
            let total: i64 = traces
                .iter()
                .copied()
                .zip(power_traces(n, &group, 2))
                .map(|(t1, t2)| if l == 1 { t1 * t1 } else { (t1 * t1 + t2) / 2 * t1 })
                .sum();
            let order = traces.len() as i64;
            assert_eq!(total % order, 0);
            assert_eq!(BigInt::from(total / order), dimension_closed_form(n, l as usize).unwrap(), "N={n} l={l}");
        }
    }
}

/// Traces of `h^p` for every `h` in the same order as the main loop.
fn power_traces(n: usize, group: &geomnet::Group, p: usize) -> Vec<i64> {
    use geomnet::{GeometricImage, Parity, TensorSpec};
    let spec = TensorSpec::new(2, 1, Parity::Pos);
    let size = n * n * 2;
    let mut out = Vec::new();
    for g in group.elements() {
        for tx in 0..n as i64 {
            for ty in 0..n as i64 {
                let mut tr = 0.0;
                for i in 0..size {
                    let mut e = GeometricImage::one_hot(n, spec, i);
                    for _ in 0..p {
                        e = e.act(g).unwrap().translate(&[tx, ty]).unwrap();
                    }
                    tr += e.data()[i];
                }
                out.push(tr.round() as i64);
            }
        }
    }
    out
}

pub fn empirical_search_finds_every_map() {
    for (l, want) in [(1, 5), (2, 40)] {
        for seed in [0, 1] {
            let report = count_empirical(3, l, &EmpiricalOptions { seed, ..Default::default() }).unwrap();
            assert_eq!(report.found, want, "l={l} seed={seed}");
            assert!(report.complete());
        }
    }
}

pub fn empirical_budget_is_reported() {
    let opts = EmpiricalOptions { max_candidates: 3, ..Default::default() };
    let report = count_empirical(3, 2, &opts).unwrap();
    assert!(report.found < report.target);
    assert!(report.budget_exhausted);
}

pub fn even_sides_are_rejected() {
    assert!(dimension_closed_form(4, 1).is_err());
    assert!(dimension_molien(6, 2).is_err());
}

/// Plain functions so other test targets can reuse them; `#[test]` wrappers
/// are generated here.
macro_rules! wrap_tests {
    ($($name:ident),* $(,)?) => {
        #[cfg(test)]
        mod run {
            $(#[test]
            fn $name() {
                super::$name()
            })*
        }
    };
}

wrap_tests!(
    closed_form_matches_reference_counts,
    molien_agrees_with_closed_form,
    closed_form_matches_character_average,
    empirical_search_finds_every_map,
    empirical_budget_is_reported,
    even_sides_are_rejected,
);
