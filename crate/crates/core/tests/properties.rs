use proptest::prelude::*;

use vxc_core::enumeration::closest_vectors;
use vxc_core::exact::{QVec, Rational, RationalMatrix};
use vxc_core::gadgets::{build_gadget, stable_set_instance, verify_gadget, Graph};
use vxc_core::lattice::Lattice;
use vxc_core::lifts::{lift_minkowski, lift_product, lift_union, verify_lift, Lift};
use vxc_core::polytope::{dualize, Polytope};
use vxc_core::voronoi::{cell_from_relevant, facet_vectors_by_lp, relevant_vectors};

fn q(n: i64) -> Rational {
    Rational::from_int(n)
}

fn basis(rank: usize) -> impl Strategy<Value = Lattice> {
    prop::collection::vec(-3i64..=3, rank * rank).prop_filter_map(
        "singular basis",
        move |entries| {
            let rows: Vec<&[i64]> = entries.chunks(rank).collect();
            let m = RationalMatrix::from_i64_rows(&rows);
            Lattice::from_basis(m, "random").ok()
        },
    )
}

fn point(dim: usize) -> impl Strategy<Value = QVec> {
    prop::collection::vec((-20i64..=20, 1i64..=6), dim)
        .prop_map(|v| v.into_iter().map(|(n, d)| Rational::new(n, d)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coset_sweep_matches_lp(l in prop_oneof![basis(2), basis(3)]) {
        let mut sweep = relevant_vectors(&l).unwrap().coeffs();
        sweep.sort();
        let mut lp = facet_vectors_by_lp(&l);
        lp.sort();
        prop_assert_eq!(&sweep, &lp);
        let d = l.rank();
        prop_assert!(sweep.len() >= 2 * d && sweep.len() <= 2 * ((1 << d) - 1));
    }

    #[test]
    fn closest_points_land_in_the_cell(l in basis(3), x in point(3)) {
        let rv = relevant_vectors(&l).unwrap();
        let (dist2, closest) = closest_vectors(&l, &x);
        for z in closest {
            let diff: QVec = x.iter().zip(z.to_rational()).map(|(a, b)| a - &b).collect();
            prop_assert!(rv.contains(&diff));
            prop_assert_eq!(l.qform(&diff), dist2.clone());
        }
    }

    #[test]
    fn polar_of_polar_is_identity(l in prop_oneof![basis(2), basis(3)]) {
        let cell = cell_from_relevant(&relevant_vectors(&l).unwrap()).complete().unwrap();
        let back = dualize(&dualize(&cell).unwrap().complete().unwrap()).unwrap();
        prop_assert!(back.same_set(&cell).unwrap());
    }

    #[test]
    fn combined_box_lifts_verify(
        a in 1i64..4, b in 1i64..4, shift in -3i64..=3,
    ) {
        let seg_a = Lift::segment(&[q(a)]);
        let seg_b = Lift::segment(&[q(b)]);
        let rect = lift_product(&seg_a, &seg_b).unwrap();
        prop_assert_eq!(rect.facet_count(), 4);
        prop_assert!(verify_lift(&rect).unwrap().exact);
        let moved = lift_minkowski(&rect, &Lift::point(&[q(shift), q(0)])).unwrap();
        prop_assert!(verify_lift(&moved).unwrap().exact);
        let both = lift_union(&[rect.clone(), moved]).unwrap();
        prop_assert!(verify_lift(&both).unwrap().exact);
    }

    #[test]
    fn random_graph_gadgets(n in 1usize..=4, mask in 0u32..64) {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let edges: Vec<(usize, usize)> =
            pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e).collect();
        let g = Graph::new(n, &edges).unwrap();
        let inst = build_gadget(&stable_set_instance(&g).unwrap()).unwrap();
        let r = verify_gadget(&inst).unwrap();
        prop_assert!(r.passed);
        prop_assert!(r.rank <= n + 1);
    }
}

#[test]
fn union_with_point_member_counts_sign_row() {
    let seg = Lift::segment(&[q(1), q(0)]);
    let pt = Lift::point(&[q(0), q(3)]);
    let u = lift_union(&[seg.clone(), pt]).unwrap();
    // two segment facets plus one λ ≥ 0 row for the point
    assert_eq!(u.facet_count(), 3);
    let r = verify_lift(&u).unwrap();
    assert!(r.exact);
    assert_eq!(r.target_vertices, 3);
}

#[test]
fn polytope_from_points_prunes_interior() {
    let pts: Vec<QVec> = [[0, 0], [2, 0], [0, 2], [2, 2], [1, 1]]
        .iter()
        .map(|p| p.iter().map(|&x| q(x)).collect())
        .collect();
    let p = Polytope::from_points(2, pts).unwrap();
    assert_eq!(p.vertices().unwrap().len(), 4);
}
