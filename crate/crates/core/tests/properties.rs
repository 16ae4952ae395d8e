//! Structural properties of halos, masks and selections on random inputs.

use proptest::prelude::*;

use halo_core::embedding::vitali_select;
use halo_core::grid::{rasterize, union_volume, CellBox, GridMask, IntegralImage, Rect, ShapeSpec, Window};
use halo_core::maximal::{halo_set, Basis};

fn window(n: usize, cells: usize) -> Window {
    Window::uniform(n, 0.0, 1.0, cells).unwrap()
}

fn mask_from(w: &Window, bits: &[bool]) -> GridMask {
    let mut m = GridMask::from_bits(w, bits.to_vec()).unwrap();
    if m.is_empty() {
        m.set(&vec![0; w.n()], true);
    }
    m
}

fn bits(len: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(prop::bool::weighted(0.25), len)
}

fn subset(a: &GridMask, b: &GridMask) -> bool {
    a.is_subset_of(b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn halo_shrinks_as_alpha_grows(b in bits(144), a in 0.05f64..0.9, d in 0.01f64..0.09) {
        let w = window(2, 12);
        let e = mask_from(&w, &b);
        for basis in [Basis::strong(), Basis::cubes(), Basis::balls()] {
            let lo = halo_set(&e, &basis, a).unwrap();
            let hi = halo_set(&e, &basis, a + d).unwrap();
            prop_assert!(subset(&hi, &lo), "{}", basis.name());
        }
    }

    #[test]
    fn halo_grows_with_the_set(b in bits(144), extra in bits(144), a in 0.05f64..0.95) {
        let w = window(2, 12);
        let e = mask_from(&w, &b);
        let f = e.union(&mask_from(&w, &extra)).unwrap();
        for basis in [Basis::strong(), Basis::cubes()] {
            prop_assert!(subset(&halo_set(&e, &basis, a).unwrap(), &halo_set(&f, &basis, a).unwrap()));
        }
    }

    #[test]
    fn set_lies_in_its_halo_and_cubes_are_dominated(b in bits(144), a in 0.05f64..0.95) {
        let w = window(2, 12);
        let e = mask_from(&w, &b);
        let strong = halo_set(&e, &Basis::strong(), a).unwrap();
        let cubes = halo_set(&e, &Basis::cubes(), a).unwrap();
        prop_assert!(subset(&e, &cubes));
        prop_assert!(subset(&cubes, &strong));
    }

    #[test]
    fn halo_is_invariant_under_scaling_the_window(b in bits(100), a in 0.05f64..0.95, f in 0.25f64..4.0) {
        let w = Window::uniform(2, -1.0, 1.5, 10).unwrap();
        let e = mask_from(&w, &b);
        let ws = w.scaled(f).unwrap();
        let es = GridMask::from_bits(&ws, e.bits().to_vec()).unwrap();
        for basis in [Basis::strong(), Basis::cubes()] {
            let h = halo_set(&e, &basis, a).unwrap();
            let hs = halo_set(&es, &basis, a).unwrap();
            prop_assert_eq!(h.bits(), hs.bits());
        }
    }

    #[test]
    fn integral_image_counts_boxes(b in bits(7 * 9 * 5), lo in prop::array::uniform3(0usize..5), len in prop::array::uniform3(1usize..5)) {
        let w = Window::new(vec![0.0; 3], vec![1.0; 3], vec![7, 9, 5]).unwrap();
        let e = GridMask::from_bits(&w, b).unwrap();
        let hi: Vec<usize> = (0..3).map(|i| (lo[i] + len[i]).min(w.resolution()[i])).collect();
        prop_assume!((0..3).all(|i| lo[i] < hi[i]));
        let bx = CellBox::new(lo.to_vec(), hi.clone());
        let brute = (0..w.len())
            .filter(|&l| e.get_linear(l) && bx.contains_cell(&w.coords(l)))
            .count() as u64;
        prop_assert_eq!(IntegralImage::new(&e).count_box(&bx), brute);
    }

    #[test]
    fn union_and_intersection_measures_add_up(x in bits(64), y in bits(64)) {
        let w = window(2, 8);
        let (a, b) = (GridMask::from_bits(&w, x).unwrap(), GridMask::from_bits(&w, y).unwrap());
        let lhs = a.union(&b).unwrap().count() + a.intersect(&b).unwrap().count();
        prop_assert_eq!(lhs, a.count() + b.count());
    }

    #[test]
    fn rasterization_respects_inclusion(
        lo in prop::array::uniform2(0.0f64..0.6),
        len in prop::array::uniform2(0.05f64..0.3),
        grow in prop::array::uniform2(0.0f64..0.2),
        r in 0.05f64..0.3,
    ) {
        let w = Window::uniform(2, 0.0, 1.0, 40).unwrap();
        let inner = ShapeSpec::Rect { lo: lo.to_vec(), hi: vec![lo[0] + len[0], lo[1] + len[1]] };
        let outer = ShapeSpec::Rect {
            lo: vec![lo[0] - grow[0], lo[1] - grow[1]],
            hi: vec![lo[0] + len[0] + grow[1], lo[1] + len[1] + grow[0]],
        };
        prop_assert!(subset(&rasterize(&inner, &w).unwrap(), &rasterize(&outer, &w).unwrap()));
        let disc = |radius| ShapeSpec::Ball { center: vec![0.5, 0.5], radius };
        prop_assert!(subset(&rasterize(&disc(r), &w).unwrap(), &rasterize(&disc(r + 0.05), &w).unwrap()));
    }

    #[test]
    fn vitali_selection_is_disjoint_and_covers(
        cubes in prop::collection::vec((prop::array::uniform2(0.0f64..1.0), 0.02f64..0.3), 1..25),
        n in 1usize..3,
        dilation in 1.0f64..3.0,
    ) {
        let rects: Vec<Rect> = cubes.iter().map(|(c, s)| Rect::cube(&c[..n], *s).unwrap()).collect();
        let dilated: Vec<Rect> = rects.iter().map(|r| r.dilate(dilation)).collect();
        let sel = vitali_select(&rects, dilation).unwrap();
        for (i, &a) in sel.selected.iter().enumerate() {
            for &b in &sel.selected[i + 1..] {
                prop_assert!(!dilated[a].overlaps(&dilated[b]));
            }
        }
        let picked: Vec<Rect> = sel.selected.iter().map(|&i| dilated[i].clone()).collect();
        let coverage = union_volume(&picked) / union_volume(&dilated);
        prop_assert!(coverage >= 3f64.powi(-(n as i32)) - 1e-12, "coverage {coverage}");
        prop_assert!((coverage - sel.coverage).abs() < 1e-9);
    }
}
