//! Tauberian tables, fits and quotients on sets whose constants are known in closed form.

use halo_core::grid::{rasterize, GridMask, ShapeSpec, Window};
use halo_core::maximal::{halo_ratio, Basis};
use halo_core::tauberian::{
    cor1_witness_check, halo_function, holder_quotient, scan, solyanik_fit, CandidateFamily,
    Generator, TauberianTable,
};

fn interval_family(side: f64) -> CandidateFamily {
    CandidateFamily::new(Generator::SingleCube { side }, 0)
}

/// Halo ratio of `[0, len)` cells in the middle of `n` cells, over all intervals, in integers.
fn brute_interval_ratio(n: usize, len: usize, p: i64, q: i64) -> f64 {
    let start = (n - len) / 2;
    let inside = |i: usize| (start..start + len).contains(&i) as i64;
    let mut pre = vec![0i64; n + 1];
    for i in 0..n {
        pre[i + 1] = pre[i] + inside(i);
    }
    let mut diff = vec![0i64; n + 1];
    for a in 0..n {
        for b in a + 1..=n {
            if q * (pre[b] - pre[a]) > p * (b - a) as i64 {
                diff[a] += 1;
                diff[b] -= 1;
            }
        }
    }
    let mut acc = 0;
    let covered = (0..n).filter(|&i| {
        acc += diff[i];
        acc > 0
    });
    covered.count() as f64 / len as f64
}

#[test]
fn single_interval_at_point_eight() {
    let w = Window::uniform(1, -3.5, 4.5, 1024).unwrap();
    let t = scan(&w, &Basis::strong(), &[0.8], &interval_family(0.125), 1).unwrap();
    let row = &t.rows[0];
    let cells = 128.0;
    assert!((row.c_hat - 1.5).abs() <= 2.0 / cells, "Ĉ = {}", row.c_hat);
    let e = rasterize(&t.witnesses[&row.witness_id], &w).unwrap();
    assert_eq!(e.count(), 128);
    assert_eq!(halo_ratio(&e, &Basis::strong(), 0.8).unwrap(), row.c_hat);
    for len in [8usize, 16, 32, 64, 128, 256] {
        let r = brute_interval_ratio(1024, len, 4, 5);
        assert!(r <= 1.5 + 2.0 / len as f64, "length {len}: {r}");
    }
    assert_eq!(brute_interval_ratio(1024, 128, 4, 5), row.c_hat);
}

#[test]
fn scans_are_deterministic_monotone_and_reproducible() {
    let w = Window::uniform(2, -1.0, 2.0, 48).unwrap();
    let family = CandidateFamily::new(Generator::CubeUnion { k: 3, side: 0.15 }, 7);
    let alphas = [0.5, 0.6, 0.7, 0.8];
    let a = scan(&w, &Basis::strong(), &alphas, &family, 4).unwrap();
    let b = scan(&w, &Basis::strong(), &alphas, &family, 4).unwrap();
    assert_eq!(a.rows, b.rows);
    assert!(a.monotone);
    for r in &a.rows {
        assert!(r.c_hat >= 1.0 && r.c_hat >= r.raw_c_hat);
        let e = rasterize(&a.witnesses[&r.witness_id], &w).unwrap();
        assert_eq!(halo_ratio(&e, &Basis::strong(), r.alpha).unwrap(), r.c_hat);
    }
    let single = scan(&w, &Basis::strong(), &[0.7], &family, 4).unwrap();
    assert_eq!(single.rows.len(), 1);
}

#[test]
fn halos_reaching_the_boundary_are_flagged() {
    let w = Window::uniform(1, -0.5, 1.5, 256).unwrap();
    let t = scan(&w, &Basis::strong(), &[0.2, 0.9], &interval_family(0.25), 1).unwrap();
    assert_eq!(t.window_limited, vec![0.2]);
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.rows[0].alpha, 0.9);
}

#[test]
fn doubling_the_grid_does_not_lose_more_than_two_cells() {
    let alphas = [0.5, 0.7, 0.9];
    let at = |cells| {
        let w = Window::uniform(1, -3.5, 4.5, cells).unwrap();
        scan(&w, &Basis::strong(), &alphas, &interval_family(0.125), 1).unwrap()
    };
    let (coarse, fine) = (at(512), at(1024));
    for (c, f) in coarse.rows.iter().zip(&fine.rows) {
        assert!(f.c_hat >= c.c_hat - 2.0 / 64.0, "α = {}: {} → {}", c.alpha, c.c_hat, f.c_hat);
    }
    let square = ShapeSpec::Rect { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
    let ratio = |cells| {
        let w = Window::uniform(2, -1.0, 2.0, cells).unwrap();
        let e = rasterize(&square, &w).unwrap();
        (halo_ratio(&e, &Basis::strong(), 0.8).unwrap(), e.count())
    };
    let ((c, cells), (f, _)) = (ratio(96), ratio(192));
    assert!(f >= c - 2.0 / cells as f64, "{c} → {f}");
}

#[test]
fn halo_function_reflects_the_table() {
    let w = Window::uniform(1, -3.5, 4.5, 1024).unwrap();
    let t = scan(&w, &Basis::strong(), &[0.5, 0.7, 0.9], &interval_family(0.125), 1).unwrap();
    assert_eq!(halo_function(&t, 0.37).unwrap(), 0.37);
    assert_eq!(halo_function(&t, 1.0).unwrap(), 1.0);
    let phi2 = halo_function(&t, 2.0).unwrap();
    assert_eq!(phi2, t.rows[0].c_hat);
    assert!((phi2 - 3.0).abs() <= 2.0 / 128.0);
    assert!(halo_function(&t, 4.0).is_err());
}

#[test]
fn holder_quotients_of_the_interval_table() {
    let w = Window::uniform(1, -3.5, 4.5, 1024).unwrap();
    let alphas: Vec<f64> = (0..=8).map(|k| 0.3 + 0.05 * k as f64).collect();
    let t = scan(&w, &Basis::strong(), &alphas, &interval_family(0.125), 1).unwrap();
    assert_eq!(t.rows.len(), alphas.len());
    let q = holder_quotient(&t, 1.0, (0.3, 0.7)).unwrap();
    assert!(q.is_finite() && q <= 2.0 / 0.09, "quotient {q}");

    let planted = |step: f64| {
        let pts: Vec<(f64, f64)> = (0..)
            .map(|k| 0.3 + step * k as f64)
            .take_while(|a| *a <= 0.7 + 1e-12)
            .map(|a| (a, 2.0 / a - 1.0))
            .collect();
        TauberianTable::from_points("strong_rects", &pts)
    };
    let coarse = holder_quotient(&planted(0.1), 2.0, (0.3, 0.7)).unwrap();
    let fine = holder_quotient(&planted(0.01), 2.0, (0.3, 0.7)).unwrap();
    assert!(fine > 5.0 * coarse);
    assert!(holder_quotient(&planted(0.1), 1.0, (0.31, 0.39)).is_err());
}

#[test]
fn fit_needs_rows_above_the_noise_floor() {
    let w = Window::uniform(1, -3.5, 4.5, 1024).unwrap();
    let alphas: Vec<f64> = (3..=8).map(|k| 1.0 - 2f64.powi(-k)).collect();
    let t = scan(&w, &Basis::strong(), &alphas, &interval_family(0.004), 1).unwrap();
    let err = solyanik_fit(&t, 0.0).unwrap_err();
    assert!(err.to_string().contains("noise floor"));
}

#[test]
fn corollary_witness_inequality_on_a_square() {
    let w = Window::uniform(2, -1.5, 2.5, 128).unwrap();
    let e = rasterize(&ShapeSpec::Rect { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }, &w).unwrap();
    let c = cor1_witness_check(&e, &Basis::strong(), 0.6, 0.2, 1).unwrap();
    assert!(c.holds);
    assert!((c.xi - (0.8 + 1.0 / e.count() as f64)).abs() < 1e-15);
    assert!(cor1_witness_check(&GridMask::empty(&w), &Basis::strong(), 0.6, 0.2, 1).is_err());
}
