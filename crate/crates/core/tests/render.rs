//! Basin scans on the (1₁₁) germ.

use num_complex::Complex64 as C;

use parabolic::coords::default_params;
use parabolic::fatou::{FatouContext, OrbitPolicy, Verdict};
use parabolic::germ::parse_germ;
use parabolic::normal_form::normalize;
use parabolic::render::{scan, write_csv, SliceSpec};

fn ctx() -> FatouContext {
    let g = normalize(&parse_germ("1 1 1 1 0\n2 0 2 1 0\n2 2 0 1 0\n").unwrap()).unwrap();
    let (s, _) = default_params(&g).unwrap();
    FatouContext::new(&g, s, OrbitPolicy::with_n_max(1 << 11)).unwrap()
}

fn slice(n_entry: u64) -> SliceSpec {
    SliceSpec {
        base: (C::new(0.0, 0.0), C::new(0.0, 0.0)),
        dir_s: (C::new(0.0, 1.0), C::new(0.0, 0.0)),
        dir_t: (C::new(0.0, 0.0), C::new(1.0, 0.0)),
        s_range: (-0.05, 0.05),
        t_range: (-0.1, 0.0),
        width: 24,
        height: 24,
        n_entry,
    }
}

#[test]
fn larger_budget_never_loses_a_pixel() {
    let ctx = ctx();
    let small = scan(&ctx, &slice(500)).unwrap();
    let large = scan(&ctx, &slice(20_000)).unwrap();
    assert!(large.attracted() >= 1);
    for (a, b) in small.cells.iter().zip(&large.cells) {
        if a.is_attracted() {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn real_diagonal_has_no_detected_pixels() {
    // frozen: real points keep u on the negative axis and never enter
    let ctx = ctx();
    let spec = SliceSpec {
        dir_s: (C::new(1.0, 0.0), C::new(1.0, 0.0)),
        dir_t: (C::new(0.0, 1.0), C::new(0.0, 1.0)),
        s_range: (0.0, 0.2),
        t_range: (-1e-9, 1e-9),
        width: 32,
        height: 1,
        ..slice(10_000)
    };
    let grid = scan(&ctx, &spec).unwrap();
    assert_eq!(grid.attracted(), 0);
    assert_eq!(grid.failures, 0);
}

#[test]
fn csv_rows_match_verdicts() {
    let ctx = ctx();
    let grid = scan(&ctx, &slice(10_000)).unwrap();
    let mut buf = Vec::new();
    write_csv(&grid, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let attracted = text.lines().filter(|l| l.contains(",attracted,")).count();
    assert_eq!(attracted, grid.attracted());
    for (line, v) in text.lines().skip(1).zip(&grid.cells) {
        if let Verdict::Attracted { n_entry, .. } = v {
            assert_eq!(line.split(',').nth(3).unwrap(), n_entry.to_string());
        }
    }
}
