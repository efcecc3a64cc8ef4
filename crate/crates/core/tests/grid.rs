use collage_core::grid::{assemble, panel_rects, split, GridError, Raster};
use collage_core::GridLayout;
use proptest::prelude::*;

fn raster(w: u32, h: u32, seed: u8) -> Raster {
    let data = (0..w * h * 3).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
    Raster::new(w, h, 3, data).unwrap()
}

proptest! {
    #[test]
    fn split_then_assemble_is_identity(
        (rows, cols) in prop::sample::select(vec![(2u32, 2u32), (3, 3), (1, 3), (2, 3)]),
        pw in 1u32..24,
        ph in 1u32..24,
        seed in any::<u8>(),
    ) {
        let layout = GridLayout::new(rows, cols).unwrap();
        let img = raster(pw * cols, ph * rows, seed);
        let panels = split(&img, &layout).unwrap();
        prop_assert_eq!(panels.len(), (rows * cols) as usize);
        prop_assert!(panels.iter().all(|p| p.width == pw && p.height == ph));
        prop_assert_eq!(assemble(&panels, &layout).unwrap(), img);
    }

    #[test]
    fn indivisible_width_is_rejected(pw in 2u32..40, extra in 1u32..2) {
        let layout = GridLayout::quad();
        let img = raster(pw * 2 + extra, 8, 0);
        let rejected = matches!(split(&img, &layout), Err(GridError::NotDivisible { .. }));
        prop_assert!(rejected);
    }
}

#[test]
fn quad_rects_are_in_reading_order() {
    let rects = panel_rects(1024, 1024, &GridLayout::quad()).unwrap();
    let origins: Vec<(u32, u32)> = rects.iter().map(|r| (r.x, r.y)).collect();
    assert_eq!(origins, [(0, 0), (512, 0), (0, 512), (512, 512)]);
}
