//! End-to-end noiseless identity for the bit-level chain.

use mrx_phy::grid::{grid_assemble, grid_extract_data};
use mrx_phy::{exact_llr_demap, ConstellationSpec, FrameFormat, PilotMask};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[test]
fn noiseless_encode_map_grid_demap_decode_identity() {
    let mask = PilotMask::columns(48, 36, &[2, 32]).unwrap();
    let fmt = FrameFormat::new(
        &mask,
        mrx_phy::ldpc::wifi_648_rate34(),
        ConstellationSpec::square_qam(6).unwrap(),
    )
    .unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    for _ in 0..3 {
        let info: Vec<u8> = (0..fmt.info_bits_per_frame())
            .map(|_| rng.gen_range(0..2u8))
            .collect();
        let (coded, symbols) = fmt.encode_frame(&info).unwrap();
        let grid = grid_assemble(&symbols, &mask).unwrap();
        let received = grid_extract_data(&grid, &mask).unwrap();
        assert_eq!(received, symbols);

        let h = Complex64::new(1.0, 0.0);
        let mut llrs = Vec::with_capacity(fmt.capacity_bits);
        for &y in &received {
            llrs.extend(exact_llr_demap(y, h, 1e-4, &fmt.spec).unwrap());
        }
        // hard decisions reproduce the coded stream
        for (l, &c) in llrs.iter().zip(&coded) {
            assert_eq!((*l > 0.0) as u8, c);
        }
        let clamped: Vec<f64> = llrs.iter().map(|l| l.clamp(-20.0, 20.0)).collect();
        let (decoded, flags) = fmt.decode_frame(&clamped).unwrap();
        assert!(flags.iter().all(|&f| f));
        assert_eq!(decoded, info);
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn grid_roundtrip_is_identity(seed in 0u64..1000) {
            let mask = PilotMask::columns(12, 8, &[1, 6]).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let symbols: Vec<Complex64> = (0..mask.data_re_count())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let grid = grid_assemble(&symbols, &mask).unwrap();
            let back = grid_extract_data(&grid, &mask).unwrap();
            prop_assert_eq!(back, symbols);
        }
    }
}
