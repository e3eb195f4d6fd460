//! Property tests for the structural invariants: symbol bounds, projection
//! identities, transform round-trips and serialization round-trips.

use proptest::prelude::*;

use radm::diagnostics::DiagRecord;
use radm::io::{read_diag_csv, read_snapshot, write_diag_csv, write_snapshot, SnapshotHeader};
use radm::operators::{leray_project, FilterParams, SymbolTable};
use radm::spectral::{RealVectorField, Transformer, WaveGrid};
use radm::timestepper::random_divfree_field;

fn small_grid() -> std::sync::Arc<WaveGrid> {
    WaveGrid::new(8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbol_bounds_hold_everywhere(
        alpha in 0.0f64..8.0,
        theta in 0.0f64..=1.0,
        n in 0u32..40,
    ) {
        let grid = small_grid();
        let table = SymbolTable::new(grid.clone(), FilterParams::new(alpha, theta, n).unwrap());
        for m in 0..grid.len() {
            let a = table.a_hat[m];
            let d = table.d_hat[m];
            prop_assert!(d >= 1.0 - f64::EPSILON, "d_hat {d} < 1");
            prop_assert!(
                d <= (n as f64 + 1.0).min(a) * (1.0 + 2.0 * f64::EPSILON),
                "d_hat {d} above min(N+1, a_hat) = {}",
                (n as f64 + 1.0).min(a)
            );
            prop_assert!(a >= 1.0);
        }
    }

    #[test]
    fn symbol_gap_matches_closed_form(
        alpha in 0.0f64..8.0,
        theta in 0.0f64..=1.0,
        n in 0u32..40,
    ) {
        let grid = small_grid();
        let table = SymbolTable::new(grid.clone(), FilterParams::new(alpha, theta, n).unwrap());
        for m in 0..grid.len() {
            let direct = table.a_hat[m] - table.d_hat[m];
            let closed = table.gap(m);
            prop_assert!(
                (direct - closed).abs() <= 2.0 * f64::EPSILON * table.a_hat[m],
                "mode {m}: direct {direct:.17e} vs closed {closed:.17e}"
            );
        }
    }

    #[test]
    fn deconvolution_is_monotone_in_order(
        alpha in 0.0f64..8.0,
        theta in 0.0f64..=1.0,
        n in 0u32..40,
    ) {
        let grid = small_grid();
        let lo = SymbolTable::new(grid.clone(), FilterParams::new(alpha, theta, n).unwrap());
        let hi = SymbolTable::new(grid.clone(), FilterParams::new(alpha, theta, n + 1).unwrap());
        for m in 0..grid.len() {
            prop_assert!(
                hi.d_hat[m] >= lo.d_hat[m] * (1.0 - f64::EPSILON),
                "mode {m}: d_hat decreased from {} to {}",
                lo.d_hat[m],
                hi.d_hat[m]
            );
        }
    }

    #[test]
    fn leray_projection_is_idempotent_and_divfree(seed in 0u64..1_000) {
        let grid = small_grid();
        let mut v = random_divfree_field(&grid, seed);
        // re-randomize away from the divergence-free subspace
        for m in 0..grid.len() {
            v.comps[0][m] *= 1.5;
        }
        v.enforce_symmetry();
        leray_project(&mut v);
        prop_assert!(v.divergence_residual() < 1e-12);
        let once = v.clone();
        leray_project(&mut v);
        for a in 0..3 {
            for m in 0..grid.len() {
                prop_assert!((v.comps[a][m] - once.comps[a][m]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn transform_round_trip(seed in 0u64..1_000) {
        let grid = small_grid();
        let tf = Transformer::new(&grid);
        let v = random_divfree_field(&grid, seed);
        let phys = tf.inverse(&v).unwrap();
        let back = tf.forward(&phys);
        let scale = v.linf_coeff().max(1.0);
        for a in 0..3 {
            for m in 0..grid.len() {
                prop_assert!((v.comps[a][m] - back.comps[a][m]).norm() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn forward_of_real_data_is_conjugate_symmetric(seed in 0u64..1_000) {
        use rand::{Rng, SeedableRng};
        let grid = small_grid();
        let tf = Transformer::new(&grid);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut vals = vec![[0.0f64; 3]; grid.len()];
        for v in &mut vals {
            for x in v.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
        }
        let mut phys = RealVectorField::zeros(grid.clone());
        for (i, v) in vals.iter().enumerate() {
            for a in 0..3 {
                phys.comps[a][i] = v[a];
            }
        }
        let spec = tf.forward(&phys);
        prop_assert!(spec.symmetry_defect() < 1e-12 * spec.linf_coeff().max(1.0));
    }

    #[test]
    fn dealias_is_idempotent(seed in 0u64..1_000) {
        let grid = small_grid();
        let mut v = random_divfree_field(&grid, seed);
        v.dealias();
        let once = v.clone();
        v.dealias();
        for a in 0..3 {
            prop_assert!(v.comps[a] == once.comps[a]);
        }
    }

    #[test]
    fn filter_deconv_never_amplifies_above_bounds(
        alpha in 0.01f64..4.0,
        theta in 0.0f64..=1.0,
        n in 0u32..12,
        seed in 0u64..200,
    ) {
        let grid = small_grid();
        let table = SymbolTable::new(grid.clone(), FilterParams::new(alpha, theta, n).unwrap());
        let v = random_divfree_field(&grid, seed);
        let filtered = table.filter_apply(&v);
        let deconv = table.deconv_apply(&v);
        // symbol-bound norm chain: ||filter v|| <= ||v||, ||D v|| <= (N+1)||v||
        prop_assert!(filtered.l2_norm() <= v.l2_norm() * (1.0 + 1e-12));
        prop_assert!(deconv.l2_norm() <= (n as f64 + 1.0) * v.l2_norm() * (1.0 + 1e-12));
        // D(filter(v)) stays between filter(v) and v in norm
        let approx_id = table.deconv_apply(&filtered);
        prop_assert!(approx_id.l2_norm() <= v.l2_norm() * (1.0 + 1e-12));
        prop_assert!(approx_id.l2_norm() >= filtered.l2_norm() * (1.0 - 1e-12));
    }

    #[test]
    fn diag_csv_round_trips(
        t in 0.0f64..1e3,
        e in proptest::num::f64::POSITIVE | proptest::num::f64::ZERO,
        p in proptest::num::f64::NORMAL,
    ) {
        let rec = DiagRecord {
            t,
            model_energy: e,
            model_dissipation: e * 0.25,
            kinetic_energy: e * 0.5,
            sobolev_theta: t.sqrt(),
            sobolev_one_plus_theta: t,
            div_residual: 0.0,
            orth_defect: 1e-12,
            forcing_power: p,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_diag_csv(&[rec], &path).unwrap();
        let back = read_diag_csv(&path).unwrap();
        prop_assert_eq!(back, vec![rec]);
    }

    #[test]
    fn snapshot_round_trips(seed in 0u64..500) {
        let grid = small_grid();
        let mut v = random_divfree_field(&grid, seed);
        v.dealias();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.snp");
        let header = SnapshotHeader {
            n_per_axis: 8,
            t: seed as f64 * 0.5,
            alpha: 0.25,
            theta: 0.5,
            deconv_order: 4,
            payload_kind: 0,
        };
        write_snapshot(&v, &header, &path).unwrap();
        let (h, w) = read_snapshot(&path).unwrap();
        prop_assert_eq!(h, header);
        for a in 0..3 {
            prop_assert!(v.comps[a] == w.comps[a]);
        }
    }
}
