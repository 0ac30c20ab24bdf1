use std::collections::BTreeSet;
use std::io::Cursor;

use proptest::prelude::*;
use tilesched::sparse::{coo_to_csr, parse_matrix_market, write_matrix_market, CooMatrix};

fn coo_strategy() -> impl Strategy<Value = CooMatrix> {
    (1usize..40, 1usize..40).prop_flat_map(|(rows, cols)| {
        prop::collection::vec((0..rows, 0..cols, -1e6f64..1e6), 0..120)
            .prop_map(move |e| CooMatrix::from_entries(rows, cols, e).unwrap())
    })
}

proptest! {
    #[test]
    fn write_then_parse_round_trips(coo in coo_strategy()) {
        let mut buf = Vec::new();
        write_matrix_market(&coo, &mut buf).unwrap();
        let back = parse_matrix_market(Cursor::new(buf)).unwrap();
        prop_assert_eq!(coo_to_csr(&back), coo_to_csr(&coo));
        prop_assert_eq!(back, coo);
    }

    #[test]
    fn csr_has_one_entry_per_distinct_position(coo in coo_strategy()) {
        let distinct: BTreeSet<_> = coo.entries().iter().map(|&(r, c, _)| (r, c)).collect();
        let csr = coo_to_csr(&coo);
        csr.validate().unwrap();
        prop_assert_eq!(csr.nnz(), distinct.len());
    }

    #[test]
    fn symmetric_files_expand_off_diagonal_entries(
        n in 1usize..30,
        pairs in prop::collection::btree_set((0usize..30, 0usize..30), 0..60),
    ) {
        let lower: Vec<_> = pairs.into_iter().filter(|&(r, c)| r < n && c <= r).collect();
        let mut text = format!("%%MatrixMarket matrix coordinate pattern symmetric\n{n} {n} {}\n", lower.len());
        for (r, c) in &lower {
            text.push_str(&format!("{} {}\n", r + 1, c + 1));
        }
        let coo = parse_matrix_market(Cursor::new(text)).unwrap();
        let diagonal = lower.iter().filter(|(r, c)| r == c).count();
        let off = lower.len() - diagonal;
        prop_assert_eq!(coo.len(), 2 * off + diagonal);
        prop_assert_eq!(coo_to_csr(&coo).nnz(), 2 * off + diagonal);
    }
}
