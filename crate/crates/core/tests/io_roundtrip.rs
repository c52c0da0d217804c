use std::f64::consts::PI;

use brlx::euler::{InitialData, RelaxConfig};
use brlx::io::{load_state, read_field, save_state, write_field};
use brlx::spectral::{Field, TorusGrid};
use proptest::prelude::*;

#[test]
fn state_checkpoint_round_trips() {
    let g = TorusGrid::<f64>::new(2, 16, 2.0 * PI).unwrap();
    let cfg = RelaxConfig::default();
    let s = InitialData::default().state(&g, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_state(dir.path(), "snap", &s).unwrap();
    let back = load_state::<f64>(dir.path(), "snap").unwrap();
    assert_eq!(back.varrho.samples(), s.varrho.samples());
    for i in 0..2 {
        assert_eq!(back.v.component(i).samples(), s.v.component(i).samples());
    }
}

proptest! {
    #[test]
    fn fields_round_trip_bit_for_bit(values in prop::collection::vec(-1e6f64..1e6, 64), length in 0.1f64..100.0) {
        let g = TorusGrid::<f64>::new(1, 64, length).unwrap();
        let f = Field::new(&g, values).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let back: Field<f64> = read_field(&buf[..]).unwrap();
        prop_assert_eq!(back.samples(), f.samples());
        prop_assert_eq!(back.grid().length(), length);
    }
}
