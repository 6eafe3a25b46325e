//! Every field of every built-in preset against tables transcribed row by
//! row, independently of how the presets are assembled in the library.

use kdyn_core::{load_preset, ParamValues, State, PRESET_NAMES};

include!("data/preset_table.rs");

#[test]
fn table_covers_every_field() {
    let mut names: Vec<&str> = TABLE.iter().map(|r| r.0).collect();
    let mut fields = ParamValues::FIELD_NAMES.to_vec();
    names.sort_unstable();
    fields.sort_unstable();
    assert_eq!(names, fields);
}

#[test]
fn presets_match_tables() {
    let mut mismatches = Vec::new();
    for (col, name) in PRESET_NAMES.iter().enumerate() {
        let p = load_preset(name).unwrap();
        for (field, row) in &TABLE {
            let got = p.params.get(field).unwrap();
            if got != row[col] {
                mismatches.push(format!("{name}.{field}: {got} != {}", row[col]));
            }
        }
        assert_eq!(p.y0, State::new(100.0, 0.5, 0.3, 10.0, 50.0));
        assert_eq!(p.config.t_end, 1000);
        assert_eq!((p.config.rtol, p.config.atol), (1e-6, 1e-9));
    }
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}
