// Transcribed row by row; shared by the preset test and the acceptance run.
// Columns follow PRESET_NAMES: a b c d e f g h i medical open_source.
#[rustfmt::skip]
const TABLE: [(&str, [f64; 11]); 24] = [
    ("alpha_H",      [0.5, 0.5, 0.5, 0.05, 0.5, 0.05, 0.25, 0.05, 0.05, 0.32, 5.0]),
    ("alpha_A",      [0.0, 0.05, 0.05, 0.5, 0.05, 0.5, 0.3, 0.5, 0.5, 0.05, 4.26]),
    ("delta_K",      [0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.010, 0.023]),
    ("q_H",          [0.95, 0.95, 0.95, 0.95, 0.95, 0.95, 0.95, 0.95, 0.95, 0.99, 0.90]),
    ("delta_q",      [0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.0005, 0.002]),
    ("eta_sup",      [0.0, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.10, 0.12]),
    ("eta_RLHF",     [0.0, 0.03, 0.03, 0.03, 0.03, 0.03, 0.03, 0.5, 0.5, 0.30, 0.25]),
    ("theta_max",    [1.0; 11]),
    ("theta_mid",    [0.0; 11]),
    ("K_max",        [1e4, 1e4, 1e4, 1e4, 1e4, 1e4, 1e4, 1e4, 1e4, 1e5, 5e5]),
    ("Q_half",       [5000.0, 5000.0, 5000.0, 5000.0, 5000.0, 5000.0, 5000.0, 5000.0, 100.0, 8000.0, 5000.0]),
    ("beta_K",       [0.05, 0.05, 0.05, 0.05, 0.03, 0.03, 0.03, 0.03, 0.05, 0.20, 0.30]),
    ("beta_A",       [0.0, 0.03, 0.03, 0.03, 0.05, 0.05, 0.05, 0.05, 0.3, 0.05, 0.10]),
    ("gamma_H",      [0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.02, 0.03]),
    ("H_inf",        [100.0; 11]),
    ("hill_beta",    [0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 4.0, 0.9, 0.9]),
    ("K_half",       [300.0, 300.0, 300.0, 300.0, 300.0, 300.0, 300.0, 300.0, 200.0, 300.0, 300.0]),
    ("Q_sat",        [500.0, 500.0, 500.0, 500.0, 500.0, 500.0, 500.0, 500.0, 500.0, 1000.0, 500.0]),
    ("xi_0",         [0.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0]),
    ("kappa_H",      [0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.9, 0.05, 0.05]),
    ("T_difficulty", [10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10000.0, 10.0, 10.0]),
    ("rho_Q",        [0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.02, 0.02]),
    ("a_0",          [0.0, 0.5, 0.8, 0.5, 0.5, 0.5, 0.8, 0.5, 0.5, 0.90, 0.60]),
    ("kappa_gate",   [10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 1.0, 20.0, 8.0]),
];
