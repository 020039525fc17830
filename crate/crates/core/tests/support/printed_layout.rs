//! The state and input matrices exactly as printed, as symbol tokens, and a
//! decoder for them. Shared with the acceptance suite.

use heli_ident_core::model::GRAVITY;
use heli_ident_core::{Param, ParameterSet};

// State matrix as printed, row by row, in state order u v p q phi theta a b w r r_fb c d.
#[rustfmt::skip]
pub const A_PRINTED: [[&str; 13]; 13] = [
    ["X_u", "0", "0", "0", "0", "-g", "X_a", "0", "0", "0", "0", "0", "0"],
    ["0", "Y_v", "0", "0", "g", "0", "0", "Y_b", "0", "0", "0", "0", "0"],
    ["L_u", "L_v", "0", "0", "0", "0", "0", "L_b", "L_w", "0", "0", "0", "0"],
    ["M_u", "M_v", "0", "0", "0", "0", "M_a", "0", "M_w", "0", "0", "0", "0"],
    ["0", "0", "1", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0"],
    ["0", "0", "0", "1", "0", "0", "0", "0", "0", "0", "0", "0", "0"],
    ["0", "0", "0", "-tau_f", "0", "0", "1", "A_b", "0", "0", "0", "A_c", "0"],
    ["0", "0", "-tau_f", "0", "0", "0", "B_a", "-1", "0", "0", "0", "0", "B_d"],
    ["0", "0", "0", "0", "0", "0", "Z_a", "Z_b", "Z_w", "Z_r", "0", "0", "0"],
    ["0", "N_v", "N_p", "0", "0", "0", "0", "0", "N_w", "N_r", "N_rfb", "0", "0"],
    ["0", "0", "0", "0", "0", "0", "0", "0", "0", "K_r", "K_rfb", "0", "0"],
    ["0", "0", "0", "-tau_s", "0", "0", "0", "0", "0", "0", "0", "-1", "0"],
    ["0", "0", "-tau_s", "0", "0", "0", "0", "0", "0", "0", "0", "0", "-1"],
];

// Input matrix, columns delta_lat delta_lon delta_ped delta_col.
#[rustfmt::skip]
pub const B_PRINTED: [[&str; 4]; 13] = [
    ["0", "0", "0", "0"],
    ["0", "0", "Y_ped", "0"],
    ["0", "0", "0", "0"],
    ["0", "0", "0", "M_col"],
    ["0", "0", "0", "0"],
    ["0", "0", "0", "0"],
    ["A_lat", "A_lon", "0", "0"],
    ["B_lat", "B_lon", "0", "0"],
    ["0", "0", "0", "Z_col"],
    ["0", "0", "N_ped", "N_col"],
    ["0", "0", "0", "0"],
    ["0", "C_lon", "0", "0"],
    ["D_lat", "0", "0", "0"],
];

#[derive(Debug, PartialEq)]
pub enum Cell {
    Zero,
    Fixed(f64),
    Param(Param, f64),
}

pub fn decode(token: &str) -> Cell {
    let (sign, name) = match token.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, token),
    };
    match name {
        "0" => Cell::Zero,
        "1" => Cell::Fixed(sign),
        "g" => Cell::Fixed(sign * GRAVITY),
        _ => Cell::Param(
            Param::from_name(name).unwrap_or_else(|| panic!("unknown symbol {name}")),
            sign,
        ),
    }
}

pub fn expected(cell: &Cell, p: &ParameterSet) -> f64 {
    match *cell {
        Cell::Zero => 0.0,
        Cell::Fixed(v) => v,
        Cell::Param(k, s) => s * p[k],
    }
}
