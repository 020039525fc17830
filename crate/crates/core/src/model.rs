//! Linear hover model of a small flybarless helicopter.
//!
//! The 13-state / 4-input model `x' = A x + B u` carries 40 identifiable
//! stability and control derivatives. Everything else in `A` is either a
//! structural zero or a fixed kinematic entry (`1`, `±g`).
//!
//! State order: `u v p q phi theta a b w r r_fb c d`.
//! Input order: `delta_lat delta_lon delta_ped delta_col`.

use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::{SMatrix, SVector};
use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Gravitational acceleration used in the kinematic coupling terms, m/s².
pub const GRAVITY: f64 = 9.81;

pub const N_PARAMS: usize = 40;
pub const N_STATES: usize = 13;
pub const N_INPUTS: usize = 4;

/// Any state magnitude above this marks a simulation as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

pub type StateVector = SVector<f64, N_STATES>;
pub type ControlInput = SVector<f64, N_INPUTS>;
pub type StateMatrix = SMatrix<f64, N_STATES, N_STATES>;
pub type InputMatrix = SMatrix<f64, N_STATES, N_INPUTS>;

macro_rules! named_index {
    (
        $(#[$meta:meta])*
        $vis:vis enum $name:ident { $($variant:ident => $label:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        $vis enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }

            pub fn index(self) -> usize {
                self as usize
            }

            pub fn from_name(name: &str) -> Option<Self> {
                match name { $($label => Some($name::$variant),)+ _ => None }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.name())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let name = String::deserialize(d)?;
                $name::from_name(&name)
                    .ok_or_else(|| de::Error::custom(format!("unknown {} `{name}`", stringify!($name))))
            }
        }
    };
}

named_index! {
    /// Identifiable derivatives, in canonical report order.
    pub enum Param {
        Xu => "X_u", Xa => "X_a", Yv => "Y_v", Yb => "Y_b",
        Lu => "L_u", Lv => "L_v", Lb => "L_b", Lw => "L_w",
        Mu => "M_u", Mv => "M_v", Ma => "M_a", Mw => "M_w",
        TauF => "tau_f", Ab => "A_b", Ac => "A_c", Ba => "B_a", Bd => "B_d",
        Za => "Z_a", Zb => "Z_b", Zw => "Z_w", Zr => "Z_r",
        Nv => "N_v", Np => "N_p", Nw => "N_w", Nr => "N_r", Nrfb => "N_rfb",
        Kr => "K_r", Krfb => "K_rfb", TauS => "tau_s",
        Yped => "Y_ped", Mcol => "M_col",
        Alat => "A_lat", Alon => "A_lon", Blat => "B_lat", Blon => "B_lon",
        Zcol => "Z_col", Nped => "N_ped", Ncol => "N_col",
        Clon => "C_lon", Dlat => "D_lat",
    }
}

named_index! {
    /// Model states.
    pub enum State {
        U => "u", V => "v", P => "p", Q => "q", Phi => "phi", Theta => "theta",
        A => "a", B => "b", W => "w", R => "r", Rfb => "r_fb", C => "c", D => "d",
    }
}

named_index! {
    /// Pilot control channels.
    pub enum Control {
        Lat => "delta_lat", Lon => "delta_lon", Ped => "delta_ped", Col => "delta_col",
    }
}

impl State {
    /// States a real flight log cannot record (electronic feedback internals).
    pub const UNMEASURABLE: &'static [State] = &[State::Rfb, State::C, State::D];

    /// States used for time-domain validation.
    pub const VALIDATION: &'static [State] = &[State::P, State::Q, State::Phi, State::Theta];
}

/// Reference derivative values for the TREX 550 class hover model.
const REFERENCE_VALUES: [f64; N_PARAMS] = [
    -0.32066, 40.21598, -0.93658, -16.1151, // X_u X_a Y_v Y_b
    -0.00121, -0.47665, 133.6111, 0.0, // L_u L_v L_b L_w
    0.1, -0.09822, 104.9063, 0.0, // M_u M_v M_a M_w
    0.093851, -0.19213, 0.061597, 0.083523, 0.984168, // tau_f A_b A_c B_a B_d
    8.166105, 1.028478, 0.045724, -1.39101, // Z_a Z_b Z_w Z_r
    0.009652, -8.23373, 0.0, -8.69927, 42.69381, // N_v N_p N_w N_r N_rfb
    2.350899, -14.5913, 0.134939, // K_r K_rfb tau_s
    0.0, 0.0, // Y_ped M_col
    -0.09993, 0.701979, -0.07779, -0.09942, // A_lat A_lon B_lat B_lon
    -6.05944, -27.4672, -3.22316, // Z_col N_ped N_col
    -0.09815, 0.793573, // C_lon D_lat
];

/// The 40 identifiable derivatives as one flat decision vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParameterSet([f64; N_PARAMS]);

impl ParameterSet {
    pub fn new(values: [f64; N_PARAMS]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "parameter {} is not finite ({})",
                Param::ALL[i],
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; N_PARAMS] = values
            .try_into()
            .map_err(|_| Error::InvalidInput(format!("expected {N_PARAMS} parameters, got {}", values.len())))?;
        Self::new(arr)
    }

    pub fn zeros() -> Self {
        Self([0.0; N_PARAMS])
    }

    /// The hover derivatives reported for the reference airframe.
    pub fn reference() -> Self {
        Self(REFERENCE_VALUES)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.to_vec()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Param, f64)> + '_ {
        Param::ALL.iter().map(move |&p| (p, self.0[p.index()]))
    }
}

impl Index<Param> for ParameterSet {
    type Output = f64;

    fn index(&self, p: Param) -> &f64 {
        &self.0[p.index()]
    }
}

impl IndexMut<Param> for ParameterSet {
    fn index_mut(&mut self, p: Param) -> &mut f64 {
        &mut self.0[p.index()]
    }
}

impl Serialize for ParameterSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(N_PARAMS))?;
        for (p, v) in self.iter() {
            map.serialize_entry(p.name(), &v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ParameterSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ParamVisitor;

        impl<'de> Visitor<'de> for ParamVisitor {
            type Value = ParameterSet;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map of all 40 named derivatives")
            }

            fn visit_map<M: MapAccess<'de>>(self, mut access: M) -> Result<Self::Value, M::Error> {
                let mut values = [f64::NAN; N_PARAMS];
                let mut seen = [false; N_PARAMS];
                while let Some(key) = access.next_key::<String>()? {
                    let p = Param::from_name(&key)
                        .ok_or_else(|| de::Error::custom(format!("unknown parameter `{key}`")))?;
                    if seen[p.index()] {
                        return Err(de::Error::custom(format!("duplicate parameter `{key}`")));
                    }
                    seen[p.index()] = true;
                    values[p.index()] = access.next_value()?;
                }
                if let Some(i) = seen.iter().position(|s| !s) {
                    return Err(de::Error::custom(format!("missing parameter `{}`", Param::ALL[i])));
                }
                ParameterSet::new(values).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_map(ParamVisitor)
    }
}

/// Structural choices that are not identified.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelOptions {
    /// Use `-1` for the `a` flap damping entry instead of the printed `+1`,
    /// making both flap rows decay.
    pub flap_sign_symmetric: bool,
}

/// Dense `A` and `B` realised from a [`ParameterSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct SystemMatrices {
    pub a: StateMatrix,
    pub b: InputMatrix,
}

/// Places every derivative into its cell; all other cells stay exactly zero.
pub fn build_matrices(params: &ParameterSet, opts: &ModelOptions) -> Result<SystemMatrices> {
    use Param as P;
    use State as S;

    if let Some((p, v)) = params.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("parameter {p} is not finite ({v})")));
    }

    let mut a = StateMatrix::zeros();
    let mut b = InputMatrix::zeros();
    let mut set = |row: S, col: S, v: f64| a[(row.index(), col.index())] = v;

    set(S::U, S::U, params[P::Xu]);
    set(S::U, S::Theta, -GRAVITY);
    set(S::U, S::A, params[P::Xa]);

    set(S::V, S::V, params[P::Yv]);
    set(S::V, S::Phi, GRAVITY);
    set(S::V, S::B, params[P::Yb]);

    set(S::P, S::U, params[P::Lu]);
    set(S::P, S::V, params[P::Lv]);
    set(S::P, S::B, params[P::Lb]);
    set(S::P, S::W, params[P::Lw]);

    set(S::Q, S::U, params[P::Mu]);
    set(S::Q, S::V, params[P::Mv]);
    set(S::Q, S::A, params[P::Ma]);
    set(S::Q, S::W, params[P::Mw]);

    set(S::Phi, S::P, 1.0);
    set(S::Theta, S::Q, 1.0);

    set(S::A, S::Q, -params[P::TauF]);
    set(S::A, S::A, if opts.flap_sign_symmetric { -1.0 } else { 1.0 });
    set(S::A, S::B, params[P::Ab]);
    set(S::A, S::C, params[P::Ac]);

    set(S::B, S::P, -params[P::TauF]);
    set(S::B, S::A, params[P::Ba]);
    set(S::B, S::B, -1.0);
    set(S::B, S::D, params[P::Bd]);

    set(S::W, S::A, params[P::Za]);
    set(S::W, S::B, params[P::Zb]);
    set(S::W, S::W, params[P::Zw]);
    set(S::W, S::R, params[P::Zr]);

    set(S::R, S::V, params[P::Nv]);
    set(S::R, S::P, params[P::Np]);
    set(S::R, S::W, params[P::Nw]);
    set(S::R, S::R, params[P::Nr]);
    set(S::R, S::Rfb, params[P::Nrfb]);

    set(S::Rfb, S::R, params[P::Kr]);
    set(S::Rfb, S::Rfb, params[P::Krfb]);

    set(S::C, S::Q, -params[P::TauS]);
    set(S::C, S::C, -1.0);

    set(S::D, S::P, -params[P::TauS]);
    set(S::D, S::D, -1.0);

    let mut setb = |row: S, col: Control, v: f64| b[(row.index(), col.index())] = v;
    setb(S::V, Control::Ped, params[P::Yped]);
    setb(S::Q, Control::Col, params[P::Mcol]);
    setb(S::A, Control::Lat, params[P::Alat]);
    setb(S::A, Control::Lon, params[P::Alon]);
    setb(S::B, Control::Lat, params[P::Blat]);
    setb(S::B, Control::Lon, params[P::Blon]);
    setb(S::W, Control::Col, params[P::Zcol]);
    setb(S::R, Control::Ped, params[P::Nped]);
    setb(S::R, Control::Col, params[P::Ncol]);
    setb(S::C, Control::Lon, params[P::Clon]);
    setb(S::D, Control::Lat, params[P::Dlat]);

    Ok(SystemMatrices { a, b })
}

impl SystemMatrices {
    /// State derivative `A x + B u`.
    pub fn derivative(&self, x: &StateVector, u: &ControlInput) -> StateVector {
        self.a * x + self.b * u
    }
}

/// One fixed RK4 step of the linear system collapsed into matrices.
///
/// With the input held constant over the step, the four RK4 stages of
/// `x' = A x + B u` reduce exactly to `x+ = Φ x + Γ u` with
/// `Φ = I + hA + (hA)²/2 + (hA)³/6 + (hA)⁴/24` and
/// `Γ = h (I + hA/2 + (hA)²/6 + (hA)³/24) B`.
#[derive(Clone, Debug)]
pub struct Rk4Propagator {
    phi: StateMatrix,
    gamma: InputMatrix,
}

impl Rk4Propagator {
    pub fn new(mats: &SystemMatrices, dt: f64) -> Self {
        let ha = mats.a * dt;
        let ha2 = ha * ha;
        let ha3 = ha2 * ha;
        let ha4 = ha3 * ha;
        let eye = StateMatrix::identity();
        let phi = eye + ha + ha2 / 2.0 + ha3 / 6.0 + ha4 / 24.0;
        let gamma = (eye + ha / 2.0 + ha2 / 6.0 + ha3 / 24.0) * mats.b * dt;
        Self { phi, gamma }
    }

    #[inline]
    pub fn step(&self, x: &StateVector, u: &ControlInput) -> StateVector {
        self.phi * x + self.gamma * u
    }
}

/// Integrated state history.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    /// One state per input sample, or fewer when divergent.
    pub states: Vec<StateVector>,
    pub divergent: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn channel(&self, state: State) -> Vec<f64> {
        self.states.iter().map(|x| x[state.index()]).collect()
    }
}

fn within_guard(x: &StateVector) -> bool {
    x.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_LIMIT)
}

/// Fixed-step RK4 response to zero-order-held inputs.
///
/// `states[k]` is the state at the time of `inputs[k]`, so `states[0] == x0`.
/// Integration stops early, with `divergent` set, once any state leaves the
/// guard band; the offending sample is not stored.
pub fn simulate(mats: &SystemMatrices, x0: &StateVector, inputs: &[ControlInput], dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("initial state is not finite".into()));
    }
    let prop = Rk4Propagator::new(mats, dt);
    Ok(propagate(&prop, x0, inputs, dt))
}

pub(crate) fn propagate(prop: &Rk4Propagator, x0: &StateVector, inputs: &[ControlInput], dt: f64) -> Trajectory {
    let mut states = Vec::with_capacity(inputs.len());
    if inputs.is_empty() {
        return Trajectory {
            dt,
            states,
            divergent: false,
        };
    }
    if !within_guard(x0) {
        return Trajectory {
            dt,
            states,
            divergent: true,
        };
    }
    let mut x = *x0;
    states.push(x);
    for u in &inputs[..inputs.len() - 1] {
        x = prop.step(&x, u);
        if !within_guard(&x) {
            return Trajectory {
                dt,
                states,
                divergent: true,
            };
        }
        states.push(x);
    }
    Trajectory {
        dt,
        states,
        divergent: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn canonical_names_round_trip() {
        assert_eq!(Param::ALL.len(), N_PARAMS);
        assert_eq!(State::ALL.len(), N_STATES);
        assert_eq!(Control::ALL.len(), N_INPUTS);
        for (i, p) in Param::ALL.iter().enumerate() {
            assert_eq!(p.index(), i);
            assert_eq!(Param::from_name(p.name()), Some(*p));
        }
        assert_eq!(Param::ALL[0].name(), "X_u");
        assert_eq!(Param::ALL[12].name(), "tau_f");
        assert_eq!(Param::ALL[39].name(), "D_lat");
    }

    #[test]
    fn reference_value_lands_in_its_cell() {
        let m = build_matrices(&ParameterSet::reference(), &ModelOptions::default()).unwrap();
        assert_eq!(m.a[(0, 0)], -0.32066);
        assert_eq!(m.a[(0, 5)], -9.81);
        assert_eq!(m.b[(12, 0)], 0.793573);
    }

    #[test]
    fn zero_parameters_leave_only_the_skeleton() {
        let m = build_matrices(&ParameterSet::zeros(), &ModelOptions::default()).unwrap();
        let mut nonzero: Vec<_> =
            m.a.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i % N_STATES, i / N_STATES, *v))
                .collect();
        nonzero.sort_by_key(|&(r, c, _)| (r, c));
        assert_eq!(
            nonzero,
            vec![
                (0, 5, -GRAVITY),
                (1, 4, GRAVITY),
                (4, 2, 1.0),
                (5, 3, 1.0),
                (6, 6, 1.0),
                (7, 7, -1.0),
                (11, 11, -1.0),
                (12, 12, -1.0),
            ]
        );
        assert!(m.b.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn flap_sign_toggle() {
        let opts = ModelOptions {
            flap_sign_symmetric: true,
        };
        let m = build_matrices(&ParameterSet::zeros(), &opts).unwrap();
        assert_eq!(m.a[(State::A.index(), State::A.index())], -1.0);
        assert_eq!(m.a[(State::B.index(), State::B.index())], -1.0);
    }

    #[test]
    fn non_finite_parameter_rejected() {
        let mut vals = REFERENCE_VALUES;
        vals[Param::Lb.index()] = f64::NAN;
        assert!(ParameterSet::new(vals).is_err());
        assert!(ParameterSet::from_slice(&[1.0; 39]).is_err());
    }

    #[test]
    fn derivative_single_fixed_entry() {
        let m = build_matrices(&ParameterSet::zeros(), &ModelOptions::default()).unwrap();
        let mut x = StateVector::zeros();
        x[State::Phi.index()] = 0.1;
        let dx = m.derivative(&x, &ControlInput::zeros());
        assert_eq!(dx[State::U.index()], 0.0);
        assert_abs_diff_eq!(dx[State::V.index()], 0.981, epsilon = 1e-15);
        let zero = m.derivative(&StateVector::zeros(), &ControlInput::zeros());
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn simulate_zero_stays_zero() {
        let m = build_matrices(&ParameterSet::reference(), &ModelOptions::default()).unwrap();
        let inputs = vec![ControlInput::zeros(); 500];
        let traj = simulate(&m, &StateVector::zeros(), &inputs, 0.01).unwrap();
        assert_eq!(traj.len(), 500);
        assert!(!traj.divergent);
        assert!(traj.states.iter().all(|x| x.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn simulate_flags_divergence_and_truncates() {
        let mut p = ParameterSet::zeros();
        p[Param::Zw] = 50.0;
        let m = build_matrices(&p, &ModelOptions::default()).unwrap();
        let mut x0 = StateVector::zeros();
        x0[State::W.index()] = 1.0;
        let traj = simulate(&m, &x0, &vec![ControlInput::zeros(); 1000], 0.01).unwrap();
        assert!(traj.divergent);
        assert!(traj.len() < 1000);
        assert!(traj.states.iter().all(within_guard));
    }

    #[test]
    fn simulate_rejects_bad_step() {
        let m = build_matrices(&ParameterSet::zeros(), &ModelOptions::default()).unwrap();
        let inputs = vec![ControlInput::zeros(); 3];
        assert!(simulate(&m, &StateVector::zeros(), &inputs, 0.0).is_err());
        let mut x0 = StateVector::zeros();
        x0[0] = f64::INFINITY;
        assert!(simulate(&m, &x0, &inputs, 0.01).is_err());
    }

    #[test]
    fn parameter_json_is_ordered_and_complete() {
        let p = ParameterSet::reference();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.starts_with("{\"X_u\":-0.32066,\"X_a\":40.21598"));
        let back: ParameterSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<ParameterSet>("{\"X_u\":1.0}").is_err());
    }
}
