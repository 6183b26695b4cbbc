//! Orthogonal conjugate-mirror filter banks.
//!
//! Daubechies extremal-phase filters `db1` ... `db10` are tabulated; `dbN`
//! has `N` vanishing moments and `2N` taps. The highpass filter is the
//! conjugate mirror `g[n] = (-1)^n h[L-1-n]`.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

/// Tolerance for the filter-bank sanity checks.
const BANK_TOLERANCE: f64 = 1e-10;

/// Default number of vanishing moments.
pub const DEFAULT_MOMENTS: usize = 4;

const DB1: [f64; 2] = [
    std::f64::consts::FRAC_1_SQRT_2,
    std::f64::consts::FRAC_1_SQRT_2,
];
const DB2: [f64; 4] = [
    0.48296291314453414,
    0.83651630373780791,
    0.22414386804201338,
    -0.12940952255126038,
];
const DB3: [f64; 6] = [
    0.33267055295008262,
    0.80689150931109258,
    0.45987750211849157,
    -0.13501102001025459,
    -0.085441273882026662,
    0.035226291885709537,
];
const DB4: [f64; 8] = [
    0.2303778133088965,
    0.71484657055291565,
    0.63088076792985891,
    -0.027983769416859854,
    -0.18703481171909308,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];
const DB5: [f64; 10] = [
    0.16010239797419291,
    0.60382926979718967,
    0.72430852843777293,
    0.13842814590132073,
    -0.24229488706638203,
    -0.032244869584638375,
    0.077571493840045714,
    -0.0062414902127982743,
    -0.012580751999081999,
    0.0033357252854737713,
];
const DB6: [f64; 12] = [
    0.11154074335010946,
    0.49462389039845309,
    0.75113390802109535,
    0.31525035170919763,
    -0.22626469396543982,
    -0.12976686756726194,
    0.097501605587323049,
    0.027522865530305729,
    -0.03158203931748603,
    0.00055384220116149614,
    0.0047772575109455106,
    -0.0010773010853084796,
];
const DB7: [f64; 14] = [
    0.077852054085009179,
    0.39653931948191731,
    0.72913209084623512,
    0.46978228740519312,
    -0.14390600392856498,
    -0.22403618499387498,
    0.071309219266830265,
    0.080612609151083072,
    -0.038029936935014414,
    -0.016574541630666881,
    0.012550998556099841,
    0.00042957797292136652,
    -0.0018016407040474909,
    0.00035371379997452025,
];
const DB8: [f64; 16] = [
    0.05441584224310401,
    0.31287159091429997,
    0.67563073629728981,
    0.58535468365420671,
    -0.015829105256349306,
    -0.28401554296154693,
    0.00047248457391328277,
    0.12874742662047846,
    -0.017369301001807546,
    -0.044088253930794752,
    0.013981027917398282,
    0.0087460940474057767,
    -0.0048703529934515743,
    -0.00039174037337694705,
    0.00067544940645056937,
    -0.00011747678412476953,
];
const DB9: [f64; 18] = [
    0.038077947363878347,
    0.24383467461259035,
    0.60482312369011111,
    0.65728807805130054,
    0.13319738582500758,
    -0.29327378327917491,
    -0.096840783222976461,
    0.14854074933810638,
    0.030725681479333379,
    -0.067632829061329974,
    0.00025094711483145196,
    0.022361662123679097,
    -0.0047232047577513973,
    -0.0042815036824634298,
    0.0018476468830562265,
    0.00023038576352319597,
    -0.00025196318894271014,
    0.000039347320316271599,
];
const DB10: [f64; 20] = [
    0.026670057900555554,
    0.18817680007769149,
    0.52720118893172559,
    0.68845903945360357,
    0.28117234366057746,
    -0.24984642432731538,
    -0.19594627437737704,
    0.12736934033579326,
    0.093057364603572351,
    -0.071394147166397087,
    -0.029457536821875813,
    0.033212674059341002,
    0.0036065535669561697,
    -0.010733175483330575,
    0.0013953517470529012,
    0.0019924052951850561,
    -0.00068585669495971163,
    -0.00011646685512928545,
    0.000093588670320069591,
    -0.000013264202894521245,
];

/// An orthonormal two-channel filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    name: String,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
    vanishing_moments: usize,
}

impl Filter {
    /// Daubechies filter with `moments` vanishing moments (1 to 10).
    pub fn daubechies(moments: usize) -> Result<Self> {
        let taps: &[f64] = match moments {
            1 => &DB1,
            2 => &DB2,
            3 => &DB3,
            4 => &DB4,
            5 => &DB5,
            6 => &DB6,
            7 => &DB7,
            8 => &DB8,
            9 => &DB9,
            10 => &DB10,
            _ => {
                return Err(Error::Domain(format!(
                    "Daubechies filters are tabulated for 1..=10 vanishing moments, got {moments}"
                )))
            }
        };
        Self::custom(format!("db{moments}"), taps.to_vec(), moments)
    }

    /// Looks a filter up by name: `haar` or `db1` ... `db10`.
    pub fn by_name(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        if lower == "haar" {
            return Self::daubechies(1);
        }
        lower
            .strip_prefix("db")
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| Error::Domain(format!("unknown filter '{name}'")))
            .and_then(Self::daubechies)
    }

    /// Validates and wraps a user-supplied lowpass filter.
    pub fn custom(
        name: impl Into<String>,
        lowpass: Vec<f64>,
        vanishing_moments: usize,
    ) -> Result<Self> {
        let len = lowpass.len();
        if len < 2 || !len.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "lowpass length must be even and >= 2, got {len}"
            )));
        }
        if vanishing_moments == 0 {
            return Err(Error::Domain(
                "a filter needs at least one vanishing moment".into(),
            ));
        }
        let sum: f64 = lowpass.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > BANK_TOLERANCE {
            return Err(Error::Domain(format!(
                "lowpass sums to {sum}, expected sqrt(2)"
            )));
        }
        // Orthonormality of even shifts: sum_n h[n] h[n + 2k] = δ_k.
        for shift in (0..len).step_by(2) {
            let dot: f64 = (0..len - shift)
                .map(|n| lowpass[n] * lowpass[n + shift])
                .sum();
            let expected = if shift == 0 { 1.0 } else { 0.0 };
            if (dot - expected).abs() > BANK_TOLERANCE {
                return Err(Error::Domain(format!(
                    "lowpass is not orthonormal at shift {shift} (inner product {dot})"
                )));
            }
        }
        let highpass = (0..len)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - n]
            })
            .collect();
        Ok(Self {
            name: name.into(),
            lowpass,
            highpass,
            vanishing_moments,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    pub fn vanishing_moments(&self) -> usize {
        self.vanishing_moments
    }

    /// Circular shift applied at every analysis step so that the wavelet
    /// indexed `k` at scale `j` is centred on the dyadic interval
    /// `[k 2^-j, (k+1) 2^-j)` rather than starting at its left edge.
    pub fn centering_offset(&self) -> usize {
        self.len() / 2 - 1
    }
}

impl Default for Filter {
    fn default() -> Self {
        Self::daubechies(DEFAULT_MOMENTS).expect("tabulated filter")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_banks_are_orthonormal() {
        for m in 1..=10 {
            let f = Filter::daubechies(m).unwrap();
            assert_eq!(f.len(), 2 * m);
            let g = f.highpass();
            let h = f.lowpass();
            let len = f.len();
            for shift in (0..len).step_by(2) {
                let gg: f64 = (0..len - shift).map(|n| g[n] * g[n + shift]).sum();
                let expected = if shift == 0 { 1.0 } else { 0.0 };
                assert!((gg - expected).abs() < 1e-10);
            }
            // Cross-orthogonality h ⟂ g at every even shift, both directions.
            for shift in (0..len).step_by(2) {
                let a: f64 = (0..len - shift).map(|n| h[n] * g[n + shift]).sum();
                let b: f64 = (0..len - shift).map(|n| g[n] * h[n + shift]).sum();
                assert!(a.abs() < 1e-10 && b.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn highpass_has_vanishing_moments() {
        for m in 1..=10 {
            let f = Filter::daubechies(m).unwrap();
            let len = f.len() as f64;
            for order in 0..m as i32 {
                // Centre the abscissa to keep the moment sums well conditioned.
                let moment: f64 = f
                    .highpass()
                    .iter()
                    .enumerate()
                    .map(|(n, g)| g * (n as f64 - (len - 1.0) / 2.0).powi(order))
                    .sum();
                assert!(moment.abs() < 1e-7, "db{m} moment {order} = {moment}");
            }
        }
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(Filter::by_name("haar").unwrap().name(), "db1");
        assert_eq!(Filter::by_name("DB4").unwrap().vanishing_moments(), 4);
        assert!(Filter::by_name("sym4").is_err());
        assert!(Filter::daubechies(11).is_err());
        assert_eq!(Filter::default().name(), "db4");
        assert_eq!(Filter::default().centering_offset(), 3);
    }

    #[test]
    fn custom_rejects_bad_banks() {
        assert!(Filter::custom("odd", vec![1.0, 0.2, 0.2], 1).is_err());
        assert!(Filter::custom("sum", vec![1.0, 1.0], 1).is_err());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(Filter::custom("haar", vec![h, h], 1).is_ok());
    }
}
