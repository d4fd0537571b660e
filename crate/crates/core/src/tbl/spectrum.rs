//! Wall-pressure wavenumber–frequency spectra.
//!
//! The analytic model is a Corcos wavenumber shape normalized to unit
//! integral and scaled by the Goody single-point spectrum, so that
//! `∫∫ Φ(kx, ky, ω) dkx dky = Φ_pp(ω)`.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CorcosGoody {
    pub u_inf: f64,
    pub u_c: f64,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub delta: f64,
    pub rho_air: f64,
    pub nu_air: f64,
    pub tau_w: f64,
}

impl Default for CorcosGoody {
    fn default() -> Self {
        let mut m = Self {
            u_inf: 230.0,
            u_c: 0.7 * 230.0,
            alpha_x: 0.116,
            alpha_y: 0.7,
            delta: 0.1,
            rho_air: 1.21,
            nu_air: 1.5e-5,
            tau_w: 1.0,
        };
        m.tau_w = m.tau_w_for_peak(100.0).expect("default peak is reachable");
        m
    }
}

impl CorcosGoody {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tbl.u_inf", self.u_inf),
            ("tbl.u_c", self.u_c),
            ("tbl.alpha_x", self.alpha_x),
            ("tbl.alpha_y", self.alpha_y),
            ("tbl.delta", self.delta),
            ("tbl.rho_air", self.rho_air),
            ("tbl.nu_air", self.nu_air),
            ("tbl.tau_w", self.tau_w),
        ];
        for (key, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{key} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Goody's ratio of outer to inner boundary-layer time scales.
    fn time_scale_ratio(&self, tau_w: f64) -> f64 {
        let u_tau2 = tau_w / self.rho_air;
        u_tau2 * self.delta / (self.nu_air * self.u_inf)
    }

    fn goody(&self, tau_w: f64, omega: f64) -> f64 {
        let x = omega * self.delta / self.u_inf;
        let r_t = self.time_scale_ratio(tau_w);
        let den = (x.powf(0.75) + 0.5).powf(3.7) + (1.1 * r_t.powf(-0.57) * x).powi(7);
        tau_w * tau_w * (self.delta / self.u_inf) * 3.0 * x * x / den
    }

    /// Single-point spectrum `Φ_pp(ω)` [Pa²·s].
    pub fn point_spectrum(&self, omega: f64) -> f64 {
        self.goody(self.tau_w, omega)
    }

    fn peak_frequency(&self, tau_w: f64) -> f64 {
        // golden-section search on log ω; the spectrum is unimodal
        let (mut a, mut b) = ((2.0 * PI * 1e-2f64).ln(), (2.0 * PI * 1e5f64).ln());
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let f = |lw: f64| -self.goody(tau_w, lw.exp());
        let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..200 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        (0.5 * (a + b)).exp() / (2.0 * PI)
    }

    /// Peak frequency of the point spectrum in Hz.
    pub fn point_spectrum_peak_hz(&self) -> f64 {
        self.peak_frequency(self.tau_w)
    }

    /// Wall shear stress that places the point-spectrum peak at `peak_hz`.
    pub fn tau_w_for_peak(&self, peak_hz: f64) -> Result<f64> {
        // the peak moves up monotonically with τ_w
        let (mut lo, mut hi) = (1e-8f64.ln(), 1e6f64.ln());
        if !(self.peak_frequency(lo.exp()) < peak_hz && self.peak_frequency(hi.exp()) > peak_hz) {
            return Err(Error::Config(format!(
                "no wall shear stress places the spectral peak at {peak_hz} Hz"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.peak_frequency(mid.exp()) < peak_hz {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    /// Normalized Corcos shape [m²].
    pub fn wavenumber_shape(&self, kx: f64, ky: f64, omega: f64) -> f64 {
        let kc = omega / self.u_c;
        let (ax, ay) = (self.alpha_x * kc, self.alpha_y * kc);
        (ax / PI) / (ax * ax + (kx - kc) * (kx - kc)) * (ay / PI) / (ay * ay + ky * ky)
    }

    pub fn evaluate(&self, kx: f64, ky: f64, omega: f64) -> f64 {
        self.point_spectrum(omega) * self.wavenumber_shape(kx, ky, omega)
    }
}

/// `Φ(kx, ky, ω)` sampled on a rectilinear `(kx, ky)` grid at each listed
/// frequency. Evaluation uses the nearest tabulated frequency and bilinear
/// interpolation in wavenumber; zero outside the tabulated range.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedSpectrum {
    pub convective_velocity: f64,
    slices: Vec<Slice>,
}

#[derive(Clone, Debug, PartialEq)]
struct Slice {
    frequency_hz: f64,
    kx: Vec<f64>,
    ky: Vec<f64>,
    /// Row-major over `(kx, ky)`.
    values: Vec<f64>,
}

fn bracket(grid: &[f64], v: f64) -> Option<(usize, f64)> {
    if grid.len() == 1 {
        return (v == grid[0]).then_some((0, 0.0));
    }
    if v < grid[0] || v > grid[grid.len() - 1] {
        return None;
    }
    let i = grid.partition_point(|&g| g <= v).clamp(1, grid.len() - 1) - 1;
    Some((i, (v - grid[i]) / (grid[i + 1] - grid[i])))
}

impl TabulatedSpectrum {
    /// Builds from `(f_Hz, kx, ky, phi_pp)` rows; each frequency must cover a
    /// complete rectilinear wavenumber grid.
    pub fn from_rows(rows: &[[f64; 4]], convective_velocity: f64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Config("tabulated spectrum has no rows".into()));
        }
        if !(convective_velocity > 0.0) {
            return Err(Error::Config("tbl.u_c must be positive".into()));
        }
        let mut freqs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        freqs.sort_by(f64::total_cmp);
        freqs.dedup();
        let mut slices = Vec::with_capacity(freqs.len());
        for f in freqs {
            let sub: Vec<&[f64; 4]> = rows.iter().filter(|r| r[0] == f).collect();
            let uniq = |c: usize| {
                let mut v: Vec<f64> = sub.iter().map(|r| r[c]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            };
            let (kx, ky) = (uniq(1), uniq(2));
            if kx.len() * ky.len() != sub.len() {
                return Err(Error::Config(format!(
                    "tabulated spectrum at {f} Hz is not a complete rectilinear grid ({} x {} for {} rows)",
                    kx.len(),
                    ky.len(),
                    sub.len()
                )));
            }
            let mut values = vec![f64::NAN; sub.len()];
            for r in sub {
                if !(r[3] >= 0.0) {
                    return Err(Error::Config(format!("negative or NaN phi_pp at {f} Hz")));
                }
                let i = kx.partition_point(|&v| v < r[1]);
                let j = ky.partition_point(|&v| v < r[2]);
                values[i * ky.len() + j] = r[3];
            }
            slices.push(Slice {
                frequency_hz: f,
                kx,
                ky,
                values,
            });
        }
        Ok(Self {
            convective_velocity,
            slices,
        })
    }

    /// Reads a CSV with header `f_Hz,kx,ky,phi_pp`; `#` lines are comments.
    pub fn from_csv(path: &Path, convective_velocity: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ctx = path.display().to_string();
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("f_Hz") {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(&ctx, format!("line {}: {e}", ln + 1)))?;
            if vals.len() != 4 {
                return Err(Error::parse(&ctx, format!("line {}: expected 4 columns", ln + 1)));
            }
            rows.push([vals[0], vals[1], vals[2], vals[3]]);
        }
        Self::from_rows(&rows, convective_velocity)
    }

    pub fn evaluate(&self, kx: f64, ky: f64, omega: f64) -> f64 {
        let f = omega / (2.0 * PI);
        let s = self
            .slices
            .iter()
            .min_by(|a, b| (a.frequency_hz - f).abs().total_cmp(&(b.frequency_hz - f).abs()))
            .expect("at least one slice");
        let (Some((i, tx)), Some((j, ty))) = (bracket(&s.kx, kx), bracket(&s.ky, ky)) else {
            return 0.0;
        };
        let ny = s.ky.len();
        let at = |a: usize, b: usize| s.values[a.min(s.kx.len() - 1) * ny + b.min(ny - 1)];
        (1.0 - tx) * (1.0 - ty) * at(i, j)
            + tx * (1.0 - ty) * at(i + 1, j)
            + (1.0 - tx) * ty * at(i, j + 1)
            + tx * ty * at(i + 1, j + 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumModel {
    CorcosGoody(CorcosGoody),
    Tabulated(TabulatedSpectrum),
}

impl Default for SpectrumModel {
    fn default() -> Self {
        SpectrumModel::CorcosGoody(CorcosGoody::default())
    }
}

impl SpectrumModel {
    pub fn convective_velocity(&self) -> f64 {
        match self {
            SpectrumModel::CorcosGoody(m) => m.u_c,
            SpectrumModel::Tabulated(t) => t.convective_velocity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpectrumModel::CorcosGoody(m) => m.validate(),
            SpectrumModel::Tabulated(t) if t.convective_velocity > 0.0 => Ok(()),
            SpectrumModel::Tabulated(_) => Err(Error::Config("tbl.u_c must be positive".into())),
        }
    }
}

/// `Φ_pp(kx, ky, ω)` [Pa²·m²·s].
pub fn wall_pressure_spectrum(model: &SpectrumModel, kx: f64, ky: f64, omega: f64) -> Result<f64> {
    model.validate()?;
    if !(omega > 0.0) {
        return Err(Error::Contract(format!("spectrum needs omega > 0, got {omega}")));
    }
    Ok(match model {
        SpectrumModel::CorcosGoody(m) => m.evaluate(kx, ky, omega),
        SpectrumModel::Tabulated(t) => t.evaluate(kx, ky, omega),
    })
}
