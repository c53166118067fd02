//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Each export is a thin wrapper over a plain Rust function so the logic
//! is testable natively.

use wasm_bindgen::prelude::*;

use eosvac::integrator::{scan_delays, IntegratorOptions};
use eosvac::kernels::{KernelSet, SpectralBand};
use eosvac::medium::Medium;
use eosvac::pulses::{overlap_kernel, PulseEnvelope, PulseShape};
use eosvac::regions::{
    boundary_i_ii, boundary_ii_iii, classify_kernel, cone_speed, pulse_pair, BoundaryParams, Region,
};
use eosvac::waveplate::coefficients;

fn js(e: impl ToString) -> JsError {
    JsError::new(&e.to_string())
}

/// Region code used in the typed arrays: III = 0, II = 1, I = 2, failed = 255.
pub fn region_code(r: Option<Region>) -> u8 {
    match r {
        Some(Region::III) => 0,
        Some(Region::II) => 1,
        Some(Region::I) => 2,
        None => 255,
    }
}

pub fn coefficient_triple(theta1: f64, theta2: f64) -> eosvac::Result<Vec<f64>> {
    let c = coefficients(theta1, theta2)?;
    Ok(vec![c.p_vac, c.p_s_prime, c.p_s_dprime])
}

/// `[p_vac, p_s_prime, p_s_dprime]` for two wave-plate angles in radians.
#[wasm_bindgen(js_name = coefficients)]
pub fn coefficients_js(theta1: f64, theta2: f64) -> Result<Vec<f64>, JsError> {
    coefficient_triple(theta1, theta2).map_err(js)
}

/// A crystal and two identical probe pulses.
#[wasm_bindgen]
pub struct Experiment {
    pulse: PulseEnvelope,
    medium: Medium,
}

#[wasm_bindgen]
impl Experiment {
    /// Dispersionless crystal of index `n`; lengths in um, times in fs.
    #[wasm_bindgen(constructor)]
    pub fn new(n: f64, n_g: f64, length_um: f64, waist_um: f64, duration_fs: f64, gaussian: bool) -> Experiment {
        Experiment {
            pulse: PulseEnvelope {
                shape: if gaussian { PulseShape::Gaussian } else { PulseShape::Rectangular },
                waist: waist_um,
                duration: duration_fs,
                x: 0.0,
                y: 0.0,
                t0: 0.0,
                crystal_length: length_um,
                n_g,
                amplitude: 1.0,
            },
            medium: Medium::Dispersionless { n, n_g },
        }
    }

    /// Region codes on an `nr x nt` grid over `[0, r_max] x [0, t_max]`,
    /// row-major in delay.
    pub fn region_map(&self, r_max: f64, t_max: f64, nr: usize, nt: usize) -> Vec<u8> {
        let c_n = cone_speed(&self.medium);
        let at = |i: usize, n: usize, top: f64| if n > 1 { top * i as f64 / (n - 1) as f64 } else { 0.0 };
        let mut out = Vec::with_capacity(nr * nt);
        for it in 0..nt {
            for ir in 0..nr {
                let (q1, q2) = pulse_pair(&self.pulse, &self.pulse, at(ir, nr, r_max), at(it, nt, t_max));
                let label = overlap_kernel(&q1, &q2).and_then(|k| classify_kernel(&k, c_n)).ok();
                out.push(region_code(label.map(|l| l.region)));
            }
        }
        out
    }

    /// Analytic `[I/II, II/III]` separations at one delay; NaN where a
    /// formula is undefined.
    pub fn boundaries(&self, delta_t: f64) -> Vec<f64> {
        let p = BoundaryParams::new(&self.pulse, &self.medium);
        vec![
            boundary_i_ii(delta_t, &p).unwrap_or(f64::NAN),
            boundary_ii_iii(delta_t, &p).unwrap_or(f64::NAN),
        ]
    }

    /// Delay scan at separation `delta_r`: rows `[delta_t, g_vac, g_s,
    /// region code]` flattened.
    pub fn signal(&self, delta_r: f64, t_start: f64, t_stop: f64, n: usize) -> Result<Vec<f64>, JsError> {
        self.scan(delta_r, t_start, t_stop, n).map_err(js)
    }
}

impl Experiment {
    pub fn scan(&self, delta_r: f64, t_start: f64, t_stop: f64, n: usize) -> eosvac::Result<Vec<f64>> {
        let ks = KernelSet::new(self.medium.clone(), SpectralBand::default())?;
        // coarse nodes keep the spectral path interactive
        let opts = IntegratorOptions { transverse_nodes: 10, z_panels: 6, ..Default::default() };
        let delays: Vec<f64> = (0..n)
            .map(|i| if n > 1 { t_start + (t_stop - t_start) * i as f64 / (n - 1) as f64 } else { t_start })
            .collect();
        let rows = scan_delays(&self.pulse, &self.pulse, &ks, &opts, delta_r, &delays, None)?;
        Ok(rows
            .iter()
            .flat_map(|r| [r.delta_t, r.g_vac, r.g_s, region_code(r.region) as f64])
            .collect())
    }
}
