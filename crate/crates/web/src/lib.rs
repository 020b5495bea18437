//! Browser bindings: a radial eigenfunction profile, a Gårding-cone map for
//! three-dimensional spectra, and a coarse grid eigenfunction on the unit disk.

use hesseig::eigensolve::find_lambda_delta;
use hesseig::grid::DomainDescriptor;
use hesseig::problem::ProblemSpec;
use hesseig::radial::shoot_eigen;
use hesseig::symfun::cone_classify;
use wasm_bindgen::prelude::*;

fn js_err(e: hesseig::error::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Profile {
    lambda1: f64,
    r: Vec<f64>,
    u: Vec<f64>,
}

#[wasm_bindgen]
impl Profile {
    #[wasm_bindgen(getter)]
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    #[wasm_bindgen(getter)]
    pub fn r(&self) -> Vec<f64> {
        self.r.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn u(&self) -> Vec<f64> {
        self.u.clone()
    }
}

/// λ₁ and `samples` points of the eigenfunction on the unit ball of ℝⁿ.
pub fn radial_profile_impl(n: usize, k: usize, s: f64, samples: usize) -> hesseig::error::Result<Profile> {
    let e = shoot_eigen(n, k, s, 1.0, 1e-9)?;
    let m = samples.max(2);
    let r: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let u = r.iter().map(|&x| e.profile.eval(x).0).collect();
    Ok(Profile { lambda1: e.lambda1, r, u })
}

#[wasm_bindgen]
pub fn radial_profile(n: usize, k: usize, s: f64, samples: usize) -> Result<Profile, JsError> {
    radial_profile_impl(n, k, s, samples).map_err(js_err)
}

/// Largest k with (x, y, λ₃) ∈ Γ_k, on a res × res grid over [−extent, extent]², rows from the top.
#[wasm_bindgen]
pub fn cone_map(lambda3: f64, extent: f64, res: usize) -> Vec<u8> {
    let step = 2.0 * extent / res.max(1) as f64;
    let mut out = Vec::with_capacity(res * res);
    for j in 0..res {
        let y = extent - (j as f64 + 0.5) * step;
        for i in 0..res {
            let x = -extent + (i as f64 + 0.5) * step;
            out.push(cone_classify(&[x, y, lambda3]).k_max as u8);
        }
    }
    out
}

#[wasm_bindgen]
pub struct DiskEigen {
    lambda: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl DiskEigen {
    #[wasm_bindgen(getter)]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[wasm_bindgen(getter)]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[wasm_bindgen(getter)]
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Row-major, NaN outside the disk.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}

/// Grid eigenpair on the unit disk with h = 1/cells; k ∈ {1, 2}.
pub fn disk_eigen_impl(k: usize, s: f64, delta: f64, cells: usize) -> hesseig::error::Result<DiskEigen> {
    let spec = ProblemSpec::new(2, k, s, delta, DomainDescriptor::Disk { radius: 1.0 }, 1.0 / cells.max(4) as f64);
    let (lambda, e) = find_lambda_delta(&spec)?;
    let f = e.field;
    let values = f.values.iter().zip(&f.inside).map(|(&v, &inside)| if inside { v } else { f64::NAN }).collect();
    Ok(DiskEigen { lambda, nx: f.nx, ny: f.ny, values })
}

#[wasm_bindgen]
pub fn disk_eigen(k: usize, s: f64, delta: f64, cells: usize) -> Result<DiskEigen, JsError> {
    disk_eigen_impl(k, s, delta, cells).map_err(js_err)
}
