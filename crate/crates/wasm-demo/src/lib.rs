//! WebAssembly bindings for the static demo page in `www/`.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js_err(e: sst_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Flat row-major table, 9 columns per row: x, SF, SS, TF, ST, SF', SS', TF', ST'.
#[wasm_bindgen(js_name = activationTable)]
pub fn activation_table(xmin: f64, xmax: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    demo::curves(xmin, xmax, steps).map_err(js_err)
}

#[wasm_bindgen]
pub struct GateTrace(demo::Trajectory);

#[wasm_bindgen]
impl GateTrace {
    #[wasm_bindgen(getter)]
    pub fn input(&self) -> Vec<f64> {
        self.0.input.clone()
    }

    #[wasm_bindgen(getter, js_name = classicalZ)]
    pub fn classical_z(&self) -> Vec<f64> {
        self.0.classical_z.clone()
    }

    #[wasm_bindgen(getter, js_name = sstZ)]
    pub fn sst_z(&self) -> Vec<f64> {
        self.0.sst_z.clone()
    }

    #[wasm_bindgen(getter, js_name = classicalH)]
    pub fn classical_h(&self) -> Vec<f64> {
        self.0.classical_h.clone()
    }

    #[wasm_bindgen(getter, js_name = sstH)]
    pub fn sst_h(&self) -> Vec<f64> {
        self.0.sst_h.clone()
    }
}

#[wasm_bindgen(js_name = gateTrace)]
pub fn gate_trace(seed: u32, len: usize, zero_fraction: f64) -> Result<GateTrace, JsError> {
    demo::gate_trajectory(u64::from(seed), len, zero_fraction)
        .map(GateTrace)
        .map_err(js_err)
}

#[wasm_bindgen]
pub struct Roc(demo::RocRun);

#[wasm_bindgen]
impl Roc {
    #[wasm_bindgen(getter)]
    pub fn fpr(&self) -> Vec<f64> {
        self.0.fpr.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn tpr(&self) -> Vec<f64> {
        self.0.tpr.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn auc(&self) -> f64 {
        self.0.auc
    }

    #[wasm_bindgen(getter)]
    pub fn accuracy(&self) -> f64 {
        self.0.accuracy
    }
}

#[wasm_bindgen(js_name = trainRoc)]
pub fn train_roc(sst: bool, seed: u32, epochs: usize, sparsity: f64) -> Result<Roc, JsError> {
    demo::train_roc(sst, u64::from(seed), epochs, sparsity)
        .map(Roc)
        .map_err(js_err)
}
