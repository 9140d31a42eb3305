//! Runs python/smoke_test.py in an embedded interpreter with the module
//! registered from this build, so the script never picks up a stale library.

use std::ffi::CString;
use std::path::Path;

use keisler_lab::keisler_lab;
use pyo3::prelude::*;
use pyo3::types::PyDict;

#[test]
fn python_smoke_script_passes() {
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../python/smoke_test.py");
    let code = CString::new(std::fs::read_to_string(&script).unwrap()).unwrap();
    pyo3::append_to_inittab!(keisler_lab);
    Python::attach(|py| {
        let globals = PyDict::new(py);
        globals.set_item("__name__", "__main__").unwrap();
        globals.set_item("__file__", script.to_str().unwrap()).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.display(py);
            panic!("smoke script failed: {e}");
        }
    });
}
