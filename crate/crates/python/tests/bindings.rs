use pyo3::ffi::c_str;
use pyo3::prelude::*;

fn run(code: &std::ffi::CStr) {
    pyo3::append_to_inittab!(recoil);
    Python::attach(|py| {
        if let Err(e) = py.run(code, None, None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

use ::recoil::recoil;

#[test]
fn module_round_trip() {
    run(c_str!(
        r#"
import recoil
cfg = recoil.InterferometerConfig()
world = recoil.WorldTruth(noise_amplitude=0.0)
entries = []
for c in cfg.four_spectrum_set():
    s = recoil.simulate_spectrum(world, c)
    f = recoil.fit_central_fringe(s)
    assert f.converged
    assert abs(f.center.value - recoil.true_center(world, c)) < 1e-6
    entries.append((c, f))
h = recoil.reduce_set(entries)
assert abs(h.value / world.h_over_m_true - 1) < 1e-12, h.value
a = recoil.alpha_from_h_over_m(h)
assert abs(a.value - 137.036) < 1e-2
s = recoil.budget_summary()
assert round(s["total"], 1) == 6.6
try:
    recoil.Quantity(1.0, -1.0)
    raise SystemExit("negative sigma accepted")
except recoil.RecoilError:
    pass
"#
    ));
}
