use std::ffi::CString;
use std::sync::Once;

use cogradio_py::cogradio_module;
use pyo3::prelude::*;

static INIT: Once = Once::new();

/// Runs Python source with the extension registered as `cogradio`.
fn run(src: &str) -> PyResult<()> {
    INIT.call_once(|| {
        pyo3::append_to_inittab!(cogradio_module);
        Python::initialize();
    });
    Python::attach(|py| {
        let code = CString::new(format!("import cogradio\n{src}")).unwrap();
        py.run(&code, None, None)
    })
}

#[test]
fn power_min_round_trip() {
    run(r#"
net = cogradio.Network(2, 1, 3)
ch = cogradio.sample(net, 3)
res = cogradio.power_min(net, ch, [0.5, 0.5])
assert res.optimal
assert all(s >= 0.5 - 1e-6 for s in cogradio.sinr(net, ch, res.beams))
assert all(x <= 5 + 1e-6 for x in cogradio.leakage(net, ch, res.beams))
assert abs(cogradio.weighted_power(net, res.beams) - res.objective) <= 1e-9 * res.objective
"#)
    .unwrap();
}

#[test]
fn sampling_matches_core() {
    let cfg = cogradio::network::NetworkConfig::new(1, 0, 2, 2);
    let ch = cogradio::network::sample_channels(&cfg, 0);
    let h = ch.hss[0][0][0];
    run(&format!(
        "h = cogradio.sample(cogradio.Network(1, 0, 2), 0).hss[0][0][0]\nassert h == complex({:?}, {:?}), h",
        h.re, h.im
    ))
    .unwrap();
}

#[test]
fn allocation_is_max_min_fair_for_symmetric_users() {
    run(r#"
import math
net = cogradio.EffectiveNetwork([[1.0, 1.0], [1.0, 1.0]])
a = cogradio.allocate(net, [0.0, 0.0], [1.0, 1.0], max_rounds=1)
x = math.log2(3.0) / 2
assert abs(a.rates[0] - x) < 1e-12 and abs(a.rates[1] - x) < 1e-12, a.rates
assert net.ugd_decodable(a.rates)
assert abs(net.group_rank(0, [0, 1], []) - math.log2(3.0)) < 1e-12
"#)
    .unwrap();
}

#[test]
fn invalid_input_raises_value_error() {
    run(r#"
for bad in (lambda: cogradio.Network(2, 1, 3, beta=[1.0, 2.0]),
            lambda: cogradio.power_min(cogradio.Network(2, 0, 2), cogradio.sample(cogradio.Network(2, 0, 2), 0), [1.0]),
            lambda: cogradio.EffectiveNetwork([[1.0, 2.0]]),
            lambda: cogradio.allocate(cogradio.EffectiveNetwork([[1.0]]), [0.0], [1.0], decoder="nope")):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
"#)
    .unwrap();
}
