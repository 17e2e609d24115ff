import numpy as np
import pytest

from bpfprice.config import InitialDataSpec, apply_overrides, load_config, parse_config, to_text
from bpfprice.errors import ConfigError
from bpfprice.hu import Scheme

HU = """\
model = hu
epsilon = 0.05
T = 1
init.f.kind = gaussian_bump
init.f.center = -0.3
init.f.width = 0.2
init.g.kind = gaussian_bump
init.g.center = 0.3
init.g.width = 0.2
"""

BPF = """\
model = bpf
n_cells = 400
k = 10
a = {a}
T = 0.5
init.f.kind = gaussian_bump
init.f.center = -0.2
init.f.width = 0.1
init.g.kind = gaussian_bump
init.g.center = 0.2
init.g.width = 0.1
"""


def test_minimal_hu_config():
    cfg = parse_config(HU)
    assert cfg.trading_intensity == pytest.approx(20.0)
    assert cfg.eps == 0.05
    assert cfg.scheme is Scheme.PAPER_CENTRAL
    assert cfg.grid.n_cells == 400 and cfg.D == 1.0
    assert cfg.effective_snapshots == (0.0, 1.0)


def test_bpf_a_nodes():
    cfg = parse_config(BPF.format(a=0.01))
    assert cfg.grid.dx == 0.005
    assert cfg.grid.nodes_for(cfg.a) == 2
    assert cfg.trading_intensity == pytest.approx(0.1)
    assert cfg.D == 0.5 and cfg.bpf_params().sigma == pytest.approx(1.0)


def test_bpf_rejects_non_multiple_a_with_line_number():
    with pytest.raises(ConfigError, match="a must be an integer multiple of dx") as exc:
        parse_config(BPF.format(a=0.007))
    assert exc.value.lineno == 4
    assert str(exc.value).startswith("line 4:")


@pytest.mark.parametrize("text, line, pattern", [
    (HU + "bogus = 1\n", 10, "unknown key"),
    (HU + "epsilon = 0.1\n", 10, "duplicate"),
    (HU.replace("epsilon = 0.05", "k = 3"), 2, "bpf parameter"),
    (HU.replace("epsilon = 0.05", "epsilon = -1"), 2, "epsilon must be > 0"),
    (HU + "c = 10\n", 10, "c must equal 1/epsilon"),
    (HU + "snapshot_times = 0, 2\n", 10, "outside"),
    (HU + "n_cells = two\n", 10, "bad value"),
    (HU.replace("model = hu", "model = kinetic"), 1, "unknown model"),
    (HU + "scheme = upwind\n", 10, "bad value"),
    (HU + "just text\n", 10, "key = value"),
    (BPF.format(a=0.01) + "c = 5\n", 12, "does not match"),
    (BPF.format(a=0.01) + "epsilon = 0.1\n", 12, "not a bpf parameter"),
    (HU + "init.f.amplitude = -1\n", 4, "must be >= 0"),
    (HU + "init.f.colour = 3\n", 10, "unknown parameter"),
])
def test_errors_carry_line_numbers(text, line, pattern):
    with pytest.raises(ConfigError, match=pattern) as exc:
        parse_config(text)
    assert exc.value.lineno == line


def test_missing_required_keys():
    with pytest.raises(ConfigError, match="'T'"):
        parse_config(HU.replace("T = 1\n", ""))
    with pytest.raises(ConfigError, match="init.g.kind"):
        parse_config("\n".join(l for l in HU.splitlines() if not l.startswith("init.g")))
    with pytest.raises(ConfigError, match="needs epsilon"):
        parse_config(HU.replace("epsilon = 0.05\n", ""))
    with pytest.raises(ConfigError, match="needs a"):
        parse_config(BPF.format(a=0.01).replace("a = 0.01\n", ""))


def test_burgers_needs_unit_total_density():
    with pytest.raises(ConfigError, match="f_I \\+ g_I == 1"):
        parse_config(HU.replace("model = hu", "model = burgers"))
    text = """model = burgers
epsilon = 0.1
T = 1
init.f.kind = tanh_profile
init.f.offset = 0.5
init.f.amplitude = -0.45
init.f.steepness = 4
init.g.kind = tanh_profile
init.g.offset = 0.5
init.g.amplitude = 0.45
init.g.steepness = 4
"""
    assert parse_config(text).freeze_h is True
    with pytest.raises(ConfigError, match="freeze_h"):
        parse_config(text + "freeze_h = false\n")


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\n" + HU.replace("epsilon = 0.05", "epsilon = 0.05  # c = 20"))
    assert cfg.eps == 0.05


def test_sigma_and_diffusion():
    cfg = parse_config(HU + "sigma = 0.1\n")
    assert cfg.D == pytest.approx(0.005)
    with pytest.raises(ConfigError, match="sigma\\^2 / 2"):
        parse_config(HU + "sigma = 0.1\ndiffusion = 1\n")
    assert parse_config(HU + "sigma = 0.1\ndiffusion = 0.005\n").D == 0.005


def test_overrides_and_round_trip():
    text = apply_overrides(HU, ["epsilon=0.1", "n_cells = 100", "snapshot_times=0,0.5,1"])
    cfg = parse_config(text)
    assert cfg.eps == 0.1 and cfg.n_cells == 100
    assert cfg.snapshot_times == (0.0, 0.5, 1.0)
    again = parse_config(to_text(cfg))
    assert to_text(again) == to_text(cfg)
    assert np.array_equal(again.initial_fg()[0], cfg.initial_fg()[0])
    with pytest.raises(ConfigError):
        apply_overrides(HU, ["epsilon"])


def test_initial_data_kinds(tmp_path):
    x = np.linspace(-1, 1, 21)
    s = InitialDataSpec("bump_sum", {"amplitudes": "1, 2", "centers": "-0.5, 0.5", "widths": "0.1, 0.2"})
    expected = np.exp(-(((x + 0.5) / 0.1) ** 2)) + 2 * np.exp(-(((x - 0.5) / 0.2) ** 2))
    assert np.allclose(s.sample(x), expected, rtol=1e-15)
    t = InitialDataSpec("tanh_profile", {"offset": "0.5", "amplitude": "0.5", "steepness": "3",
                                         "envelope_offset": "0.2", "envelope_amplitude": "1",
                                         "envelope_width": "0.5"})
    assert np.allclose(t.sample(x), (0.5 + 0.5 * np.tanh(3 * x)) * (0.2 + np.exp(-((x / 0.5) ** 2))))
    path = tmp_path / "profile.csv"
    path.write_text("x,value\n-1,0\n0,1\n1,0\n")
    fs = InitialDataSpec("file", {"path": str(path)})
    assert np.allclose(fs.sample(x), 1 - np.abs(x))
    with pytest.raises(ConfigError, match="does not cover"):
        fs.sample(np.linspace(-2, 2, 5))
    with pytest.raises(ConfigError, match="cannot read"):
        InitialDataSpec("file", {"path": str(tmp_path / "missing.csv")}).sample(x)
    with pytest.raises(ConfigError):
        InitialDataSpec("square", {})
    with pytest.raises(ConfigError, match="equal nonzero length"):
        InitialDataSpec("bump_sum", {"amplitudes": "1", "centers": "0, 1", "widths": "1"}).sample(x)


def test_load_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(HU)
    assert load_config(p).eps == 0.05
