import numpy as np
import pytest

from speccomp.compression import preset_state
from speccomp.errors import StateFormatError
from speccomp.state_io import (
    load_head,
    load_state,
    parse_params_csv,
    save_head,
    save_state,
    state_to_csv,
)


@pytest.mark.parametrize("preset", ["log", "offset-log", "cube-root", "power-law", "drc"])
@pytest.mark.parametrize("mode", ["static", "cd", "mr-cd"])
def test_binary_roundtrip(tmp_path, preset, mode):
    state = preset_state(preset, mode, 33, seed=5)
    path = tmp_path / "state.bin"
    save_state(state, path, config_echo="[example]\nkey = 1\n")
    loaded, echo = load_state(path)
    assert echo == "[example]\nkey = 1\n"
    assert loaded.kind == state.kind
    assert loaded.mode == state.mode
    assert loaded.input_floor == state.input_floor
    assert set(loaded.params) == set(state.params)
    for name in state.params:
        np.testing.assert_array_equal(loaded.params[name], state.params[name])


def test_identical_states_serialize_identically(tmp_path):
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    save_state(preset_state("drc", "mr-cd", 17), a, "echo")
    save_state(preset_state("drc", "mr-cd", 17), b, "echo")
    assert a.read_bytes() == b.read_bytes()


class TestCorruptStateFiles:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        save_state(preset_state("cube-root", "cd", 4), path)
        data = bytearray(path.read_bytes())
        data[:4] = b"XXXX"
        path.write_bytes(bytes(data))
        with pytest.raises(StateFormatError, match="magic"):
            load_state(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "trunc.bin"
        save_state(preset_state("cube-root", "cd", 4), path)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(StateFormatError, match="truncated"):
            load_state(path)

    def test_trailing_garbage(self, tmp_path):
        path = tmp_path / "trail.bin"
        save_state(preset_state("cube-root", "cd", 4), path)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(StateFormatError, match="trailing"):
            load_state(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "ver.bin"
        save_state(preset_state("cube-root", "cd", 4), path)
        data = bytearray(path.read_bytes())
        data[4] = 99
        path.write_bytes(bytes(data))
        with pytest.raises(StateFormatError, match="version"):
            load_state(path)


class TestCsvDump:
    def test_cd_cube_root_layout(self):
        text = state_to_csv(preset_state("cube-root", "cd", 257))
        lines = text.strip().splitlines()
        assert lines[0] == "channel,alpha"
        assert len(lines) == 258
        assert lines[1] == "0,3.0"
        assert lines[-1].startswith("256,")

    def test_mr_drc_layout(self):
        text = state_to_csv(preset_state("drc", "mr-cd", 3))
        lines = text.strip().splitlines()
        assert lines[0] == "channel,delta_0,delta_1,delta_2,r_0,r_1,r_2"
        assert lines[1] == "0,1.0,1.5,2.0,0.0,0.5,1.0"

    def test_roundtrip_preserves_float32_values(self):
        state = preset_state("offset-log", "mr-cd", 19, seed=3)
        columns = parse_params_csv(state_to_csv(state))
        for i in range(3):
            np.testing.assert_array_equal(
                columns[f"beta_{i}"], state.params["beta"][i].astype(np.float32)
            )

    def test_static_dump_single_row(self):
        text = state_to_csv(preset_state("drc", "static", 257))
        lines = text.strip().splitlines()
        assert len(lines) == 2
        assert lines[1] == "0,2.0,0.5"

    def test_parse_rejects_garbage(self):
        with pytest.raises(StateFormatError):
            parse_params_csv("")
        with pytest.raises(StateFormatError):
            parse_params_csv("foo,bar\n1,2\n")


class TestHeadIO:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        projection = rng.standard_normal((10, 4))
        weights = rng.standard_normal((4, 3))
        path = tmp_path / "head.bin"
        save_head(projection, weights, path, config_echo="cfg")
        p, w, echo = load_head(path)
        np.testing.assert_array_equal(p, projection)
        np.testing.assert_array_equal(w, weights)
        assert echo == "cfg"

    def test_shape_mismatch_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            save_head(np.zeros((10, 4)), np.zeros((5, 3)), tmp_path / "h.bin")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "h.bin"
        save_head(np.zeros((2, 2)), np.zeros((2, 2)), path)
        data = bytearray(path.read_bytes())
        data[:4] = b"NOPE"
        path.write_bytes(bytes(data))
        with pytest.raises(StateFormatError):
            load_head(path)
