import json

import numpy as np
import pytest

from ttkit.analysis import (
    ArchitectureSpec,
    LayerSpec,
    architecture_from_dict,
    compression_ratio,
    conv3d_tt_params,
    count_params,
    flops_conv3d,
    linear_tt_params,
    load_architecture,
    render_report_text,
    report_to_json,
    suggest_ranks_degenerate,
    suggest_ranks_modewise,
    suggest_uniform_rank,
)
from ttkit.errors import ConfigError, OrderTooLow, RankLengthMismatch
from ttkit.tensor import matrix_rank, t_modes_matricize
from ttkit.tensorize import Conv3dSpec

VIVA3_CONV2 = Conv3dSpec((3, 5, 5), 64, 256, (4, 4, 4), (8, 8, 4))


class TestConvTTParams:
    def test_order_one_collapse(self):
        spec = Conv3dSpec((2, 2, 2), 3, 5, (3,), (5,))
        # u*l*r + c_1*s_1*r with (u, l) = (4, 2)
        assert conv3d_tt_params(spec, (2,)) == 8 * 2 + 15 * 2

    def test_viva3_conv2_at_rank_16(self):
        assert conv3d_tt_params(VIVA3_CONV2, (16, 16, 16)) == 17840

    def test_all_ranks_one(self):
        assert conv3d_tt_params(VIVA3_CONV2, (1, 1, 1)) == 75 + 32 + 32 + 16 == 155

    def test_rank_length_checked(self):
        with pytest.raises(RankLengthMismatch):
            conv3d_tt_params(VIVA3_CONV2, (16, 16))

    def test_monotone_in_each_rank(self, rng):
        full = suggest_ranks_degenerate(VIVA3_CONV2.mode_sizes)
        top = conv3d_tt_params(VIVA3_CONV2, full)
        for _ in range(20):
            ranks = [int(rng.integers(1, f + 1)) for f in full]
            assert conv3d_tt_params(VIVA3_CONV2, ranks) <= top


class TestCompressionRatio:
    def test_uniform_ranks_collapse_bounds(self):
        rep = compression_ratio(VIVA3_CONV2, (16, 16, 16))
        assert rep.bound_lower == rep.ratio == rep.bound_upper

    def test_viva3_conv2_value(self):
        rep = compression_ratio(VIVA3_CONV2, (16, 16, 16))
        assert rep.original_params == 75 * 32 * 32 * 16 == 1228800
        assert rep.ratio == pytest.approx(1228800 / 17840)
        assert rep.ratio == pytest.approx(68.879, abs=1e-3)

    def test_mixed_ranks_respect_bounds(self):
        rep = compression_ratio(VIVA3_CONV2, (8, 16, 32))
        assert rep.bound_lower <= rep.ratio <= rep.bound_upper

    def test_bounds_on_random_rank_vectors(self, rng):
        for _ in range(100):
            d = int(rng.integers(1, 5))
            cf = [int(rng.integers(1, 7)) for _ in range(d)]
            sf = [int(rng.integers(1, 7)) for _ in range(d)]
            spec = Conv3dSpec(
                tuple(int(rng.integers(1, 6)) for _ in range(3)),
                int(np.prod(cf)), int(np.prod(sf)), cf, sf,
            )
            ranks = [int(rng.integers(1, 25)) for _ in range(d)]
            rep = compression_ratio(spec, ranks)
            assert rep.bound_lower <= rep.ratio <= rep.bound_upper


class TestRankRules:
    def test_degenerate_worked_example(self):
        assert suggest_ranks_degenerate((4, 5, 6, 7)) == (4, 20, 7)

    def test_degenerate_two_modes(self):
        assert suggest_ranks_degenerate((2, 2)) == (2,)

    def test_degenerate_conv_shape(self):
        assert suggest_ranks_degenerate((9, 16, 32, 16)) == (9, 144, 16)

    def test_degenerate_rejects_order_one(self):
        with pytest.raises(OrderTooLow):
            suggest_ranks_degenerate((5,))

    def test_modewise_examples(self):
        assert suggest_ranks_modewise((9, 16, 16, 16)) == (9, 16, 16, 16)
        assert suggest_ranks_modewise((9, 16, 32, 16)) == (9, 16, 32, 16)
        assert suggest_ranks_modewise((4, 5, 6, 7)) == (4, 5, 6, 7)

    def test_modewise_clamps_to_complement(self):
        assert suggest_ranks_modewise((100, 2, 3)) == (6, 2, 3)

    def test_uniform_min_channel(self):
        assert suggest_uniform_rank((75, 32, 32, 16), "min_channel") == 16

    def test_uniform_most_frequent(self):
        assert suggest_uniform_rank((9, 16, 16, 16), "most_frequent") == 16

    def test_uniform_agrees_when_all_equal(self):
        assert suggest_uniform_rank((4, 4, 4), "min_channel") == 4
        assert suggest_uniform_rank((4, 4, 4), "most_frequent") == 4

    def test_degenerate_matches_matricization_rank(self, rng):
        for _ in range(6):
            d = int(rng.integers(2, 5))
            shape = tuple(int(rng.integers(2, 7)) for _ in range(d))
            if np.prod(shape) > 2048:
                continue
            x = rng.standard_normal(shape)
            want = suggest_ranks_degenerate(shape)
            got = tuple(
                matrix_rank(t_modes_matricize(x, list(range(q + 1))))
                for q in range(d - 1)
            )
            assert got == want


class TestFlops:
    def test_worked_example(self):
        spec = Conv3dSpec((3, 3, 3), 16, 16, (4, 4), (4, 4))
        dense, overhead = flops_conv3d(spec, (4, 4), (8, 8, 8))
        assert dense == 512 * 256 * 28 == 3670016
        assert overhead == pytest.approx(27 * 256 * (4 + 16.0 / 16.0))
        assert overhead == pytest.approx(34560)

    def test_rank_one_collapse(self):
        spec = Conv3dSpec((3, 3, 3), 16, 16, (4, 4), (4, 4))
        _, overhead = flops_conv3d(spec, (1, 1), (8, 8, 8))
        assert overhead == pytest.approx(27 * 256 * (1 + 1.0 / 16.0))

    def test_overhead_monotone_in_rank(self):
        spec = Conv3dSpec((3, 5, 5), 32, 32, (4, 8), (8, 4))
        values = [flops_conv3d(spec, (r, r), (8, 8, 8))[1] for r in range(1, 30)]
        assert all(a <= b for a, b in zip(values, values[1:]))


class TestLinearTTParams:
    def test_two_mode_formula(self):
        # modes (a, b) with one link rank r cost r*(a+b)
        assert linear_tt_params((1, 7), (5, 1), (3,)) == 3 * (5 + 7)

    def test_matches_dense_when_rank_spans(self):
        assert linear_tt_params((4,), (6,), ()) == 24


class TestCountParams:
    def test_single_dense_linear(self):
        arch = ArchitectureSpec("tiny", (LayerSpec(kind="linear", in_dim=128, out_dim=10),))
        rep = count_params(arch)
        assert rep.whole_original == rep.whole_tt == 1280
        assert rep.ratio == 1.0

    def test_pool_free_conv_subtotals(self):
        doc = {
            "name": "demo",
            "layers": [
                {"kind": "conv3d", "filter": [3, 5, 5], "in": 64, "out": 256,
                 "tt": {"in_factors": [4, 4, 4], "out_factors": [8, 8, 4],
                        "ranks": [16, 16, 16]}},
                {"kind": "pool"},
                {"kind": "linear", "in": 128, "out": 10},
            ],
        }
        rep = count_params(architecture_from_dict(doc))
        assert rep.conv_original == 1228800
        assert rep.conv_tt == 17840
        assert rep.whole_original == 1228800 + 1280
        assert rep.whole_tt == 17840 + 1280

    def test_conv2d_counts_as_unit_depth(self):
        doc = {
            "name": "flat",
            "layers": [
                {"kind": "conv2d", "filter": [3, 3], "in": 64, "out": 64,
                 "tt": {"in_factors": [4, 4, 4], "out_factors": [4, 4, 4],
                        "ranks": [9, 16, 16]}},
            ],
        }
        rep = count_params(architecture_from_dict(doc))
        assert rep.whole_original == 9 * 64 * 64
        # square 3x3 filter factors as (3, 3), leading mode 9
        assert rep.whole_tt == 9 * 9 + 16 * 9 * 16 + 16 * 16 * 16 + 16 * 16

    def test_auto_rank_resolution(self):
        doc = {
            "name": "auto",
            "layers": [
                {"kind": "conv3d", "filter": [3, 5, 5], "in": 64, "out": 256,
                 "tt": {"in_factors": [4, 4, 4], "out_factors": [8, 8, 4],
                        "ranks": "auto-min"}},
            ],
        }
        rep = count_params(architecture_from_dict(doc))
        # shape (75, 32, 32, 16): min channel rank 16 on every link
        assert rep.whole_tt == 17840


class TestConfigSchema:
    def test_unknown_top_level_field(self):
        with pytest.raises(ConfigError, match="unknown field"):
            architecture_from_dict({"name": "x", "layers": [{"kind": "pool"}], "extra": 1})

    def test_unknown_layer_field(self):
        with pytest.raises(ConfigError, match=r"layers\[0\]"):
            architecture_from_dict(
                {"name": "x", "layers": [{"kind": "linear", "in": 2, "out": 2, "bias": True}]}
            )

    def test_empty_layers_rejected(self):
        with pytest.raises(ConfigError):
            architecture_from_dict({"name": "x", "layers": []})

    def test_factor_products_checked(self):
        with pytest.raises(ConfigError, match="multiply"):
            architecture_from_dict({
                "name": "x",
                "layers": [{"kind": "linear", "in": 6, "out": 6,
                            "tt": {"in_factors": [2, 2], "out_factors": [2, 3],
                                   "ranks": [2]}}],
            })

    def test_rank_count_checked(self):
        with pytest.raises(ConfigError, match="ranks"):
            architecture_from_dict({
                "name": "x",
                "layers": [{"kind": "conv3d", "filter": [3, 3, 3], "in": 4, "out": 4,
                            "tt": {"in_factors": [2, 2], "out_factors": [2, 2],
                                   "ranks": [2, 2, 2]}}],
            })

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"name": "x",\n  "layers": [}\n')
        with pytest.raises(ConfigError, match="line 2"):
            load_architecture(path)

    def test_filter_only_on_conv(self):
        with pytest.raises(ConfigError, match="filter"):
            architecture_from_dict({
                "name": "x",
                "layers": [{"kind": "linear", "in": 2, "out": 2, "filter": [3, 3]}],
            })


class TestRendering:
    def test_text_report_has_ratio_line(self):
        doc = {"name": "demo", "layers": [{"kind": "linear", "in": 10, "out": 10}]}
        text = render_report_text(count_params(architecture_from_dict(doc)))
        assert "compression ratio: 1.0x" in text
        assert "demo" in text

    def test_json_report_roundtrips(self):
        doc = {"name": "demo", "layers": [{"kind": "linear", "in": 10, "out": 10}]}
        blob = report_to_json(count_params(architecture_from_dict(doc)))
        parsed = json.loads(json.dumps(blob))
        assert parsed["whole"] == {"original": 100, "compressed": 100}
        assert parsed["ratio"] == 1.0
