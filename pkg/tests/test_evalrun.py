import pytest

from snlu import evalrun
from snlu.pipeline import PipelineConfig


class TestEvaluateBundle:
    def test_metrics_in_range(self, small_data, small_bundle):
        ds, _ = small_data
        im, sm, cat_acc = evalrun.evaluate_bundle(small_bundle, ds.examples[:60])
        for v in (im.precision, im.recall, im.f1, im.accuracy,
                  sm.precision, sm.recall, sm.f1, cat_acc):
            assert 0.0 <= v <= 1.0

    def test_metrics_row_keys(self, small_data, small_bundle):
        ds, _ = small_data
        im, sm, _ = evalrun.evaluate_bundle(small_bundle, ds.examples[:30])
        row = evalrun.metrics_row("final", im, sm)
        assert row["variant"] == "final"
        assert set(row) == {"variant", "int_p", "int_r", "int_f1", "int_acc",
                            "slot_p", "slot_r", "slot_f1"}


class TestSweepHelpers:
    def test_sweep_summary(self):
        rows = [{"bias": 0.0, "seed": 0, "accuracy": 0.8},
                {"bias": 0.0, "seed": 1, "accuracy": 0.9},
                {"bias": 0.1, "seed": 0, "accuracy": 1.0}]
        summ = evalrun.sweep_summary(rows)
        assert summ[0.0][0] == pytest.approx(0.85)
        assert summ[0.0][1] == pytest.approx(0.05)
        assert summ[0.1] == (1.0, 0.0)

    def test_bias_sweep_validates_values(self, small_data):
        ds, gaz = small_data
        with pytest.raises(ValueError):
            evalrun.bias_sweep(PipelineConfig(), ds, gaz, [], [1.5], [0])


class TestAblationHelpers:
    def test_ablation_config_switches(self):
        cfg = PipelineConfig()
        assert not evalrun.ablation_config(cfg, "no_tiered_ner").use_tiered_ner
        assert not evalrun.ablation_config(
            cfg, "no_tag_substitution").use_tag_substitution
        final = evalrun.ablation_config(cfg, "final")
        assert final.use_tiered_ner and final.use_tag_substitution
        with pytest.raises(ValueError):
            evalrun.ablation_config(cfg, "bogus")

    def test_ablation_medians(self):
        rows = [{"variant": "final", "seed": s, "int_acc": v, "slot_f1": v}
                for s, v in ((0, 0.5), (1, 0.9), (2, 0.7))]
        meds = evalrun.ablation_medians(rows)
        assert meds["final"]["int_acc"] == pytest.approx(0.7)
        assert "no_tiered_ner" not in meds
