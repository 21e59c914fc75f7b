import struct

import numpy as np
import pytest

from snlu import pipeline
from snlu.errors import CorruptFileError, VersionError
from snlu.gazetteer import Gazetteer
from snlu.text import RawQuery


class TestConfig:
    def test_rejects_bad_bias(self):
        with pytest.raises(ValueError):
            pipeline.PipelineConfig(bias_pct=1.0)

    def test_roundtrip(self):
        cfg = pipeline.PipelineConfig(tier2_threshold=0.9, seed=7, limit=100,
                                      category_model={"epochs": 2})
        cfg2 = pipeline.PipelineConfig.from_dict(cfg.to_dict())
        assert cfg2 == cfg

    def test_tiers_follow_ablation_switch(self):
        a, c, f = pipeline.PipelineConfig().tiers()
        assert (a.level, c.level, f.level) == (1, 2, 3)
        a, c, f = pipeline.PipelineConfig(use_tiered_ner=False).tiers()
        assert a.threshold == c.threshold == f.threshold == 1.0
        assert not f.allow_partial


class TestPreprocess:
    def test_substitution_on_and_off(self, small_data):
        ds, gaz = small_data
        ex = next(e for e in ds.examples if e.entities)
        cfg = pipeline.PipelineConfig()
        cat_toks, sub_toks = pipeline.preprocess_example(ex, gaz, cfg)
        assert any(t.startswith("<") for t in cat_toks)
        off = pipeline.PipelineConfig(use_tag_substitution=False)
        cat_raw, _ = pipeline.preprocess_example(ex, gaz, off)
        assert not any(t.startswith("<") for t in cat_raw)


class TestRunAndPersistence:
    def test_output_shape(self, small_data, small_bundle):
        ds, _ = small_data
        out = pipeline.run(small_bundle, ds.examples[0].raw)
        assert 0 <= out.category < ds.taxonomy.n_categories
        assert 0 <= out.subcategory < ds.taxonomy.n_subcategories
        assert out.subcategory_source in ("rule", "model")
        assert len(out.category_probs) == ds.taxonomy.n_categories
        assert sum(out.category_probs) == pytest.approx(1.0, abs=1e-9)
        for s in out.slots:
            assert ds.examples[0].raw.text[s.char_start:s.char_end] == s.surface

    def test_rules_short_circuit_model(self, small_data, small_bundle):
        ds, _ = small_data
        before = small_bundle.sub_model_calls
        rule_hit = 0
        for ex in ds.examples[:50]:
            if pipeline.run(small_bundle, ex.raw).subcategory_source == "rule":
                rule_hit += 1
        assert small_bundle.sub_model_calls - before == 50 - rule_hit

    def test_roundtrip_exact(self, tmp_path, small_data, small_bundle):
        ds, _ = small_data
        queries = [ex.raw for ex in ds.examples[:25]]
        before = [pipeline.run(small_bundle, q) for q in queries]
        p = tmp_path / "bundle.snlu"
        pipeline.save_bundle(small_bundle, p)
        loaded = pipeline.load_bundle(p)
        after = [pipeline.run(loaded, q) for q in queries]
        for a, b in zip(before, after):
            assert a.category == b.category
            assert a.category_probs == b.category_probs
            assert a.subcategory == b.subcategory
            assert a.subcategory_source == b.subcategory_source
            assert a.slots == b.slots

    def test_save_deterministic(self, tmp_path, small_bundle):
        p1, p2 = tmp_path / "a.snlu", tmp_path / "b.snlu"
        pipeline.save_bundle(small_bundle, p1)
        pipeline.save_bundle(small_bundle, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_loaded_bundle_preserves_artifacts(self, tmp_path, small_data,
                                               small_bundle):
        ds, gaz = small_data
        p = tmp_path / "bundle.snlu"
        pipeline.save_bundle(small_bundle, p)
        loaded = pipeline.load_bundle(p)
        assert loaded.taxonomy.category_names == ds.taxonomy.category_names
        assert loaded.taxonomy.subcategory_names == ds.taxonomy.subcategory_names
        assert loaded.gazetteer.entries == gaz.entries
        assert loaded.gazetteer.groups == gaz.groups
        assert loaded.rules == small_bundle.rules
        assert loaded.config == small_bundle.config
        for m1, m2 in ((loaded.category_model, small_bundle.category_model),
                       (loaded.subcategory_model, small_bundle.subcategory_model)):
            assert m1.vocab == m2.vocab
            assert m1.config == m2.config
            for k in m2.store.params:
                assert np.array_equal(m1.store[k].data, m2.store[k].data)


class TestCorruptBundles:
    @pytest.fixture()
    def saved(self, tmp_path, small_bundle):
        p = tmp_path / "bundle.snlu"
        pipeline.save_bundle(small_bundle, p)
        return p

    def test_bad_magic(self, saved):
        data = bytearray(saved.read_bytes())
        data[:4] = b"NOPE"
        saved.write_bytes(bytes(data))
        with pytest.raises(CorruptFileError, match="magic"):
            pipeline.load_bundle(saved)

    def test_flipped_byte_fails_checksum(self, saved):
        data = bytearray(saved.read_bytes())
        data[len(data) // 2] ^= 0xFF
        saved.write_bytes(bytes(data))
        with pytest.raises(CorruptFileError, match="checksum"):
            pipeline.load_bundle(saved)

    def test_truncated(self, saved):
        saved.write_bytes(saved.read_bytes()[:10])
        with pytest.raises(CorruptFileError):
            pipeline.load_bundle(saved)

    def test_unsupported_version(self, saved):
        data = bytearray(saved.read_bytes()[:-4])
        struct.pack_into("<I", data, 4, 99)
        data += struct.pack("<I", __import__("zlib").crc32(bytes(data)))
        saved.write_bytes(bytes(data))
        with pytest.raises(VersionError):
            pipeline.load_bundle(saved)


class TestAblationVariants:
    def test_no_substitution_still_reports_slots(self, small_data):
        """With substitution off, matched entities must still surface as
        slots while tokens stay unreplaced."""
        from snlu import datagen

        ds, gaz = small_data
        cfg = pipeline.PipelineConfig(
            use_tag_substitution=False,
            category_model={"epochs": 2}, subcategory_model={"epochs": 2})
        rules = datagen.starter_rules(ds.taxonomy)
        bundle = pipeline.train_pipeline(cfg, ds, gaz, rules)
        found = 0
        for ex in ds.examples[:40]:
            out = pipeline.run(bundle, ex.raw)
            found += len(out.slots)
            for s in out.slots:
                assert ex.raw.text[s.char_start:s.char_end] == s.surface
        assert found > 0


def test_load_artifacts(tmp_path, small_data):
    import json

    ds, gaz = small_data
    (tmp_path / "taxonomy.json").write_text(
        json.dumps(ds.taxonomy.to_dict()), encoding="utf-8")
    with open(tmp_path / "gazetteer.tsv", "w", encoding="utf-8") as f:
        for typ in sorted(gaz.entries):
            for phrase in sorted(gaz.entries[typ]):
                f.write(f"{' '.join(phrase)}\t{typ}\n")
    (tmp_path / "rules.json").write_text("[]", encoding="utf-8")
    cfg = {"seed": 3, "taxonomy": "taxonomy.json", "gazetteer": "gazetteer.tsv",
           "rules": "rules.json",
           "clubbing": {ds.taxonomy.category_names[0]: ["city"]}}
    (tmp_path / "config.json").write_text(json.dumps(cfg), encoding="utf-8")
    loaded_cfg, tax, g, rules, ds_path = pipeline.load_artifacts(
        tmp_path / "config.json")
    assert loaded_cfg.seed == 3 and ds_path is None and rules == []
    assert tax.category_names == ds.taxonomy.category_names
    assert g.entries == gaz.entries
    assert g.groups == {0: frozenset({"city"})}
