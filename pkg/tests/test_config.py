import pytest

from glumarker.config import PipelineConfig
from glumarker.errors import ConfigError


def test_defaults():
    cfg = PipelineConfig.load()
    assert cfg.binning.width == 70
    assert cfg.architecture.branch_c == (32, 16)
    assert cfg.enabled_models() == ["glumarker", "mlp", "naive_bayes", "linear_svc"]
    assert cfg.generator.n_patients == 30


def test_seed_propagates():
    cfg = PipelineConfig.load(overrides=["seed=9"])
    assert cfg.generator.seed == 9 and cfg.train_config("mlp").seed == 9


def test_scientific_notation_strings_coerced():
    cfg = PipelineConfig.load(overrides=["models.glumarker.train.learning_rate=1e-2"])
    assert cfg.train_config("glumarker").learning_rate == 0.01


@pytest.mark.parametrize("item", ["models.mlp.train.epochs=2.5", "models.mlp.train.epochs=true",
                                  "models.mlp.train.learning_rate=fast"])
def test_bad_numbers(item):
    with pytest.raises(ConfigError):
        PipelineConfig.load(overrides=[item])


def test_binning_override_merges_with_default():
    cfg = PipelineConfig.load(overrides=["binning={total_meal_size: {edges: [100]}}"])
    s = cfg.binning.schemes["total_meal_size"]
    assert s.has_no_entry_bin and s.edges == (100.0,)
    assert cfg.binning.width == 70 - 2 * 2


def test_unknown_keys(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("models: {mlp: {hiden: [3]}}\n")
    with pytest.raises(ConfigError, match="models.mlp.hiden"):
        PipelineConfig.load(p)
    with pytest.raises(ConfigError, match="unknown feature"):
        PipelineConfig.load(overrides=["binning={glucose: {edges: [1]}}"])


def test_dump_round_trip(tmp_path):
    cfg = PipelineConfig.load(overrides=["seed=4", "out_dir=elsewhere"])
    p = tmp_path / "c.yaml"
    p.write_text(cfg.dump())
    assert "elsewhere" not in p.read_text()
    back = PipelineConfig.load(p)
    assert back.seed == 4 and back.raw["models"] == cfg.raw["models"]
