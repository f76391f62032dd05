import math
import warnings

import mpmath
import pytest

from monotone_bandits.env import InstanceSpec
from monotone_bandits.experiments import (
    CSV_HEADER,
    AnalysisError,
    CsvFormatError,
    ExperimentConfig,
    RegretTable,
    episode_seed,
    fit_scaling_exponent,
    monte_carlo,
    read_csv,
    read_log,
    se_path_for,
    theorem1_ceiling,
    write_csv,
    write_log,
)
from monotone_bandits.policies import ConfigurationError

SMALL = dict(horizons=(100, 400), replications=6, sigma=0.1, master_seed=3)


def _table(horizons, fn, policy="alg1"):
    return RegretTable(tuple(horizons), {policy: tuple(fn(T) for T in horizons)})


class TestScaling:
    def test_exact_power_law(self):
        t = _table([1000, 4000, 16000, 64000], lambda T: T ** 0.75)
        assert fit_scaling_exponent(t, "alg1") == pytest.approx(0.75, abs=1e-12)

    def test_constant_factor(self):
        t = _table([1000, 2000, 8000], lambda T: 5 * T ** (2 / 3))
        assert fit_scaling_exponent(t, "alg1") == pytest.approx(2 / 3, abs=1e-9)

    def test_excludes_nonpositive_with_warning(self):
        t = RegretTable((10, 20, 40, 80), {"p": (0.0, 20.0, 40.0, 80.0)})
        with pytest.warns(RuntimeWarning):
            assert fit_scaling_exponent(t, "p") == pytest.approx(1.0, abs=1e-12)

    def test_too_few_points(self):
        t = RegretTable((10, 20, 40), {"p": (1.0, -1.0, 2.0)})
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(AnalysisError):
                fit_scaling_exponent(t, "p")


class TestCeiling:
    def test_small(self):
        assert theorem1_ceiling(16, 1.0, 0.0) == 68.0

    def test_noise_term(self):
        mpmath.mp.dps = 40
        expected = (8.5 + 4 * mpmath.sqrt(3) * mpmath.mpf("0.1") * mpmath.sqrt(mpmath.log(10000))) * 1000
        assert theorem1_ceiling(10000, 1.0, 0.1) == pytest.approx(float(expected), rel=1e-13)

    @pytest.mark.parametrize("T", [16, 1000, 12345])
    def test_constant_only(self, T):
        assert theorem1_ceiling(T, 0.0, 0.0) == pytest.approx(5.5 * T ** 0.75, rel=1e-15)

    def test_regime(self):
        with pytest.raises(ConfigurationError):
            theorem1_ceiling(15, 1.0, 0.1)


class TestCsv:
    def test_header_and_line_count(self, tmp_path):
        t = RegretTable((1000,), {p: (1.5,) for p in ("alg1", "ucb", "ucb-mono", "ucb-deflate")})
        path = tmp_path / "data.csv"
        write_csv(t, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "T,alg1_reg,UCB_reg,UCB_inc_reg,UCB_def_reg" == CSV_HEADER
        assert len(lines) == 2
        assert path.read_bytes().count(b"\n") == 2

    def test_roundtrip_with_se(self, tmp_path):
        t = RegretTable((1000, 11000),
                        {"alg1": (0.1 + 0.2, 1 / 3), "ucb": (1e-300, 12345.678),
                         "ucb-mono": (2.0, 3.0), "ucb-deflate": (math.pi, math.e)},
                        {"alg1": (0.5, 0.25), "ucb": (0.0, 1.0),
                         "ucb-mono": (1.0, 1.0), "ucb-deflate": (0.1, 0.2)})
        path = tmp_path / "t.csv"
        write_csv(t, path)
        assert se_path_for(path).exists()
        assert read_csv(path) == t

    def test_roundtrip_subset_and_extra(self, tmp_path):
        t = RegretTable((100, 200), {"alg1": (1.0, 2.0), "oracle": (0.0, 0.0)})
        path = tmp_path / "t.csv"
        write_csv(t, path)
        assert path.read_text().splitlines()[0] == CSV_HEADER + ",oracle_reg"
        assert read_csv(path) == t

    @pytest.mark.parametrize("text,lineno", [
        ("", 1),
        ("X,alg1_reg\n1,2\n", 1),
        ("T,alg1_reg\n1000,abc\n", 2),
        ("T,alg1_reg\n1000,1.0\n2000\n", 3),
        ("T,weird\n1,2\n", 1),
    ])
    def test_parse_errors(self, tmp_path, text, lineno):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(CsvFormatError) as err:
            read_csv(path)
        assert err.value.lineno == lineno


class TestConfig:
    def test_alg1_regime(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(horizons=(8, 100)).validate()

    def test_alg1_regime_lifted_by_overrides(self):
        ExperimentConfig(horizons=(8,), overrides={"alg1": {"K": 2, "m": 2}}).validate()

    @pytest.mark.parametrize("kw", [dict(horizons=()), dict(replications=0), dict(sigma=-1.0),
                                    dict(policies=()), dict(policies=("alg1", "alg1")),
                                    dict(policies=("nope",))])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(**kw).validate()

    def test_episode_seed_distinct(self):
        seeds = {episode_seed(1, T, r) for T in (1000, 2000) for r in range(50)}
        assert len(seeds) == 100


class TestMonteCarlo:
    def test_oracle_zero_regret(self):
        cfg = ExperimentConfig(horizons=(50, 100, 200), replications=1, sigma=0.0,
                               policies=("oracle",))
        t = monte_carlo(cfg)
        assert t.mean["oracle"] == (0.0, 0.0, 0.0)

    def test_deterministic(self):
        cfg = ExperimentConfig(**SMALL)
        assert monte_carlo(cfg) == monte_carlo(cfg)

    def test_parallel_matches_serial(self):
        cfg = ExperimentConfig(**SMALL)
        assert monte_carlo(cfg, parallelism=3) == monte_carlo(cfg, parallelism=1)

    def test_roster_isolation(self):
        full = monte_carlo(ExperimentConfig(**SMALL))
        for p in ("alg1", "ucb-mono"):
            alone = monte_carlo(ExperimentConfig(**SMALL, policies=(p,)))
            assert alone.mean[p] == full.mean[p]
            assert alone.se[p] == full.se[p]

    def test_means_bounded(self):
        t = monte_carlo(ExperimentConfig(**SMALL))
        for p in t.policies:
            for T, R in zip(t.horizons, t.mean[p]):
                assert 0.0 <= R <= T

    def test_records_and_log(self, tmp_path):
        cfg = ExperimentConfig(**SMALL)
        t = monte_carlo(cfg)
        assert len(t.records) == len(cfg.horizons) * cfg.replications * len(cfg.policies)
        path = tmp_path / "episodes.jsonl"
        write_log(t.records, path)
        back = read_log(path)
        assert back == t.records
        assert {e["family"] for e in back} == {"random-peak"}

    def test_shared_instance_within_replication(self):
        t = monte_carlo(ExperimentConfig(**SMALL))
        by_key = {}
        for e in t.records:
            by_key.setdefault((e["T"], e["replication"]), set()).add(e["instance"])
        assert all(len(v) == 1 for v in by_key.values())

    def test_checkpoint_resume(self, tmp_path):
        cfg = ExperimentConfig(**SMALL)
        first = monte_carlo(cfg, checkpoint_dir=tmp_path)
        files = sorted(tmp_path.glob("*.jsonl"))
        assert len(files) == 2
        stamp = [f.stat().st_mtime_ns for f in files]
        calls = []
        again = monte_carlo(cfg, checkpoint_dir=tmp_path, progress=calls.append)
        assert again == first
        assert calls == []
        assert [f.stat().st_mtime_ns for f in files] == stamp

    def test_partial_checkpoint_is_recomputed(self, tmp_path):
        cfg = ExperimentConfig(**SMALL)
        first = monte_carlo(cfg, checkpoint_dir=tmp_path)
        victim = sorted(tmp_path.glob("*.jsonl"))[0]
        victim.write_text(victim.read_text().splitlines()[0] + "\n")
        calls = []
        assert monte_carlo(cfg, checkpoint_dir=tmp_path, progress=calls.append) == first
        assert len(calls) == 1

    def test_fixed_instance_family(self):
        cfg = ExperimentConfig(horizons=(64,), replications=3, sigma=0.0,
                               instance=InstanceSpec("prop1", (1,)),
                               policies=("alg1",), overrides={"alg1": {"K": 4, "m": 4}},
                               policy_sigma=0.1)
        t = monte_carlo(cfg)
        assert t.mean["alg1"] == (2.0 + 0.5 * 56,)
        assert t.se["alg1"] == (0.0,)
