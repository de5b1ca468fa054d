from fractions import Fraction

import pytest

from congamma import cache
from congamma.errors import CacheCorruption, ResourceError
from congamma.sieve import C2I_CHECKPOINT, c2i_partial_sum, c2i_raw_sum


def test_exact_decimal_round_trip():
    for f in (Fraction(0), Fraction(3, 8), Fraction(-5, 1024), Fraction(12345, 1)):
        assert Fraction(cache.exact_decimal(f)) == f
    with pytest.raises(ValueError):
        cache.exact_decimal(Fraction(1, 3))


def test_missing_and_empty_files_start_from_one(tmp_path):
    assert cache.read_cache(tmp_path / "none") == []
    p = tmp_path / "empty"
    p.write_text("")
    assert cache.resume_point(cache.read_cache(p), 10**7) is None


def test_env_var_overrides_location(monkeypatch, tmp_path):
    monkeypatch.setenv("CONGAMMA_CACHE_DIR", str(tmp_path))
    assert cache.default_cache_dir() == tmp_path


def test_resume_only_recomputes_the_new_segment(tmp_path, monkeypatch):
    p = tmp_path / "c.cache"
    first = c2i_raw_sum(C2I_CHECKPOINT, cache_path=p)
    recs = cache.read_cache(p)
    assert [r.checkpoint_i for r in recs] == [C2I_CHECKPOINT]

    import congamma.sieve as sieve

    calls = []
    real = sieve.c2i_partial_sum

    def spy(start, stop, threads=1, base=None):
        calls.append((start, stop))
        return real(start, stop, threads, base)

    monkeypatch.setattr(sieve, "c2i_partial_sum", spy)
    second = c2i_raw_sum(2 * C2I_CHECKPOINT, cache_path=p, verify=False)
    assert calls == [(C2I_CHECKPOINT, 2 * C2I_CHECKPOINT)]
    assert second == first + real(C2I_CHECKPOINT, 2 * C2I_CHECKPOINT)
    assert second == c2i_raw_sum(2 * C2I_CHECKPOINT)


def test_cold_and_warm_results_identical(tmp_path):
    p = tmp_path / "c.cache"
    limit = 1_234_567
    cold = c2i_raw_sum(limit, cache_path=p)
    warm = c2i_raw_sum(limit, cache_path=p)
    assert cold == warm == c2i_raw_sum(limit)
    # a smaller request resumes from scratch since no aligned record lies below it
    assert c2i_raw_sum(1_000_000, cache_path=p) == c2i_partial_sum(0, 1_000_000)


def test_tampered_sum_is_detected(tmp_path):
    p = tmp_path / "c.cache"
    c2i_raw_sum(2_000_000, cache_path=p)
    line = p.read_text().splitlines()[0]
    kind, ck, text, digits = line.split("\t")
    bad = text[:-1] + ("1" if text[-1] != "1" else "2")
    p.write_text("\t".join([kind, ck, bad, digits]) + "\n")
    with pytest.raises(CacheCorruption) as info:
        c2i_raw_sum(2_000_000, cache_path=p)
    assert info.value.line == 1


@pytest.mark.parametrize("line", [
    "c2i_square_sum\t10\t1.5",
    "other\t10\t1.5\t2",
    "c2i_square_sum\tten\t1.5\t2",
    "c2i_square_sum\t10\t1.5\t7",
    "c2i_square_sum\t10\t1.5e3\t2",
])
def test_malformed_lines_report_line_number(tmp_path, line):
    p = tmp_path / "c.cache"
    p.write_text("c2i_square_sum\t5\t1.25\t3\n" + line + "\n")
    with pytest.raises(CacheCorruption) as info:
        cache.read_cache(p)
    assert info.value.line == 2


def test_checkpoints_must_increase(tmp_path):
    p = tmp_path / "c.cache"
    p.write_text("c2i_square_sum\t5\t1.25\t3\nc2i_square_sum\t5\t1.25\t3\n")
    with pytest.raises(CacheCorruption):
        cache.read_cache(p)


def test_ceiling():
    with pytest.raises(ResourceError):
        c2i_raw_sum(10**6, ceiling=10)
