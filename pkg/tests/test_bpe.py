import random

import pytest
from hypothesis import given, settings, strategies as st

from patchlens import bpe
from patchlens.lexer import token_texts

CODING_CORPUS = ["co"] * 50 + ["cod"] * 40 + ["coding"] * 10 + ["ing"] * 45


class TestTrain:
    def test_most_frequent_pair_first(self):
        model = bpe.train(["ab", "ab", "ac"], 1)
        assert model.merges == [("a", "b")]

    def test_zero_merges(self):
        model = bpe.train(["abc"], 0)
        assert model.merges == []
        assert bpe.encode(model, "abc") == ["a", "b", "c"]

    def test_empty_stream(self):
        model = bpe.train([], 10)
        assert model.merges == []

    def test_deterministic(self):
        corpus = ["alpha", "beta", "alphabet", "bet", "all"] * 3
        a = bpe.train(corpus, 25)
        b = bpe.train(corpus, 25)
        assert a.merges == b.merges
        assert a.vocab == b.vocab

    def test_tie_break_lexicographic(self):
        # (a,b) and (c,d) both occur twice; (a,b) < (c,d)
        model = bpe.train(["ab", "ab", "cd", "cd"], 1)
        assert model.merges == [("a", "b")]

    def test_merge_outputs_in_vocab(self):
        model = bpe.train(CODING_CORPUS, 5)
        for left, right in model.merges:
            assert left + right in model.vocab

    def test_marker_collision_rejected(self):
        with pytest.raises(bpe.BpeError):
            bpe.train(["ok", "bad" + bpe.DEFAULT_END_MARKER], 1)

    def test_negative_merges(self):
        with pytest.raises(bpe.BpeError):
            bpe.train(["x"], -1)


class TestEncode:
    def test_coding_splits(self):
        model = bpe.train(CODING_CORPUS, 5)
        assert bpe.encode(model, "coding") == ["cod", "ing"]

    def test_single_character(self):
        model = bpe.train(CODING_CORPUS, 5)
        assert bpe.encode(model, "x") == ["x"]

    def test_merge_applies_across_repeats(self):
        model = bpe.train(["ab"] * 3, 1)
        assert model.merges == [("a", "b")]
        assert bpe.encode(model, "abab") == ["ab", "ab"]

    def test_unseen_characters_pass_through(self):
        model = bpe.train(["abc"], 2)
        assert bpe.decode(model, bpe.encode(model, "früh")) == "früh"

    def test_empty_text(self):
        model = bpe.train(["abc"], 2)
        assert bpe.encode(model, "") == []

    def test_monotone_length_in_merges(self):
        corpus = ["remove", "remote", "read", "ready", "retry"] * 4
        tokens = ["remove", "remote", "read", "ready", "retry", "red", "remind"]
        lengths = {}
        for k in (0, 2, 4, 8, 16, 32):
            model = bpe.train(corpus, k)
            lengths[k] = [len(bpe.encode_marked(model, t)) for t in tokens]
        ks = sorted(lengths)
        for lo, hi in zip(ks, ks[1:]):
            for a, b in zip(lengths[hi], lengths[lo]):
                assert a <= b

    def test_merge_prefix_stability(self):
        corpus = ["remove", "remote", "read", "ready", "retry"] * 4
        small = bpe.train(corpus, 5)
        big = bpe.train(corpus, 15)
        assert big.merges[:5] == small.merges


class TestDecode:
    def test_concatenation(self):
        model = bpe.train(CODING_CORPUS, 5)
        assert bpe.decode(model, ["cod", "ing"]) == "coding"

    def test_empty(self):
        model = bpe.train([], 0)
        assert bpe.decode(model, []) == ""

    @settings(max_examples=200)
    @given(st.text(alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters=bpe.DEFAULT_END_MARKER), min_size=1, max_size=20))
    def test_round_trip_any_token(self, token):
        model = bpe.train(["shared", "tokens", "here"], 10)
        assert bpe.decode(model, bpe.encode(model, token)) == token
        assert bpe.decode(model, bpe.encode_marked(model, token)) == token

    def test_round_trip_java_corpus(self):
        lines = [
            "private boolean isName = false;",
            'LOG.error("Can\'t read settings for " + tool, e);',
            "if (level >= damage - damage / 2) {",
            "return new HashMap<String, List<Integer>>();",
        ]
        tokens = [t for line in lines for t in token_texts(line)]
        model = bpe.train(tokens, 100)
        for token in tokens:
            assert bpe.decode(model, bpe.encode(model, token)) == token


class TestSplitStream:
    def test_boundaries_reconstructed(self):
        tokens = ["new", "HashMap", "(", ")", ";"]
        model = bpe.train(tokens * 3 + ["newest", "Hash", "Map"], 30)
        stream = [s for t in tokens for s in bpe.encode_marked(model, t)]
        assert bpe.split_stream(model, stream) == tokens

    def test_trailing_partial_token(self):
        model = bpe.train(["abc"], 0)
        partial = ["a", "b"]  # no end marker seen
        assert bpe.split_stream(model, partial) == ["ab"]


class TestSaveLoad:
    def test_round_trip_with_spaces_and_escapes(self, tmp_path):
        tokens = ['"a b"', "back\\slash", "plain"] * 4
        model = bpe.train(tokens, 20)
        path = tmp_path / "model.bpe"
        bpe.save(model, path)
        loaded = bpe.load(path)
        assert loaded.merges == model.merges
        assert loaded.end_marker == model.end_marker
        for token in tokens:
            assert bpe.encode(loaded, token) == bpe.encode(model, token)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.bpe"
        path.write_text("not a model\n", encoding="utf-8")
        with pytest.raises(bpe.BpeError):
            bpe.load(path)


def test_encode_matches_training_segmentation():
    """Encoding a training word reproduces the segmentation the trainer
    left in its working corpus state."""
    rng = random.Random(4)
    words = ["".join(rng.choice("abcd") for _ in range(rng.randint(1, 8))) for _ in range(60)]
    model = bpe.train(words, 40)
    # re-derive the trainer's final state by replaying merges
    for word in set(words):
        symbols = list(word) + [model.end_marker]
        for left, right in model.merges:
            merged, out, i = left + right, [], 0
            while i < len(symbols):
                if i + 1 < len(symbols) and symbols[i] == left and symbols[i + 1] == right:
                    out.append(merged)
                    i += 2
                else:
                    out.append(symbols[i])
                    i += 1
            symbols = out
        assert bpe.encode_marked(model, word) == symbols
