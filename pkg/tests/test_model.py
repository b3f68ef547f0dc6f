import math
import random

import pytest
import torch

from patchlens import bpe, editcodec
from patchlens.model import (
    ExampleEncoder,
    ModelConfig,
    TrainSettings,
    beam_search,
    build_model,
    build_vocab,
    correlate_curve,
    evaluate,
    forward_train,
    greedy_decode,
    load_checkpoint,
    rescore,
    save_checkpoint,
    train,
)
from patchlens.model.training import (
    Batch,
    EpochRecord,
    TrainingCurve,
    TrainingDiverged,
    collate,
    teacher_forced_metrics,
)
from gradcheck import finite_difference_check
from synth import make_overfit_pairs

TINY = dict(d_model=16, n_heads=2, n_enc_layers=1, n_dec_layers=1, ff_dim=32,
            dropout=0.0, max_src_len=64, max_tgt_len=24, dtype="float64")


@pytest.fixture(scope="module")
def fixture_setup():
    pairs = make_overfit_pairs(12, seed=0)
    tokens = []
    for p in pairs:
        tokens += [t.text for t in p.bug_tokens()] + [t.text for t in p.patch_tokens()]
    bpe_model = bpe.train(tokens, 80)
    vocab = build_vocab(bpe_model, pairs)
    return pairs, bpe_model, vocab


def make(variant, vocab, seed=0, **overrides):
    cfg = ModelConfig(variant=variant, seed=seed, **{**TINY, **overrides})
    return cfg, build_model(cfg, len(vocab))


class TestBuild:
    def test_same_seed_bitwise_equal(self, fixture_setup):
        _, _, vocab = fixture_setup
        _, m1 = make("edit+context", vocab, seed=7)
        _, m2 = make("edit+context", vocab, seed=7)
        for (n1, p1), (n2, p2) in zip(m1.named_parameters(), m2.named_parameters()):
            assert n1 == n2
            assert torch.equal(p1, p2)

    def test_different_seed_differs(self, fixture_setup):
        _, _, vocab = fixture_setup
        _, m1 = make("baseline", vocab, seed=1)
        _, m2 = make("baseline", vocab, seed=2)
        assert any(
            not torch.equal(p1, p2)
            for (_, p1), (_, p2) in zip(m1.named_parameters(), m2.named_parameters())
        )

    def test_invalid_dims(self):
        with pytest.raises(ValueError):
            ModelConfig(d_model=6, n_heads=4)
        with pytest.raises(ValueError):
            ModelConfig(variant="edits")

    def test_initial_loss_near_log_vocab(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg, model = make("baseline", vocab, seed=3)
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        batch = collate(encoder.encode_all(pairs), vocab, cfg, torch.float64)
        model.eval()
        stats = forward_train(model, batch)
        assert stats.loss.item() == pytest.approx(math.log(len(vocab)), rel=0.10)


class TestForwardTrain:
    def test_gold_pointer_supervision_from_codec(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg, _ = make("edit", vocab)
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        ex = encoder.encode(pairs[0])
        script = editcodec.diff(ex.bug_subs, ex.patch_subs)
        assert (ex.insert_ptr, ex.delete_ptr) == (script.insert_ptr, script.delete_ptr)
        assert list(ex.inserted_subs) == list(script.inserted)

    def test_softmax_rows_sum_to_one(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg, model = make("baseline", vocab)
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        batch = collate(encoder.encode_all(pairs[:4]), vocab, cfg, torch.float64)
        model.eval()
        enc = model.encode(batch.src, batch.src_padding_mask)
        logits, weights = model.decode(
            batch.dec_in, enc, batch.src_padding_mask, need_weights=True
        )
        probs = torch.softmax(logits, dim=-1)
        assert torch.allclose(probs.sum(-1), torch.ones_like(probs.sum(-1)), atol=1e-6)
        for w in weights:
            assert torch.allclose(w.sum(-1), torch.ones_like(w.sum(-1)), atol=1e-6)

    def test_pointer_distributions_cover_gaps(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg, model = make("edit", vocab)
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        batch = collate(encoder.encode_all(pairs[:3]), vocab, cfg, torch.float64)
        enc = model.encode(batch.src, batch.src_padding_mask)
        ins, dele = model.pointer_logits(enc, batch.pointer_base, batch.n_gaps)
        for b in range(3):
            n = int(batch.n_gaps[b])
            p = torch.softmax(ins[b], dim=-1)
            assert p[:n].sum().item() == pytest.approx(1.0, abs=1e-9)
            assert p[n:].sum().item() == pytest.approx(0.0, abs=1e-12)
            q = torch.softmax(dele[b], dim=-1)
            assert q[:n].sum().item() == pytest.approx(1.0, abs=1e-9)

    def test_divergence_detection(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg, model = make("baseline", vocab)
        with torch.no_grad():
            model.out_proj.weight.fill_(float("nan"))
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        settings = TrainSettings(epochs=1, batch_size=4)
        with pytest.raises(TrainingDiverged):
            train(model, vocab, bpe_model, encoder.encode_all(pairs),
                  encoder.encode_all(pairs), settings)


class TestGradients:
    def test_finite_differences_sample(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg, model = make("edit+context", vocab, seed=11, d_model=8, n_heads=2, ff_dim=16)
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        batch = collate(encoder.encode_all(pairs[:2]), vocab, cfg, torch.float64)
        wanted = (
            "ins_head.weight", "del_head.weight", "attn_bias", "ins_gap_emb",
            "del_span_emb", "out_proj.bias",
            "dec_layers.0.cross_attn.q_proj.weight",
        )
        report = finite_difference_check(model, batch, name_filter=lambda n: n in wanted)
        assert set(report) == set(wanted)
        for name, err in report.items():
            assert err < 1e-3, f"{name}: {err}"


class TestDecodeConsistency:
    def test_beam1_equals_greedy_random_models(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        rng = random.Random(0)
        for variant in ("baseline", "edit"):
            for trial in range(5):
                cfg, model = make(variant, vocab, seed=rng.randint(0, 10_000))
                encoder = ExampleEncoder(cfg, vocab, bpe_model)
                ex = encoder.encode(pairs[trial % len(pairs)], for_training=False)
                g = greedy_decode(model, vocab, ex, bpe_model.end_marker)
                b = beam_search(model, vocab, ex, bpe_model.end_marker, k=1, pointer_beam=1)
                assert len(b) == 1
                assert b[0].patch_subs == g.patch_subs
                assert b[0].log_prob == pytest.approx(g.log_prob, abs=1e-9)

    def test_scores_reverify(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        for variant in ("baseline", "edit", "edit+context"):
            cfg, model = make(variant, vocab, seed=5)
            encoder = ExampleEncoder(cfg, vocab, bpe_model)
            ex = encoder.encode(pairs[0], for_training=False)
            for hyp in beam_search(model, vocab, ex, bpe_model.end_marker, k=3, pointer_beam=2):
                assert rescore(model, vocab, ex, hyp) == pytest.approx(hyp.log_prob, abs=1e-6)

    def test_scores_sorted_and_topk_monotone(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg, model = make("edit", vocab, seed=9)
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        examples = encoder.encode_all(pairs, for_training=False)
        report = evaluate(model, vocab, bpe_model, examples, k_list=(1, 2, 4))
        assert report.topk_acc[1] <= report.topk_acc[2] <= report.topk_acc[4]
        hyps = beam_search(model, vocab, examples[0], bpe_model.end_marker, k=4, pointer_beam=3)
        scores = [h.score() for h in hyps]
        assert scores == sorted(scores, reverse=True)
        assert len(hyps) <= 4 * 3
        assert len({h.patch_subs for h in hyps}) == len(hyps)


class TestContextBias:
    def test_zero_bias_matches_disabled(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg, model = make("baseline+context", vocab, seed=13)
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        batch = collate(encoder.encode_all(pairs[:3]), vocab, cfg, torch.float64)
        model.eval()
        with torch.no_grad():
            enc = model.encode(batch.src, batch.src_padding_mask)
            bias_zero = model.cross_bias(batch.span_mask, scale=0.0)
            with_zero, _ = model.decode(batch.dec_in, enc, batch.src_padding_mask, bias_zero)
            without, _ = model.decode(batch.dec_in, enc, batch.src_padding_mask, None)
        assert torch.allclose(with_zero, without, atol=1e-6)

    def test_large_bias_concentrates_attention(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg, model = make("baseline+context", vocab, seed=13)
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        examples = encoder.encode_all(pairs[:3])
        batch = collate(examples, vocab, cfg, torch.float64)
        model.eval()
        with torch.no_grad():
            enc = model.encode(batch.src, batch.src_padding_mask)
            bias = model.cross_bias(batch.span_mask, scale=1e4)
            _, weights = model.decode(
                batch.dec_in, enc, batch.src_padding_mask, bias, need_weights=True
            )
        for layer_w in weights:
            for b, ex in enumerate(examples):
                start, end = ex.bug_span()
                mass = layer_w[b, :, :, start:end].sum(-1)
                assert float(mass.min()) > 0.9999
                total = layer_w[b].sum(-1)
                assert torch.allclose(total, torch.ones_like(total), atol=1e-9)

    def test_empty_span_rejected(self, fixture_setup):
        _, _, vocab = fixture_setup
        cfg, model = make("baseline+context", vocab)
        with pytest.raises(ValueError):
            model.cross_bias(torch.zeros(1, 5, dtype=torch.float64))

    def test_non_context_variant_has_no_bias(self, fixture_setup):
        _, _, vocab = fixture_setup
        cfg, model = make("baseline", vocab)
        with pytest.raises(RuntimeError):
            model.cross_bias(torch.ones(1, 5, dtype=torch.float64))


class TestEditRoundTrip:
    def test_gold_forced_decode_matches_gold_patch(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg, _ = make("edit", vocab)
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        for pair in pairs:
            ex = encoder.encode(pair)
            script = editcodec.EditScript(ex.insert_ptr, ex.delete_ptr, tuple(ex.inserted_subs))
            materialized = editcodec.apply(ex.bug_subs, script)
            assert materialized == ex.patch_subs
            texts = bpe.split_stream(bpe_model, materialized)
            assert texts == ex.gold_patch_texts


class TestTrainLoop:
    def test_small_overfit_and_curve_invariants(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg, model = make("baseline", vocab, seed=4, d_model=32, ff_dim=64)
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        examples = encoder.encode_all(pairs)
        settings = TrainSettings(epochs=30, batch_size=6, lr=3e-3, warmup_steps=10,
                                 target_full_seq_acc=1.0)
        result = train(model, vocab, bpe_model, examples, examples, settings)
        assert result.curve.records, "no epochs recorded"
        for record in result.curve.records:
            assert 0.0 <= record.full_sequence_acc <= 1.0
            assert record.teacher_forced_token_acc >= record.full_sequence_acc
        assert result.best_full_seq_acc >= 0.5

    def test_determinism(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        curves = []
        for _ in range(2):
            cfg, model = make("edit", vocab, seed=21)
            encoder = ExampleEncoder(cfg, vocab, bpe_model)
            examples = encoder.encode_all(pairs[:6])
            settings = TrainSettings(epochs=3, batch_size=3, lr=1e-3)
            result = train(model, vocab, bpe_model, examples, examples, settings)
            curves.append([
                (r.train_loss, r.teacher_forced_token_acc, r.full_sequence_acc)
                for r in result.curve.records
            ])
        assert curves[0] == curves[1]

    def test_curve_csv_round_trip(self, tmp_path):
        curve = TrainingCurve([
            EpochRecord(1, 0.5, 0.1, 0.2, 0.4, 3.2),
            EpochRecord(2, 0.75, 0.25, 0.5, 0.6, 1.1),
        ])
        path = tmp_path / "curve.csv"
        curve.to_csv(path)
        loaded = TrainingCurve.from_csv(path)
        assert loaded == curve

    def test_correlate_curve(self):
        rising = TrainingCurve([
            EpochRecord(e, 0.1 * e, 0.05 * e, 0.0, 0.0, 0.0) for e in range(1, 15)
        ])
        rho = correlate_curve(rising)
        assert rho["rho_all"] == pytest.approx(1.0)
        assert rho["rho_after_epoch_10"] == pytest.approx(1.0)
        falling = TrainingCurve([
            EpochRecord(e, 0.1 * e, 1.0 - 0.05 * e, 0.0, 0.0, 0.0) for e in range(1, 15)
        ])
        assert correlate_curve(falling)["rho_all"] == pytest.approx(-1.0)


class TestCheckpoints:
    def test_round_trip_preserves_decodes(self, fixture_setup, tmp_path):
        pairs, bpe_model, vocab = fixture_setup
        cfg, model = make("edit", vocab, seed=8)
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        ex = encoder.encode(pairs[1], for_training=False)
        before = greedy_decode(model, vocab, ex, bpe_model.end_marker)

        path = tmp_path / "ckpt.npz"
        save_checkpoint(model, vocab, bpe_model, path, extra={"note": "test"})
        loaded_model, loaded_vocab, loaded_bpe, meta = load_checkpoint(path)
        assert meta["extra"]["note"] == "test"
        assert loaded_vocab.subtokens == vocab.subtokens
        assert loaded_bpe.merges == bpe_model.merges

        loaded_encoder = ExampleEncoder(loaded_model.config, loaded_vocab, loaded_bpe)
        ex2 = loaded_encoder.encode(pairs[1], for_training=False)
        after = greedy_decode(loaded_model, loaded_vocab, ex2, loaded_bpe.end_marker)
        assert after.patch_subs == before.patch_subs
        assert after.log_prob == pytest.approx(before.log_prob, abs=1e-12)

    def test_rejects_non_checkpoint(self, tmp_path):
        from patchlens.model.checkpoint import CheckpointError
        bogus = tmp_path / "x.npz"
        bogus.write_bytes(b"not a checkpoint")
        with pytest.raises((CheckpointError, Exception)):
            load_checkpoint(bogus)


class TestOverLength:
    def test_context_trimmed_keeps_bug(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        cfg = ModelConfig(variant="baseline+context", **{**TINY, "max_src_len": 24,
                                                         "context_budget": 500})
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        ex = encoder.encode(pairs[0])
        assert len(ex.src_ids) <= 24
        assert ex.truncated
        start, end = ex.bug_span()
        got = [vocab.text_of(i) for i in ex.src_ids[start:end]]
        assert got == ex.bug_subs

    def test_reject_policy(self, fixture_setup):
        pairs, bpe_model, vocab = fixture_setup
        from patchlens.model.data import OverLengthError
        cfg = ModelConfig(variant="baseline", **{**TINY, "max_tgt_len": 2,
                                                 "overlength": "reject"})
        encoder = ExampleEncoder(cfg, vocab, bpe_model)
        with pytest.raises(OverLengthError):
            encoder.encode(pairs[0])
