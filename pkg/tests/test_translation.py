"""Translator networks, losses, history buffer, batch conversion, training."""

import json

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from nightseg.errors import (
    EmptyDataset,
    NonFiniteLoss,
    RangeTagMismatch,
    ShapeError,
)
from nightseg.imaging import ImageTensor, load_image, save_image, to_signed
from nightseg.translation import (
    GanTrainConfig,
    ImageBuffer,
    TranslatorArch,
    TranslatorWeights,
    adversarial_loss,
    cycle_consistency_loss,
    generator_forward,
    init_translator,
    train_translator,
    translate_batch,
)
from nightseg.translation.training import LOSS_COLUMNS
from oracles import finite_difference_check

TINY_ARCH = TranslatorArch(base_channels=4, n_res_blocks=1,
                           disc_base_channels=4, disc_layers=1,
                           image_size=(16, 16))


def constant_image(value, h=16, w=16):
    return ImageTensor(np.full((h, w, 3), value, dtype=np.float32))


def write_constant_png(path, value, h=16, w=16):
    save_image(constant_image(value, h, w), path)
    return path


class TestLosses:
    def test_cycle_zero_on_identical(self):
        x = torch.rand(2, 3, 8, 8)
        assert cycle_consistency_loss(x, x.clone()).item() == 0.0

    def test_cycle_constant_gap(self):
        a = torch.full((1, 3, 4, 4), 0.2)
        b = torch.full((1, 3, 4, 4), 0.5)
        assert cycle_consistency_loss(a, b).item() == pytest.approx(0.3)

    def test_cycle_mixed_values(self):
        a = torch.tensor([0.25, 0.75])
        b = torch.tensor([0.75, 0.25])
        assert cycle_consistency_loss(a, b).item() == pytest.approx(0.5)

    def test_cycle_matches_elementwise_mean(self):
        rng = np.random.default_rng(3)
        a = rng.uniform(-1, 1, (2, 3, 5, 7)).astype(np.float32)
        b = rng.uniform(-1, 1, (2, 3, 5, 7)).astype(np.float32)
        want = np.abs(a - b).mean()
        got = cycle_consistency_loss(torch.from_numpy(a), torch.from_numpy(b))
        assert got.item() == pytest.approx(want, abs=1e-6)

    def test_cycle_shape_mismatch(self):
        with pytest.raises(ShapeError):
            cycle_consistency_loss(torch.zeros(2, 3), torch.zeros(3, 2))

    def test_cycle_accepts_image_tensors(self):
        a = constant_image(0.25, 4, 4)
        b = constant_image(0.75, 4, 4)
        assert cycle_consistency_loss(a, b).item() == pytest.approx(0.5)

    def test_cycle_rejects_mixed_range_tags(self):
        a = constant_image(0.5, 4, 4)
        b = to_signed(constant_image(0.5, 4, 4))
        with pytest.raises(RangeTagMismatch):
            cycle_consistency_loss(a, b)

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_cycle_nonnegative_and_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        a = torch.from_numpy(rng.uniform(-1, 1, (3, 4, 4)))
        b = torch.from_numpy(rng.uniform(-1, 1, (3, 4, 4)))
        ab = cycle_consistency_loss(a, b).item()
        assert ab >= 0.0
        assert ab == pytest.approx(cycle_consistency_loss(b, a).item())

    def test_adversarial_perfect_scores(self):
        assert adversarial_loss(torch.ones(1, 1, 4, 4), True).item() == 0.0
        assert adversarial_loss(torch.zeros(1, 1, 4, 4), False).item() == 0.0

    def test_adversarial_wrong_constant(self):
        assert adversarial_loss(torch.zeros(2, 5), True).item() == pytest.approx(1.0)
        assert adversarial_loss(torch.ones(2, 5), False).item() == pytest.approx(1.0)

    def test_adversarial_half_and_half(self):
        scores = torch.tensor([0.0, 1.0])
        assert adversarial_loss(scores, True).item() == pytest.approx(0.5)
        assert adversarial_loss(scores, False).item() == pytest.approx(0.5)

    def test_adversarial_rejects_empty(self):
        with pytest.raises(ShapeError):
            adversarial_loss(torch.zeros(0, 1), True)


class TestImageBuffer:
    def push_values(self, buf, values):
        """Push single-image batches carrying scalar ids; return emitted ids."""
        out = []
        for v in values:
            batch = torch.full((1, 1, 2, 2), float(v))
            out.append(int(buf.push_and_sample(batch)[0, 0, 0, 0].item()))
        return out

    def test_passthrough_until_full(self):
        buf = ImageBuffer(max_size=4, seed=0)
        assert self.push_values(buf, range(4)) == [0, 1, 2, 3]
        assert len(buf) == 4

    def test_size_never_exceeds_cap(self):
        buf = ImageBuffer(max_size=5, seed=1)
        self.push_values(buf, range(100))
        assert len(buf) == 5

    def test_zero_capacity_is_passthrough(self):
        buf = ImageBuffer(max_size=0, seed=0)
        assert self.push_values(buf, range(10)) == list(range(10))
        assert len(buf) == 0

    def test_negative_capacity_rejected(self):
        with pytest.raises(ValueError):
            ImageBuffer(max_size=-1)

    def test_deterministic_given_seed(self):
        a = ImageBuffer(max_size=8, seed=42)
        b = ImageBuffer(max_size=8, seed=42)
        vals = list(range(200))
        assert self.push_values(a, vals) == self.push_values(b, vals)

    def test_output_is_detached_and_batch_shaped(self):
        buf = ImageBuffer(max_size=2, seed=0)
        batch = torch.rand(3, 2, 4, 4, requires_grad=True)
        out = buf.push_and_sample(batch)
        assert out.shape == batch.shape
        assert not out.requires_grad

    def test_emitted_images_come_from_history_or_input(self):
        """Black-box invariant: every output id was pushed at some point,
        and each history id is emitted at most once (swaps remove it)."""
        buf = ImageBuffer(max_size=16, seed=3)
        emitted = self.push_values(buf, range(500))
        seen = set()
        for step, got in enumerate(emitted):
            assert 0 <= got <= step
            if got != step:        # an old image was swapped out
                assert got not in seen
                seen.add(got)

    def test_swap_statistics(self):
        """Swap frequency ~0.5 and evicted slots ~uniform once full."""
        cap, draws = 50, 10_000
        buf = ImageBuffer(max_size=cap, seed=11)
        ids = list(range(cap + draws))
        emitted = self.push_values(buf, ids)

        # replay observable state: slot content changes only on a swap
        slots = list(range(cap))
        slot_of = {v: i for i, v in enumerate(slots)}
        slot_counts = np.zeros(cap)
        swaps = 0
        for step in range(cap, cap + draws):
            got = emitted[step]
            if got == step:
                continue
            swaps += 1
            idx = slot_of.pop(got)
            slot_counts[idx] += 1
            slots[idx] = step
            slot_of[step] = idx

        rate = swaps / draws
        # binomial(10k, 0.5): five sigma is +-0.025
        assert abs(rate - 0.5) < 0.025
        chi = stats.chisquare(slot_counts)
        assert chi.pvalue > 0.01


class TestGeneratorForward:
    def test_shape_and_range_with_padding(self):
        """Sides not divisible by 4 go through the internal pad/crop path."""
        weights = init_translator(TINY_ARCH, seed=0)
        img = to_signed(ImageTensor(np.random.default_rng(0)
                                    .uniform(0, 1, (30, 48, 3)).astype(np.float32)))
        out = generator_forward(weights, img, "day2night")
        assert out.data.shape == (30, 48, 3)
        assert out.range_tag == "signed"
        assert np.all(out.data >= -1.0) and np.all(out.data <= 1.0)

    def test_deterministic(self):
        weights = init_translator(TINY_ARCH, seed=0)
        img = to_signed(constant_image(0.5))
        a = generator_forward(weights, img, "day2night")
        b = generator_forward(weights, img, "day2night")
        assert np.array_equal(a.data, b.data)

    def test_not_identity_at_init(self):
        weights = init_translator(TINY_ARCH, seed=0)
        rng = np.random.default_rng(7)
        img = ImageTensor(rng.uniform(-1, 1, (16, 16, 3)).astype(np.float32),
                          "signed")
        out = generator_forward(weights, img, "day2night")
        assert np.abs(out.data - img.data).mean() > 1e-3

    def test_directions_differ(self):
        weights = init_translator(TINY_ARCH, seed=0)
        rng = np.random.default_rng(8)
        img = ImageTensor(rng.uniform(-1, 1, (16, 16, 3)).astype(np.float32),
                          "signed")
        d2n = generator_forward(weights, img, "day2night")
        n2d = generator_forward(weights, img, "night2day")
        assert not np.array_equal(d2n.data, n2d.data)

    def test_rejects_unit_range(self):
        weights = init_translator(TINY_ARCH, seed=0)
        with pytest.raises(RangeTagMismatch):
            generator_forward(weights, constant_image(0.5), "day2night")

    def test_rejects_tiny_input(self):
        weights = init_translator(TINY_ARCH, seed=0)
        img = to_signed(constant_image(0.0, h=4, w=4))
        with pytest.raises(ShapeError):
            generator_forward(weights, img, "day2night")

    def test_rejects_unknown_direction(self):
        weights = init_translator(TINY_ARCH, seed=0)
        img = to_signed(constant_image(0.5))
        with pytest.raises(ValueError):
            generator_forward(weights, img, "sideways")


class TestTranslatorWeights:
    def test_roundtrip_preserves_forward(self, tmp_path):
        weights = init_translator(TINY_ARCH, seed=5)
        path = tmp_path / "t.weights"
        weights.save(path)
        back = TranslatorWeights.load(path)
        assert back.arch == TINY_ARCH
        assert back.rng_seed == 5
        img = to_signed(constant_image(0.3))
        for direction in ("day2night", "night2day"):
            a = generator_forward(weights, img, direction)
            b = generator_forward(back, img, direction)
            assert np.array_equal(a.data, b.data)

    def test_init_deterministic_in_seed(self):
        a = init_translator(TINY_ARCH, seed=9)
        b = init_translator(TINY_ARCH, seed=9)
        c = init_translator(TINY_ARCH, seed=10)
        key = next(iter(a.gen_day2night))
        assert np.array_equal(a.gen_day2night[key], b.gen_day2night[key])
        assert not np.array_equal(a.gen_day2night[key], c.gen_day2night[key])

    def test_discriminator_scores_are_maps(self):
        weights = init_translator(TINY_ARCH, seed=0)
        disc = weights.build_discriminator("day")
        out = disc(torch.rand(1, 3, 16, 16) * 2 - 1)
        assert out.shape[1] == 1
        assert out.shape[2] > 1 and out.shape[3] > 1


class TestTranslateBatch:
    def test_no_inputs_writes_nothing(self, tmp_path):
        weights = init_translator(TINY_ARCH, seed=0)
        out_dir = tmp_path / "out"
        assert translate_batch(weights, "day2night", [], out_dir) == []
        assert not out_dir.exists()

    def test_outputs_at_working_size(self, tmp_path):
        weights = init_translator(TINY_ARCH, seed=0)
        inputs = [write_constant_png(tmp_path / f"img_{i}.png", 0.2 + 0.2 * i,
                                     h=20, w=24) for i in range(3)]
        written = translate_batch(weights, "day2night", inputs, tmp_path / "out")
        assert [p.name for p in written] == [
            "img_0_day2night.png", "img_1_day2night.png", "img_2_day2night.png"]
        for p in written:
            img = load_image(p)
            assert (img.width, img.height) == TINY_ARCH.image_size

    def test_reconversion_is_byte_identical(self, tmp_path):
        weights = init_translator(TINY_ARCH, seed=0)
        src = write_constant_png(tmp_path / "x.png", 0.4)
        first = translate_batch(weights, "day2night", [src], tmp_path / "a")
        second = translate_batch(weights, "day2night", [src], tmp_path / "b")
        assert first[0].read_bytes() == second[0].read_bytes()

    def test_skips_are_reported(self, tmp_path):
        weights = init_translator(TINY_ARCH, seed=0)
        good = write_constant_png(tmp_path / "good.png", 0.5)
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"not a png at all")
        missing = tmp_path / "void.png"
        written = translate_batch(weights, "day2night",
                                  [good, bad, missing], tmp_path / "out")
        assert [p.stem for p in written] == ["good_day2night"]
        report = json.loads((tmp_path / "out" / "convert_report.json").read_text())
        assert report["direction"] == "day2night"
        assert len(report["written"]) == 1
        skipped = {s["input"] for s in report["skipped"]}
        assert skipped == {str(bad), str(missing)}

    def test_rejects_unknown_direction(self, tmp_path):
        weights = init_translator(TINY_ARCH, seed=0)
        with pytest.raises(ValueError):
            translate_batch(weights, "up", [], tmp_path)


def tiny_train_config(**over):
    kw = dict(epochs=2, batch_size=1, image_size=(32, 32), base_channels=4,
              n_res_blocks=1, disc_base_channels=4, disc_layers=1,
              buffer_size=4, seed=0)
    kw.update(over)
    return GanTrainConfig(**kw)


@pytest.fixture
def two_domain_dirs(tmp_path):
    day, night = tmp_path / "day", tmp_path / "night"
    day.mkdir(), night.mkdir()
    day_paths = [write_constant_png(day / f"d{i}.png", 0.7 + 0.05 * i)
                 for i in range(3)]
    night_paths = [write_constant_png(night / f"n{i}.png", 0.1 + 0.05 * i)
                   for i in range(2)]
    return day_paths, night_paths


class TestTrainTranslator:
    def test_empty_sets_rejected(self, two_domain_dirs):
        day, night = two_domain_dirs
        with pytest.raises(EmptyDataset):
            train_translator([], night, tiny_train_config())
        with pytest.raises(EmptyDataset):
            train_translator(day, [], tiny_train_config())

    def test_deterministic_given_seed(self, two_domain_dirs, tmp_path):
        day, night = two_domain_dirs
        runs = []
        for name in ("a", "b"):
            log = tmp_path / f"{name}.csv"
            res = train_translator(day, night, tiny_train_config(), log_path=log)
            runs.append((res, log.read_bytes()))
        (res_a, log_a), (res_b, log_b) = runs
        assert log_a == log_b
        for part in ("gen_day2night", "gen_night2day", "disc_day", "disc_night"):
            pa, pb = res_a.weights.part(part), res_b.weights.part(part)
            assert set(pa) == set(pb)
            for key in pa:
                assert np.array_equal(pa[key], pb[key])

    def test_loss_log_layout(self, two_domain_dirs, tmp_path):
        day, night = two_domain_dirs
        log = tmp_path / "loss.csv"
        res = train_translator(day, night, tiny_train_config(), log_path=log)
        header = log.read_text().splitlines()[0]
        assert header == ",".join(LOSS_COLUMNS)
        # two epochs x max(3, 2) iterations
        assert len(res.loss_log) == 6
        assert all(set(row) == set(LOSS_COLUMNS) for row in res.loss_log)

    def test_cycle_loss_decreases_on_constants(self, tmp_path):
        """Bright-vs-dark constant domains, 200 iterations at 32x32."""
        day_dir, night_dir = tmp_path / "day", tmp_path / "night"
        day_dir.mkdir(), night_dir.mkdir()
        day = [write_constant_png(day_dir / f"d{i}.png", 0.8 + 0.02 * i,
                                  h=32, w=32) for i in range(4)]
        night = [write_constant_png(night_dir / f"n{i}.png", 0.1 + 0.02 * i,
                                    h=32, w=32) for i in range(4)]
        cfg = tiny_train_config(epochs=50, image_size=(32, 32))
        res = train_translator(day, night, cfg)
        assert len(res.loss_log) == 200
        first = res.loss_log[0]
        last = res.loss_log[-1]
        assert (last["cycle_X"] + last["cycle_Y"]
                < first["cycle_X"] + first["cycle_Y"])

    def test_non_finite_loss_raises(self, two_domain_dirs, monkeypatch):
        day, night = two_domain_dirs
        import nightseg.translation.training as training

        def poisoned(scores, target_is_real):
            return torch.as_tensor(scores).sum() * float("nan")

        monkeypatch.setattr(training, "adversarial_loss", poisoned)
        with pytest.raises(NonFiniteLoss):
            train_translator(day, night, tiny_train_config())

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            tiny_train_config(epochs=0).validate()
        with pytest.raises(ValueError):
            tiny_train_config(lambda_cycle=-1.0).validate()


class TestGeneratorGradients:
    def test_cycle_objective_matches_finite_differences(self):
        """Backprop through generator + L1 cycle term, float64 probe."""
        torch.manual_seed(0)
        arch = TranslatorArch(base_channels=4, n_res_blocks=1,
                              disc_base_channels=4, disc_layers=1,
                              image_size=(8, 8))
        gen = init_translator(arch, seed=0).build_generator("day2night").double()
        gen.train()
        x = torch.from_numpy(
            np.random.default_rng(1).uniform(-1, 1, (1, 3, 8, 8)))

        errors = finite_difference_check(
            gen, lambda: cycle_consistency_loss(x, gen(x)), max_elements=120)
        within = sum(e <= 1e-3 for e in errors) / len(errors)
        assert within >= 0.95
        assert max(errors) < 1e-2
