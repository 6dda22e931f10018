import pytest

from pogg import game
from pogg import errors
from pogg.models import Sample, SampleClass, PayoffParams, Action, WindowState

from tests.utilities import make_config


class TestClassifySample:
    @pytest.fixture
    def config(self):
        return make_config(b=3, n=2, r=3)

    def test_root(self, config):
        assert game.classify_sample(config, 1, Sample(groups_sampled=0, contributions_seen=0)) == SampleClass.root

    def test_clean(self, config):
        assert game.classify_sample(config, 2, Sample(groups_sampled=1, contributions_seen=2)) == SampleClass.clean

    def test_dirty(self, config):
        assert game.classify_sample(config, 3, Sample(groups_sampled=1, contributions_seen=1)) == SampleClass.dirty
        assert game.classify_sample(config, 3, Sample(groups_sampled=1, contributions_seen=0)) == SampleClass.dirty

    def test_window_of_two(self):
        config = make_config(b=3, sizes=(1, 2, 2), m=2)
        assert game.classify_sample(config, 3, Sample(groups_sampled=2, contributions_seen=3)) == SampleClass.clean
        assert game.classify_sample(config, 3, Sample(groups_sampled=2, contributions_seen=2)) == SampleClass.dirty
        assert game.classify_sample(config, 2, Sample(groups_sampled=1, contributions_seen=1)) == SampleClass.clean

    @pytest.mark.parametrize(
        "position, sample, message",
        [
            (2, Sample(groups_sampled=1, contributions_seen=3), "exceeds the 2 players"),
            (2, Sample(groups_sampled=0, contributions_seen=0), "samples 1 groups"),
            (1, Sample(groups_sampled=1, contributions_seen=0), "samples 0 groups"),
            (4, Sample(groups_sampled=1, contributions_seen=0), "outside 1..3"),
        ],
    )
    def test_inconsistent_sample(self, config, position, sample, message):
        with pytest.raises(errors.PoggSampleError) as exc_info:
            game.classify_sample(config, position, sample)
        assert "Inconsistent sample" in str(exc_info.value)
        assert message in str(exc_info.value)


class TestPayoff:
    @pytest.fixture
    def params(self):
        return PayoffParams.from_config(make_config(b=3, n=2, r=3))

    def test_contribute(self, params):
        assert game.payoff(params, Action.C, 4) == pytest.approx(0.5 * 5 - 1)

    def test_defect(self, params):
        assert game.payoff(params, Action.D, 4) == pytest.approx(2.0)

    def test_defection_dominates_one_shot(self, params):
        for others in range(6):
            assert game.payoff(params, Action.D, others) > game.payoff(params, Action.C, others)

    def test_out_of_range(self, params):
        with pytest.raises(errors.PoggBuildModelError) as exc_info:
            game.payoff(params, Action.C, 6)
        assert "Invalid payoff arguments" in str(exc_info.value)


class TestWindowHelpers:
    @pytest.fixture
    def config(self):
        return make_config(b=4, sizes=(1, 2, 3, 2), m=2)

    def test_window_mask(self, config):
        assert game.window_mask(config, 3, WindowState(outputs=(1, 1))) == (True, False)
        assert game.window_mask(config, 1, WindowState()) == ()

    def test_window_mask_wrong_length(self, config):
        with pytest.raises(errors.PoggSampleError) as exc_info:
            game.window_mask(config, 3, WindowState(outputs=(1,)))
        assert "holds 2 groups" in str(exc_info.value)

    def test_window_mask_overfull(self, config):
        with pytest.raises(errors.PoggSampleError) as exc_info:
            game.window_mask(config, 3, WindowState(outputs=(2, 2)))
        assert "exceeds size 1" in str(exc_info.value)

    def test_mask_class(self):
        assert game.mask_class(()) == SampleClass.root
        assert game.mask_class((True, True)) == SampleClass.clean
        assert game.mask_class((True, False)) == SampleClass.dirty

    def test_advance(self, config):
        assert game.advance(config, (), True) == (True,)
        assert game.advance(config, (True,), False) == (True, False)
        assert game.advance(config, (True, False), True) == (False, True)

    def test_states(self, config):
        assert game.clean_state(config, 4).outputs == (2, 3)
        assert game.dirty_state(config, 4).outputs == (2, 2)
        assert game.state_from_mask(config, 4, (False, True)).outputs == (1, 3)
        with pytest.raises(errors.PoggSampleError):
            game.dirty_state(config, 1)

    def test_position_prior(self, config):
        prior = game.position_prior(config, range(2, 5))
        assert prior == pytest.approx({2: 2 / 7, 3: 3 / 7, 4: 2 / 7})
