import json

import numpy as np
import pytest

from cplab.errors import PreconditionError, StrategyParseError
from cplab.strategy import (ActionContext, Effect, Explore, Rule, Strategy,
                            Trigger, fired_rules, interpret_action,
                            parse_strategy, serialize_strategy,
                            uniform_strategy, validate_strategy)
from cplab.strategy.interpreter import RESET_EPSILON


def avoid(slots, threshold=0.9):
    return Rule(Trigger('slot_utilization', threshold, tuple(slots)),
                Effect('avoid_slots', slots=tuple(slots)))


def utilization(busy=(3, 5)):
    u = np.zeros(10)
    u[list(busy)] = 1.0
    return u


AVOIDING = uniform_strategy(0.5, rules=(avoid((3, 5)),))


class TestParse:

    def test_canonical_text_round_trip(self):
        text = serialize_strategy(AVOIDING)
        s = parse_strategy(text)
        assert s == AVOIDING
        assert s.id == AVOIDING.id
        assert serialize_strategy(s) == text

    def test_id_ignores_whitespace_and_key_order(self):
        doc = AVOIDING.to_dict()
        shuffled = json.dumps(dict(reversed(list(doc.items()))), indent=4)
        assert parse_strategy(shuffled).id == AVOIDING.id

    def test_id_tracks_rule_order(self):
        rules = (avoid((3,)), avoid((5,)))
        a = uniform_strategy(0.5, rules=rules)
        b = uniform_strategy(0.5, rules=rules[::-1])
        assert a.id != b.id

    def test_empty_text(self):
        with pytest.raises(StrategyParseError) as e:
            parse_strategy('   ')
        assert e.value.diagnostics[0].code == 'syntax'

    def test_syntax_error_position(self):
        with pytest.raises(StrategyParseError) as e:
            parse_strategy('{"schema": "strategy-v1",\n  "domain": }')
        d = e.value.diagnostics[0]
        assert (d.code, d.line) == ('syntax', 2)

    def test_unknown_trigger(self):
        doc = AVOIDING.to_dict()
        doc['rules'][0]['trigger']['name'] = 'slot_loudness'
        with pytest.raises(StrategyParseError) as e:
            parse_strategy(json.dumps(doc))
        d = e.value.diagnostics[0]
        assert d.code == 'unknown-name'
        assert d.path == 'rules.0.trigger.name'

    def test_tcp_base_action_must_be_integer(self):
        doc = Strategy('TCP', 8).to_dict()
        doc['base_action'] = 8.5
        with pytest.raises(StrategyParseError) as e:
            parse_strategy(json.dumps(doc))
        assert e.value.diagnostics[0].path == 'base_action'

    def test_missing_explore_defaults_to_none(self):
        doc = AVOIDING.to_dict()
        del doc['explore']
        assert parse_strategy(json.dumps(doc)).explore == Explore()


class TestValidate:

    def test_valid(self):
        assert validate_strategy(AVOIDING, 10, domain='MAC') == []

    def test_probability_out_of_range(self):
        base = [0.5] * 10
        base[2] = 1.4
        diags = validate_strategy(Strategy('MAC', tuple(base)))
        assert [(d.code, d.path) for d in diags] == [('range',
                                                      'base_action.2')]
        assert 'slot 2' in diags[0].message

    def test_wrong_length(self):
        diags = validate_strategy(uniform_strategy(0.5, frame_len=8), 10)
        assert diags[0].code == 'length'

    def test_dangling_slot(self):
        s = uniform_strategy(0.5, rules=(Rule(
            Trigger('env_change'), Effect('avoid_slots', slots=(12,))),))
        diags = validate_strategy(s, 10)
        assert [(d.code, d.path) for d in diags] == [
            ('dangling-index', 'rules.0.effect.slots')]

    def test_trigger_from_other_domain(self):
        s = uniform_strategy(0.5, rules=(Rule(
            Trigger('rtt_inflation', 0.5), Effect('scale_all', factor=0.5)),))
        diags = validate_strategy(s, 10)
        assert diags[0].code == 'domain'
        assert diags[0].path == 'rules.0.trigger.name'

    def test_environment_domain_mismatch(self):
        diags = validate_strategy(Strategy('TCP', 8), domain='MAC')
        assert [d.code for d in diags] == ['domain']

    def test_missing_parameter(self):
        s = uniform_strategy(0.5, rules=(Rule(
            Trigger('slot_utilization'), Effect('avoid_slots', slots=(3,))),))
        diags = validate_strategy(s, 10)
        assert diags[0].code == 'missing'

    def test_cwnd_range(self):
        diags = validate_strategy(Strategy('TCP', 80), c_max=64)
        assert diags[0].code == 'range'
        assert validate_strategy(Strategy('TCP', 64), c_max=64) == []

    @pytest.mark.parametrize('value', ['Infinity', '-Infinity', 'NaN'])
    def test_tcp_sigma_must_be_finite(self, value):
        s = parse_strategy('{"schema":"strategy-v1","domain":"TCP",'
                           '"base_action":8,"explore":{"sigma":%s}}' % value)
        diags = validate_strategy(s, domain='TCP')
        assert [(d.code, d.path) for d in diags] == [('range', 'explore.sigma')]

    @pytest.mark.parametrize('value', [float('nan'), float('inf')])
    @pytest.mark.parametrize('path,build', [
        ('explore.epsilon', lambda v: uniform_strategy(
            0.5, explore=Explore(v, 0.0))),
        ('explore.sigma', lambda v: uniform_strategy(
            0.5, explore=Explore(0.0, v))),
        ('base_action.4', lambda v: Strategy(
            'MAC', (0.5,) * 4 + (v,) + (0.5,) * 5)),
        ('rules.0.trigger.at_least', lambda v: uniform_strategy(0.5, rules=(
            Rule(Trigger('slot_utilization', v, (3,)),
                 Effect('avoid_slots', slots=(3,))),))),
        ('rules.0.trigger.at_least', lambda v: uniform_strategy(0.5, rules=(
            Rule(Trigger('collision_rate', v),
                 Effect('scale_all', factor=0.5)),))),
        ('rules.0.effect.prob', lambda v: uniform_strategy(0.5, rules=(
            Rule(Trigger('env_change'),
                 Effect('set_slot_prob', slot=2, prob=v)),))),
        ('rules.0.effect.factor', lambda v: uniform_strategy(0.5, rules=(
            Rule(Trigger('env_change'), Effect('scale_all', factor=v)),))),
    ])
    def test_mac_fields_must_be_finite(self, path, build, value):
        diags = validate_strategy(build(value), 10, domain='MAC')
        assert [(d.code, d.path) for d in diags] == [('range', path)]

    def test_tcp_rtt_threshold_must_be_finite(self):
        s = Strategy('TCP', 8, rules=(Rule(
            Trigger('rtt_inflation', float('inf')),
            Effect('adjust_cwnd', delta=-2)),))
        diags = validate_strategy(s, domain='TCP')
        assert [(d.code, d.path) for d in diags] == [
            ('range', 'rules.0.trigger.at_least')]

    def test_reports_every_problem(self):
        s = Strategy('MAC', (1.2,) * 10, explore=Explore(1.5, -1.0))
        assert len(validate_strategy(s, 10)) == 12


class TestInterpreter:

    def test_avoidance_fires_on_busy_slots(self):
        a = interpret_action(AVOIDING, ActionContext(utilization()))
        expected = np.full(10, 0.5)
        expected[[3, 5]] = 0.0
        assert np.array_equal(a, expected)

    def test_listed_slots_must_all_qualify(self):
        a = interpret_action(AVOIDING,
                             ActionContext(utilization(busy=(3,))))
        assert np.array_equal(a, np.full(10, 0.5))

    def test_no_signals_gives_base_action(self):
        a = interpret_action(AVOIDING, ActionContext())
        assert np.array_equal(a, np.full(10, 0.5))

    def test_rules_apply_in_order(self):
        scale = Rule(Trigger('env_change'), Effect('scale_all', factor=2.0))
        pin = Rule(Trigger('env_change'), Effect('set_slot_prob', slot=0,
                                                 prob=0.3))
        ctx = ActionContext(env_changed=True)
        a = interpret_action(uniform_strategy(0.2, rules=(scale, pin)), ctx)
        b = interpret_action(uniform_strategy(0.2, rules=(pin, scale)), ctx)
        assert a[0] == pytest.approx(0.3) and a[1] == pytest.approx(0.4)
        assert b[0] == pytest.approx(0.6) and b[1] == pytest.approx(0.4)

    def test_scaling_is_clipped(self):
        s = uniform_strategy(0.8, rules=(Rule(
            Trigger('collision_rate', 0.1), Effect('scale_all', factor=2.0)),))
        a = interpret_action(s, ActionContext(collision_rate=0.5))
        assert np.all(a == 1.0)

    def test_perturbation_keeps_avoided_slots_silent(self, seed):
        s = AVOIDING.replace(explore=Explore(0.5, 0.3))
        for period in range(50):
            ctx = ActionContext(utilization(),
                                rng=np.random.default_rng([seed, period]))
            a = interpret_action(s, ctx)
            assert a[3] == 0.0 and a[5] == 0.0
            assert np.all((a >= 0.0) & (a <= 1.0))

    def test_perturbation_is_seeded(self, seed):
        s = uniform_strategy(0.5, explore=Explore(0.0, 0.1))
        a = interpret_action(s, ActionContext(rng=np.random.default_rng(seed)))
        b = interpret_action(s, ActionContext(rng=np.random.default_rng(seed)))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, np.full(10, 0.5))

    def test_exploring_without_rng(self):
        s = uniform_strategy(0.5, explore=Explore(0.0, 0.1))
        with pytest.raises(PreconditionError):
            interpret_action(s, ActionContext())

    def test_reset_exploration_raises_epsilon(self):
        s = uniform_strategy(0.5, rules=(Rule(
            Trigger('env_change'), Effect('reset_exploration')),))
        ctx = ActionContext(env_changed=True)
        with pytest.raises(PreconditionError):
            interpret_action(s, ctx)
        draws = 0
        for i in range(1000):
            ctx.rng = np.random.default_rng(i)
            if not np.array_equal(interpret_action(s, ctx), np.full(10, 0.5)):
                draws += 1
        assert draws == pytest.approx(1000 * RESET_EPSILON, abs=40)

    def test_tcp_adjust_and_clip(self):
        s = Strategy('TCP', 60, rules=(Rule(
            Trigger('rtt_inflation', 0.5), Effect('adjust_cwnd', delta=10)),))
        assert interpret_action(s, ActionContext(rtt_inflation=0.2)) == 60
        assert interpret_action(s, ActionContext(rtt_inflation=0.7)) == 64
        assert interpret_action(s, ActionContext(rtt_inflation=0.7,
                                                 c_max=32)) == 32

    def test_tcp_perturbation_stays_in_range(self, seed):
        s = Strategy('TCP', 2, explore=Explore(0.2, 0.5))
        for i in range(200):
            cwnd = interpret_action(s, ActionContext(
                rng=np.random.default_rng([seed, i])))
            assert isinstance(cwnd, int) and 1 <= cwnd <= 64

    def test_fired_rules(self):
        rules = (avoid((3, 5)), Rule(Trigger('slot_unused'),
                                     Effect('scale_all', factor=1.0)))
        s = uniform_strategy(0.5, rules=rules)
        fired = fired_rules(s, ActionContext(utilization()))
        assert [i for i, _ in fired] == [0, 1]
        assert fired[0][1].effect.label() == 'avoid_slots(3,5)'
        assert fired[0][1].trigger.label() == 'slot_utilization>=0.9@3,5'
