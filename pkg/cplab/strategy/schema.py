"""Define the JSON format of a strategy."""

from ..formats import _add_attrib, _add_elem, new_root

STRATEGY_VERSION = 'strategy-v1'
DOMAINS = ('MAC', 'TCP')
PROVENANCES = ('generated', 'refined', 'escape')

TRIGGERS = ('slot_utilization', 'slot_unused', 'env_change',
            'collision_rate', 'rtt_inflation')
EFFECTS = ('set_slot_prob', 'scale_all', 'avoid_slots', 'adjust_cwnd',
           'reset_exploration')

# which signals and effects each domain can observe / apply
DOMAIN_TRIGGERS = {
    'MAC': ('slot_utilization', 'slot_unused', 'env_change', 'collision_rate'),
    'TCP': ('env_change', 'rtt_inflation'),
}
DOMAIN_EFFECTS = {
    'MAC': ('set_slot_prob', 'scale_all', 'avoid_slots', 'reset_exploration'),
    'TCP': ('adjust_cwnd', 'reset_exploration'),
}

# parameters each name needs
TRIGGER_PARAMS = {
    'slot_utilization': ('at_least',),
    'slot_unused': (),
    'env_change': (),
    'collision_rate': ('at_least',),
    'rtt_inflation': ('at_least',),
}
EFFECT_PARAMS = {
    'set_slot_prob': ('slot', 'prob'),
    'scale_all': ('factor',),
    'avoid_slots': ('slots',),
    'adjust_cwnd': ('delta',),
    'reset_exploration': (),
}

MAX_SCALE = 10.0

strategy_root = new_root(STRATEGY_VERSION)
_add_attrib(strategy_root, 'schema', required=True, type=str,
            choices=(STRATEGY_VERSION,), help='Format version.')
_add_attrib(strategy_root, 'domain', required=True, type=str, choices=DOMAINS,
            help='Action space the strategy acts in.')
_add_attrib(strategy_root, 'base_action', required=True, type=None,
            help='MAC: per-slot probabilities. TCP: integer cwnd.')
_add_attrib(strategy_root, 'provenance', required=False, type=str,
            default='generated', choices=PROVENANCES,
            help='How the strategy came about.')

rule = _add_elem(strategy_root, 'rules', required=None,
                 help='Rules applied in order on top of the base action.')
trigger = _add_elem(rule, 'trigger', required=True)
_add_attrib(trigger, 'name', required=True, type=str, choices=TRIGGERS)
_add_attrib(trigger, 'at_least', required=False, type=float, default=None,
            help='Threshold of the observed signal.')
_add_attrib(trigger, 'slots', required=False, type=list, item=int,
            default=None, help='Frame positions the signal is read at.')

effect = _add_elem(rule, 'effect', required=True)
_add_attrib(effect, 'name', required=True, type=str, choices=EFFECTS)
_add_attrib(effect, 'slot', required=False, type=int, default=None)
_add_attrib(effect, 'prob', required=False, type=float, default=None)
_add_attrib(effect, 'factor', required=False, type=float, default=None)
_add_attrib(effect, 'slots', required=False, type=list, item=int,
            default=None)
_add_attrib(effect, 'delta', required=False, type=int, default=None)

explore = _add_elem(strategy_root, 'explore', required=False, default=None,
                    help='Exploration applied after the rules.')
_add_attrib(explore, 'epsilon', required=False, type=float, default=0.0,
            help='Probability of a uniform resample.')
_add_attrib(explore, 'sigma', required=False, type=float, default=0.0,
            help='Std of the Gaussian perturbation.')
