from .dsl import (Effect, Explore, Rule, Strategy, Trigger, parse_strategy,
                  serialize_strategy, strategy_from_dict, strategy_id,
                  uniform_strategy, validate_strategy)
from .interpreter import ActionContext, fired_rules, interpret_action
