from .syntax import (
    Name, Nil, Input, Output, BoundOutput, Restriction, Parallel,
    ReplicatedInput, Apply, EqVar, PiAbstraction, Proc, ConstantEnv,
    SortTable, BUILTIN_SORTS, fn, rename, pretty, parse_pi, parse_program,
    PiParseError, SortError, VAL, CONT,
)
from .dialects import Dialect, validate_internal, validate_alpi, ValidationReport
from .norm import normalize, canon_proc, canon_pair_proc, Soup, soup_of, NormConfig
from .lts import (
    Action, TAU, Template, templates, transitions, weak_transitions, barbs,
    FreshSupply, TransitionLimitError, UnguardedConstantError, tau_closure,
    link_constants, LINK_V, LINK_C,
)
