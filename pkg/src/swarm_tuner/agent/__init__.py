from .advisors import (AdvisorError, ChatCompletionsSource, HeuristicAdvisor, HillClimbAdvisor,
                       LLMAdvisor, Proposal, RandomAdvisor, ReplaySource, parse_reply)
from .loop import TuningResult, tune, write_report
from .memory import Memory, TuningRecord
from .profile import DEFAULT_BOUNDS, AgentProfile
