from .fitness import FitnessBreakdown, SwarmEvaluator, fitness
from .operators import Particle, crossover, mutate, update_position, update_velocity
from .optimizer import (OptimizationResult, SwarmOptions, SwarmState, init_swarm,
                        random_start, run_ws_pso_cm, warm_start)
from .params import BASELINE1, BASELINE2, PRESETS, REPLAY_ROWS, HyperParams, HyperParamError
from .penalties import angle_penalty, building_penalty, collision_report, speed_penalty
