"""Branch-and-bound trajectory optimization over learned dynamics."""

from ._babplan import (
    Model,
    Obstacle,
    Scenario,
    default_config,
    generate_model,
    load_model,
    load_scenario,
    lower_bound,
    network_lower_bound,
    objective_value,
    plan,
    plan_synthetic,
    prm_plan,
    rollout,
    rrt_plan,
)

__all__ = [
    "Model",
    "Obstacle",
    "Scenario",
    "default_config",
    "generate_model",
    "load_model",
    "load_scenario",
    "lower_bound",
    "network_lower_bound",
    "objective_value",
    "plan",
    "plan_synthetic",
    "prm_plan",
    "rollout",
    "rrt_plan",
]
