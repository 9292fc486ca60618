from hypothesis import HealthCheck, settings

# deterministic property runs: reproducibility is part of the contract here
settings.register_profile(
    "repro",
    derandomize=True,
    max_examples=80,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("repro")
