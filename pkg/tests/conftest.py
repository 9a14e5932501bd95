from hypothesis import HealthCheck, settings

# the whole package is about reproducibility; make the property tests
# explore the same examples on every run
settings.register_profile(
    "deterministic",
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deterministic")
