from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def pytest_runtest_logreport(report):
    """One PASS/FAIL line per acceptance criterion, whatever the verbosity."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion"):
        return
    if report.skipped:
        status = "SKIP"
    else:
        status = "PASS" if report.passed else "FAIL"
    label = name[len("test_") :].replace("_", " ")
    print(f"\nacceptance {label}: {status}", flush=True)
