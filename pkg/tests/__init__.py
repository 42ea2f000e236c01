import os

tests_path = os.path.dirname(__file__)
fixtures_path = os.path.join(tests_path, "fixtures")

# acceptance-scale property suites; a reduced sample runs otherwise
FULL_SUITES = bool(os.environ.get("SLN_ATLAS_FULL_SUITES"))


def fixture(name: str) -> str:
    return os.path.join(fixtures_path, name)
