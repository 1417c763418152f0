import pytest

from rvm_mirror.confinement import ConfinementProfile


@pytest.fixture
def singular2():
    return ConfinementProfile(alpha=2.0)
