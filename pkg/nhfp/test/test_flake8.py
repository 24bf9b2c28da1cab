# Copyright 2017 Open Source Robotics Foundation, Inc.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from pathlib import Path

from flake8.api import legacy as flake8
import pytest

PACKAGE_DIR = Path(__file__).resolve().parents[1]
IGNORED = [
    "B902", "C816", "D100", "D101", "D102", "D103", "D104", "D105", "D106", "D107", "D203",
    "D212", "D404", "I202", "E203",
]


@pytest.mark.flake8
@pytest.mark.linter
def test_flake8():
    style = flake8.get_style_guide(max_line_length=100, extend_ignore=IGNORED)
    report = style.check_files([str(PACKAGE_DIR / "nhfp"), str(PACKAGE_DIR / "test")])
    errors = report.total_errors
    assert errors == 0, "Found %d code style errors / warnings" % errors
