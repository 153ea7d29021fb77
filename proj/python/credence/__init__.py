# Copyright 2026 The Credence Market Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python bindings for the credence goods market engine."""

from credence._credence import (  # noqa: F401
    CodecError,
    DataError,
    HumanRole,
    Institution,
    Objective,
    ScenarioError,
    SessionError,
    SessionService,
    encode_history_row,
    expected_consumer_payoff,
    ingest_human_csv,
    monopoly_price,
    parse_history_row,
    simulate,
    solve_prediction,
    verify_predictions,
)
