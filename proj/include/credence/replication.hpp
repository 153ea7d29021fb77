// Copyright 2026 The Credence Market Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CREDENCE_REPLICATION_HPP_
#define CREDENCE_REPLICATION_HPP_

#include <cstdint>
#include <vector>

#include "credence/market.hpp"
#include "credence/metrics.hpp"

namespace credence {

struct ReplicationOptions {
  unsigned threads = 0;       // 0: hardware concurrency
  bool keep_digests = false;  // retain every MarketOutcome
};

struct ReplicationReport {
  std::int64_t n_reps = 0;
  std::uint64_t seed = 0;
  MarketTally tally;
  std::vector<MarketOutcome> digests;  // empty unless requested

  MetricSet metrics(const MarketParams& params,
                    SurplusMode surplus = SurplusMode::GroupTotal,
                    EfficiencyMode efficiency = EfficiencyMode::RealizedDenominator) const {
    return compute_metrics(tally, params, surplus, efficiency);
  }
};

// Replicate r runs on RandomStream(seed).child(kTagReplicate, r). A market
// failure is rethrown as MarketError naming the lowest failing replicate.
ReplicationReport run_replications(const MarketSetup& setup, std::int64_t n,
                                   std::uint64_t seed,
                                   const ReplicationOptions& options = {});

RandomStream replicate_stream(std::uint64_t seed, std::int64_t rep);

}  // namespace credence

#endif  // CREDENCE_REPLICATION_HPP_
