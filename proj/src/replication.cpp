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

#include "credence/replication.hpp"

#include <algorithm>
#include <exception>
#include <thread>

namespace credence {

RandomStream replicate_stream(std::uint64_t seed, std::int64_t rep) {
  return RandomStream(seed).child(kTagReplicate, static_cast<std::uint64_t>(rep));
}

ReplicationReport run_replications(const MarketSetup& setup, std::int64_t n,
                                   std::uint64_t seed, const ReplicationOptions& options) {
  if (n < 1) throw std::invalid_argument("run_replications: n must be at least 1");
  setup.validate();

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::int64_t>(n, 64))));

  ReplicationReport report;
  report.n_reps = n;
  report.seed = seed;
  if (options.keep_digests) report.digests.resize(static_cast<std::size_t>(n));

  struct Worker {
    MarketTally tally;
    std::int64_t failed_rep = -1;
    std::string error;
  };
  std::vector<Worker> workers(threads);

  auto work = [&](unsigned t) {
    Worker& w = workers[t];
    for (std::int64_t r = t; r < n; r += threads) {
      try {
        MarketOutcome o = run_market(setup, replicate_stream(seed, r));
        w.tally.add(o, setup.params);
        if (options.keep_digests) report.digests[static_cast<std::size_t>(r)] = std::move(o);
      } catch (const std::exception& e) {
        w.failed_rep = r;
        w.error = e.what();
        return;
      }
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }

  const Worker* first_failure = nullptr;
  for (const Worker& w : workers)
    if (w.failed_rep >= 0 && (!first_failure || w.failed_rep < first_failure->failed_rep))
      first_failure = &w;
  if (first_failure)
    throw MarketError("replicate " + std::to_string(first_failure->failed_rep) + ": " +
                      first_failure->error);

  for (const Worker& w : workers) report.tally.merge(w.tally);
  return report;
}

}  // namespace credence
