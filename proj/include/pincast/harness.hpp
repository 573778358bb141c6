// SPDX-License-Identifier: Apache-2.0
//
// pincast — pinched-waveguide antenna array simulator and max-min rate optimizer
// Copyright (C) 2026 pincast contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PINCAST_HARNESS_HPP
#define PINCAST_HARNESS_HPP

#include "pincast/baselines.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pincast::harness {

struct HarnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);

// Everything one experiment needs: the physical system, the scheme list, the
// trial count and seed, the power sweep and where results go. JSON-backed;
// every physical default can be overridden in the file.
struct ExperimentConfig {
    model::SystemConfig system = model::SystemConfig::defaults(2, 3, 5);
    std::vector<baselines::SchemeId> schemes = {baselines::SchemeId::Proposed};
    int trials = 20;
    std::uint64_t seed = 1;
    std::vector<double> pmax_sweep_dbm = {30.0};
    std::string output_dir = "out";
    optim::MmSettings mm;
    optim::PenaltySettings penalty;
    int jobs = 1;

    void validate() const;
    std::string to_json_text() const;
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig load(const std::string& path);
};

// Per-trial outcome of one scheme at one budget.
struct RunRecord {
    std::string scheme;
    int trial = 0;
    std::uint64_t seed = 0;
    double pmax_dbm = 0.0;
    double min_rate = 0.0; // bit/s/Hz
    std::vector<double> user_rates;
    std::vector<std::pair<double, double>> trajectory; // per round (t, min rate)
    std::vector<std::vector<double>> layout;           // final element positions
    std::vector<std::vector<double>> powers;           // final element powers
    // elements carrying more than 1% of their guide's delivered power
    std::vector<int> active_elements;
    double wall_time_s = 0.0;
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
};

struct AggregateRow {
    std::string scheme;
    double pmax_dbm = 0.0;
    int n = 0;
    double mean_min_rate = 0.0;
    double stderr_min_rate = 0.0;
};

struct SweepResult {
    std::vector<RunRecord> records;
    std::vector<AggregateRow> aggregates;
    bool any_failed = false;
};

// Uniform i.i.d. user placement from the named deterministic generator;
// identical seeds give identical users on every platform.
model::UserSet generate_users(std::uint64_t seed, int K, const model::Area& area);

// Runs every (scheme, budget, trial) combination on a small worker pool.
// Records are sorted before aggregation, so the output is a pure function of
// the configuration. Individual trial failures are recorded and skipped.
SweepResult sweep(const ExperimentConfig& config);

// CSV with exactly: scheme,trial,seed,pmax_dbm,min_rate_bps_hz,runtime_s,status
void export_csv(const std::vector<RunRecord>& records, std::ostream& os);
// Full-fidelity JSON; reimport reproduces the records bit-exact.
void export_json(const std::vector<RunRecord>& records, std::ostream& os);
std::vector<RunRecord> import_json(std::istream& is);

void export_aggregates_csv(const std::vector<AggregateRow>& rows, std::ostream& os);

// Writes records.csv, records.json and aggregates.csv under the directory
// (PINCAST_OUTPUT_DIR overrides the configured path).
void write_outputs(const SweepResult& result, const ExperimentConfig& config);

} // namespace pincast::harness

#endif
