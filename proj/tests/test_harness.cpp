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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pincast/harness.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

using namespace pincast;
using namespace pincast::harness;

namespace {

ExperimentConfig tiny_experiment() {
    ExperimentConfig cfg;
    cfg.system = model::SystemConfig::defaults(1, 1, 1);
    cfg.system.L = 10.0;
    cfg.schemes = {baselines::SchemeId::Proposed, baselines::SchemeId::Conventional};
    cfg.trials = 2;
    cfg.seed = 99;
    cfg.pmax_sweep_dbm = {30.0};
    return cfg;
}

std::string canonical_csv(const std::vector<RunRecord>& records) {
    std::ostringstream os;
    export_csv(records, os);
    // the runtime column is wall time and legitimately varies between runs
    return std::regex_replace(os.str(), std::regex(",[0-9]+\\.[0-9]{3},"), ",<t>,");
}

} // namespace

TEST_CASE("dbm conversions") {
    CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0));
    CHECK(dbm_to_watt(0.0) == doctest::Approx(1e-3));
    CHECK(watt_to_dbm(dbm_to_watt(17.3)) == doctest::Approx(17.3));
}

TEST_CASE("user generation") {
    model::Area area;
    SUBCASE("identical seeds give identical users") {
        const auto a = generate_users(42, 5, area);
        const auto b = generate_users(42, 5, area);
        CHECK((a.phi - b.phi).cwiseAbs().maxCoeff() == 0.0);
        const auto c = generate_users(43, 5, area);
        CHECK((a.phi - c.phi).cwiseAbs().maxCoeff() > 0.0);
    }
    SUBCASE("single user inside bounds") {
        const auto u = generate_users(1, 1, area);
        CHECK(u.phi(0, 0) >= area.x_min);
        CHECK(u.phi(0, 0) <= area.x_max);
        CHECK(u.phi(0, 1) >= area.y_min);
        CHECK(u.phi(0, 1) <= area.y_max);
    }
    SUBCASE("empirical mean near the centre") {
        // 1e4 samples; uniform sd is extent/sqrt(12), so a 3-sigma band
        const int n = 10000;
        const auto u = generate_users(7, n, area);
        const double bound = 3.0 * (area.x_max - area.x_min) / std::sqrt(12.0 * n);
        CHECK(std::abs(u.phi.col(0).mean() - 20.0) <= bound);
        CHECK(std::abs(u.phi.col(1).mean() - 20.0) <= bound);
    }
}

TEST_CASE("csv export shape") {
    SUBCASE("empty records give a header-only file") {
        std::ostringstream os;
        export_csv({}, os);
        CHECK(os.str() == "scheme,trial,seed,pmax_dbm,min_rate_bps_hz,runtime_s,status\n");
    }
    SUBCASE("one line per record") {
        std::vector<RunRecord> recs(100);
        for (int i = 0; i < 100; ++i) {
            recs[i].scheme = "proposed";
            recs[i].trial = i;
            recs[i].min_rate = 0.25 * i;
        }
        std::ostringstream os;
        export_csv(recs, os);
        int lines = 0;
        for (char c : os.str())
            lines += c == '\n';
        CHECK(lines == 101);
    }
}

TEST_CASE("json round-trip is exact") {
    RunRecord r;
    r.scheme = "proposed";
    r.trial = 3;
    r.seed = 11;
    r.pmax_dbm = 30.0;
    r.min_rate = 0.1234567890123456789; // exercises shortest-round-trip printing
    r.user_rates = {0.5, 1.0 / 3.0};
    r.trajectory = {{1e5, 17.2}, {1.23e5, 17.9}};
    r.layout = {{5.0, 9.000000001}};
    r.powers = {{0.25, 1e-7}};
    r.active_elements = {0};
    r.wall_time_s = 1.5;

    std::ostringstream os;
    export_json({r}, os);
    std::istringstream is(os.str());
    const auto back = import_json(is);
    REQUIRE(back.size() == 1);
    CHECK(back[0].min_rate == r.min_rate);
    CHECK(back[0].user_rates == r.user_rates);
    CHECK(back[0].trajectory == r.trajectory);
    CHECK(back[0].layout == r.layout);
    CHECK(back[0].powers == r.powers);
    CHECK(back[0].scheme == r.scheme);
}

TEST_CASE("sweep determinism and aggregates") {
    const auto cfg = tiny_experiment();
    const auto a = sweep(cfg);
    const auto b = sweep(cfg);
    CHECK(!a.any_failed);
    CHECK(canonical_csv(a.records) == canonical_csv(b.records));

    // aggregates recomputed from the records match the reported table
    for (const auto& row : a.aggregates) {
        double sum = 0.0;
        int n = 0;
        for (const auto& rec : a.records)
            if (rec.scheme == row.scheme && rec.pmax_dbm == row.pmax_dbm && rec.ok()) {
                sum += rec.min_rate;
                ++n;
            }
        REQUIRE(n == row.n);
        CHECK(row.mean_min_rate == doctest::Approx(sum / n).epsilon(1e-12));
    }

    // exactly one record per (scheme, pmax, trial)
    CHECK(a.records.size() == 4);
}

TEST_CASE("config json round-trip") {
    auto cfg = tiny_experiment();
    cfg.system.tan_delta = 3e-4;
    cfg.penalty.rho0 = 0.2;
    const auto text = cfg.to_json_text();
    const auto back = ExperimentConfig::from_json_text(text);
    CHECK(back.trials == cfg.trials);
    CHECK(back.seed == cfg.seed);
    CHECK(back.system.tan_delta == cfg.system.tan_delta);
    CHECK(back.system.L == cfg.system.L);
    CHECK(back.penalty.rho0 == cfg.penalty.rho0);
    CHECK(back.schemes == cfg.schemes);
}

TEST_CASE("bad configs are rejected") {
    auto cfg = tiny_experiment();
    SUBCASE("no trials") {
        cfg.trials = 0;
        CHECK_THROWS_AS(cfg.validate(), HarnessError);
    }
    SUBCASE("non-increasing sweep") {
        cfg.pmax_sweep_dbm = {30.0, 20.0};
        CHECK_THROWS_AS(cfg.validate(), HarnessError);
    }
}

TEST_CASE("records report element activations above one percent of the guide power") {
    auto cfg = tiny_experiment();
    cfg.system = model::SystemConfig::defaults(1, 2, 1);
    cfg.system.L = 12.0;
    cfg.trials = 1;
    cfg.schemes = {baselines::SchemeId::Proposed};
    const auto res = sweep(cfg);
    REQUIRE(res.records.size() == 1);
    const auto& rec = res.records[0];
    REQUIRE(rec.ok());
    const double delivered = rec.powers[0][0] + rec.powers[0][1];
    for (int idx : rec.active_elements) {
        CHECK(idx >= 0);
        CHECK(idx < 2);
        CHECK(rec.powers[0][idx] > 0.01 * delivered);
    }
    CHECK(rec.active_elements.size() <= 2);
    CHECK(rec.min_rate == doctest::Approx(*std::min_element(rec.user_rates.begin(),
                                                            rec.user_rates.end())));
}

TEST_CASE("unwritable output paths are reported") {
    auto cfg = tiny_experiment();
    cfg.output_dir = "/proc/definitely/not/writable";
    SweepResult empty;
    CHECK_THROWS(write_outputs(empty, cfg));
}
