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

#include "pincast/harness.hpp"
#include "pincast/oracle.hpp"
#include "pincast/surrogate_suite.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

using namespace pincast;

int do_experiment(const std::string& config_path, const std::string& pmax_override) {
    auto config = harness::ExperimentConfig::load(config_path);
    if (!pmax_override.empty()) {
        // start:stop:step in dBm
        double start = 0, stop = 0, step = 0;
        if (std::sscanf(pmax_override.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 ||
            step <= 0) {
            std::fprintf(stderr, "bad --pmax-dbm range '%s'\n", pmax_override.c_str());
            return 2;
        }
        config.pmax_sweep_dbm.clear();
        for (double v = start; v <= stop + 1e-9; v += step)
            config.pmax_sweep_dbm.push_back(v);
    }
    const auto result = harness::sweep(config);
    harness::write_outputs(result, config);
    for (const auto& row : result.aggregates)
        std::printf("%-14s %6.1f dBm  n=%-3d mean=%.4f bit/s/Hz  (stderr %.4f)\n",
                    row.scheme.c_str(), row.pmax_dbm, row.n, row.mean_min_rate,
                    row.stderr_min_rate);
    if (result.any_failed) {
        std::fprintf(stderr, "some trials failed; see records.csv\n");
        return 1;
    }
    return 0;
}

int do_oracle(double resolution) {
    auto cfg = model::SystemConfig::defaults(1, 1, 1);
    cfg.L = 10.0;
    model::UserSet users;
    users.phi.resize(1, 2);
    users.phi << 7.4, 21.5;
    const auto res = oracle::grid_search_tiny(cfg, users, resolution);
    const auto [x_star, t_star] = oracle::tiny_analytic_optimum(cfg, users.phi.row(0));
    std::printf("tiny instance: user (%.2f, %.2f), guide length %.1f m\n", users.phi(0, 0),
                users.phi(0, 1), cfg.L);
    std::printf("grid:     x=%.6f m  min-SNR=%.6e\n", res.layout.x(0, 0), res.t);
    std::printf("analytic: x=%.6f m  min-SNR=%.6e\n", x_star, t_star);
    return 0;
}

int do_check(const std::string& suite) {
    bool all_ok = true;
    if (suite == "minorizers") {
        for (const auto& [name, rep] : surrogates::run_all(1000, 2024)) {
            const bool ok = rep.ok(1e-9);
            all_ok = all_ok && ok;
            std::printf("[%s] %-38s violations=%d max=%.2e expansion_gap=%.2e\n",
                        ok ? "pass" : "FAIL", name.c_str(), rep.violations, rep.max_violation,
                        rep.max_expansion_gap);
        }
    } else if (suite == "rank1") {
        auto rs = rng::substream(2024, {9});
        int bad = 0;
        for (int trial = 0; trial < 500; ++trial) {
            Eigen::VectorXcd v(4);
            for (int i = 0; i < 4; ++i)
                v[i] = std::complex<double>(rs.uniform(-1, 1), rs.uniform(-1, 1));
            if (oracle::rank_one_gap(Eigen::MatrixXcd(v * v.adjoint())) > 1e-10)
                ++bad;
            Eigen::MatrixXcd B(4, 2);
            for (int i = 0; i < 8; ++i)
                B(i / 2, i % 2) = std::complex<double>(rs.uniform(-1, 1), rs.uniform(-1, 1));
            if (oracle::rank_one_gap(Eigen::MatrixXcd(B * B.adjoint())) <= 1e-6)
                ++bad;
        }
        all_ok = bad == 0;
        std::printf("[%s] rank-one gap separates rank 1 from rank 2 (%d bad of 1000)\n",
                    all_ok ? "pass" : "FAIL", bad);
    } else if (suite == "feasibility") {
        auto rs = rng::substream(2024, {11});
        int bad = 0;
        for (int trial = 0; trial < 200; ++trial) {
            auto cfg = model::SystemConfig::defaults(2, 3, 2);
            auto st = optim::default_init(cfg);
            if (!model::feasibility_check(st, cfg).feasible())
                ++bad;
            st.p(0, 0) += cfg.P_max; // deliberate violation must be flagged
            if (model::feasibility_check(st, cfg).feasible())
                ++bad;
            (void)rs.next_u64();
        }
        all_ok = bad == 0;
        std::printf("[%s] feasibility reporting (%d bad of 400)\n", all_ok ? "pass" : "FAIL",
                    bad);
    } else {
        std::fprintf(stderr, "unknown suite '%s'\n", suite.c_str());
        return 2;
    }
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pinched-waveguide antenna array simulator and optimizer"};
    app.require_subcommand(1);

    std::string config_path;
    std::string pmax_range;
    double resolution = 0.0107 / 8.0;
    std::string suite = "minorizers";
    std::string instance = "tiny";

    auto* run = app.add_subcommand("run", "run one experiment from a config file");
    run->add_option("--config", config_path, "experiment config (json)")->required();

    auto* sweep = app.add_subcommand("sweep", "run a power sweep from a config file");
    sweep->add_option("--config", config_path, "experiment config (json)")->required();
    sweep->add_option("--pmax-dbm", pmax_range, "override sweep as start:stop:step (dBm)");

    auto* oracle_cmd = app.add_subcommand("oracle", "run the exhaustive tiny-instance oracle");
    oracle_cmd->add_option("--instance", instance, "instance name (tiny)");
    oracle_cmd->add_option("--resolution", resolution, "grid resolution in metres");

    auto* check = app.add_subcommand("check", "run a self-check suite");
    check->add_option("--suite", suite, "minorizers|rank1|feasibility");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed() || sweep->parsed())
            return do_experiment(config_path, sweep->parsed() ? pmax_range : "");
        if (oracle_cmd->parsed()) {
            if (instance != "tiny") {
                std::fprintf(stderr, "unknown instance '%s'\n", instance.c_str());
                return 2;
            }
            return do_oracle(resolution);
        }
        if (check->parsed())
            return do_check(suite);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
