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
#include "pincast/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace pincast::harness {

using nlohmann::json;

namespace {
constexpr std::uint64_t kPurposeUsers = 0x75736572; // "user"

std::string format_double(double v, const char* fmt = "%.12g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}
} // namespace

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

void ExperimentConfig::validate() const {
    if (trials < 1)
        throw HarnessError("trials must be at least 1");
    if (pmax_sweep_dbm.empty())
        throw HarnessError("pmax sweep must not be empty");
    for (size_t i = 1; i < pmax_sweep_dbm.size(); ++i)
        if (!(pmax_sweep_dbm[i] > pmax_sweep_dbm[i - 1]))
            throw HarnessError("pmax sweep values must be strictly increasing");
    if (schemes.empty())
        throw HarnessError("at least one scheme required");
    auto probe = system;
    probe.P_max = dbm_to_watt(pmax_sweep_dbm.front());
    probe.validate();
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["system"] = {{"fc_hz", system.f_c},
                   {"eta_eff", system.eta_eff},
                   {"eps_r", system.eps_r},
                   {"tan_delta", system.tan_delta},
                   {"length_m", system.L},
                   {"height_m", system.d},
                   {"guide_y_m", std::vector<double>(system.D.data(), system.D.data() + system.D.size())},
                   {"min_spacing_m", system.gamma},
                   {"sigma2_dbm", watt_to_dbm(system.sigma2[0])},
                   {"elements_per_guide", system.M},
                   {"users", system.K()},
                   {"area", {system.area.x_min, system.area.x_max, system.area.y_min,
                             system.area.y_max}}};
    std::vector<std::string> names;
    for (auto s : schemes)
        names.push_back(baselines::to_string(s));
    j["schemes"] = names;
    j["trials"] = trials;
    j["seed"] = seed;
    j["pmax_sweep_dbm"] = pmax_sweep_dbm;
    j["output_dir"] = output_dir;
    j["jobs"] = jobs;
    j["mm"] = {{"inner_tol", mm.inner_tol},
               {"inner_max_iters", mm.inner_max_iters},
               {"bcd_tol", mm.bcd_tol},
               {"bcd_max_iters", mm.bcd_max_iters}};
    j["penalty"] = {{"rho0", penalty.rho0},
                    {"rho_mult", penalty.rho_mult},
                    {"rho_cap", penalty.rho_cap},
                    {"violation_tol", penalty.violation_tol}};
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig c;

    int n_guides = 2, n_users = 5, n_elements = 3;
    if (j.contains("system")) {
        const auto& s = j["system"];
        n_guides = s.contains("guides") ? s["guides"].get<int>() : n_guides;
        n_users = s.value("users", n_users);
        n_elements = s.value("elements_per_guide", n_elements);
        if (s.contains("guide_y_m"))
            n_guides = static_cast<int>(s["guide_y_m"].size());
        c.system = model::SystemConfig::defaults(n_guides, n_elements, n_users);
        c.system.f_c = s.value("fc_hz", c.system.f_c);
        c.system.eta_eff = s.value("eta_eff", c.system.eta_eff);
        c.system.eps_r = s.value("eps_r", c.system.eps_r);
        c.system.tan_delta = s.value("tan_delta", c.system.tan_delta);
        c.system.L = s.value("length_m", c.system.L);
        c.system.d = s.value("height_m", c.system.d);
        if (s.contains("area")) {
            const auto a = s["area"].get<std::vector<double>>();
            if (a.size() != 4)
                throw HarnessError("area needs [x_min, x_max, y_min, y_max]");
            c.system.area = {a[0], a[1], a[2], a[3]};
        }
        // defaults derived from overridden fields
        c.system = [&] {
            auto base = model::SystemConfig::defaults(n_guides, n_elements, n_users);
            base.f_c = c.system.f_c;
            base.eta_eff = c.system.eta_eff;
            base.eps_r = c.system.eps_r;
            base.tan_delta = c.system.tan_delta;
            base.L = c.system.L;
            base.d = c.system.d;
            base.area = c.system.area;
            base.gamma = base.wavelength() / 2.0;
            const double y_extent = base.area.y_max - base.area.y_min;
            for (int n = 0; n < n_guides; ++n)
                base.D[n] = base.area.y_min + (n + 0.5) * y_extent / n_guides;
            return base;
        }();
        if (s.contains("guide_y_m")) {
            const auto d = s["guide_y_m"].get<std::vector<double>>();
            c.system.D = Eigen::Map<const Eigen::VectorXd>(d.data(), d.size());
        }
        if (s.contains("min_spacing_m"))
            c.system.gamma = s["min_spacing_m"].get<double>();
        if (s.contains("sigma2_dbm"))
            c.system.sigma2 =
                Eigen::VectorXd::Constant(n_users, dbm_to_watt(s["sigma2_dbm"].get<double>()));
    }
    if (j.contains("schemes")) {
        c.schemes.clear();
        for (const auto& name : j["schemes"])
            c.schemes.push_back(baselines::scheme_from_string(name.get<std::string>()));
    }
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    if (j.contains("pmax_sweep_dbm"))
        c.pmax_sweep_dbm = j["pmax_sweep_dbm"].get<std::vector<double>>();
    c.output_dir = j.value("output_dir", c.output_dir);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("mm")) {
        const auto& m = j["mm"];
        c.mm.inner_tol = m.value("inner_tol", c.mm.inner_tol);
        c.mm.inner_max_iters = m.value("inner_max_iters", c.mm.inner_max_iters);
        c.mm.bcd_tol = m.value("bcd_tol", c.mm.bcd_tol);
        c.mm.bcd_max_iters = m.value("bcd_max_iters", c.mm.bcd_max_iters);
    }
    if (j.contains("penalty")) {
        const auto& p = j["penalty"];
        c.penalty.rho0 = p.value("rho0", c.penalty.rho0);
        c.penalty.rho_mult = p.value("rho_mult", c.penalty.rho_mult);
        c.penalty.rho_cap = p.value("rho_cap", c.penalty.rho_cap);
        c.penalty.violation_tol = p.value("violation_tol", c.penalty.violation_tol);
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw HarnessError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

model::UserSet generate_users(std::uint64_t seed, int K, const model::Area& area) {
    if (K < 1)
        throw HarnessError("need at least one user");
    auto rs = rng::substream(seed, {kPurposeUsers});
    model::UserSet users;
    users.phi.resize(K, 2);
    for (int k = 0; k < K; ++k) {
        users.phi(k, 0) = rs.uniform(area.x_min, area.x_max);
        users.phi(k, 1) = rs.uniform(area.y_min, area.y_max);
    }
    return users;
}

namespace {

RunRecord run_one(const ExperimentConfig& cfg, baselines::SchemeId scheme, double pmax_dbm,
                  int trial) {
    RunRecord rec;
    rec.scheme = baselines::to_string(scheme);
    rec.trial = trial;
    rec.seed = cfg.seed;
    rec.pmax_dbm = pmax_dbm;

    const auto start = std::chrono::steady_clock::now();
    try {
        auto sys = cfg.system;
        sys.P_max = dbm_to_watt(pmax_dbm);
        // user placement depends on (seed, trial) only, never on the scheme
        std::uint64_t mix = cfg.seed ^ (0x9E3779B97F4A7C15ull * (std::uint64_t(trial) + 1));
        const std::uint64_t trial_seed = rng::splitmix64(mix);
        const auto users = generate_users(trial_seed, sys.K(), sys.area);
        const auto out = baselines::run_scheme(scheme, sys, users, cfg.mm, cfg.penalty);

        rec.min_rate = out.min_rate;
        rec.user_rates.assign(out.user_rates.data(),
                              out.user_rates.data() + out.user_rates.size());
        rec.trajectory = out.trajectory;
        const auto& st = out.state;
        rec.layout.resize(st.layout.N());
        rec.powers.resize(st.layout.N());
        for (int n = 0; n < st.layout.N(); ++n) {
            for (int m = 0; m < st.layout.M(); ++m) {
                rec.layout[n].push_back(st.layout.x(n, m));
                rec.powers[n].push_back(st.p(n, m));
            }
            const double delivered = st.p.row(n).sum();
            for (int m = 0; m < st.layout.M(); ++m)
                if (delivered > 0.0 && st.p(n, m) > 0.01 * delivered)
                    rec.active_elements.push_back(n * st.layout.M() + m);
        }
        if (out.degraded)
            rec.status = "degraded";
    } catch (const std::exception& e) {
        rec.status = std::string("failed: ") + e.what();
    }
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

} // namespace

SweepResult sweep(const ExperimentConfig& config) {
    config.validate();

    struct Task {
        baselines::SchemeId scheme;
        double pmax_dbm;
        int trial;
        size_t slot;
    };
    std::vector<Task> tasks;
    for (double pmax : config.pmax_sweep_dbm)
        for (auto scheme : config.schemes)
            for (int trial = 0; trial < config.trials; ++trial)
                tasks.push_back({scheme, pmax, trial, tasks.size()});

    SweepResult result;
    result.records.resize(tasks.size());

    const int jobs = std::max(1, config.jobs);
    if (jobs == 1) {
        for (const auto& task : tasks)
            result.records[task.slot] = run_one(config, task.scheme, task.pmax_dbm, task.trial);
    } else {
        std::mutex mu;
        size_t next = 0;
        auto worker = [&] {
            for (;;) {
                size_t mine;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (next >= tasks.size())
                        return;
                    mine = next++;
                }
                const auto& task = tasks[mine];
                auto rec = run_one(config, task.scheme, task.pmax_dbm, task.trial);
                std::lock_guard<std::mutex> lock(mu);
                result.records[task.slot] = std::move(rec);
            }
        };
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs; ++i)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    // aggregates per (scheme, pmax) over successful trials
    for (double pmax : config.pmax_sweep_dbm) {
        for (auto scheme : config.schemes) {
            AggregateRow row;
            row.scheme = baselines::to_string(scheme);
            row.pmax_dbm = pmax;
            double sum = 0.0, sumsq = 0.0;
            for (const auto& rec : result.records) {
                if (rec.scheme != row.scheme || rec.pmax_dbm != pmax)
                    continue;
                if (!rec.ok() && rec.status != "degraded") {
                    result.any_failed = true;
                    continue;
                }
                sum += rec.min_rate;
                sumsq += rec.min_rate * rec.min_rate;
                ++row.n;
            }
            if (row.n > 0) {
                row.mean_min_rate = sum / row.n;
                const double var =
                    std::max(0.0, sumsq / row.n - row.mean_min_rate * row.mean_min_rate);
                row.stderr_min_rate = row.n > 1 ? std::sqrt(var / (row.n - 1)) : 0.0;
            }
            result.aggregates.push_back(row);
        }
    }
    return result;
}

void export_csv(const std::vector<RunRecord>& records, std::ostream& os) {
    os << "scheme,trial,seed,pmax_dbm,min_rate_bps_hz,runtime_s,status\n";
    for (const auto& r : records) {
        os << r.scheme << ',' << r.trial << ',' << r.seed << ','
           << format_double(r.pmax_dbm) << ',' << format_double(r.min_rate) << ','
           << format_double(r.wall_time_s, "%.3f") << ',' << r.status << '\n';
    }
}

void export_json(const std::vector<RunRecord>& records, std::ostream& os) {
    json arr = json::array();
    for (const auto& r : records) {
        json j;
        j["scheme"] = r.scheme;
        j["trial"] = r.trial;
        j["seed"] = r.seed;
        j["pmax_dbm"] = r.pmax_dbm;
        j["min_rate_bps_hz"] = r.min_rate;
        j["user_rates"] = r.user_rates;
        json traj = json::array();
        for (const auto& [t, rate] : r.trajectory)
            traj.push_back({t, rate});
        j["trajectory"] = traj;
        j["layout"] = r.layout;
        j["powers"] = r.powers;
        j["active_elements"] = r.active_elements;
        j["wall_time_s"] = r.wall_time_s;
        j["status"] = r.status;
        arr.push_back(std::move(j));
    }
    os << arr.dump(1) << '\n';
}

std::vector<RunRecord> import_json(std::istream& is) {
    json arr = json::parse(is);
    std::vector<RunRecord> out;
    for (const auto& j : arr) {
        RunRecord r;
        r.scheme = j.at("scheme").get<std::string>();
        r.trial = j.at("trial").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.pmax_dbm = j.at("pmax_dbm").get<double>();
        r.min_rate = j.at("min_rate_bps_hz").get<double>();
        r.user_rates = j.at("user_rates").get<std::vector<double>>();
        for (const auto& pair : j.at("trajectory"))
            r.trajectory.emplace_back(pair[0].get<double>(), pair[1].get<double>());
        r.layout = j.at("layout").get<std::vector<std::vector<double>>>();
        r.powers = j.at("powers").get<std::vector<std::vector<double>>>();
        r.active_elements = j.at("active_elements").get<std::vector<int>>();
        r.wall_time_s = j.at("wall_time_s").get<double>();
        r.status = j.at("status").get<std::string>();
        out.push_back(std::move(r));
    }
    return out;
}

void export_aggregates_csv(const std::vector<AggregateRow>& rows, std::ostream& os) {
    os << "scheme,pmax_dbm,n,mean_min_rate_bps_hz,stderr_min_rate_bps_hz\n";
    for (const auto& r : rows)
        os << r.scheme << ',' << format_double(r.pmax_dbm) << ',' << r.n << ','
           << format_double(r.mean_min_rate) << ',' << format_double(r.stderr_min_rate)
           << '\n';
}

void write_outputs(const SweepResult& result, const ExperimentConfig& config) {
    std::string dir = config.output_dir;
    if (const char* env = std::getenv("PINCAST_OUTPUT_DIR"); env && *env)
        dir = env;
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir + "/records.csv");
        if (!os)
            throw HarnessError("cannot write " + dir + "/records.csv");
        export_csv(result.records, os);
    }
    {
        std::ofstream os(dir + "/records.json");
        export_json(result.records, os);
    }
    {
        std::ofstream os(dir + "/aggregates.csv");
        export_aggregates_csv(result.aggregates, os);
    }
}

} // namespace pincast::harness
