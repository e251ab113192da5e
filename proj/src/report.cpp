#include "hydra/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace hydra::report {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_ap(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

const char* kThresholdNames[3] = {"0.3", "0.5", "0.7"};

}  // namespace

std::string to_json(const runner::RunConfig& cfg, const runner::RunResult& res) {
    ordered_json j;
    j["method"] = runner::method_name(cfg.method);
    j["seed"] = cfg.scenario.seed;
    j["frames"] = res.frames;
    j["pose_noise_sigma"] = cfg.scenario.pose_noise_sigma;

    ordered_json ap;
    for (int c = 0; c < eval::kNumClasses; ++c) {
        ordered_json row;
        for (int t = 0; t < 3; ++t) {
            row[kThresholdNames[t]] = res.report.ap[static_cast<std::size_t>(c)]
                                                   [static_cast<std::size_t>(t)];
        }
        ap[eval::class_name(c)] = row;
    }
    ordered_json total;
    for (int t = 0; t < 3; ++t) total[kThresholdNames[t]] = res.report.total[static_cast<std::size_t>(t)];
    ap["total"] = total;
    j["ap"] = ap;

    ordered_json counts;
    for (int t = 0; t < 3; ++t) {
        const eval::ThresholdCounts& c = res.report.counts[static_cast<std::size_t>(t)];
        counts[kThresholdNames[t]] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
    }
    j["counts"] = counts;

    ordered_json scores = ordered_json::object();
    for (const auto& [kind, st] : res.scores_by_kind) {
        scores[kind] = {{"count", st.count}, {"mean", st.mean}, {"min", st.min}, {"max", st.max}};
    }
    j["scores_by_kind"] = scores;

    j["pgo"] = {{"enabled", res.pgo_enabled},
                {"mean_translation_error_before", res.mean_pose_error_before},
                {"mean_translation_error_after", res.mean_pose_error_after},
                {"mean_iterations", res.mean_pgo_iterations}};
    return j.dump(2) + "\n";
}

std::string to_csv(const runner::RunConfig& cfg, const runner::RunResult& res) {
    std::string out = "method,class,threshold,ap\n";
    const std::string method = runner::method_name(cfg.method);
    for (int c = 0; c < eval::kNumClasses; ++c) {
        for (int t = 0; t < 3; ++t) {
            out += method + "," + eval::class_name(c) + "," + kThresholdNames[t] + "," +
                   fmt_ap(res.report.ap[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)]) +
                   "\n";
        }
    }
    for (int t = 0; t < 3; ++t) {
        out += method + ",total," + std::string(kThresholdNames[t]) + "," +
               fmt_ap(res.report.total[static_cast<std::size_t>(t)]) + "\n";
    }
    return out;
}

std::string sweep_rows(const runner::RunConfig& cfg, const runner::RunResult& res,
                       const std::string& key, const std::string& value) {
    std::string out;
    const std::string method = runner::method_name(cfg.method);
    for (int c = 0; c < eval::kNumClasses; ++c) {
        for (int t = 0; t < 3; ++t) {
            out += method + "," + key + "," + value + "," + eval::class_name(c) + "," +
                   kThresholdNames[t] + "," +
                   fmt_ap(res.report.ap[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)]) +
                   "\n";
        }
    }
    for (int t = 0; t < 3; ++t) {
        out += method + "," + key + "," + value + ",total," + kThresholdNames[t] + "," +
               fmt_ap(res.report.total[static_cast<std::size_t>(t)]) + "\n";
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace hydra::report
